"""Grid realizations of the fractional Laplacian ``|Delta|^{mu/2}``.

Sign convention: the operator is positive, with Fourier symbol ``|k|^mu``,

    (|Delta|^{mu/2} f)(x) = -C_mu * PV int (f(z) - f(x)) / |z - x|^(1 + mu) dz,
    C_mu = Gamma(mu + 1) sin(pi mu / 2) / pi,

so at a strict maximum of ``f`` the result is positive.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import gamma, hyp2f1, zeta

from .grid import GridError, GridFunction, second_derivative4

METHODS = ("pv_quadrature", "spectral")


class TruncationWarning(UserWarning):
    """Input does not decay to zero at the window edges."""


def levy_constant(mu: float) -> float:
    """``C_mu``; equals ``1/pi`` for the Cauchy case."""
    check_mu(mu, allow_two=False)
    return float(gamma(mu + 1.0) * np.sin(np.pi * mu / 2.0) / np.pi)


def check_mu(mu, allow_two=False):
    upper_ok = mu <= 2.0 if allow_two else mu < 2.0
    if not (np.isfinite(mu) and mu > 0.0 and upper_ok):
        bound = "(0, 2]" if allow_two else "(0, 2)"
        raise ValueError(f"stability index mu={mu} outside {bound}")


@dataclass(frozen=True)
class TailModel:
    """Extension of a grid function beyond its window.

    ``zero`` sets f = 0 outside. ``power_law`` continues each side as
    ``f_edge * (x_edge / x)^exponent``; exponent 0 is the constant extension.
    """

    kind: str
    exponent: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "power_law"):
            raise ValueError(f"unknown tail model {self.kind!r}")
        if self.kind == "power_law" and self.exponent < 0:
            raise ValueError("power-law tail exponent must be >= 0")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def power_law(cls, exponent):
        return cls("power_law", float(exponent))

    @classmethod
    def parse(cls, text):
        if isinstance(text, TailModel):
            return text
        text = str(text).strip()
        if text == "zero":
            return cls.zero()
        m = re.fullmatch(r"power_law[(:]?\s*([-+0-9.eE]+)\s*\)?", text)
        if m:
            return cls.power_law(float(m.group(1)))
        raise ValueError(f"cannot parse tail model {text!r}")

    def __str__(self):
        return "zero" if self.kind == "zero" else f"power_law({self.exponent:g})"

    def extend(self, z, x_edge, f_edge):
        """Tail values at exterior points ``z`` (all on the side of ``x_edge``)."""
        z = np.asarray(z, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(z)
        if self.exponent == 0.0:
            return np.full_like(z, f_edge)
        if x_edge == 0.0:
            raise GridError("power-law tail needs a window edge away from the origin")
        return f_edge * np.abs(x_edge / z) ** self.exponent


@dataclass(frozen=True)
class OperatorConfig:
    mu: float
    method: str
    tail_model: TailModel

    def __post_init__(self):
        check_mu(self.mu)
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        object.__setattr__(self, "tail_model", TailModel.parse(self.tail_model))

    def as_dict(self):
        return {"mu": self.mu, "method": self.method, "tail_model": str(self.tail_model)}


def _exterior_integral(x, X, f_edge, x_edge, tail, mu):
    """int_X^inf f_tail(z) (z - x)^(-1-mu) dz for X > max(x) > 0 side."""
    if tail.kind == "zero" or f_edge == 0.0:
        return np.zeros_like(x)
    p = tail.exponent
    if p == 0.0:
        return f_edge * (X - x) ** (-mu) / mu
    amp = f_edge * abs(x_edge) ** p
    a = p + mu
    return amp * X ** (-a) * hyp2f1(1.0 + mu, a, a + 1.0, x / X) / a


def _kernel_row(n, h, mu):
    m = np.arange(1, n, dtype=float)
    return h * (m * h) ** (-1.0 - mu)


def singular_weight(mu, h):
    """Weight of ``f''`` restoring the near-diagonal part of the PV sum."""
    return -zeta(mu - 1.0) * h ** (2.0 - mu)


def quartic_weight(mu, h):
    """Weight of the fourth derivative in the next even Taylor term; zero at mu = 1."""
    return -zeta(mu - 3.0) * h ** (4.0 - mu) / 12.0


def fourth_derivative(f, h):
    """Five-point fourth difference, continued by the nearest value at the ends."""
    f = np.asarray(f, dtype=float)
    d = np.empty_like(f)
    d[2:-2] = f[:-4] - 4 * f[1:-3] + 6 * f[2:-2] - 4 * f[3:-1] + f[4:]
    d[:2] = d[2]
    d[-2:] = d[-3]
    return d / h**4


def pv_parts(f: GridFunction, mu: float):
    """Pieces of the grid PV sum shared by the operator and the transport solvers.

    Returns ``(conv, row_sum)`` with ``conv_i = sum_{j != i} w_ij f_j`` and
    ``row_sum_i = sum_{j != i} w_ij``, ``w_ij = h |x_i - x_j|^(-1-mu)``.
    """
    n, h = f.n, f.h
    k = _kernel_row(n, h, mu)
    kern = np.concatenate([k[::-1], [0.0], k])
    conv = fftconvolve(f.values, kern, mode="full")[n - 1 : 2 * n - 1]
    cum = np.concatenate([[0.0], np.cumsum(k)])
    idx = np.arange(n)
    row_sum = cum[idx] + cum[n - 1 - idx]
    return conv, row_sum


def frac_laplacian_pv(f: GridFunction, cfg: OperatorConfig) -> GridFunction:
    """Principal-value quadrature of ``|Delta|^{mu/2} f`` on the grid.

    Nodes are cell midpoints of width ``h``. The excluded cell ``|y| < h/2``
    and the midpoint-rule defect of the even Taylor term ``f''|y|^(1-mu)/2``
    are restored together as ``-zeta(mu - 1) h^(2-mu) f''`` (for mu = 1 this
    is ``f'' h/2``); the odd terms cancel by symmetry. The fourth-order term
    gets the analogous weight ``-zeta(mu - 3) h^(4-mu) / 12``, which vanishes
    at mu = 1. Beyond the window the configured tail model is integrated
    analytically.
    """
    if cfg.method != "pv_quadrature":
        raise ValueError("frac_laplacian_pv needs method='pv_quadrature'")
    mu, tail = cfg.mu, cfg.tail_model
    C = levy_constant(mu)
    h, x, fv = f.h, f.x, f.values
    delta = 0.5 * h

    conv, row_sum = pv_parts(f, mu)
    inner = conv - fv * row_sum
    singular = second_derivative4(fv, h) * singular_weight(mu, h)
    if mu != 1.0:
        singular = singular + fourth_derivative(fv, h) * quartic_weight(mu, h)

    XR = f.x_max + delta
    XL = f.x_min - delta
    mass_out = ((XR - x) ** (-mu) + (x - XL) ** (-mu)) / mu
    if tail.kind == "power_law" and tail.exponent > 0 and not (f.x_min < 0 < f.x_max):
        raise GridError("power-law tails need a window straddling the origin")
    right = _exterior_integral(x, XR, fv[-1], f.x_max, tail, mu)
    left = _exterior_integral(-x, -XL, fv[0], f.x_min, tail, mu)

    g = -C * (inner + singular + right + left - fv * mass_out)
    return f.with_values(g, mu=mu, method="pv_quadrature", tail_model=str(tail))


def _spectral_core(values, h, multiplier, pad, tail, x_min, x_max):
    n = values.size
    if pad <= 1:
        ext = values
        offset = 0
    else:
        total = int(pad * n)
        n_left = (total - n) // 2
        n_right = total - n - n_left
        zl = x_min - h * np.arange(n_left, 0, -1)
        zr = x_max + h * np.arange(1, n_right + 1)
        ext = np.concatenate(
            [tail.extend(zl, x_min, values[0]), values, tail.extend(zr, x_max, values[-1])]
        )
        offset = n_left
    k = 2.0 * np.pi * np.fft.fftfreq(ext.size, d=h)
    out = np.fft.ifft(multiplier(np.abs(k)) * np.fft.fft(ext)).real
    return out[offset : offset + n], ext, offset


def frac_laplacian_spectral(
    f: GridFunction,
    cfg: OperatorConfig,
    periodic: bool = False,
    pad: int = 2,
    boundary_tol: float = 1e-6,
) -> GridFunction:
    """Fourier-multiplier ``|k|^mu`` on the periodic extension of the grid.

    With ``periodic=True`` the last node is taken as a copy of the first and
    the window length is the period. Otherwise the input is treated as
    localized: it is embedded in a window ``pad`` times longer (continued by
    the tail model) and the leading periodic-image error, the monopole far
    field ``-C_mu M |x|^(-1-mu)`` of every copy, is subtracted in closed form.
    """
    if cfg.method != "spectral":
        raise ValueError("frac_laplacian_spectral needs method='spectral'")
    mu = cfg.mu
    h = f.h
    meta = {"mu": mu, "method": "spectral", "tail_model": str(cfg.tail_model)}
    symbol = lambda k: k**mu  # noqa: E731

    if periodic:
        v = f.values[:-1]
        scale = max(np.max(np.abs(f.values)), 1e-300)
        if abs(f.values[-1] - f.values[0]) > 1e-8 * scale:
            warnings.warn("periodic input has mismatched end values", TruncationWarning)
        k = 2.0 * np.pi * np.fft.fftfreq(v.size, d=h)
        g = np.fft.ifft(symbol(np.abs(k)) * np.fft.fft(v)).real
        return f.with_values(np.append(g, g[0]), periodic=True, **meta)

    edge = max(abs(f.values[0]), abs(f.values[-1]))
    scale = max(np.max(np.abs(f.values)), 1e-300)
    truncated = bool(cfg.tail_model.kind == "zero" and edge > boundary_tol * scale)
    if truncated:
        warnings.warn(
            f"boundary magnitude {edge:.3g} exceeds tolerance; spectral result is truncated",
            TruncationWarning,
        )
    g, ext, offset = _spectral_core(
        f.values, h, symbol, pad, cfg.tail_model, f.x_min, f.x_max
    )
    # subtract the far field of the periodic copies
    period = ext.size * h
    z = f.x_min + h * (np.arange(ext.size) - offset)
    mass = h * ext.sum()
    if mass != 0.0:
        center = h * np.sum(z * ext) / mass
        y = f.x - center
        s = 1.0 + mu
        images = period ** (-s) * (zeta(s, 1.0 + y / period) + zeta(s, 1.0 - y / period))
        g = g + levy_constant(mu) * mass * images
    return f.with_values(g, truncation_warning=truncated, **meta)


def frac_laplacian(f: GridFunction, cfg: OperatorConfig, **kw) -> GridFunction:
    if cfg.method == "pv_quadrature":
        return frac_laplacian_pv(f, cfg)
    return frac_laplacian_spectral(f, cfg, **kw)


def cauchy_semigroup_apply(
    f: GridFunction, t: float, lam: float = 1.0, tail=TailModel.power_law(2.0), pad: int = 4
) -> GridFunction:
    """Free Cauchy evolution: convolve with the Cauchy density of width ``lam*t``.

    Realized as the multiplier ``exp(-lam t |k|)`` on a padded window whose
    exterior follows ``tail`` (the default suits densities decaying as x^-2).
    """
    if t < 0:
        raise ValueError("evolution time must be non-negative")
    if t == 0:
        return f.with_values(f.values.copy())
    tail = TailModel.parse(tail)
    width = lam * t
    out, _, _ = _spectral_core(
        f.values, f.h, lambda k: np.exp(-width * k), pad, tail, f.x_min, f.x_max
    )
    return f.with_values(out, cauchy_time=t, lam=lam)


def cauchy_density(x, width=1.0):
    return width / (np.pi * (width * width + np.asarray(x, dtype=float) ** 2))
