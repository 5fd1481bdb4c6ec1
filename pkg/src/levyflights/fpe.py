"""Grid evolution of the two fractional transport equations.

Langevin form::

    d rho/dt = -d(b rho)/dx - lam |Delta|^{mu/2} rho

Semigroup form, with ``psi = rho_*^{1/2}`` and ``V = -lam |Delta|^{mu/2} psi / psi``::

    d rho/dt = -lam psi |Delta|^{mu/2}(rho / psi) - V rho

The semigroup form is advanced as the equivalent master equation with rates
``lam C_mu exp(Phi_i - Phi_j) K_ij`` between nodes, where ``K`` is the
symmetric PV kernel of ``fracops`` (cell weights plus a nearest-neighbour
term carrying the near-diagonal correction). The discrete system conserves
mass exactly and keeps ``exp(2 Phi)`` stationary.

The Langevin form is stepped on the cumulative mass ``M`` along
characteristics of ``b`` (see ``CharacteristicStepper``), with the feet
found once from the travel-time function ``T(x) = int dx / b``. Advection and
jumps are not split: reconstructed drifts grow like ``|x|^(p - mu)``, and a
split step would sweep the whole far field inward before jumps could refill
it. There is no CFL limit; the CFL number is still recorded. An upwind flux
scheme with the usual limit, Strang or Lie split, is available for
comparison.

Jumps leaving the window are handled by ``exterior``:

* ``censor``: suppressed (the process is restricted to the window); the
  default for the semigroup form, whose detailed balance it keeps exact;
* ``return``: the default for the Langevin form. The characteristic scheme
  follows the jumped mass outside until the drift brings it back; the
  upwind scheme deposits it in the boundary cell;
* ``absorb``: removed;
* ``tail``: (Langevin form only) the full PV operator with the density's
  power-law continuation, which also models jumps back in from outside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .catalog import TargetDensity
from .fracops import (
    OperatorConfig,
    TailModel,
    _exterior_integral,
    _kernel_row,
    check_mu,
    frac_laplacian_pv,
    levy_constant,
    singular_weight,
)
from .grid import GridError, GridFunction, first_derivative4

SPLITTINGS = ("strang", "lie")
ADVECTIONS = ("semi_lagrangian", "upwind")
EXTERIORS = ("censor", "return", "absorb", "tail")
RK4_STABILITY = 2.5
# largest internal step of the characteristic scheme; above this the time
# quadrature along fast inbound paths of a superlinear drift loses accuracy
CHARACTERISTIC_SUBSTEP = 5e-3


class SolverError(RuntimeError):
    pass


@dataclass
class SolveConfig:
    x_min: float = -200.0
    x_max: float = 200.0
    n: int = 8001
    dt: float = 1e-2
    t_final: float = 20.0
    mu: float = 1.0
    lam: float = 1.0
    splitting: str = "strang"
    positivity_clip: bool = True
    advection: str = "semi_lagrangian"
    exterior: Optional[str] = None  # None: the evolver's default
    snapshot_times: Optional[list] = None
    density_tail: Optional[float] = None  # tail exponent used to extrapolate the variance

    def __post_init__(self):
        check_mu(self.mu)
        if not (self.x_max > self.x_min and self.n >= 5):
            raise ValueError("need x_max > x_min and n >= 5")
        if not (self.dt > 0 and self.t_final >= self.dt):
            raise ValueError("need dt > 0 and t_final >= dt")
        if self.splitting not in SPLITTINGS:
            raise ValueError(f"splitting must be one of {SPLITTINGS}")
        if self.advection not in ADVECTIONS:
            raise ValueError(f"advection must be one of {ADVECTIONS}")
        if self.exterior is not None and self.exterior not in EXTERIORS:
            raise ValueError(f"exterior must be one of {EXTERIORS}")

    @property
    def h(self):
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self):
        return np.linspace(self.x_min, self.x_max, self.n)

    @property
    def n_steps(self):
        return int(round(self.t_final / self.dt))

    def with_exterior(self, default):
        return self if self.exterior is not None else replace(self, exterior=default)

    def snapshots(self):
        if self.snapshot_times is None:
            m = int(math.floor(self.t_final / 0.5 + 1e-9))
            return [0.5 * k for k in range(m + 1)]
        return sorted(float(t) for t in self.snapshot_times)


@dataclass
class FPETrajectory:
    times: np.ndarray
    snapshots: list
    mass: np.ndarray
    variance: np.ndarray
    l1_to_target: Optional[np.ndarray]
    meta: dict = field(default_factory=dict)


def gaussian_bump(cfg: SolveConfig, width):
    x = cfg.x
    v = np.exp(-0.5 * (x / width) ** 2)
    v /= v.sum() * cfg.h
    return GridFunction(cfg.x_min, cfg.x_max, v, {"initial": "gaussian", "width": width})


def cauchy_bump(cfg: SolveConfig, width):
    x = cfg.x
    v = width / (np.pi * (width * width + x * x))
    v /= v.sum() * cfg.h
    return GridFunction(cfg.x_min, cfg.x_max, v, {"initial": "cauchy", "width": width})


def window_variance(rho: GridFunction, tail=None):
    """``int x^2 rho`` on the window, plus the power-law continuation when ``tail > 3``."""
    x, h, v = rho.x, rho.h, rho.values
    var = float(np.sum(x * x * v) * h)
    if tail is not None and math.isfinite(tail):
        if tail <= 3.0:
            return math.inf
        for xe, ve in ((rho.x_max, v[-1]), (rho.x_min, v[0])):
            L = abs(xe) + 0.5 * h
            var += max(ve, 0.0) * abs(xe) ** tail * L ** (3.0 - tail) / (tail - 3.0)
    return var


# ----------------------------------------------------------------------------
# jump operators in master form


class _Kernel:
    """FFT-applied symmetric kernel ``w_ij = h |x_i - x_j|^(-1-mu)``."""

    def __init__(self, n, h, mu):
        k = _kernel_row(n, h, mu)
        full = np.concatenate([[0.0], k, np.zeros(1), k[::-1]])
        self.size = full.size
        self.fk = np.fft.rfft(full)
        self.n = n
        cum = np.concatenate([[0.0], np.cumsum(k)])
        idx = np.arange(n)
        self.row_sum = cum[idx] + cum[n - 1 - idx]

    def __call__(self, f):
        return np.fft.irfft(np.fft.rfft(f, self.size) * self.fk, self.size)[: self.n]


def _neighbour_sum(f):
    out = np.zeros_like(f)
    out[1:] += f[:-1]
    out[:-1] += f[1:]
    return out


class MasterOperator:
    """``d rho/dt`` for the jump part with rates ``lam C exp(Phi_i - Phi_j) K_ij``.

    ``phi=None`` is the free stable generator.
    """

    def __init__(self, cfg: SolveConfig, phi=None, exterior="censor", psi_tail=None):
        n, h, mu = cfg.n, cfg.h, cfg.mu
        self.n, self.h = n, h
        self.rate = cfg.lam * levy_constant(mu)
        self.kernel = _Kernel(n, h, mu)
        self.nn = singular_weight(mu, h) / (h * h)
        nn_count = np.full(n, 2.0)
        nn_count[0] = nn_count[-1] = 1.0
        x = cfg.x
        self.exterior = exterior
        if phi is None:
            self.ephi = None
            self.loss = self.kernel.row_sum + self.nn * nn_count
            XR, XL = cfg.x_max + 0.5 * h, cfg.x_min - 0.5 * h
            self.out_right = (XR - x) ** (-mu) / mu
            self.out_left = (x - XL) ** (-mu) / mu
        else:
            phi = np.asarray(phi, dtype=float)
            shift = phi.max()
            self.ephi = np.exp(phi - shift)
            self.emphi = np.exp(-(phi - shift))
            # sum_j K_ji exp(Phi_j) for the loss term, divided by exp(Phi_i)
            self.loss = self.emphi * (
                self.kernel(self.ephi) + self.nn * _neighbour_sum(self.ephi)
            )
            tail = psi_tail if psi_tail is not None else TailModel.zero()
            XR, XL = cfg.x_max + 0.5 * h, cfg.x_min - 0.5 * h
            right = _exterior_integral(x, XR, self.ephi[-1], cfg.x_max, tail, mu)
            left = _exterior_integral(-x, -XL, self.ephi[0], cfg.x_min, tail, mu)
            self.out_right = self.emphi * right
            self.out_left = self.emphi * left
        if exterior == "censor":
            self.out_right = np.zeros(n)
            self.out_left = np.zeros(n)
        self.total_loss = self.rate * (self.loss + self.out_right + self.out_left)

    def __call__(self, rho):
        if self.ephi is None:
            g = rho
        else:
            g = self.emphi * rho
        gain = self.kernel(g) + self.nn * _neighbour_sum(g)
        if self.ephi is not None:
            gain = self.ephi * gain
        d = self.rate * gain - self.total_loss * rho
        if self.exterior == "return":
            d[-1] += self.rate * np.dot(self.out_right, rho)
            d[0] += self.rate * np.dot(self.out_left, rho)
        return d

    def substeps(self, dt):
        bound = 2.0 * float(np.max(self.total_loss))
        return max(1, int(math.ceil(dt * bound / RK4_STABILITY)))

    def exterior_rates(self, rho):
        """Mass per unit time jumping past the left and the right window edge."""
        c = self.rate * self.h
        return c * float(np.dot(self.out_left, rho)), c * float(np.dot(self.out_right, rho))


class TailJumpOperator:
    """``-lam |Delta|^{mu/2} rho`` with the PV quadrature and a tail model."""

    def __init__(self, cfg: SolveConfig, tail):
        self.cfg = cfg
        self.op = OperatorConfig(cfg.mu, "pv_quadrature", tail)
        self.total_loss = cfg.lam * levy_constant(cfg.mu) * (
            _Kernel(cfg.n, cfg.h, cfg.mu).row_sum + 2.0 * singular_weight(cfg.mu, cfg.h) / cfg.h**2
        )

    def __call__(self, rho):
        c = self.cfg
        f = GridFunction(c.x_min, c.x_max, rho)
        return -c.lam * frac_laplacian_pv(f, self.op).values

    def substeps(self, dt):
        bound = 2.0 * float(np.max(self.total_loss))
        return max(1, int(math.ceil(dt * bound / RK4_STABILITY)))


def _rk4(op, rho, dt, n_sub):
    k = dt / n_sub
    for _ in range(n_sub):
        k1 = op(rho)
        k2 = op(rho + 0.5 * k * k1)
        k3 = op(rho + 0.5 * k * k2)
        k4 = op(rho + k * k3)
        rho = rho + (k / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


# ----------------------------------------------------------------------------
# advection


def _zeros_of(b, faces, values):
    s = np.sign(values)
    zeros = list(faces[values == 0.0])
    idx = np.flatnonzero(s[:-1] * s[1:] < 0)
    for i in idx:
        zeros.append(brentq(lambda z: float(b(np.array([z]))[0]), faces[i], faces[i + 1], xtol=1e-15))
    return np.array(sorted(zeros))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)


def _travel_time(b, lo, hi):
    """``int_lo^hi ds / b(s)`` elementwise by 6-point Gauss-Legendre."""
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = 1.0 / np.asarray(b(nodes.ravel()), dtype=float).reshape(nodes.shape)
    return half * (vals @ _GL_W)


def characteristic_positions(b: Callable, faces, taus, newton_steps=4, return_overshoot=False):
    """Backward positions ``y`` with ``X(tau; y) = face`` for ``dX/dt = b(X)``.

    ``taus`` is a 1-D array of times (one output row each) or a 2-D array
    with one time per row and face. Inside each interval between zeros of ``b`` the travel time
    ``T(s) = int ds / b`` is tabulated cellwise by Gauss-Legendre (cells
    refined geometrically towards the zeros), the equation
    ``T(y) = T(face) - tau`` is inverted by interpolation and polished by
    Newton steps on the exact integral. Positions beyond the window are
    clamped to the end face; with ``return_overshoot`` the unused part of
    ``tau`` at the moment of clamping is returned as a second array.
    """
    faces = np.asarray(faces, dtype=float)
    values = np.asarray(b(faces), dtype=float)
    zeros = _zeros_of(b, faces, values)
    ends = np.concatenate([[faces[0]], zeros, [faces[-1]]])
    taus = np.asarray(taus, dtype=float)
    if taus.ndim < 2:
        taus = np.broadcast_to(np.atleast_1d(taus)[:, None], (taus.size, faces.size))
    feet = np.tile(faces, (taus.shape[0], 1))
    over = np.zeros_like(feet)
    for a, c in zip(ends[:-1], ends[1:]):
        if c <= a:
            continue
        inside = (faces > a) & (faces < c)
        if not inside.any():
            continue
        width = c - a
        tiny = 1e-12 * max(1.0, abs(a), abs(c))
        pieces = [faces[inside], [a + tiny, c - tiny]]
        if a in zeros:
            pieces.append(a + np.geomspace(tiny, 0.5 * width, 1200))
        if c in zeros:
            pieces.append(c - np.geomspace(tiny, 0.5 * width, 1200))
        s = np.unique(np.concatenate(pieces))
        s = s[(s > a) & (s < c)]
        T = np.concatenate([[0.0], np.cumsum(_travel_time(b, s[:-1], s[1:]))])
        fx = faces[inside]
        increasing = T[-1] > T[0]  # b > 0: feet lie to the left
        lo_T, hi_T = (T[0], T[-1]) if increasing else (T[-1], T[0])
        for row, tau in enumerate(taus):
            target = T[np.searchsorted(s, fx)] - tau[inside]
            if increasing:
                y = np.interp(target, T, s, left=a, right=c)
                if a == faces[0]:
                    over[row, inside] = np.maximum(T[0] - target, 0.0)
            else:
                y = np.interp(-target, -T, s, left=a, right=c)
                if c == faces[-1]:
                    over[row, inside] = np.maximum(T[-1] - target, 0.0)
            free = (target > lo_T) & (target < hi_T)
            if free.any():
                yf, tf = y[free], target[free]
                for _ in range(newton_steps):
                    k = np.clip(np.searchsorted(s, yf) - 1, 0, s.size - 1)
                    Ty = T[k] + _travel_time(b, s[k], yf)
                    yf = np.clip(yf - (Ty - tf) * np.asarray(b(yf), dtype=float), a, c)
                y[free] = yf
            feet[row, inside] = y
    feet = np.clip(feet, faces[0], faces[-1])
    return (feet, over) if return_overshoot else feet


def characteristic_feet(b: Callable, faces, tau):
    """Backward characteristic feet over one time ``tau``."""
    return characteristic_positions(b, faces, [tau])[0]


def _faces(cfg):
    return cfg.x_min - 0.5 * cfg.h + cfg.h * np.arange(cfg.n + 1)


class SemiLagrangian:
    """Pure advection over ``tau`` by remapping the cumulative mass."""

    def __init__(self, b, cfg: SolveConfig, tau):
        self.faces = _faces(cfg)
        self.feet = characteristic_feet(b, self.faces, tau)
        self.h = cfg.h
        self.cfl = float(tau * np.abs(np.asarray(b(self.faces), dtype=float)).max() / cfg.h)

    def __call__(self, rho):
        M = np.concatenate([[0.0], np.cumsum(rho) * self.h])
        return np.diff(make_interp_spline(self.faces, M, k=5)(self.feet)) / self.h


def _outside_flight(b, end):
    """Outward backward flight from the window edge ``end``.

    Beyond the window ``b`` is continued as ``b(end) (x/end)^k`` with ``k``
    read off from ``b`` at ``end`` and ``0.9 end``. Returns ``k``, the map
    ``sigma -> |end| / |X(sigma)|`` and the time to reach infinity (finite
    only for ``k > 1``).
    """
    R = abs(end)
    bR = abs(float(np.asarray(b(np.array([end])), dtype=float)[0]))
    bI = abs(float(np.asarray(b(np.array([0.9 * end])), dtype=float)[0]))
    if bR == 0.0:
        return 0.0, (lambda sig: np.ones_like(sig)), np.inf
    k = math.log(bR / bI) / math.log(1.0 / 0.9) if bI > 0 else 1.0
    if abs(k - 1.0) < 1e-8:
        return 1.0, (lambda sig: np.exp(-bR * sig / R)), np.inf
    c = (k - 1.0) * bR / R

    def ratio(sig):
        return np.maximum(1.0 - c * sig, 0.0) ** (1.0 / (k - 1.0))

    return k, ratio, (1.0 / c if k > 1.0 else np.inf)


class CharacteristicStepper:
    """One unsplit step of ``M_t + b M_x = G`` for the cumulative mass ``M``.

    ``G(x) = int_{-inf}^x (J rho)`` is the cumulative flux of the jump part
    ``J``. Along a characteristic ``dM/ds = G``, so ``M(x, t + dt)`` is ``M``
    at the foot plus the time integral of ``G`` along the path, taken with
    Gauss-Legendre nodes whose positions are fixed by ``b`` and computed
    once. The time dependence of ``G`` is handled by a predictor-corrector
    (Heun) rule. Far out, where a superlinear drift sweeps mass in within a
    fraction of the step, this keeps the balance between jumps landing and
    drift carrying them back, which an advection/jump splitting loses.

    With ``transit=True`` (the ``return`` exterior) mass that jumps past an
    edge is followed outside: beyond the right edge ``G = -L_R (R/x)^mu``,
    with ``L_R`` the landing rate past ``R``, and mirror-wise on the left.
    It re-enters along the inbound characteristics. Whatever is still
    outside is kept per side as a transit mass, spread like the stationary
    outside profile ``x^-(mu + k)`` of a drift growing as ``x^k``. The total
    probability is conserved to rounding.

    Grid values are point values while ``M`` needs cell averages; the two are
    related by ``a = (1 + delta^2/24) rho`` (fourth order, reflecting ends, so
    sums are unchanged), inverted exactly by a tridiagonal solve.
    """

    def __init__(self, b, jump, cfg: SolveConfig, dt, transit=False):
        self.h = cfg.h
        self.jump = jump
        self.transit = bool(transit)
        self.faces = faces = _faces(cfg)
        lo, hi = faces[0], faces[-1]
        nf = faces.size
        self.dt = dt
        self.cfl = float(dt * np.abs(np.asarray(b(faces), dtype=float)).max() / cfg.h)

        feet, over = characteristic_positions(b, faces, [dt], return_overshoot=True)
        feet, over = feet[0], over[0]
        b_ends = np.asarray(b(np.array([lo, hi])), dtype=float)
        # an inbound end face was itself outside during the whole step
        if b_ends[0] > 0:
            over[0] = dt
        if b_ends[1] < 0:
            over[-1] = dt
        side = np.zeros(nf, dtype=int)
        side[(over > 0) & (feet >= hi)] = 1
        side[(over > 0) & (feet <= lo)] = -1
        self.feet = feet
        self.foot_right = side == 1
        self.foot_left = side == -1
        # share of the transit mass still beyond the foot, per side
        self.beyond_foot = np.zeros(nf)

        # backward time spent inside the window, with Gauss-Legendre nodes on it
        inside_time = dt - over
        s_in = 0.5 * inside_time[None, :] * (1.0 + _GL_X[:, None])
        nodes = characteristic_positions(b, faces, s_in)
        self.w_in = 0.5 * inside_time[None, :] * _GL_W[:, None]
        self.ft_in = 1.0 - s_in / dt  # position of the node inside the step

        u = (nodes - lo) / self.h
        i0 = np.clip(u.astype(np.intp) - 1, 0, nf - 4)
        t = u - i0
        self.idx = i0[None] + np.arange(4)[:, None, None]
        self.lw = np.stack([
            -(t - 1) * (t - 2) * (t - 3) / 6.0,
            t * (t - 2) * (t - 3) / 2.0,
            -t * (t - 1) * (t - 3) / 2.0,
            t * (t - 1) * (t - 2) / 6.0,
        ])

        # the remaining time is spent beyond an edge
        self.out_weight = np.zeros((2, _GL_X.size, nf))
        self.ft_out = np.zeros((_GL_X.size, nf))
        if self.transit:
            for j, (sgn, end) in enumerate(((-1, lo), (1, hi))):
                sel = side == sgn
                if not sel.any():
                    continue
                k, ratio, t_inf = _outside_flight(b, end)
                span = np.minimum(over[sel], t_inf)
                sig = 0.5 * span[None, :] * (1.0 + _GL_X[:, None])
                self.out_weight[j][:, sel] = 0.5 * span[None, :] * _GL_W[:, None] * ratio(sig) ** cfg.mu
                # outside, the density decays like x^-(mu + k)
                self.beyond_foot[sel] = ratio(over[sel]) ** max(cfg.mu + k - 1.0, 1e-3)
                self.ft_out[:, sel] = 1.0 - (inside_time[sel][None, :] + sig) / dt

        n = cfg.n
        band = np.empty((3, n))
        band[0] = band[2] = 1.0 / 24.0
        band[1] = 1.0 - 2.0 / 24.0
        band[1, 0] = band[1, -1] = 1.0 - 1.0 / 24.0
        self._band = band
        self.reset(None)

    def reset(self, total, outside=0.0):
        """Start a run with total probability ``total``, of which ``outside``
        lies beyond the window, half on each side."""
        self.total = total
        self.m_left = 0.5 * outside
        self.transit_mass = outside

    @staticmethod
    def _average(v):
        lap = np.empty_like(v)
        lap[1:-1] = v[2:] - 2.0 * v[1:-1] + v[:-2]
        lap[0] = v[1] - v[0]
        lap[-1] = v[-2] - v[-1]
        return v + lap / 24.0

    def _point(self, a):
        return solve_banded((1, 1), self._band, a)

    def _cumulative(self, v, start=0.0):
        return np.concatenate([[start], start + np.cumsum(self._average(v)) * self.h])

    def _flux(self, rho):
        """``G`` at the inside nodes and the two exterior landing rates."""
        left, right = self.jump.exterior_rates(rho) if self.transit else (0.0, 0.0)
        G = self._cumulative(self.jump(rho), left)
        return np.sum(G[self.idx] * self.lw, axis=0), left, right

    def _path_integral(self, flux, weight):
        g, left, right = flux
        out = np.sum(self.w_in * weight(self.ft_in) * g, axis=0)
        if self.transit:
            wo = weight(self.ft_out)
            out += np.sum(wo * (left * self.out_weight[0] - right * self.out_weight[1]), axis=0)
        return out

    def __call__(self, rho):
        if self.total is None:
            self.reset(float(np.sum(rho) * self.h))
        M = self._cumulative(rho, self.m_left)
        base = make_interp_spline(self.faces, M, k=5)(self.feet)
        if self.transit:
            m_right = self.total - float(M[-1])
            base[self.foot_right] = self.total - m_right * self.beyond_foot[self.foot_right]
            base[self.foot_left] = self.m_left * self.beyond_foot[self.foot_left]
        f0 = self._flux(rho)
        pred = base + self._path_integral(f0, np.ones_like)
        f1 = self._flux(self._point(np.diff(pred) / self.h))
        M1 = base + self._path_integral(f0, lambda ft: 1.0 - ft) + self._path_integral(f1, lambda ft: ft)
        if self.transit:
            self.m_left = float(M1[0])
            self.transit_mass = self.total - float(M1[-1] - M1[0])
        return self._point(np.diff(M1) / self.h)


class Upwind:
    def __init__(self, b, cfg: SolveConfig, tau):
        h = cfg.h
        faces = cfg.x_min - 0.5 * h + h * np.arange(cfg.n + 1)
        self.bf = np.asarray(b(faces), dtype=float)
        self.bf[0] = self.bf[-1] = 0.0  # closed window
        self.cfl = float(tau * np.abs(self.bf).max() / h)
        if self.cfl > 0.5:
            raise SolverError(
                f"CFL number {self.cfl:.3g} exceeds 0.5 for upwind advection; "
                "reduce dt or use semi_lagrangian"
            )
        self.tau, self.h = tau, h

    def __call__(self, rho):
        bf = self.bf
        left = np.concatenate([[0.0], rho])
        right = np.concatenate([rho, [0.0]])
        flux = np.where(bf > 0, bf * left, bf * right)
        return rho - self.tau / self.h * np.diff(flux)


# ----------------------------------------------------------------------------
# drivers


OUTSIDE_TOLERANCE = 1e-2


def _check_initial(rho0: GridFunction, cfg: SolveConfig, outside_ok=False):
    """Grid, sign and mass checks; returns the mass missing from the window.

    With ``outside_ok`` up to ``OUTSIDE_TOLERANCE`` of the probability may lie
    beyond the window (heavy-tailed initial data).
    """
    if rho0.n != cfg.n or not np.isclose(rho0.x_min, cfg.x_min) or not np.isclose(rho0.x_max, cfg.x_max):
        raise GridError("initial density is not on the solver grid")
    if np.any(rho0.values < 0):
        raise ValueError("initial density must be non-negative")
    mass = rho0.values.sum() * cfg.h
    low = 1.0 - (OUTSIDE_TOLERANCE if outside_ok else 1e-6)
    if not low <= mass <= 1.0 + 1e-6:
        raise ValueError(f"initial density must have unit mass (got {mass:.8g})")
    return max(0.0, 1.0 - mass) if outside_ok else 0.0


def _evolve(rho0, cfg: SolveConfig, step, target, meta, transit=None):
    """Run ``step`` and collect snapshots; ``transit()`` reports probability
    currently outside the window, which is counted in ``mass``."""
    snap_t = cfg.snapshots()
    steps = np.rint(np.asarray(snap_t) / cfg.dt).astype(np.int64)
    if steps.min() < 0 or steps.max() > cfg.n_steps:
        raise ValueError("snapshot times must lie in [0, t_final]")
    rho = rho0.values.copy()
    want = {}
    for j, s in enumerate(steps):
        want.setdefault(int(s), []).append(j)
    snaps = [None] * len(steps)
    outside = np.zeros(len(steps))
    min_before_clip = 0.0
    clipped = 0.0
    for j in want.get(0, []):
        snaps[j] = rho0
        outside[j] = transit() if transit is not None else 0.0
    for k in range(1, int(steps.max()) + 1):
        rho = step(rho)
        if not np.all(np.isfinite(rho)):
            raise SolverError(f"non-finite density at step {k}")
        low = float(rho.min())
        min_before_clip = min(min_before_clip, low)
        if cfg.positivity_clip and low < 0:
            neg = rho < 0
            clipped = max(clipped, float(-rho[neg].sum() * cfg.h))
            rho[neg] = 0.0
        for j in want.get(k, ()):
            snaps[j] = rho0.with_values(rho.copy(), t=k * cfg.dt)
            outside[j] = transit() if transit is not None else 0.0
    times = steps * cfg.dt
    mass = np.array([s.values.sum() * cfg.h for s in snaps]) + outside
    tail = cfg.density_tail
    if tail is None and target is not None:
        tail = target.tail_exponent
    var = np.array([window_variance(s, tail) for s in snaps])
    l1 = None
    if target is not None:
        ref = np.asarray(target.density(cfg.x), dtype=float)
        l1 = np.array([float(np.sum(np.abs(s.values - ref)) * cfg.h) for s in snaps])
    meta = dict(meta)
    meta.update(
        min_before_clip=min_before_clip,
        max_clipped_mass_per_step=clipped,
        dt=cfg.dt,
        grid=[cfg.x_min, cfg.x_max, cfg.n],
        splitting=cfg.splitting,
        exterior=cfg.exterior,
        transit_mass=outside.tolist(),
    )
    return FPETrajectory(times, snaps, mass, var, l1, meta)


def evolve_langevin_fpe(rho0: GridFunction, b, cfg: SolveConfig, target: Optional[TargetDensity] = None):
    """Advance ``d rho/dt = -d(b rho)/dx - lam |Delta|^{mu/2} rho``.

    ``b`` is a callable or a GridFunction (interpolated linearly, held at the
    edge values outside). ``target`` only feeds the diagnostics and the
    ``tail`` exterior model. With ``advection='semi_lagrangian'`` the step is
    the unsplit characteristic scheme and ``splitting`` is not used; with
    ``'upwind'`` advection and jumps are split as configured.
    """
    cfg = cfg.with_exterior("return")
    outside = _check_initial(rho0, cfg, outside_ok=cfg.exterior != "censor")
    if isinstance(b, GridFunction):
        bg = b
        b = lambda z: np.interp(z, bg.x, bg.values)  # noqa: E731
    transit = None
    follow = False
    no_drift = not np.any(np.asarray(b(_faces(cfg)), dtype=float))
    if cfg.exterior == "tail":
        p = target.tail_exponent if target is not None else (cfg.density_tail or 0.0)
        jump = TailJumpOperator(cfg, TailModel.zero() if math.isinf(p) else TailModel.power_law(p))
    else:
        follow = cfg.exterior == "return" and cfg.advection == "semi_lagrangian" and not no_drift
        jump = MasterOperator(cfg, None, "absorb" if follow else cfg.exterior)
    n_sub = jump.substeps(cfg.dt)
    if no_drift:
        # pure jump dynamics, stepped exactly like the semigroup evolver with Phi = 0
        cfl = 0.0

        def step(rho):
            return _rk4(jump, rho, cfg.dt, n_sub)

    elif cfg.advection == "semi_lagrangian":
        # Heun is stable for dt * spectral radius <= 2; RK4_STABILITY is the RK4 bound
        n_sub = max(1, int(math.ceil(n_sub * RK4_STABILITY / 2.0)))
        n_sub = max(n_sub, int(math.ceil(cfg.dt / CHARACTERISTIC_SUBSTEP - 1e-9)))
        stepper = CharacteristicStepper(b, jump, cfg, cfg.dt / n_sub, transit=follow)
        stepper.reset(1.0 if follow else float(np.sum(rho0.values) * cfg.h), outside)

        def step(rho):
            for _ in range(n_sub):
                rho = stepper(rho)
            return rho

        cfl = stepper.cfl
        transit = lambda: stepper.transit_mass  # noqa: E731
    else:
        tau = 0.5 * cfg.dt if cfg.splitting == "strang" else cfg.dt
        adv = Upwind(b, cfg, tau)
        cfl = adv.cfl

        def step(rho):
            if cfg.splitting == "strang":
                rho = adv(rho)
                rho = _rk4(jump, rho, cfg.dt, n_sub)
                return adv(rho)
            return _rk4(jump, adv(rho), cfg.dt, n_sub)

    meta = {"equation": "langevin", "advection": cfg.advection, "cfl": cfl, "jump_substeps": n_sub}
    return _evolve(rho0, cfg, step, target, meta, transit)


def _psi_tail(target):
    p = target.tail_exponent
    return TailModel.zero() if math.isinf(p) else TailModel.power_law(0.5 * p)


def evolve_semigroup_fpe(rho0: GridFunction, target: Optional[TargetDensity], cfg: SolveConfig):
    """Advance the semigroup form as a master equation; ``target=None`` means ``Phi = 0``."""
    _check_initial(rho0, cfg)
    cfg = cfg.with_exterior("censor")
    if cfg.exterior == "tail":
        raise ValueError("the semigroup evolver supports censor, return and absorb exteriors")
    if target is None:
        op = MasterOperator(cfg, None, cfg.exterior)
    else:
        phi = 0.5 * np.asarray(target.log_density(cfg.x), dtype=float)
        op = MasterOperator(cfg, phi, cfg.exterior, _psi_tail(target))
    n_sub = op.substeps(cfg.dt)
    meta = {"equation": "semigroup", "jump_substeps": n_sub}
    return _evolve(rho0, cfg, lambda r: _rk4(op, r, cfg.dt, n_sub), target, meta)


def semigroup_rhs_pseudo(rho: GridFunction, target: TargetDensity, potential: GridFunction, mu=1.0, lam=1.0):
    """Right-hand side ``-lam psi |Delta|^{mu/2}(rho/psi) - V rho`` evaluated directly."""
    if not rho.same_grid(potential):
        raise GridError("density and potential are on different grids")
    psi = np.exp(0.5 * np.asarray(target.log_density(rho.x), dtype=float))
    ratio = rho.with_values(rho.values / psi)
    p = target.tail_exponent
    tail = TailModel.zero() if math.isinf(p) else TailModel.power_law(0.5 * p)
    g = frac_laplacian_pv(ratio, OperatorConfig(mu, "pv_quadrature", tail)).values
    return -lam * psi * g - potential.values * rho.values


def stationarity_residual(rho_star: GridFunction, generator: GridFunction, mu=1.0, lam=1.0, tail=None):
    """L1 norm over the window of the right-hand side evaluated at ``rho_star``.

    ``generator`` is a drift (``meta['kind'] == 'drift'``, the default) or a
    semigroup potential (``'potential'``). ``tail`` is the density's tail model.
    """
    if not rho_star.same_grid(generator):
        raise GridError("rho_star and generator are on different grids")
    tail = TailModel.parse(tail) if tail is not None else TailModel.zero()
    h = rho_star.h
    rho = rho_star.values
    if generator.meta.get("kind", "drift") == "potential":
        psi = np.sqrt(rho)
        half = TailModel.power_law(0.5 * tail.exponent) if tail.kind == "power_law" else tail
        g = frac_laplacian_pv(rho_star.with_values(psi), OperatorConfig(mu, "pv_quadrature", half)).values
        r = -lam * psi * g - generator.values * rho
    else:
        flux = generator.values * rho
        lap = frac_laplacian_pv(rho_star, OperatorConfig(mu, "pv_quadrature", tail)).values
        r = -first_derivative4(flux, h) - lam * lap
    return float(np.sum(np.abs(r)) * h)
