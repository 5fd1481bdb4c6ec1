"""Stationary target densities with closed-form drift and potential oracles.

Oracles take the noise intensity as second argument: ``lam`` for the stable
driver, the diffusion constant ``D`` for the Gaussian baseline.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, stats
from scipy.special import gammaln

DEFAULT_WINDOW = (-200.0, 200.0)
NAMES = (
    "cauchy_ouc",
    "quadratic_cauchy",
    "cauchy_family",
    "cauchy_alpha4",
    "quartic_bimodal_base",
    "gibbs_gaussian",
)


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class TargetDensity:
    name: str
    params: dict
    density: Callable
    cdf: Callable
    log_density: Callable
    tail_exponent: float  # density ~ |x|^-p; inf for Gaussian tails
    symmetric: bool = True
    window: tuple = DEFAULT_WINDOW
    oracle_drift: Optional[Callable] = None
    oracle_potential: Optional[Callable] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, x):
        return self.density(x)

    def drift_growth(self, mu=1.0):
        """Power of |x| at which the reconstructed drift grows."""
        if math.isinf(self.tail_exponent):
            return 1.0
        return self.tail_exponent - mu

    def superlinear_drift(self, mu=1.0):
        return self.drift_growth(mu) > 1.0 + 1e-12

    def quantile(self, q, tol=1e-13):
        """Monotone bisection on the CDF."""
        q = np.atleast_1d(np.asarray(q, dtype=float))
        if np.any((q <= 0) | (q >= 1)):
            raise ValueError("quantile levels must lie in (0, 1)")
        lo = np.full_like(q, self.window[0])
        hi = np.full_like(q, self.window[1])
        # widen the bracket for far-tail levels
        for _ in range(200):
            bad = self.cdf(lo) > q
            if not bad.any():
                break
            lo[bad] *= 2.0
        for _ in range(200):
            bad = self.cdf(hi) < q
            if not bad.any():
                break
            hi[bad] *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < q
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= tol * np.maximum(1.0, np.abs(mid))):
                break
        return 0.5 * (lo + hi)

    def sample(self, rng, size):
        return self.quantile(rng.uniform_open(size))

    def describe(self):
        return {
            "name": self.name,
            "params": dict(self.params),
            "tail_exponent": self.tail_exponent,
            "symmetric": self.symmetric,
            "window": list(self.window),
        }


def _as_array(x):
    return np.asarray(x, dtype=float)


def _cauchy_ouc(params):
    lam = float(params.get("lambda", params.get("lam", 1.0)))
    if "sigma" in params:
        sigma = float(params["sigma"])
    else:
        gam = float(params.get("gamma", 1.0))
        if gam <= 0:
            raise CatalogError("gamma must be positive")
        sigma = lam / gam
    if sigma <= 0:
        raise CatalogError("sigma must be positive")

    def density(x):
        x = _as_array(x)
        return sigma / (np.pi * (sigma * sigma + x * x))

    def log_density(x):
        x = _as_array(x)
        return np.log(sigma / np.pi) - np.log(sigma * sigma + x * x)

    def cdf(x):
        return 0.5 + np.arctan(_as_array(x) / sigma) / np.pi

    def drift(x, lam):
        return -(lam / sigma) * _as_array(x)

    def potential(x, lam):
        x = _as_array(x)
        a = sigma * sigma + x * x
        ra = np.sqrt(a)
        # log((ra + x)/(ra - x)) written without cancellation
        log_ratio = 2.0 * np.log((ra + np.abs(x)) / sigma) * np.sign(x)
        return lam / np.pi * (-2.0 / ra + x / a * log_ratio)

    return TargetDensity(
        "cauchy_ouc", {"sigma": sigma}, density, cdf, log_density, 2.0,
        oracle_drift=drift, oracle_potential=potential,
    )


def _family(alpha, name="cauchy_family", **kw):
    alpha = float(alpha)
    if not alpha > 0.5:
        raise CatalogError("cauchy_family needs alpha > 1/2 for a normalizable density")
    log_norm = gammaln(alpha) - 0.5 * np.log(np.pi) - gammaln(alpha - 0.5)
    nu = 2.0 * alpha - 1.0

    def log_density(x):
        return log_norm - alpha * np.log1p(_as_array(x) ** 2)

    def density(x):
        return np.exp(log_density(x))

    def cdf(x):
        return stats.t.cdf(_as_array(x) * np.sqrt(nu), nu)

    return TargetDensity(
        name, {"alpha": alpha}, density, cdf, log_density, 2.0 * alpha, **kw
    )


def _quadratic_cauchy(params):
    def drift(x, lam):
        x = _as_array(x)
        return -0.5 * lam * (x**3 + 3.0 * x)

    def potential(x, lam):
        x = _as_array(x)
        return lam * (x * x - 1.0) / (x * x + 1.0)

    base = _family(2.0, "quadratic_cauchy", oracle_drift=drift, oracle_potential=potential)

    def cdf(x):
        x = _as_array(x)
        return (np.arctan(x) + x / (1.0 + x * x)) / np.pi + 0.5

    return TargetDensity(
        "quadratic_cauchy", {}, base.density, cdf, base.log_density, 4.0,
        oracle_drift=drift, oracle_potential=potential,
    )


def _cauchy_alpha4(params):
    def drift(x, lam):
        x = _as_array(x)
        x2 = x * x
        return -lam * x / 16.0 * (5 * x2**3 + 21 * x2**2 + 35 * x2 + 35)

    def potential(x, lam):
        x = _as_array(x)
        x2 = x * x
        return lam / (2.0 * (1.0 + x2)) * (x2 * x2 + 6 * x2 - 3)

    return _family(4.0, "cauchy_alpha4", oracle_drift=drift, oracle_potential=potential)


def _quartic_bimodal(params):
    s3 = np.sqrt(3.0)

    def density(x):
        x = _as_array(x)
        return 1.0 / (np.pi * (1.0 - x * x + x**4))

    def log_density(x):
        x = _as_array(x)
        return -np.log(np.pi) - np.log(1.0 - x * x + x**4)

    def cdf(x):
        x = _as_array(x)
        logs = s3 * (np.log(x * x + s3 * x + 1.0) - np.log(x * x - s3 * x + 1.0))
        atans = 6.0 * (np.arctan(2 * x - s3) + np.arctan(2 * x + s3))
        return 0.5 + (logs + atans) / (12.0 * np.pi)

    def drift(x, lam):
        # gradient flow of U = lam x^4 / 4
        return -lam * _as_array(x) ** 3

    return TargetDensity(
        "quartic_bimodal_base", {}, density, cdf, log_density, 4.0, oracle_drift=drift
    )


def _gibbs_gaussian(params):
    k = float(params.get("k", 1.0))
    kT = float(params.get("kT", 1.0))
    if k <= 0 or kT <= 0:
        raise CatalogError("gibbs_gaussian needs k > 0 and kT > 0")
    var = kT / k

    def log_density(x):
        x = _as_array(x)
        return -0.5 * x * x / var - 0.5 * np.log(2 * np.pi * var)

    def density(x):
        return np.exp(log_density(x))

    def cdf(x):
        return stats.norm.cdf(_as_array(x), scale=np.sqrt(var))

    def drift(x, D):
        # b = D d/dx ln rho = -(D/kT) dV/dx with V = k x^2 / 2
        return -D * k / kT * _as_array(x)

    def potential(x, D):
        x = _as_array(x)
        b = drift(x, D)
        return 0.5 * (b * b / (2.0 * D) - D * k / kT)

    return TargetDensity(
        "gibbs_gaussian", {"k": k, "kT": kT}, density, cdf, log_density, math.inf,
        window=(-12.0 * np.sqrt(var), 12.0 * np.sqrt(var)),
        oracle_drift=drift, oracle_potential=potential,
    )


_BUILDERS = {
    "cauchy_ouc": _cauchy_ouc,
    "quadratic_cauchy": _quadratic_cauchy,
    "cauchy_family": lambda p: _family(p.get("alpha", 2.0)),
    "cauchy_alpha4": _cauchy_alpha4,
    "quartic_bimodal_base": _quartic_bimodal,
    "gibbs_gaussian": _gibbs_gaussian,
}


def catalog_get(name, params=None) -> TargetDensity:
    params = dict(params or {})
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise CatalogError(f"unknown target {name!r}; known: {', '.join(NAMES)}") from None
    target = builder(params)
    if "window" in params:
        lo, hi = params["window"]
        target = _replace(target, window=(float(lo), float(hi)))
    return target


def _replace(target, **changes):
    from dataclasses import replace

    return replace(target, **changes)


def target_moment(target: TargetDensity, order: int) -> float:
    """Moment of the given order; ``math.inf`` flags a divergent integral.

    Quadrature covers the support window, the power-law tails beyond it are
    integrated analytically.
    """
    if order < 0:
        raise ValueError("moment order must be non-negative")
    p = target.tail_exponent
    if order >= p - 1.0:
        return math.inf
    if target.symmetric and order % 2 == 1:
        return 0.0
    lo, hi = target.window
    f = lambda x: x**order * target.density(x)  # noqa: E731
    pts = [0.0] if lo < 0 < hi else None
    core, _ = integrate.quad(f, lo, hi, points=pts, limit=500, epsabs=1e-13, epsrel=1e-12)
    tails = 0.0
    if not math.isinf(p):
        for edge in (lo, hi):
            X = abs(edge)
            amp = float(target.density(edge)) * X**p
            t = amp * X ** (order + 1 - p) / (p - order - 1)
            tails += t * (1.0 if edge > 0 or order % 2 == 0 else -1.0)
    return float(core + tails)


def tabulated_target(x, values, name="tabulated", tail_fraction=0.05) -> TargetDensity:
    """User density from samples on a uniform grid; numeric oracles only.

    Log-density is interpolated linearly; beyond the table both sides continue
    as power laws fitted on the outer ``tail_fraction`` of the nodes.
    """
    from .grid import check_uniform

    x = np.asarray(x, dtype=float)
    v = np.asarray(values, dtype=float)
    check_uniform(x)
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise CatalogError("tabulated density must be finite and strictly positive")
    m = max(3, int(tail_fraction * x.size))
    exps = []
    for sl in (slice(0, m), slice(-m, None)):
        xs, vs = np.abs(x[sl]), v[sl]
        if np.any(xs <= 0):
            raise CatalogError("tabulated window must straddle the origin")
        slope = np.polyfit(np.log(xs), np.log(vs), 1)[0]
        exps.append(-slope)
    p_left, p_right = exps
    if min(exps) <= 1.0:
        raise CatalogError("tabulated tails decay too slowly to normalize")

    # normalization including the power-law tails
    core = np.trapezoid(v, x)
    tail_l = v[0] * abs(x[0]) / (p_left - 1.0)
    tail_r = v[-1] * abs(x[-1]) / (p_right - 1.0)
    Z = core + tail_l + tail_r
    v = v / Z
    logv = np.log(v)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(x))])
    cl = v[0] * abs(x[0]) / (p_left - 1.0)

    def log_density(z):
        z = _as_array(z)
        az = np.maximum(np.abs(z), 1e-300)
        out = np.interp(z, x, logv)
        out = np.where(z < x[0], logv[0] - p_left * np.log(az / abs(x[0])), out)
        return np.where(z > x[-1], logv[-1] - p_right * np.log(az / abs(x[-1])), out)

    def density(z):
        return np.exp(log_density(z))

    def cdf(z):
        z = _as_array(z)
        inner = cl + np.interp(z, x, cum)
        az = np.maximum(np.abs(z), 1e-300)
        left = cl * (abs(x[0]) / az) ** (p_left - 1.0)
        right = v[-1] * abs(x[-1]) / (p_right - 1.0) * (abs(x[-1]) / az) ** (p_right - 1.0)
        out = np.where(z < x[0], left, inner)
        return np.where(z > x[-1], 1.0 - right, out)

    symmetric = bool(np.allclose(v, v[::-1], rtol=1e-10, atol=0.0) and np.isclose(x[0], -x[-1]))
    return TargetDensity(
        name, {"source": "tabulated", "n": int(x.size)}, density, cdf, log_density,
        float(min(p_left, p_right)), symmetric=symmetric, window=(float(x[0]), float(x[-1])),
        meta={"tail_exponents": (float(p_left), float(p_right))},
    )


def read_tabulated_csv(path, name=None) -> TargetDensity:
    data = np.loadtxt(path, delimiter=",", comments="#")
    return tabulated_target(data[:, 0], data[:, 1], name=name or str(path))


def load_target_spec(path) -> TargetDensity:
    """Read a ``[target]`` section: ``name = ...`` plus family parameters.

    ``table = file.csv`` ingests a tabulated density instead.
    """
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise CatalogError(f"cannot read target spec {path}")
    if "target" not in cp:
        raise CatalogError("target spec needs a [target] section")
    sec = dict(cp["target"])
    if "table" in sec:
        return read_tabulated_csv(sec["table"], name=sec.get("name"))
    name = sec.pop("name", None)
    if name is None:
        raise CatalogError("target spec needs a name")
    params = {}
    for k, v in sec.items():
        if k == "window":
            params[k] = tuple(float(t) for t in v.replace(",", " ").split())
        else:
            params[k] = float(v)
    return catalog_get(name, params)
