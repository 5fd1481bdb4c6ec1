"""Recover the Langevin drift and the semigroup potential of a target density.

For ``d rho/dt = -d(b rho)/dx - lam |Delta|^{mu/2} rho`` to be stationary at
``rho_*`` with zero current,

    b(x) = -(lam / rho_*(x)) * int_{-inf}^{x} (|Delta|^{mu/2} rho_*)(s) ds,

and the semigroup ``exp(-t (lam |Delta|^{mu/2} + V))`` keeps ``rho_*^{1/2}``
invariant when

    V(x) = -lam (|Delta|^{mu/2} rho_*^{1/2})(x) / rho_*^{1/2}(x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .catalog import TargetDensity, tabulated_target
from .fracops import OperatorConfig, TailModel, frac_laplacian_pv, levy_constant
from .grid import GridFunction, first_derivative4, second_derivative4

POSITIVITY_FLOOR = 1e-300


class ReconstructionError(ValueError):
    pass


def make_grid(target: TargetDensity, grid=None, n=8001):
    """Resolve ``grid`` (``None``, ``(x_min, x_max, n)`` or a GridFunction) to nodes."""
    if grid is None:
        lo, hi = target.window
        return float(lo), float(hi), int(n)
    if isinstance(grid, GridFunction):
        return grid.x_min, grid.x_max, grid.n
    lo, hi, m = grid
    return float(lo), float(hi), int(m)


def _sample_density(target, grid, power=1.0):
    lo, hi, n = grid
    x = np.linspace(lo, hi, n)
    logv = power * np.asarray(target.log_density(x), dtype=float)
    vals = np.exp(logv)
    if np.any(~np.isfinite(vals)) or np.any(vals < POSITIVITY_FLOOR):
        raise ReconstructionError(
            f"target density falls below the positivity floor {POSITIVITY_FLOOR:g} on the grid"
        )
    return GridFunction(lo, hi, vals)


def _tail_for(target, power=1.0):
    if math.isinf(target.tail_exponent):
        return TailModel.zero()
    return TailModel.power_law(power * target.tail_exponent)


def _odd_part(v):
    return 0.5 * (v - v[::-1])


def _even_part(v):
    return 0.5 * (v + v[::-1])


def _asymmetry(v, odd):
    ref = np.max(np.abs(v))
    if ref == 0:
        return 0.0
    part = _even_part(v) if odd else _odd_part(v)
    return float(np.max(np.abs(part)) / ref)


def _symmetric_grid(grid):
    lo, hi, _ = grid
    return np.isclose(lo, -hi)


def drift_from_target(target: TargetDensity, mu=1.0, lam=1.0, grid=None, symmetrize=None):
    """Zero-current Langevin drift on a uniform grid.

    The lower limit at minus infinity is the window edge plus the far-field
    estimate ``-C_mu |x|^-mu / mu`` of the operator output beyond it. For
    symmetric targets on symmetric grids the odd part is returned, which makes
    the result independent of that estimate; the discarded even part is kept
    in ``meta['asymmetry']``.
    """
    grid = make_grid(target, grid)
    rho = _sample_density(target, grid)
    cfg = OperatorConfig(mu, "pv_quadrature", _tail_for(target))
    g = frac_laplacian_pv(rho, cfg).values
    h = rho.h
    x_left = rho.x_min - 0.5 * h
    far = -levy_constant(mu) * abs(x_left) ** (-mu) / mu if x_left < 0 else 0.0
    cum = far + 0.5 * h * g[0] + cumulative_simpson(g, dx=h, initial=0.0)
    b = -lam * cum / rho.values

    if symmetrize is None:
        symmetrize = target.symmetric and _symmetric_grid(grid)
    asym = _asymmetry(b, odd=True)
    if symmetrize:
        b = _odd_part(b)
    return rho.with_values(
        b, kind="drift", mu=mu, lam=lam, tail_model=str(cfg.tail_model),
        asymmetry=asym, symmetrized=bool(symmetrize),
    )


def semigroup_potential_from_target(target: TargetDensity, mu=1.0, lam=1.0, grid=None, symmetrize=None):
    """``V = -lam |Delta|^{mu/2} rho^{1/2} / rho^{1/2}``; the square root
    carries half the density's tail exponent."""
    grid = make_grid(target, grid)
    psi = _sample_density(target, grid, power=0.5)
    cfg = OperatorConfig(mu, "pv_quadrature", _tail_for(target, 0.5))
    g = frac_laplacian_pv(psi, cfg).values
    v = -lam * g / psi.values
    if symmetrize is None:
        symmetrize = target.symmetric and _symmetric_grid(grid)
    asym = _asymmetry(v, odd=False)
    if symmetrize:
        v = _even_part(v)
    return psi.with_values(
        v, kind="potential", mu=mu, lam=lam, tail_model=str(cfg.tail_model),
        asymmetry=asym, symmetrized=bool(symmetrize),
    )


def gaussian_drift_from_target(target: TargetDensity, D=1.0, grid=None, n=8001):
    """Gaussian baseline ``b = D d/dx ln rho``."""
    lo, hi, m = make_grid(target, grid, n)
    x = np.linspace(lo, hi, m)
    h = (hi - lo) / (m - 1)
    logr = np.asarray(target.log_density(x), dtype=float)
    if np.any(np.exp(logr) < POSITIVITY_FLOOR):
        raise ReconstructionError("target density falls below the positivity floor on the grid")
    return GridFunction(lo, hi, D * first_derivative4(logr, h), {"kind": "drift", "D": D})


def gaussian_potential_from_target(target: TargetDensity, D=1.0, grid=None, n=8001):
    """Gaussian baseline potential ``D (rho^{1/2})'' / rho^{1/2}``.

    The alternative form ``(b^2/(2D) + b')/2`` built from the drift is
    evaluated as well; their largest interior gap is ``meta['discrepancy']``.
    """
    lo, hi, m = make_grid(target, grid, n)
    x = np.linspace(lo, hi, m)
    h = (hi - lo) / (m - 1)
    logr = np.asarray(target.log_density(x), dtype=float)
    if np.any(np.exp(logr) < POSITIVITY_FLOOR):
        raise ReconstructionError("target density falls below the positivity floor on the grid")
    # (psi''/psi) with psi = exp(logr/2), via derivatives of the log
    l1 = first_derivative4(logr, h)
    l2 = second_derivative4(logr, h)
    v8 = D * (0.25 * l1 * l1 + 0.5 * l2)
    b = D * l1
    v7 = 0.5 * (b * b / (2 * D) + first_derivative4(b, h))
    gap = float(np.max(np.abs(v8 - v7)[3:-3]))
    return GridFunction(lo, hi, v8, {"kind": "potential", "D": D, "discrepancy": gap})


@dataclass
class ReconstructionResult:
    drift: GridFunction
    potential: GridFunction
    residual_norm: float
    method_metadata: dict = field(default_factory=dict)


def reconstruct(target: TargetDensity, mu=1.0, lam=1.0, grid=None) -> ReconstructionResult:
    from .fpe import stationarity_residual

    b = drift_from_target(target, mu, lam, grid)
    v = semigroup_potential_from_target(target, mu, lam, grid)
    rho = _sample_density(target, make_grid(target, grid))
    resid = stationarity_residual(rho, b, mu=mu, lam=lam, tail=_tail_for(target))
    meta = {
        "mu": mu,
        "lam": lam,
        "method": "pv_quadrature",
        "grid": [rho.x_min, rho.x_max, rho.n],
        "drift_tail_model": b.meta["tail_model"],
        "potential_tail_model": v.meta["tail_model"],
        "drift_asymmetry": b.meta["asymmetry"],
        "potential_asymmetry": v.meta["asymmetry"],
    }
    return ReconstructionResult(b, v, resid, meta)


class GridField:
    """Cubic interpolant of a grid function with power-law continuation.

    Beyond the window the values follow ``f_edge (|x|/|x_edge|)^growth``.
    Evaluation indexes the uniform grid directly, so it costs a few array
    operations per call regardless of the grid size.
    """

    def __init__(self, f: GridFunction, growth: float):
        self.grid = f
        self.growth = float(growth)
        spline = CubicSpline(f.x, f.values)
        self._rows = np.ascontiguousarray(spline.c.T)
        self._lo, self._hi, self._h = f.x_min, f.x_max, f.h
        self._flo, self._fhi = f.values[0], f.values[-1]

    def _locate(self, x):
        u = (np.clip(x, self._lo, self._hi) - self._lo) / self._h
        i = np.minimum(u.astype(np.intp), self._rows.shape[0] - 1)
        return self._rows[i], (u - i) * self._h

    def _edge_law(self, x):
        ax = np.abs(x)
        edge = np.where(x > 0, self._fhi, self._flo)
        ref = np.where(x > 0, abs(self._hi), abs(self._lo))
        return edge * (ax / ref) ** self.growth

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        shape = x.shape
        x = x.ravel()
        r, t = self._locate(x)
        out = ((r[:, 0] * t + r[:, 1]) * t + r[:, 2]) * t + r[:, 3]
        far = np.flatnonzero((x < self._lo) | (x > self._hi))
        if far.size:
            out[far] = self._edge_law(x[far])
        return out.reshape(shape)

    def value_and_derivative(self, x):
        """``(f(x), f'(x))`` from a single grid lookup, for 1-d ``x``."""
        x = np.asarray(x, dtype=float)
        r, t = self._locate(x)
        val = ((r[:, 0] * t + r[:, 1]) * t + r[:, 2]) * t + r[:, 3]
        der = (3.0 * r[:, 0] * t + 2.0 * r[:, 1]) * t + r[:, 2]
        far = np.flatnonzero((x < self._lo) | (x > self._hi))
        if far.size:
            xf = x[far]
            val[far] = self._edge_law(xf)
            der[far] = self.growth * val[far] / xf
        return val, der

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        shape = x.shape
        x = x.ravel()
        r, t = self._locate(x)
        out = (3.0 * r[:, 0] * t + 2.0 * r[:, 1]) * t + r[:, 2]
        far = np.flatnonzero((x < self._lo) | (x > self._hi))
        if far.size:
            xf = x[far]
            out[far] = self.growth * self._edge_law(xf) / xf
        return out.reshape(shape)


def _as_target(X):
    if isinstance(X, TargetDensity):
        return X
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("expected a TargetDensity or an (n, 2) array of (x, density)")
    return tabulated_target(arr[:, 0], arr[:, 1])


class _Reconstructor(BaseEstimator, TransformerMixin):
    def __init__(self, mu=1.0, lam=1.0, x_min=None, x_max=None, n=8001):
        self.mu = mu
        self.lam = lam
        self.x_min = x_min
        self.x_max = x_max
        self.n = n

    def _grid(self, target):
        lo = target.window[0] if self.x_min is None else self.x_min
        hi = target.window[1] if self.x_max is None else self.x_max
        return (lo, hi, self.n)

    def transform(self, X):
        check_is_fitted(self, "field_")
        return self.field_(np.asarray(X, dtype=float).ravel())

    def predict(self, X):
        return self.transform(X)

    def __call__(self, x):
        return self.transform(x)


class LangevinDriftReconstructor(_Reconstructor):
    """Fit on a target density; ``transform(x)`` evaluates the drift.

    Examples
    --------
    >>> from levyflights.catalog import catalog_get
    >>> est = LangevinDriftReconstructor(mu=1.0, lam=1.0, n=4001)
    >>> round(float(est.fit(catalog_get("cauchy_ouc")).transform([2.0])[0]), 4)
    -2.0
    """

    def fit(self, X, y=None):
        target = _as_target(X)
        self.target_ = target
        self.drift_ = drift_from_target(target, self.mu, self.lam, self._grid(target))
        self.field_ = GridField(self.drift_, target.drift_growth(self.mu))
        return self

    def derivative(self, x):
        check_is_fitted(self, "field_")
        return self.field_.derivative(x)


class SemigroupPotentialReconstructor(_Reconstructor):
    """Fit on a target density; ``transform(x)`` evaluates the potential."""

    def fit(self, X, y=None):
        target = _as_target(X)
        self.target_ = target
        self.potential_ = semigroup_potential_from_target(
            target, self.mu, self.lam, self._grid(target)
        )
        p = target.tail_exponent
        growth = 0.0 if math.isinf(p) else 0.5 * p - 1.0 - self.mu
        self.field_ = GridField(self.potential_, growth)
        return self
