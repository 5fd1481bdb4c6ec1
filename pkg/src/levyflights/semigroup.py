"""Kinetic Monte Carlo for the jump process with locally modified stable rates.

From ``x`` the process jumps to ``z`` with rate density

    w(z | x) = lam C_mu exp(Phi(z) - Phi(x)) / |z - x|^(1 + mu),   |z - x| >= eps,

where ``Phi = ln(rho_*)/2``. Since ``w(z|x) rho_*(x) = w(x|z) rho_*(z)``, the
target is stationary. Waiting times are exponential with the total escape
rate ``Lambda(x)``.

Escape-rate cache
-----------------
Writing ``exp(Phi(z) - Phi(x)) = 1 + (psi(z) - psi(x))/psi(x)`` with
``psi = exp(Phi)`` splits ``Lambda`` into the free part and a principal
value that is the semigroup potential ``V`` of the same target:

    Lambda_eps(x) = lam C_mu [2 eps^-mu / mu - (psi''/psi)(x) eps^(2-mu)/(2-mu)] + V(x)

up to ``O(eps^(4-mu))``. The cache tabulates this on the target grid;
``total_escape_rate`` evaluates the defining integral by quadrature and is
the reference the cache is checked against.

Destinations
------------
Rejection from a two-piece envelope. With ``r = |x|/2`` and
``Phi_bar(r) = sup_{|z| >= r} Phi(z)``::

    env(u) = exp(Phi_bar(r)) |u|^(-1-mu)  +  [|x+u| < r] exp(Phi_max) r^(-1-mu)

The first piece is the free Pareto kernel and dominates the target where
``|z| >= r``; the second is uniform on ``|z| < r``, where ``|u| > r``. A
single global envelope ``exp(Phi_max - Phi(x))`` is available as
``envelope="global"``; its acceptance decays like ``psi(x)/psi_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Optional

import numpy as np
from scipy import integrate

from .catalog import TargetDensity
from .ensemble import (
    DEFAULT_EDGES,
    SimulationError,
    check_initial,
    chunk_sizes,
    initial_positions,
    map_chunks,
    snapshot_steps,
    summarize,
)
from .fracops import TailModel, _exterior_integral, check_mu, levy_constant
from .grid import second_derivative
from .langevin import ConfigError
from .reverse import GridField, semigroup_potential_from_target
from .stable import RngStream

ENVELOPES = ("composite", "global")
MIN_ACCEPTANCE = 1e-4


@dataclass
class SemigroupConfig:
    """``target=None`` gives ``Phi = 0``, the free eps-truncated stable process."""

    target: Optional[TargetDensity] = None
    mu: float = 1.0
    lam: float = 1.0
    epsilon: float = 1e-2
    domain_bound: Optional[float] = None
    n_paths: int = 100_000
    t_final: float = 20.0
    initial: tuple = ("point", 0.0)
    seed: int = 0
    chunk_size: int = 25_000
    cache_n: int = 8001
    envelope: str = "composite"
    report_variance: bool = True
    hist_edges: np.ndarray = field(default_factory=lambda: DEFAULT_EDGES.copy())
    _cache: Optional["EscapeRateCache"] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        check_mu(self.mu)
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if self.lam <= 0 or self.n_paths < 1 or self.t_final <= 0:
            raise ConfigError("need lam > 0, n_paths >= 1 and t_final > 0")
        if self.envelope not in ENVELOPES:
            raise ConfigError(f"envelope must be one of {ENVELOPES}")
        problem = check_initial(self.initial)
        if problem:
            raise ConfigError(problem)
        if self.target is not None:
            p = self.target.tail_exponent
            if not math.isinf(p) and 0.5 * p + self.mu <= 0:
                raise ConfigError("escape rate diverges: rho^(1/2) decays too slowly")
        if self.domain_bound is None:
            self.domain_bound = (
                float(max(abs(w) for w in self.target.window)) if self.target is not None else math.inf
            )

    @property
    def rate_constant(self):
        return self.lam * levy_constant(self.mu)

    @property
    def free_rate(self):
        return self.rate_constant * 2.0 * self.epsilon ** (-self.mu) / self.mu

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        if self.target is None:
            return np.zeros_like(x)
        return 0.5 * np.asarray(self.target.log_density(x), dtype=float)

    @property
    def cache(self) -> "EscapeRateCache":
        if self._cache is None:
            self._cache = EscapeRateCache(self)
        return self._cache


def jump_rate_density(x, z, cfg: SemigroupConfig):
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    u = np.abs(z - x)
    if np.any(u < cfg.epsilon):
        raise ValueError(f"jump shorter than epsilon={cfg.epsilon:g}")
    return cfg.rate_constant * np.exp(cfg.phi(z) - cfg.phi(x)) * u ** (-1.0 - cfg.mu)


def _psi_tail(cfg):
    p = cfg.target.tail_exponent
    return TailModel.zero() if math.isinf(p) else TailModel.power_law(0.5 * p)


def _side_integral(x, cfg, sign, n_points=None):
    """``int_{eps}^{inf} psi(x + sign*u) u^(-1-mu) du`` (quadrature and analytic tail).

    With ``n_points`` the bounded part is a midpoint sum in ``ln u`` instead.
    """
    B, eps, mu = cfg.domain_bound, cfg.epsilon, cfg.mu
    start = sign * x + eps  # first admissible point, measured along the jump direction
    inner = 0.0
    if start < B:
        def f(w):
            u = np.exp(w)
            return np.exp(cfg.phi(x + sign * u) - mu * w)

        lo, hi = math.log(eps), math.log(B - sign * x)
        if n_points is None:
            inner = integrate.quad(f, lo, hi, limit=400, epsabs=0.0, epsrel=1e-11)[0]
        else:
            dw = (hi - lo) / n_points
            w = lo + dw * (np.arange(n_points) + 0.5)
            inner = float(np.sum(f(w)) * dw)
    X = max(B, start)
    edge = float(np.exp(cfg.phi(sign * B)))
    outer = _exterior_integral(np.array([sign * x]), X, edge, B, _psi_tail(cfg), mu)[0]
    return inner + float(outer)


def total_escape_rate(x, cfg: SemigroupConfig, n_points=None):
    """``Lambda(x)``: integral of the jump rate over ``|z - x| >= eps``.

    Quadrature on ``|z| <= domain_bound``; beyond it ``rho^(1/2)`` is continued
    as a power law of half the target's tail exponent and integrated exactly.
    """
    if cfg.target is None:
        return cfg.free_rate
    x = float(x)
    total = _side_integral(x, cfg, 1.0, n_points) + _side_integral(x, cfg, -1.0, n_points)
    return cfg.rate_constant * total / math.exp(float(cfg.phi(x)))


class EscapeRateCache:
    """Tabulated ``Lambda`` and ``Phi_bar`` for one configuration (read-only after build)."""

    def __init__(self, cfg: SemigroupConfig):
        self.cfg = cfg
        t = cfg.target
        if t is None:
            self.potential = None
            return
        lo, hi = t.window
        n = cfg.cache_n
        V = semigroup_potential_from_target(t, cfg.mu, cfg.lam, (lo, hi, n))
        p = t.tail_exponent
        growth = 0.0 if math.isinf(p) else 0.5 * p - 1.0 - cfg.mu
        self.potential = GridField(V, growth)
        x = V.x
        psi = np.exp(cfg.phi(x))
        curv = second_derivative(psi, V.h) / psi
        mu, eps = cfg.mu, cfg.epsilon
        lam_eps = (
            cfg.free_rate
            - cfg.rate_constant * curv * eps ** (2.0 - mu) / (2.0 - mu)
            + V.values
        )
        self.grid = V.with_values(lam_eps, kind="escape_rate")
        self.rates = GridField(self.grid, growth)
        self.x_lo, self.x_hi = lo, hi

        # running sup of Phi over |z| >= r on r = k*h, plus a one-cell margin
        phis = cfg.phi(x)
        self.phi_step = float(np.max(np.abs(np.diff(phis))))
        self.h = V.h
        r = np.arange(0.0, max(abs(lo), abs(hi)) + self.h, self.h)
        both = np.maximum(np.interp(r, x, phis, left=-np.inf, right=-np.inf),
                          np.interp(-r, x, phis, left=-np.inf, right=-np.inf))
        self.phi_bar = np.maximum.accumulate(both[::-1])[::-1] + self.phi_step
        self.r_max = r[-1]
        self.phi_max = float(self.phi_bar[0])

    def rate(self, x):
        if self.potential is None:
            return np.full(np.shape(x), self.cfg.free_rate)
        x = np.asarray(x, dtype=float)
        out = self.rates(x)
        far = np.flatnonzero((x < self.x_lo) | (x > self.x_hi))
        for i in far:
            out[i] = total_escape_rate(x[i], self.cfg)
        return out

    def sup_phi(self, r):
        if self.potential is None:
            return np.zeros(np.shape(r))
        r = np.asarray(r, dtype=float)
        k = np.minimum((r / self.h).astype(np.intp), self.phi_bar.size - 1)
        out = self.phi_bar[k]
        beyond = r > self.r_max
        if beyond.any():
            rb = r[beyond]
            out[beyond] = np.maximum(self.cfg.phi(rb), self.cfg.phi(-rb)) + self.phi_step
        return out


def _pareto(rng, eps, mu, size):
    mag = eps * rng.uniform_open(size) ** (-1.0 / mu)
    return rng.signs(size) * mag


def _destinations(x, cfg: SemigroupConfig, rng: RngStream):
    """Vectorized rejection sampling of one jump for every entry of ``x``."""
    mu, eps = cfg.mu, cfg.epsilon
    out = np.empty_like(x)
    if cfg.target is None:
        return x + _pareto(rng, eps, mu, x.size)
    cache = cfg.cache
    if cfg.envelope == "global":
        r = np.zeros_like(x)
        use_b = np.zeros(x.shape, dtype=bool)
        log_a = np.full_like(x, cache.phi_max)
    else:
        r = 0.5 * np.abs(x)
        use_b = r > eps
        log_a = np.where(use_b, cache.sup_phi(r), cache.phi_max)
    # mixture weights of the two pieces (second one only where use_b)
    w_a = np.exp(log_a) * 2.0 * eps ** (-mu) / mu
    w_b = np.where(use_b, 2.0 * np.exp(cache.phi_max) * np.where(use_b, r, 1.0) ** (-mu), 0.0)
    p_b = w_b / (w_a + w_b)

    pending = np.arange(x.size)
    rounds = 0
    proposals = np.zeros(x.size)
    while pending.size:
        rounds += 1
        k = min(2 ** (rounds - 1), 1024)
        idx = np.repeat(pending, k)
        m = idx.size
        xi, ri = x[idx], r[idx]
        from_b = rng.uniform_open(m) < p_b[idx]
        u = _pareto(rng, eps, mu, m)
        zb = (2.0 * rng.uniform_open(m) - 1.0) * ri
        z = np.where(from_b, zb, xi + u)
        u = z - xi
        au = np.abs(u)
        phi_z = cfg.phi(z)
        target = np.exp(phi_z) * au ** (-1.0 - mu)
        in_b = use_b[idx] & (np.abs(z) < ri)
        env = np.exp(log_a[idx]) * au ** (-1.0 - mu) + np.where(
            in_b, np.exp(cache.phi_max) * np.where(in_b, ri, 1.0) ** (-1.0 - mu), 0.0
        )
        ok = (au >= eps) & (rng.uniform_open(m) * env < target)
        proposals[pending] += k
        # first accepted proposal of each pending path
        acc_rows = np.flatnonzero(ok)
        first = {}
        for row in acc_rows[::-1]:
            first[idx[row]] = row
        if first:
            keys = np.fromiter(first.keys(), dtype=np.intp)
            rows = np.fromiter(first.values(), dtype=np.intp)
            out[keys] = z[rows]
            pending = np.setdiff1d(pending, keys, assume_unique=True)
        if pending.size and proposals[pending].min() >= 10.0 / MIN_ACCEPTANCE:
            worst = x[pending[np.argmax(np.abs(x[pending]))]]
            raise SimulationError(
                f"rejection acceptance below {MIN_ACCEPTANCE:g} near x={worst:.4g} "
                f"with the {cfg.envelope} envelope"
            )
    return out


def sample_jump(x, cfg: SemigroupConfig, rng: RngStream):
    """``(waiting_time, destination)`` for a single jump from ``x``."""
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    lam = cfg.cache.rate(xa)
    tau = rng.exponential(xa.size) / lam
    z = _destinations(xa, cfg, rng)
    if np.ndim(x) == 0:
        return float(tau[0]), float(z[0])
    return tau, z


def _run_chunk(args, cfg: SemigroupConfig, snap_times):
    index, size = args
    rng = RngStream(cfg.seed, index)
    x = initial_positions(cfg.initial, rng, size)
    t = np.zeros(size)
    n_snap = snap_times.size
    out = np.empty((n_snap, size))
    nxt = np.zeros(size, dtype=np.intp)
    # snapshots at time 0 see the initial state
    while True:
        hit = np.flatnonzero((nxt < n_snap) & (snap_times[np.minimum(nxt, n_snap - 1)] <= 0.0))
        if not hit.size:
            break
        out[nxt[hit], hit] = x[hit]
        nxt[hit] += 1
    active = np.flatnonzero(nxt < n_snap)
    while active.size:
        xa = x[active]
        t_new = t[active] + rng.exponential(active.size) / cfg.cache.rate(xa)
        # record every snapshot passed during this sojourn at xa
        while True:
            k = nxt[active]
            crossed = (k < n_snap) & (snap_times[np.minimum(k, n_snap - 1)] < t_new)
            if not crossed.any():
                break
            ids = active[crossed]
            out[nxt[ids], ids] = x[ids]
            nxt[ids] += 1
        t[active] = t_new
        alive = nxt[active] < n_snap
        active = active[alive]
        if active.size:
            x[active] = _destinations(x[active], cfg, rng)
    return out


def run_semigroup_ensemble(cfg: SemigroupConfig, snapshot_times, workers=1):
    """Continuous-time KMC of ``cfg.n_paths`` paths, summarized at the snapshots."""
    snapshot_steps(snapshot_times, 1.0, cfg.t_final)  # validates the range
    snap = np.asarray(sorted(float(s) for s in snapshot_times))
    _ = cfg.cache  # build once, before any worker copies the config
    sizes = chunk_sizes(cfg.n_paths, cfg.chunk_size)
    parts = map_chunks(partial(_run_chunk, cfg=cfg, snap_times=snap), list(enumerate(sizes)), workers)
    snaps = np.concatenate(parts, axis=1)
    meta = {
        "simulator": "semigroup",
        "mu": cfg.mu,
        "lam": cfg.lam,
        "epsilon": cfg.epsilon,
        "envelope": cfg.envelope,
        "seed": cfg.seed,
        "chunk_size": cfg.chunk_size,
    }
    return summarize(snap, snaps, cfg.hist_edges, cfg.report_variance, meta=meta)
