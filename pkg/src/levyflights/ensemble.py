"""Snapshot statistics shared by the path simulators."""

from __future__ import annotations

import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

DEFAULT_EDGES = np.linspace(-10.0, 10.0, 51)


class SimulationError(RuntimeError):
    """Numerical failure of an ensemble run."""


INITIAL_KINDS = ("point", "normal", "sample")


def check_initial(initial):
    """``('point', x0)``, ``('normal', width)`` or ``('sample', target)``."""
    from .catalog import TargetDensity

    if not (isinstance(initial, tuple) and len(initial) == 2 and initial[0] in INITIAL_KINDS):
        return "initial must be ('point', x0), ('normal', width) or ('sample', target)"
    kind, value = initial
    if kind == "normal" and not float(value) > 0:
        return "a normal bump needs a positive width"
    if kind == "sample" and not isinstance(value, TargetDensity):
        return "('sample', ...) needs a TargetDensity"
    return None


def initial_positions(initial, rng, size):
    kind, value = initial
    if kind == "point":
        return np.full(size, float(value))
    if kind == "normal":
        return float(value) * rng.generator.standard_normal(size)
    return value.sample(rng, size)


def snapshot_steps(times, dt, t_final):
    times = np.asarray(sorted(float(t) for t in times))
    if times.size == 0:
        raise ValueError("need at least one snapshot time")
    if times[0] < 0 or times[-1] > t_final + 1e-12:
        raise ValueError("snapshot times must lie in [0, t_final]")
    return np.rint(times / dt).astype(np.int64)


def chunk_sizes(n_paths, chunk_size):
    full, rest = divmod(int(n_paths), int(chunk_size))
    return [int(chunk_size)] * full + ([rest] if rest else [])


_TASK = None


def _call_task(arg):
    return _TASK(arg)


def map_chunks(func, args, workers=1):
    """Run ``func`` over ``args`` in order; with ``workers > 1`` in processes.

    Workers are forked, so ``func`` (which may close over targets built from
    local functions) is inherited rather than pickled; only the chunk
    arguments and the results cross process boundaries.
    """
    global _TASK
    if workers <= 1 or len(args) <= 1 or "fork" not in multiprocessing.get_all_start_methods():
        return [func(a) for a in args]
    _TASK = func
    try:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=int(workers), mp_context=ctx) as pool:
            return list(pool.map(_call_task, args))
    finally:
        _TASK = None


@dataclass
class EnsembleStats:
    times: np.ndarray
    variance: Optional[np.ndarray]
    iqr: np.ndarray
    median: np.ndarray
    histograms: list
    n_paths: int
    n_failed: int = 0
    variance_se: Optional[np.ndarray] = None
    median_se: Optional[np.ndarray] = None
    final_samples: Optional[np.ndarray] = None
    batch_second_moments: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def saturation(self, t_lo, t_hi):
        """Time average of the variance over snapshots in ``[t_lo, t_hi]``.

        Returns ``(level, standard_error)``; the error comes from batch means
        of the time-averaged second moment, so it includes the correlation
        between snapshots of the same paths.
        """
        if self.variance is None:
            raise ValueError("variance was not recorded for this ensemble")
        sel = (self.times >= t_lo - 1e-12) & (self.times <= t_hi + 1e-12)
        if not sel.any():
            raise ValueError("no snapshots inside the saturation window")
        level = float(np.mean(self.variance[sel]))
        batches = self.batch_second_moments[:, sel].mean(axis=1)
        se = float(np.std(batches, ddof=1) / np.sqrt(batches.size))
        return level, se


def summarize(times, snaps, edges=DEFAULT_EDGES, report_variance=True, n_batches=100, meta=None):
    """Reduce snapshot positions (shape ``(n_snap, n_paths)``) to statistics.

    Histograms include an underflow and an overflow bin so that the counts of
    finite paths always add up to the ensemble size.
    """
    snaps = np.asarray(snaps, dtype=float)
    n_snap, n = snaps.shape
    finite = np.isfinite(snaps)
    n_failed = int(n - finite[-1].sum())
    full_edges = np.concatenate([[-np.inf], np.asarray(edges, dtype=float), [np.inf]])

    iqr = np.empty(n_snap)
    med = np.empty(n_snap)
    med_se = np.empty(n_snap)
    var = np.empty(n_snap) if report_variance else None
    var_se = np.empty(n_snap) if report_variance else None
    hists = []
    nb = max(2, min(n_batches, n))
    bsize = n // nb
    batch_m2 = np.empty((nb, n_snap))
    for k in range(n_snap):
        v = snaps[k][finite[k]]
        q1, q2, q3 = np.quantile(v, [0.25, 0.5, 0.75])
        iqr[k] = q3 - q1
        med[k] = q2
        counts, _ = np.histogram(v, bins=full_edges)
        hists.append((np.asarray(edges, dtype=float), counts))
        b = snaps[k][: nb * bsize].reshape(nb, bsize)
        b = np.where(np.isfinite(b), b, np.nan)
        with np.errstate(invalid="ignore"):
            bm2 = np.nanmean(b * b, axis=1)
            bmed = np.nanmedian(b, axis=1)
        batch_m2[:, k] = bm2
        med_se[k] = np.std(bmed, ddof=1) / np.sqrt(nb)
        if report_variance:
            var[k] = float(np.mean(v * v))
            var_se[k] = float(np.std(bm2, ddof=1) / np.sqrt(nb))
    return EnsembleStats(
        times=np.asarray(times, dtype=float),
        variance=var,
        iqr=iqr,
        median=med,
        histograms=hists,
        n_paths=n,
        n_failed=n_failed,
        variance_se=var_se,
        median_se=med_se,
        final_samples=snaps[-1][finite[-1]].copy(),
        batch_second_moments=batch_m2,
        meta=dict(meta or {}),
    )
