"""Symmetric stable variates, reproducible random streams and tail statistics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .fracops import check_mu

STREAM_LAYOUT = "PCG64 seeded by SeedSequence(seed, spawn_key=(stream_id,))"
_TWO53 = float(2**53)


@dataclass(frozen=True)
class StableParams:
    """Symmetric stable law with characteristic function ``exp(-scale |p|^mu)``."""

    mu: float
    scale: float = 1.0

    def __post_init__(self):
        check_mu(self.mu, allow_two=True)
        if not self.scale > 0:
            raise ValueError("scale must be positive")


@dataclass
class RngStream:
    """Independent substream ``stream_id`` of a master ``seed``."""

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id),))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def uniform_open(self, size=None):
        """Uniform on the open interval (0, 1); 0 and 1 are never returned."""
        k = self._gen.integers(0, 2**53, size=size, dtype=np.int64)
        return (k + 0.5) / _TWO53

    def exponential(self, size=None):
        return -np.log(self.uniform_open(size))

    def signs(self, size=None):
        return np.where(self._gen.integers(0, 2, size=size) == 1, 1.0, -1.0)

    def layout(self):
        return {"seed": int(self.seed), "stream_id": int(self.stream_id), "layout": STREAM_LAYOUT}


def cauchy_from_uniform(u):
    """Inverse CDF of the standard Cauchy law: ``tan(pi (u - 1/2))``."""
    return np.tan(np.pi * (np.asarray(u, dtype=float) - 0.5))


def sample_cauchy(rng: RngStream, size=None):
    return cauchy_from_uniform(rng.uniform_open(size))


def stable_from_uniforms(mu, u, e):
    """Chambers-Mallows-Stuck transform for the symmetric case.

    ``u`` uniform on (0, 1), ``e`` standard exponential. Returns variates with
    characteristic function ``exp(-|p|^mu)``.
    """
    v = np.pi * (np.asarray(u, dtype=float) - 0.5)
    e = np.asarray(e, dtype=float)
    if mu == 1.0:
        return np.tan(v)
    if mu == 2.0:
        # sin(2v)/sqrt(cos v) * (cos(-v)/e)^(-1/2) = 2 sqrt(e) sin v
        return 2.0 * np.sqrt(e) * np.sin(v)
    return (
        np.sin(mu * v)
        / np.cos(v) ** (1.0 / mu)
        * (np.cos((1.0 - mu) * v) / e) ** ((1.0 - mu) / mu)
    )


def sample_stable(params: StableParams, rng: RngStream, size=None):
    """Symmetric ``mu``-stable variates with characteristic function
    ``exp(-scale |p|^mu)``; no truncation of large jumps."""
    if params.mu == 1.0:
        x = sample_cauchy(rng, size)
    else:
        x = stable_from_uniforms(params.mu, rng.uniform_open(size), rng.exponential(size))
    return params.scale ** (1.0 / params.mu) * x


def empirical_char_fn(samples, p):
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("empirical characteristic function of an empty sample")
    return float(np.mean(np.cos(p * samples)))


def cauchy_tail_fraction(threshold):
    """P(|X| > T) for the standard Cauchy law."""
    return 2.0 / np.pi * np.arctan(1.0 / threshold)


def ks_statistic(samples, cdf):
    samples = np.sort(np.asarray(samples, dtype=float))
    return float(stats.kstest(samples, cdf).statistic)


def ks_critical(n, alpha=0.01):
    """Asymptotic one-sample KS critical value (1.63/sqrt(n) at the 1% level)."""
    return float(stats.kstwobign.isf(alpha) / np.sqrt(n))


def chi_square_gof(samples, cdf, edges, alpha=0.01):
    """Binned goodness of fit against a continuous law on the window ``edges``.

    Samples outside the window are pooled into one overflow bin so that the
    expected counts use the full law. Returns ``(statistic, p_value, passed)``.
    """
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    counts, _ = np.histogram(samples, bins=edges)
    probs = np.diff(cdf(np.asarray(edges)))
    outside = n - counts.sum()
    p_out = 1.0 - probs.sum()
    obs = np.append(counts, outside)
    exp = n * np.append(probs, p_out)
    keep = exp > 0
    stat = float(np.sum((obs[keep] - exp[keep]) ** 2 / exp[keep]))
    dof = int(keep.sum()) - 1
    pval = float(stats.chi2.sf(stat, dof))
    return stat, pval, pval > alpha
