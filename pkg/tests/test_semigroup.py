import numpy as np
import pytest
from scipy import stats

from levyflights.catalog import catalog_get
from levyflights.ensemble import SimulationError
from levyflights.semigroup import (
    SemigroupConfig,
    _destinations,
    jump_rate_density,
    run_semigroup_ensemble,
    sample_jump,
    total_escape_rate,
)
from levyflights.stable import RngStream


@pytest.fixture(scope="module")
def quad_cfg():
    return SemigroupConfig(catalog_get("quadratic_cauchy"), n_paths=2000, t_final=1.0, cache_n=4001)


def test_free_rate():
    cfg = SemigroupConfig(None, epsilon=0.1)
    assert cfg.free_rate == pytest.approx(2 / np.pi / 0.1)
    assert total_escape_rate(3.0, cfg) == cfg.free_rate


def test_free_jump_sizes_are_pareto():
    cfg = SemigroupConfig(None, epsilon=0.01)
    x = np.zeros(50_000)
    u = np.abs(_destinations(x, cfg, RngStream(2)))
    assert stats.kstest(u, lambda s: 1 - 0.01 / s).pvalue > 0.01


def test_detailed_balance(quad_cfg):
    t = quad_cfg.target
    x, z = np.array([0.3, -2.0, 7.0]), np.array([4.0, 1.0, -0.5])
    lhs = jump_rate_density(x, z, quad_cfg) * t.density(x)
    rhs = jump_rate_density(z, x, quad_cfg) * t.density(z)
    assert np.allclose(lhs, rhs, rtol=1e-13)


def test_short_jumps_rejected(quad_cfg):
    with pytest.raises(ValueError):
        jump_rate_density(0.0, 0.001, quad_cfg)


@pytest.mark.parametrize("x", [0.0, 0.7, 3.0, 40.0])
def test_cache_matches_quadrature(quad_cfg, x):
    cached = quad_cfg.cache.rate(np.array([x]))[0]
    assert cached == pytest.approx(total_escape_rate(x, quad_cfg), rel=1e-4)


def test_quadrature_converges():
    cfg = SemigroupConfig(catalog_get("quadratic_cauchy"), n_paths=10)
    coarse = total_escape_rate(0.0, cfg, n_points=20_000)
    fine = total_escape_rate(0.0, cfg, n_points=40_000)
    assert fine == pytest.approx(total_escape_rate(0.0, cfg), rel=1e-4)
    assert abs(fine - coarse) < 1e-4 * fine


def test_destinations_symmetric_at_origin(quad_cfg):
    z = _destinations(np.zeros(40_000), quad_cfg, RngStream(5))
    assert stats.binomtest(int(np.sum(z > 0)), z.size).pvalue > 0.01


def test_destination_law_from_origin(quad_cfg):
    # accepted jumps from 0 have density proportional to psi(z)/|z|^2 on |z| >= eps
    z = np.abs(_destinations(np.zeros(40_000), quad_cfg, RngStream(6)))
    grid = np.geomspace(quad_cfg.epsilon, 1e4, 20001)
    dens = 1 / (1 + grid**2) / grid**2
    cdf = np.concatenate([[0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
    cdf /= cdf[-1]
    assert stats.kstest(z, lambda s: np.interp(s, grid, cdf)).pvalue > 0.01


def test_sample_jump_shapes(quad_cfg):
    tau, z = sample_jump(0.5, quad_cfg, RngStream(1))
    assert isinstance(tau, float) and tau > 0 and isinstance(z, float)
    tau, z = sample_jump(np.zeros(5), quad_cfg, RngStream(1))
    assert tau.shape == (5,) and z.shape == (5,)


def test_global_envelope_fails_far_out():
    cfg = SemigroupConfig(catalog_get("quadratic_cauchy"), envelope="global", cache_n=2001)
    with pytest.raises(SimulationError):
        _destinations(np.full(4, 2000.0), cfg, RngStream(0))


def test_composite_envelope_far_out():
    cfg = SemigroupConfig(catalog_get("quadratic_cauchy"), cache_n=2001)
    z = _destinations(np.full(200, 150.0), cfg, RngStream(0))
    assert np.median(np.abs(z)) < 150.0


def test_ensemble_reproducible_across_workers():
    cfg = SemigroupConfig(catalog_get("quadratic_cauchy"), n_paths=1200, chunk_size=400,
                          t_final=0.5, cache_n=2001, seed=3)
    a = run_semigroup_ensemble(cfg, [0.0, 0.25, 0.5])
    b = run_semigroup_ensemble(cfg, [0.0, 0.25, 0.5], workers=2)
    assert np.array_equal(a.final_samples, b.final_samples)
    assert np.all(a.histograms[0][1].sum() == 1200)


def test_stationary_start():
    t = catalog_get("quadratic_cauchy")
    cfg = SemigroupConfig(t, n_paths=5000, t_final=1.0, cache_n=4001, initial=("sample", t), seed=8)
    st = run_semigroup_ensemble(cfg, [0.0, 1.0])
    assert st.variance[-1] == pytest.approx(1.0, abs=0.15)
    _, p = stats.kstest(st.final_samples, t.cdf)
    assert p > 0.001


@pytest.mark.parametrize("kw", [{"epsilon": 0.0}, {"envelope": "adaptive"}, {"n_paths": 0}])
def test_bad_configs(kw):
    with pytest.raises(ValueError):
        SemigroupConfig(catalog_get("cauchy_ouc"), **kw)
