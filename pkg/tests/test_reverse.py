import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from levyflights.catalog import catalog_get
from levyflights.reverse import (
    LangevinDriftReconstructor,
    ReconstructionError,
    SemigroupPotentialReconstructor,
    drift_from_target,
    gaussian_drift_from_target,
    gaussian_potential_from_target,
    reconstruct,
    semigroup_potential_from_target,
)

CORE = 10.0


def core(f):
    return np.abs(f.x) <= CORE


@pytest.fixture(scope="module")
def quadratic():
    return reconstruct(catalog_get("quadratic_cauchy"))


def test_ouc_drift_is_linear():
    b = drift_from_target(catalog_get("cauchy_ouc"))
    m = core(b)
    assert np.max(np.abs(b.values[m] + b.x[m])) < 1e-3


def test_ouc_potential_at_origin():
    v = semigroup_potential_from_target(catalog_get("cauchy_ouc"))
    assert v(0.0) == pytest.approx(-2 / math.pi, abs=1e-3)


def test_quadratic_potential_landmarks(quadratic):
    v = quadratic.potential
    assert v(0.0) == pytest.approx(-1.0, abs=1e-3)
    assert abs(v(1.0)) < 1e-3 and abs(v(-1.0)) < 1e-3
    assert v(150.0) == pytest.approx(1.0, abs=1e-3)


def test_quadratic_drift_value(quadratic):
    # -(x^3 + 3x)/2 at x = 2
    assert quadratic.drift(2.0) == pytest.approx(-7.0, abs=1e-3)


def test_quadratic_residual(quadratic):
    assert quadratic.residual_norm < 1e-3
    assert quadratic.method_metadata["drift_tail_model"] == "power_law(4)"


@pytest.mark.parametrize("name", ["cauchy_ouc", "quadratic_cauchy", "cauchy_alpha4", "quartic_bimodal_base"])
def test_matches_oracles(name):
    t = catalog_get(name)
    res = reconstruct(t)
    m = core(res.drift)
    ref_b = t.oracle_drift(res.drift.x[m], 1.0)
    err_b = np.abs(res.drift.values[m] - ref_b) / np.maximum(1.0, np.abs(ref_b))
    assert err_b.max() < 1e-3
    if t.oracle_potential is not None:
        err_v = np.abs(res.potential.values[m] - t.oracle_potential(res.potential.x[m], 1.0))
        assert err_v.max() < 1e-3


def test_alpha4_values():
    t = catalog_get("cauchy_alpha4")
    assert drift_from_target(t)(1.0) == pytest.approx(-6.0, abs=1e-2)
    assert semigroup_potential_from_target(t)(0.0) == pytest.approx(-1.5, abs=1e-2)


def test_lambda_scales_linearly():
    t = catalog_get("quadratic_cauchy")
    a = drift_from_target(t, lam=1.0, grid=(-100, 100, 4001))
    b = drift_from_target(t, lam=2.5, grid=(-100, 100, 4001))
    assert np.allclose(b.values, 2.5 * a.values, rtol=1e-13, atol=0)


def test_symmetry_of_outputs(quadratic):
    assert np.array_equal(quadratic.drift.values, -quadratic.drift.values[::-1])
    assert np.array_equal(quadratic.potential.values, quadratic.potential.values[::-1])
    assert quadratic.method_metadata["drift_asymmetry"] < 1e-4


def test_ouc_potential_asymptotics():
    t = catalog_get("cauchy_ouc")
    v = semigroup_potential_from_target(t)
    for x in (50.0, 100.0):
        assert v(x) == pytest.approx(float(t.oracle_potential(x, 1.0)), rel=1e-4)
    ratio = [v(x) / (2 / (math.pi * x) * math.log(x)) for x in (50.0, 100.0)]
    assert abs(ratio[1] - 1) < abs(ratio[0] - 1)


def test_gaussian_baseline_forms_agree():
    t = catalog_get("gibbs_gaussian")
    b = gaussian_drift_from_target(t)
    v = gaussian_potential_from_target(t)
    assert v.meta["discrepancy"] < 1e-6
    assert np.allclose(b.values, t.oracle_drift(b.x, 1.0), atol=1e-8)
    assert np.allclose(v.values[3:-3], t.oracle_potential(v.x, 1.0)[3:-3], atol=1e-6)


def test_positivity_floor():
    t = catalog_get("gibbs_gaussian")
    with pytest.raises(ReconstructionError):
        drift_from_target(t, grid=(-200, 200, 2001))


def test_estimators_follow_sklearn_protocol():
    est = LangevinDriftReconstructor(n=4001)
    assert clone(est).get_params() == est.get_params()
    with pytest.raises(NotFittedError):
        est.transform([0.0])
    est.fit(catalog_get("cauchy_ouc"))
    x = np.array([-3.0, 0.0, 1.5, 500.0])
    assert np.allclose(est.transform(x), -x, atol=1e-3 * np.maximum(1, np.abs(x)))
    assert np.allclose(est.derivative(x), -1.0, atol=2e-3)


def test_estimator_fits_tabulated_arrays():
    x = np.linspace(-200, 200, 8001)
    rho = 2 / (math.pi * (1 + x * x) ** 2)
    est = SemigroupPotentialReconstructor(n=8001).fit(np.column_stack([x, rho]))
    assert est.predict([0.0])[0] == pytest.approx(-1.0, abs=2e-3)
