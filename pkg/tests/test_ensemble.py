import numpy as np
import pytest

from levyflights.catalog import catalog_get
from levyflights.ensemble import (
    check_initial,
    chunk_sizes,
    initial_positions,
    map_chunks,
    snapshot_steps,
    summarize,
)
from levyflights.stable import RngStream


def test_chunk_sizes():
    assert chunk_sizes(10, 4) == [4, 4, 2]
    assert chunk_sizes(8, 4) == [4, 4]


def test_snapshot_steps():
    assert list(snapshot_steps([1.0, 0.0, 0.5], 0.01, 1.0)) == [0, 50, 100]
    with pytest.raises(ValueError):
        snapshot_steps([], 0.1, 1.0)
    with pytest.raises(ValueError):
        snapshot_steps([-1.0], 0.1, 1.0)


def test_initial_kinds():
    rng = RngStream(0)
    assert check_initial(("point", 2.0)) is None
    assert np.all(initial_positions(("point", 2.0), rng, 3) == 2.0)
    assert initial_positions(("normal", 0.5), rng, 1000).std() == pytest.approx(0.5, rel=0.1)
    t = catalog_get("cauchy_ouc")
    assert check_initial(("sample", t)) is None
    assert initial_positions(("sample", t), rng, 5).shape == (5,)
    assert check_initial(("normal", -1.0))
    assert check_initial(("sample", 3))
    assert check_initial(["point", 0])


def _square(x):
    return x * x


def test_map_chunks_in_order():
    offset = 3
    assert map_chunks(lambda a: a + offset, [1, 2, 3], workers=2) == [4, 5, 6]
    assert map_chunks(_square, [1, 2, 3]) == [1, 4, 9]


def test_summary_statistics():
    rng = np.random.default_rng(0)
    snaps = np.vstack([np.zeros(1000), rng.standard_normal(1000)])
    snaps[1, 0] = np.inf
    st = summarize([0.0, 1.0], snaps, edges=np.linspace(-1, 1, 5))
    assert st.n_failed == 1
    assert st.variance[0] == 0.0
    assert st.variance[1] == pytest.approx(1.0, abs=0.1)
    assert st.histograms[1][1].sum() == 999
    assert np.isfinite(st.variance_se).all()
    assert st.final_samples.size == 999


def test_saturation_window():
    rng = np.random.default_rng(1)
    snaps = rng.standard_normal((4, 2000))
    st = summarize([0, 1, 2, 3], snaps)
    level, se = st.saturation(1, 3)
    assert level == pytest.approx(st.variance[1:].mean())
    assert 0 < se < 0.1
    with pytest.raises(ValueError):
        st.saturation(5, 6)
