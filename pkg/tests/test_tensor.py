import numpy as np
import pytest
from hypothesis import given, strategies as st

from nvcdamage.tensor import (ElasticConstants, deviator, elastic_matrix, elastic_stress,
                              from_matrix, invariants, sym, to_matrix, trace)

MPa = 1e6
finite = st.floats(-1e9, 1e9, allow_nan=False)


def test_invariants_examples():
    assert invariants(np.zeros(4)) == (0.0, 0.0)
    p, q = invariants(sym(0.0, 420 * MPa, 0.0))
    assert p == pytest.approx(140 * MPa, rel=1e-14)
    assert q == pytest.approx(420 * MPa, rel=1e-14)
    p, q = invariants(sym(100 * MPa, 100 * MPa, 100 * MPa))
    assert p == pytest.approx(100 * MPa)
    assert q == pytest.approx(0.0, abs=1e-6)


def test_elastic_examples():
    c = ElasticConstants(E=200e9, nu=0.3)
    assert np.all(elastic_stress(np.zeros(4), c) == 0.0)
    ds = elastic_stress(sym(0.0, 1e-3, 0.0), c)
    assert ds[1] == pytest.approx(269.23 * MPa, abs=0.005 * MPa)
    assert ds[0] == pytest.approx(115.38 * MPa, abs=0.005 * MPa)
    assert ds[2] == pytest.approx(ds[0])
    ds = elastic_stress(sym(0.0, 0.0, 0.0, 1e-3), c)
    assert ds[3] == pytest.approx(153.85 * MPa, abs=0.005 * MPa)


def test_elastic_matrix_matches_stress():
    c = ElasticConstants()
    de = np.array([1e-4, -3e-4, 2e-4, 5e-5])
    np.testing.assert_allclose(elastic_matrix(c) @ de, elastic_stress(de, c), rtol=1e-13)


@given(finite, finite, finite, finite)
def test_pressure_is_mean_stress_and_q_nonnegative(a, b, c, d):
    s = sym(a, b, c, d)
    p, q = invariants(s)
    assert p == pytest.approx(trace(s) / 3.0, rel=1e-12, abs=1e-3)
    assert q >= 0.0
    assert trace(deviator(s)) == pytest.approx(0.0, abs=1e-6 * max(1.0, abs(a) + abs(b) + abs(c)))


@given(finite, finite, finite, finite)
def test_matrix_round_trip(a, b, c, d):
    s = sym(a, b, c, d)
    m = to_matrix(s)
    np.testing.assert_array_equal(m, m.T)
    np.testing.assert_array_equal(from_matrix(m, 4), s)


def test_rejects_bad_constants():
    with pytest.raises(ValueError):
        ElasticConstants(E=-1.0)
    with pytest.raises(ValueError):
        ElasticConstants(nu=0.5)
