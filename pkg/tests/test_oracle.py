import math

import numpy as np
import pytest

from nvcdamage.gurson import PointState, flow_stress
from nvcdamage.oracle import oracle_integrate
from nvcdamage.tensor import elastic_stress, invariants


def test_empty_path_is_identity(params, elastic):
    st = PointState(sigma=np.array([1.0, 2.0, 3.0, 4.0]), eps_p_bar=0.1, f=0.01)
    out = oracle_integrate(st, np.empty((0, 4)), 0.0, 10, params, elastic)
    np.testing.assert_array_equal(out.sigma, st.sigma)
    assert (out.eps_p_bar, out.f) == (st.eps_p_bar, st.f)


def test_elastic_path_is_exact(params, elastic, rng):
    path = rng.normal(0.0, 1e-4, (5, 4))
    out = oracle_integrate(PointState.initial(params), path, 0.0, 7, params, elastic)
    expected = sum(elastic_stress(de, elastic) for de in path)
    np.testing.assert_allclose(out.sigma, expected, rtol=1e-13, atol=1e-3)
    assert out.eps_p_bar == 0.0


def test_dense_matrix_follows_hardening_law(params, elastic):
    # f stays zero without seeds or nucleation: the matrix law is recovered
    p = params.with_(f0=0.0, fN=0.0, B=0.0)
    path = np.tile([-5e-4, 1e-3, -5e-4, 0.0], (60, 1))
    st = PointState.initial(p)
    for de in path:
        st = oracle_integrate(st, de[None, :], 0.0, 2000, p, elastic)
        _p, q = invariants(st.sigma)
        if st.eps_p_bar > 0.0:
            assert q == pytest.approx(flow_stress(st.eps_p_bar, 0.0, p), rel=2e-3)
    assert st.f == 0.0
    # isochoric path: equivalent strain 0.06, elastic share q / 3G
    assert st.eps_p_bar == pytest.approx(0.06 - q / (3.0 * elastic.G), rel=1e-3)


def test_refinement_converges(params, elastic):
    path = np.tile([-2e-4, 2e-3, -2e-4, 1e-4], (30, 1))
    coarse = oracle_integrate(PointState.initial(params), path, 31.5, 20, params, elastic)
    fine = oracle_integrate(PointState.initial(params), path, 31.5, 400, params, elastic)
    finer = oracle_integrate(PointState.initial(params), path, 31.5, 2000, params, elastic)
    assert abs(finer.sigma[1] - fine.sigma[1]) < abs(finer.sigma[1] - coarse.sigma[1])


def test_rejects_zero_substeps(params, elastic):
    with pytest.raises(ValueError):
        oracle_integrate(PointState.initial(params), np.zeros((1, 4)), 0.0, 0, params, elastic)
