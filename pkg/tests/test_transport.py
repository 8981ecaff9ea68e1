import math

import numpy as np
import pytest

from nvcdamage.fem.mesh import build_round_bar_mesh
from nvcdamage.fem.transport import TransportError, TransportSolver, transport_step
from nvcdamage.traps import R_GAS, oriani_residual, trap_equilibrium, total_to_lattice

R = 1.5875e-3
H = 12.7e-3


@pytest.fixture(scope="module")
def mesh():
    return build_round_bar_mesh(R, H, 0.0, 8, 40, 1.0)


def gp(mesh, value=0.0):
    return np.full((mesh.n_elements, 4), value)


def test_homogeneous_state_is_stationary(mesh, traps):
    ts = TransportSolver(mesh, traps)
    st0 = ts.initial_state(mesh.nodes, 20.0)
    st = st0
    for _ in range(5):
        st = ts.step(st, mesh.nodes, gp(mesh, 3e8), gp(mesh), 100.0)
    np.testing.assert_allclose(st.C_L, st0.C_L, rtol=1e-12)


def test_conservation_on_moving_mesh(mesh, traps, rng):
    ts = TransportSolver(mesh, traps)
    X = mesh.nodes.copy()
    st = ts.initial_state(X, total_to_lattice(31.5, 0.0, traps))
    total0 = st.total
    ep = gp(mesh)
    worst_oriani = 0.0
    for _ in range(200):
        X = X * (1.0 + 1e-3 * np.array([-0.5, 1.0]))
        ep = ep + rng.uniform(0.0, 5e-3, ep.shape)
        st = ts.step(st, X, rng.normal(0.0, 1e8, ep.shape), ep, 100.0)
        for i in range(0, mesh.n_nodes, 7):
            s = trap_equilibrium(st.C_L[i], st.N_T[i], traps)
            worst_oriani = max(worst_oriani, oriani_residual(s, traps))
            assert st.C_T[i] == pytest.approx(s.C_T, rel=1e-12)
    assert abs(st.total / total0 - 1.0) <= 1e-3
    assert worst_oriani <= 1e-10


def _steady_ratio(mesh, traps, dt, steps):
    ts = TransportSolver(mesh, traps)
    st = ts.initial_state(mesh.nodes, 10.0)
    sig = 1.5e9 * mesh.nodes[:, 1] / mesh.half_gage
    for _ in range(steps):
        st = ts.step(st, mesh.nodes, sig, gp(mesh), dt)
    return st, st.C_L[mesh.loaded].mean() / st.C_L[mesh.midplane].mean()


def test_steady_state_enhancement(mesh, traps):
    _st, ratio = _steady_ratio(mesh, traps, 1e4, 60)
    exact = math.exp(traps.V_H * 1.5e9 / (3 * R_GAS * traps.T))
    assert exact == pytest.approx(1.49, abs=5e-3)
    assert ratio == pytest.approx(exact, rel=1e-2)


def test_time_step_halving(mesh, traps):
    def run(dt, n):
        ts = TransportSolver(mesh, traps)
        st = ts.initial_state(mesh.nodes, 10.0)
        sig = 1.5e9 * mesh.nodes[:, 1] / mesh.half_gage
        for _ in range(n):
            st = ts.step(st, mesh.nodes, sig, gp(mesh, 0.2), dt)
        return st.C_L
    a, b = run(100.0, 60), run(50.0, 120)
    assert np.abs(a - b).max() <= 1e-2 * b.max()


def test_diffusion_matrix_is_m_matrix(traps):
    m = build_round_bar_mesh(R, R, 0.0, 8, 8, 1.0)
    ts = TransportSolver(m, traps)
    K = ts.matrix(m.nodes, np.zeros(m.n_nodes)).toarray()
    off = K - np.diag(np.diag(K))
    assert off.max() <= 1e-12 * K.diagonal().max()
    assert np.all(K.diagonal() > 0.0)
    np.testing.assert_allclose(K.sum(axis=0), 0.0, atol=1e-12 * K.diagonal().max())


def test_gradient_relaxes_and_stays_positive(mesh, traps):
    ts = TransportSolver(mesh, traps)
    c0 = np.where(mesh.nodes[:, 1] < 0.5 * H, 30.0, 0.0)
    st = ts.initial_state(mesh.nodes, c0)
    for _ in range(20):
        st = ts.step(st, mesh.nodes, gp(mesh), gp(mesh), 200.0)
        assert st.C_L.min() >= 0.0
    assert st.C_L.max() < 30.0 and st.C_L.min() > 0.0


def test_trap_uptake_lowers_lattice(mesh, traps):
    ts = TransportSolver(mesh, traps)
    st = ts.initial_state(mesh.nodes, 31.5)
    content = st.C_L[0] + st.C_T[0]   # zero-strain traps already hold a little
    st = ts.step(st, mesh.nodes, gp(mesh), gp(mesh, 0.5), 100.0)
    np.testing.assert_allclose(st.C_L, total_to_lattice(content, 0.5, traps), rtol=1e-9)


def test_bad_time_step(mesh, traps):
    ts = TransportSolver(mesh, traps)
    st = ts.initial_state(mesh.nodes, 1.0)
    with pytest.raises(ValueError):
        ts.step(st, mesh.nodes, gp(mesh), gp(mesh), 0.0)
    with pytest.raises(ValueError):
        ts.initial_state(mesh.nodes, -1.0)


def test_wrapper_matches_solver(mesh, traps):
    ts = TransportSolver(mesh, traps)
    st = ts.initial_state(mesh.nodes, 5.0)
    sig = gp(mesh, 1e8)
    a = transport_step(mesh, st, mesh.nodes, sig, gp(mesh, 0.1), 50.0, traps)
    b = ts.step(st, mesh.nodes, sig, gp(mesh, 0.1), 50.0)
    np.testing.assert_array_equal(a.C_L, b.C_L)


def test_error_type():
    assert issubclass(TransportError, RuntimeError)
