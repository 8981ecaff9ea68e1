import numpy as np
import pytest

from nvcdamage.fem.mesh import build_round_bar_mesh, graded_positions, outer_radius

R = 1.5875e-3
H = 12.7e-3


def test_perfect_cylinder():
    m = build_round_bar_mesh(R, H, 0.0, 8, 40)
    assert m.nodes[:, 0].max() == pytest.approx(R, rel=1e-15)
    assert m.nodes[m.outer, 0].min() == pytest.approx(R, rel=1e-15)


def test_imperfection_radius():
    m = build_round_bar_mesh(R, H, 0.005, 8, 40)
    assert m.nodes[m.node_id(8, 0), 0] == pytest.approx(1.5796e-3, abs=5e-8)
    assert m.nodes[m.loaded, 0].max() == pytest.approx(R)
    r = outer_radius(np.linspace(0, H, 200), R, H, 0.005)
    assert np.all(np.diff(r) >= 0.0)


def test_counts_and_node_sets():
    m = build_round_bar_mesh(R, H, 0.005, 8, 40)
    assert m.n_elements == 320
    assert m.n_nodes == 9 * 41
    assert np.all(m.nodes[m.axis, 0] == 0.0)
    assert np.all(m.nodes[m.midplane, 1] == 0.0)
    assert np.allclose(m.nodes[m.loaded, 1], H)
    np.testing.assert_array_equal(m.midplane_elements(), np.arange(8))


def test_elements_are_counter_clockwise():
    m = build_round_bar_mesh(R, H, 0.005, 5, 7, grading=2.0)
    x = m.nodes[m.elements]
    area2 = np.zeros(m.n_elements)
    for a in range(4):
        b = (a + 1) % 4
        area2 += x[:, a, 0] * x[:, b, 1] - x[:, b, 0] * x[:, a, 1]
    assert np.all(area2 > 0.0)


def test_grading():
    z = graded_positions(1.0, 10, 3.0)
    d = np.diff(z)
    assert z[0] == 0.0 and z[-1] == pytest.approx(1.0)
    assert d[-1] / d[0] == pytest.approx(3.0)
    np.testing.assert_allclose(graded_positions(2.0, 4, 1.0), [0, 0.5, 1, 1.5, 2])


@pytest.mark.parametrize("args", [(R, H, 0.005, 1, 10), (R, H, 0.2, 4, 10), (-R, H, 0.0, 4, 4)])
def test_rejects_bad_input(args):
    with pytest.raises(ValueError):
        build_round_bar_mesh(*args)
