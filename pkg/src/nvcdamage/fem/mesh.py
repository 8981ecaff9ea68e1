"""Structured quarter-model mesh of a round tensile bar.

The model covers ``0 <= r <= R(z)``, ``0 <= z <= half_gage``: the axis and the
mid-plane are symmetry boundaries, ``z = half_gage`` is the loaded end. The
mid-plane radius is reduced by ``delta_R_fraction * R`` and blended back to
``R`` with a half cosine over the 20% of the modelled length nearest to the
mid-plane.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BLEND_FRACTION = 0.2


@dataclass
class Mesh:
    nodes: np.ndarray        # (n_nodes, 2) reference (r, z) in m
    elements: np.ndarray     # (n_el, 4) counter-clockwise node ids
    axis: np.ndarray         # nodes with r = 0
    midplane: np.ndarray     # nodes with z = 0
    outer: np.ndarray        # nodes on the lateral surface
    loaded: np.ndarray       # nodes on z = half_gage
    nr: int
    nz: int
    radius: float
    half_gage: float

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    def node_id(self, i: int, j: int) -> int:
        return j * (self.nr + 1) + i

    def element_id(self, i: int, j: int) -> int:
        return j * self.nr + i

    def midplane_elements(self) -> np.ndarray:
        return np.arange(self.nr)


def graded_positions(length: float, n: int, ratio: float) -> np.ndarray:
    """``n + 1`` positions on ``[0, length]`` with last/first size = ``ratio``."""
    if n == 1 or ratio == 1.0:
        return np.linspace(0.0, length, n + 1)
    growth = ratio ** (1.0 / (n - 1))
    sizes = growth ** np.arange(n)
    return np.concatenate([[0.0], np.cumsum(sizes)]) * (length / sizes.sum())


def outer_radius(z, radius: float, half_gage: float, delta_R_fraction: float):
    z = np.asarray(z, dtype=float)
    blend = BLEND_FRACTION * half_gage
    w = np.where(z < blend, 0.5 * (1.0 + np.cos(np.pi * z / blend)), 0.0)
    return radius * (1.0 - delta_R_fraction * w)


def build_round_bar_mesh(radius: float, half_gage: float, delta_R_fraction: float,
                         nr: int, nz: int, grading: float = 3.0) -> Mesh:
    if nr < 2 or nz < 2:
        raise ValueError("need at least 2 elements in each direction")
    if not 0.0 <= delta_R_fraction < 0.1:
        raise ValueError("delta_R_fraction must lie in [0, 0.1)")
    if radius <= 0.0 or half_gage <= 0.0:
        raise ValueError("geometry must be positive")
    if grading < 1.0:
        raise ValueError("grading is coarse/fine and must be >= 1")
    zs = graded_positions(half_gage, nz, grading)
    s = np.linspace(0.0, 1.0, nr + 1)
    Rz = outer_radius(zs, radius, half_gage, delta_R_fraction)
    rr = np.outer(Rz, s)
    zz = np.repeat(zs[:, None], nr + 1, axis=1)
    nodes = np.column_stack([rr.ravel(), zz.ravel()])
    nodes[:, 0] = np.maximum(nodes[:, 0], 0.0)

    ii, jj = np.meshgrid(np.arange(nr), np.arange(nz))
    n1 = (jj * (nr + 1) + ii).ravel()
    elements = np.column_stack([n1, n1 + 1, n1 + nr + 2, n1 + nr + 1]).astype(np.int64)

    ids = np.arange((nr + 1) * (nz + 1)).reshape(nz + 1, nr + 1)
    return Mesh(
        nodes=nodes, elements=elements,
        axis=ids[:, 0].copy(), midplane=ids[0, :].copy(),
        outer=ids[:, -1].copy(), loaded=ids[-1, :].copy(),
        nr=nr, nz=nz, radius=radius, half_gage=half_gage,
    )
