"""Implicit stress update against the explicit oracle on random strain paths."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gurson import GursonParams, PointState, stress_update
from .oracle import oracle_integrate
from .tensor import ElasticConstants

ORACLE_SUBSTEPS = 100
TOLERANCE = 5.0e-3


@dataclass
class PathCheck:
    direction: np.ndarray
    steps: int
    rel_error: float         # axial stress at the end of the path
    max_step_error: float    # worst intermediate step (diagnostic only)
    final_epbar: float
    final_f: float

    @property
    def passed(self) -> bool:
        return bool(self.rel_error <= TOLERANCE)


def random_proportional_paths(n: int, rng: np.random.Generator, max_step: float = 2.0e-3,
                              steps: int = 100) -> list[np.ndarray]:
    """Constant increments dominated by axial stretch, tensor norm <= ``max_step``."""
    paths = []
    for _ in range(n):
        # lateral ratios between uniaxial stress (-1/2) and uniaxial strain (0)
        d = np.array([rng.uniform(-0.5, 0.0), 1.0, rng.uniform(-0.5, 0.0),
                      rng.uniform(-0.2, 0.2)])
        norm = np.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2 + 2.0 * d[3] ** 2)
        d *= rng.uniform(0.5, 1.0) * max_step / norm
        paths.append(np.tile(d, (steps, 1)))
    return paths


def check_path(path: np.ndarray, params: GursonParams, elastic: ElasticConstants,
               C_H: float = 0.0, substeps: int = ORACLE_SUBSTEPS) -> PathCheck:
    imp = PointState.initial(params)
    ref = PointState.initial(params)
    scale = 0.1 * params.sigma0
    worst = 0.0
    for de in path:
        imp, _D = stress_update(imp, de, C_H, params, elastic)
        ref = oracle_integrate(ref, de[None, :], C_H, substeps, params, elastic)
        err = abs(imp.sigma[1] - ref.sigma[1]) / max(abs(ref.sigma[1]), scale)
        worst = max(worst, err)
    final = abs(imp.sigma[1] - ref.sigma[1]) / max(abs(ref.sigma[1]), scale)
    return PathCheck(path[0] / np.linalg.norm(path[0]), len(path), final, worst,
                     imp.eps_p_bar, imp.f)


def validate_point(n_paths: int = 50, seed: int = 20240601,
                   params: GursonParams | None = None,
                   elastic: ElasticConstants | None = None) -> list[PathCheck]:
    """Hydrogen-free equivalence suite (``C_H = 0``, ``B = 0``)."""
    params = (params or GursonParams()).with_(B=0.0)
    elastic = elastic or ElasticConstants()
    rng = np.random.default_rng(seed)
    return [check_path(p, params, elastic) for p in random_proportional_paths(n_paths, rng)]


# -- consistent tangent against central differences ---------------------------

FD_STEP = 1.0e-8
TANGENT_TOLERANCE = 1.0e-4


def tangent_error(state: PointState, delta_eps, C_H: float, params: GursonParams,
                  elastic: ElasticConstants, h: float = FD_STEP) -> float:
    """Relative Frobenius error of the returned tangent vs central differences.

    Columns are differentiated with respect to the tensor components of
    ``delta_eps``, the same convention as the tangent itself.
    """
    de = np.asarray(delta_eps, dtype=float)
    _new, D = stress_update(state, de, C_H, params, elastic)
    D_fd = np.empty((4, 4))
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        plus, _ = stress_update(state, de + e, C_H, params, elastic)
        minus, _ = stress_update(state, de - e, C_H, params, elastic)
        D_fd[:, j] = (plus.sigma - minus.sigma) / (2.0 * h)
    return float(np.linalg.norm(D - D_fd) / np.linalg.norm(D_fd))


def random_plastic_states(n: int, rng: np.random.Generator, params: GursonParams,
                          elastic: ElasticConstants, C_H_max: float = 0.0):
    """``n`` tuples ``(state, delta_eps, C_H)`` whose last update is plastic.

    Histories are short random tensile paths, so the states carry a spread of
    plastic strain, porosity and stress triaxiality.
    """
    out = []
    while len(out) < n:
        C_H = rng.uniform(0.0, C_H_max)
        d = np.array([rng.uniform(-0.5, 0.2), 1.0, rng.uniform(-0.5, 0.2),
                      rng.uniform(-0.3, 0.3)])
        d *= rng.uniform(1e-3, 4e-3) / np.linalg.norm(d)
        st = PointState.initial(params)
        for _ in range(int(rng.integers(2, 40))):
            st, _D = stress_update(st, d, C_H, params, elastic)
        if st.failed:
            continue
        de = d * rng.uniform(0.3, 1.5) + rng.normal(0.0, 2e-4, 4)
        new, _D = stress_update(st, de, C_H, params, elastic)
        if new.eps_p_bar > st.eps_p_bar and not new.failed:
            out.append((st, de, C_H))
    return out
