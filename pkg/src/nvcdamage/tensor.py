"""Symmetric second-order tensors and isotropic elasticity.

A symmetric tensor is stored as a flat float array of tensor (not engineering)
components. Axisymmetric problems use 4 components ``(rr, zz, tt, rz)``; the
full 3-D mode uses 6 components ``(11, 22, 33, 12, 23, 13)`` where the first
four coincide with the axisymmetric ordering when ``1=r, 2=z, 3=theta``.

Hydrostatic stress is tension positive: ``p = tr(sigma) / 3``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Weights turning tensor shear components into double contractions.
_CONTRACT4 = np.array([1.0, 1.0, 1.0, 2.0])
_CONTRACT6 = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])


def sym(rr: float, zz: float, tt: float, rz: float = 0.0) -> np.ndarray:
    """Axisymmetric tensor from its four components."""
    return np.array([rr, zz, tt, rz], dtype=float)


def identity(ncomp: int = 4) -> np.ndarray:
    out = np.zeros(ncomp)
    out[:3] = 1.0
    return out


def _check(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.shape[-1] not in (4, 6):
        raise ValueError(f"symmetric tensor needs 4 or 6 components, got {t.shape[-1]}")
    return t


def trace(t: np.ndarray) -> float:
    t = _check(t)
    return float(t[0] + t[1] + t[2])


def deviator(t: np.ndarray) -> np.ndarray:
    t = _check(t)
    d = t.copy()
    m = (t[0] + t[1] + t[2]) / 3.0
    d[:3] -= m
    return d


def ddot(a: np.ndarray, b: np.ndarray) -> float:
    """Double contraction ``a : b``."""
    a = _check(a)
    w = _CONTRACT4 if a.shape[-1] == 4 else _CONTRACT6
    return float(np.sum(w * a * np.asarray(b, dtype=float)))


def to_matrix(t: np.ndarray) -> np.ndarray:
    """3x3 matrix in the (r, z, theta) / (1, 2, 3) basis."""
    t = _check(t)
    m = np.diag(t[:3]).astype(float)
    m[0, 1] = m[1, 0] = t[3]
    if t.shape[-1] == 6:
        m[1, 2] = m[2, 1] = t[4]
        m[0, 2] = m[2, 0] = t[5]
    return m


def from_matrix(m: np.ndarray, ncomp: int = 6) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if ncomp == 4:
        return np.array([m[0, 0], m[1, 1], m[2, 2], 0.5 * (m[0, 1] + m[1, 0])])
    return np.array([
        m[0, 0], m[1, 1], m[2, 2],
        0.5 * (m[0, 1] + m[1, 0]),
        0.5 * (m[1, 2] + m[2, 1]),
        0.5 * (m[0, 2] + m[2, 0]),
    ])


def invariants(sigma: np.ndarray) -> tuple[float, float]:
    """Hydrostatic stress ``p`` (tension positive) and Mises stress ``q``."""
    s = deviator(sigma)
    p = trace(sigma) / 3.0
    q = float(np.sqrt(max(1.5 * ddot(s, s), 0.0)))
    return p, q


@dataclass(frozen=True)
class ElasticConstants:
    """Isotropic elastic moduli (Pa)."""

    E: float = 200.0e9
    nu: float = 0.3

    def __post_init__(self):
        if not self.E > 0.0:
            raise ValueError("Young's modulus must be positive")
        if not -1.0 < self.nu < 0.5:
            raise ValueError("Poisson's ratio must lie in (-1, 0.5)")

    @property
    def K(self) -> float:
        return self.E / (3.0 * (1.0 - 2.0 * self.nu))

    @property
    def G(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))


def elastic_stress(delta_eps: np.ndarray, constants: ElasticConstants) -> np.ndarray:
    """Hooke increment ``K tr(de) I + 2G dev(de)``."""
    de = _check(delta_eps)
    return constants.K * trace(de) * identity(de.shape[-1]) + 2.0 * constants.G * deviator(de)


def elastic_matrix(constants: ElasticConstants, ncomp: int = 4) -> np.ndarray:
    """Matrix ``C`` with ``dsigma = C @ deps`` for tensor-component strains."""
    K, G = constants.K, constants.G
    C = np.zeros((ncomp, ncomp))
    C[:3, :3] = K - 2.0 * G / 3.0
    for i in range(3):
        C[i, i] += 2.0 * G
    for i in range(3, ncomp):
        C[i, i] = 2.0 * G
    return C
