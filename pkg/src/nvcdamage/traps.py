"""Hydrogen trapping at dislocations (Oriani equilibrium).

All site densities are converted to molar densities so every concentration in
the package is in mol/m3:

* lattice sites ``n_L = beta / V_M``
* trap sites    ``n_T = alpha * N_T / N_A`` with ``N_T`` in traps/m3.

The binding energy ``W_B`` is stored as a positive magnitude, so the
equilibrium constant is ``K_T = exp(+W_B / (R T)) > 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ._jit import kernel

R_GAS = 8.314  # J/(mol K)
N_AVOGADRO = 6.022e23


@dataclass(frozen=True)
class TrapParams:
    W_B: float = 20.2e3          # J/mol, magnitude
    alpha: float = 1.0
    beta: float = 1.0
    V_M: float = 7.116e-6        # m3/mol
    V_H: float = 2.0e-6          # m3/mol
    D: float = 1.271e-8          # m2/s
    T: float = 300.0             # K
    d_lattice: float = 2.86e-10  # m
    rho0: float = 1.0e10         # m^-2
    gamma: float = 1.0e16        # m^-2
    eps_p_sat: float = 0.5

    def __post_init__(self):
        for name in ("W_B", "alpha", "beta", "V_M", "V_H", "D", "T",
                     "d_lattice", "rho0", "gamma", "eps_p_sat"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")

    @property
    def n_L(self) -> float:
        """Molar density of interstitial lattice sites (mol/m3)."""
        return self.beta / self.V_M

    @property
    def K_T(self) -> float:
        return math.exp(self.W_B / (R_GAS * self.T))

    def pack(self) -> np.ndarray:
        """Kernel vector: n_L, K_T, alpha/N_A, sqrt2/d, rho0, gamma, eps_sat."""
        return np.array([self.n_L, self.K_T, self.alpha / N_AVOGADRO,
                         math.sqrt(2.0) / self.d_lattice, self.rho0, self.gamma,
                         self.eps_p_sat])


@dataclass
class HydrogenPointState:
    C_L: float
    C_T: float
    N_T: float
    theta_L: float
    theta_T: float

    @property
    def total(self) -> float:
        return self.C_L + self.C_T


class LatticeSaturationError(ValueError):
    """Requested concentration exceeds the available sites."""


@kernel
def _trap_density(ep, tp):
    e = min(max(ep, 0.0), tp[6])
    return tp[3] * (tp[4] + 2.0 * tp[5] * e)


@kernel
def _trapped(CL, NT, tp):
    """C_T and dC_T/dC_L for the closed-form Oriani relation."""
    nL = tp[0]
    KT = tp[1]
    nT = tp[2] * NT
    den = nL + (KT - 1.0) * CL
    return nT * KT * CL / den, nT * KT * nL / (den * den)


def trap_density(eps_p_bar: float, params: TrapParams) -> float:
    """Dislocation trap density (traps/m3); constant past ``eps_p_sat``."""
    if eps_p_bar < 0.0:
        raise ValueError("plastic strain must be non-negative")
    rho = params.rho0 + 2.0 * params.gamma * min(eps_p_bar, params.eps_p_sat)
    return math.sqrt(2.0) * rho / params.d_lattice


def _check_lattice(C_L: float, params: TrapParams):
    if C_L < 0.0:
        raise ValueError("lattice concentration must be non-negative")
    if C_L > params.n_L:
        raise LatticeSaturationError(
            f"C_L = {C_L:g} mol/m3 exceeds lattice site density {params.n_L:g} mol/m3")


def trap_equilibrium(C_L: float, N_T: float, params: TrapParams) -> HydrogenPointState:
    _check_lattice(C_L, params)
    theta_L = C_L / params.n_L
    if theta_L >= 1.0:
        theta_T = 1.0
    else:
        ratio = params.K_T * theta_L / (1.0 - theta_L)
        theta_T = ratio / (1.0 + ratio)
    C_T = theta_T * params.alpha * N_T / N_AVOGADRO
    return HydrogenPointState(C_L=C_L, C_T=C_T, N_T=N_T, theta_L=theta_L, theta_T=theta_T)


def oriani_residual(state: HydrogenPointState, params: TrapParams) -> float:
    """Relative mismatch of the occupancy equilibrium."""
    if state.theta_L == 0.0:
        return abs(state.theta_T)
    lhs = state.theta_T / (1.0 - state.theta_T)
    rhs = params.K_T * state.theta_L / (1.0 - state.theta_L)
    return abs(lhs - rhs) / rhs


def transport_coefficients(C_L: float, N_T: float, params: TrapParams) -> tuple[float, float]:
    """Trap capacity ``dC_T/dC_L`` and effective diffusivity ``D_eff``."""
    _check_lattice(C_L, params)
    _ct, dct = _trapped(C_L, N_T, params.pack())
    return dct, params.D / (1.0 + dct)


def hydrogen_strain_increment(delta_C_H: float, C_H: float, params: TrapParams) -> np.ndarray:
    """Spherical lattice dilatation caused by a concentration change."""
    if C_H < 0.0:
        raise ValueError("concentration must be non-negative")
    e = hydrogen_strain_scalar(delta_C_H, C_H, params.V_H, params.V_M)
    return np.array([e, e, e, 0.0])


@kernel
def hydrogen_strain_scalar(dC, C, V_H, V_M):
    a = V_H / (3.0 * V_M)
    return a / (1.0 / V_M + C * a) * dC


def hydrogen_strain_field(delta_C_H, C_H, params: TrapParams) -> np.ndarray:
    """Normal dilatation component for arrays of concentration changes."""
    a = params.V_H / (3.0 * params.V_M)
    return a / (1.0 / params.V_M + np.asarray(C_H) * a) * np.asarray(delta_C_H)


def total_to_lattice(C_total: float, eps_p_bar: float, params: TrapParams) -> float:
    """Lattice share of a homogeneous total hydrogen content."""
    if C_total < 0.0:
        raise ValueError("total concentration must be non-negative")
    if C_total == 0.0:
        return 0.0
    N_T = trap_density(eps_p_bar, params)
    cap = params.n_L + params.alpha * N_T / N_AVOGADRO
    if C_total >= cap:
        raise LatticeSaturationError(
            f"C_total = {C_total:g} mol/m3 exceeds lattice + trap capacity {cap:g}")
    tp = params.pack()

    def excess(cl):
        return cl + _trapped(cl, N_T, tp)[0] - C_total

    return brentq(excess, 0.0, min(C_total, params.n_L), xtol=1e-14 * C_total, rtol=1e-15)
