"""Trap-mediated hydrogen transport on the deforming bar.

The unknown is the nodal lattice concentration ``C_L``. Each step is a
backward-Euler update of the balance of total hydrogen written for the lumped
nodal volumes of the current configuration::

    m_i^{n+1} (C_L + C_T)_i^{n+1} - m_i^n (C_L + C_T)_i^n + dt (K C_L)_i = 0

``K`` holds Fickian diffusion and hydrostatic-stress drift. Its columns sum to
zero, so the total ``sum_i m_i (C_L + C_T)_i`` is conserved to the Newton
tolerance whatever the mesh motion. ``C_T`` follows Oriani equilibrium with
the trap density of the current plastic strain, so trap creation by plastic
flow and the trap capacity term both emerge from the storage difference.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .._jit import kernel
from ..traps import R_GAS, TrapParams, _trap_density, _trapped
from .mechanics import SHAPE_DN, SHAPE_N, gp_geometry
from .mesh import Mesh

NEWTON_TOL = 1.0e-13
NEWTON_MAXIT = 25
NEGATIVE_TOL = 1.0e-12


class TransportError(RuntimeError):
    """Transport step produced an unphysical field or did not converge."""


@kernel
def lumped_masses(X, conn, NS, DNS, mass):
    """Row-summed (lumped) nodal volumes including the 2 pi r weight."""
    for i in range(mass.shape[0]):
        mass[i] = 0.0
    x = np.empty((4, 2))
    dNdx = np.empty((4, 2))
    for e in range(conn.shape[0]):
        for a in range(4):
            x[a, 0] = X[conn[e, a], 0]
            x[a, 1] = X[conn[e, a], 1]
        for g in range(4):
            det, r = gp_geometry(x, NS[g], DNS[g], dNdx)
            dV = 2.0 * np.pi * r * det
            for a in range(4):
                mass[conn[e, a]] += NS[g, a] * dV


@kernel
def project_to_nodes(X, conn, NS, DNS, gp_values, out):
    """Lumped L2 projection of Gauss-point values onto the nodes."""
    w = np.zeros(out.shape[0])
    for i in range(out.shape[0]):
        out[i] = 0.0
    x = np.empty((4, 2))
    dNdx = np.empty((4, 2))
    for e in range(conn.shape[0]):
        for a in range(4):
            x[a, 0] = X[conn[e, a], 0]
            x[a, 1] = X[conn[e, a], 1]
        for g in range(4):
            det, r = gp_geometry(x, NS[g], DNS[g], dNdx)
            dV = 2.0 * np.pi * r * det
            for a in range(4):
                out[conn[e, a]] += NS[g, a] * dV * gp_values[e, g]
                w[conn[e, a]] += NS[g, a] * dV
    for i in range(out.shape[0]):
        if w[i] > 0.0:
            out[i] /= w[i]


@kernel
def assemble_transport(X, conn, NS, DNS, D, drift, sig_nodal, Kel):
    """Element matrices of diffusion plus stress drift.

    ``K_ab = int D grad N_a . grad N_b - drift (grad N_a . grad s) N_b dV``
    with ``drift = D V_H / (3 R T)`` and ``s`` the nodal hydrostatic trace.
    """
    x = np.empty((4, 2))
    dNdx = np.empty((4, 2))
    for e in range(conn.shape[0]):
        for a in range(4):
            x[a, 0] = X[conn[e, a], 0]
            x[a, 1] = X[conn[e, a], 1]
            for b in range(4):
                Kel[e, a, b] = 0.0
        for g in range(4):
            det, r = gp_geometry(x, NS[g], DNS[g], dNdx)
            dV = 2.0 * np.pi * r * det
            gs_r = 0.0
            gs_z = 0.0
            for a in range(4):
                gs_r += dNdx[a, 0] * sig_nodal[conn[e, a]]
                gs_z += dNdx[a, 1] * sig_nodal[conn[e, a]]
            for a in range(4):
                flow = dNdx[a, 0] * gs_r + dNdx[a, 1] * gs_z
                for b in range(4):
                    Kel[e, a, b] += (D * (dNdx[a, 0] * dNdx[b, 0] + dNdx[a, 1] * dNdx[b, 1])
                                     - drift * flow * NS[g, b]) * dV


@kernel
def _nodal_trapped(CL, NT, tp, CT, dCT):
    for i in range(CL.shape[0]):
        CT[i], dCT[i] = _trapped(CL[i], NT[i], tp)


@kernel
def _trap_density_field(ep, tp, out):
    flat_ep = ep.ravel()
    flat_out = out.ravel()
    for i in range(flat_ep.shape[0]):
        flat_out[i] = _trap_density(flat_ep[i], tp)


def trap_density_field(eps_p_bar: np.ndarray, params: TrapParams) -> np.ndarray:
    ep = np.ascontiguousarray(eps_p_bar, dtype=float)
    out = np.empty_like(ep)
    _trap_density_field(ep, params.pack(), out)
    return out


@dataclass
class TransportState:
    """Nodal hydrogen at the end of the last step."""
    C_L: np.ndarray      # lattice, mol/m3
    C_T: np.ndarray      # trapped, mol/m3
    N_T: np.ndarray      # trap density, 1/m3
    mass: np.ndarray     # lumped nodal volumes, m3

    @property
    def total(self) -> float:
        """Hydrogen in the modelled domain, mol."""
        return float(np.dot(self.mass, self.C_L + self.C_T))

    def copy(self) -> "TransportState":
        return TransportState(self.C_L.copy(), self.C_T.copy(), self.N_T.copy(),
                              self.mass.copy())


class TransportSolver:
    """Backward-Euler stepping of the lattice concentration field."""

    def __init__(self, mesh: Mesh, params: TrapParams):
        self.mesh = mesh
        self.params = params
        self.tp = params.pack()
        conn = mesh.elements
        self._rows = np.repeat(conn, 4, axis=1).ravel()
        self._cols = np.tile(conn, (1, 4)).ravel()
        self.drift = params.D * params.V_H / (3.0 * R_GAS * params.T)

    # -- helpers ------------------------------------------------------------
    def masses(self, X: np.ndarray) -> np.ndarray:
        m = np.empty(self.mesh.n_nodes)
        lumped_masses(X, self.mesh.elements, SHAPE_N, SHAPE_DN, m)
        return m

    def project(self, X: np.ndarray, gp_values: np.ndarray) -> np.ndarray:
        out = np.empty(self.mesh.n_nodes)
        project_to_nodes(X, self.mesh.elements, SHAPE_N, SHAPE_DN,
                         np.ascontiguousarray(gp_values, dtype=float), out)
        return out

    def nodal_trap_density(self, X: np.ndarray, eps_p_bar: np.ndarray) -> np.ndarray:
        return trap_density_field(self.project(X, eps_p_bar), self.params)

    def trapped(self, C_L: np.ndarray, N_T: np.ndarray):
        CT = np.empty_like(C_L)
        dCT = np.empty_like(C_L)
        _nodal_trapped(C_L, N_T, self.tp, CT, dCT)
        return CT, dCT

    def matrix(self, X: np.ndarray, sig_nodal: np.ndarray) -> sp.csr_matrix:
        nel = self.mesh.n_elements
        Kel = np.empty((nel, 4, 4))
        assemble_transport(X, self.mesh.elements, SHAPE_N, SHAPE_DN, self.params.D,
                           self.drift, np.ascontiguousarray(sig_nodal, dtype=float), Kel)
        n = self.mesh.n_nodes
        return sp.coo_matrix((Kel.ravel(), (self._rows, self._cols)), shape=(n, n)).tocsr()

    def initial_state(self, X: np.ndarray, C_L0: float | np.ndarray,
                      eps_p_bar: np.ndarray | None = None) -> TransportState:
        n = self.mesh.n_nodes
        CL = np.broadcast_to(np.asarray(C_L0, dtype=float), (n,)).copy()
        if np.any(CL < 0.0):
            raise ValueError("lattice concentration must be non-negative")
        if eps_p_bar is None:
            NT = np.full(n, trap_density_field(np.zeros(1), self.params)[0])
        else:
            NT = self.nodal_trap_density(X, eps_p_bar)
        CT, _ = self.trapped(CL, NT)
        return TransportState(CL, CT, NT, self.masses(X))

    # -- step ---------------------------------------------------------------
    def step(self, state: TransportState, X: np.ndarray, sigma_kk: np.ndarray,
             eps_p_bar: np.ndarray, dt: float) -> TransportState:
        """Advance one step on configuration ``X``.

        ``sigma_kk`` is the stress trace, either per Gauss point
        ``(n_el, 4)`` (projected to the nodes here) or already nodal.
        ``eps_p_bar`` is the plastic strain per Gauss point at the step end.
        """
        if not dt > 0.0:
            raise ValueError("dt must be positive")
        n = self.mesh.n_nodes
        sig = np.asarray(sigma_kk, dtype=float)
        sig_nodal = sig if sig.shape == (n,) else self.project(X, sig)
        NT = self.nodal_trap_density(X, eps_p_bar)
        mass = self.masses(X)
        K = self.matrix(X, sig_nodal)
        stored = state.mass * (state.C_L + state.C_T)
        scale = max(float(np.abs(stored).sum()), 1e-300)
        CL = state.C_L.copy()
        converged = False
        for _it in range(NEWTON_MAXIT):
            CT, dCT = self.trapped(CL, NT)
            R = mass * (CL + CT) - stored + dt * (K @ CL)
            J = K * dt + sp.diags(mass * (1.0 + dCT))
            delta = spla.spsolve(J.tocsc(), -R)
            if not np.all(np.isfinite(delta)):
                raise TransportError("transport Newton produced non-finite values")
            CL += delta
            if np.abs(R).sum() <= NEWTON_TOL * scale or \
                    np.abs(delta).max() <= NEWTON_TOL * max(np.abs(CL).max(), 1e-300):
                converged = True
                break
        if not converged:
            raise TransportError("transport Newton did not converge")
        cmax = max(float(CL.max()), 0.0)
        if CL.min() < -NEGATIVE_TOL * cmax:
            raise TransportError(
                f"negative lattice concentration {CL.min():g} mol/m3 "
                f"at node {int(np.argmin(CL))}; reduce the time step")
        np.maximum(CL, 0.0, out=CL)
        if CL.max() > self.params.n_L:
            raise TransportError("lattice concentration exceeds the site density")
        CT, _ = self.trapped(CL, NT)
        return TransportState(CL, CT, NT, mass)

    def gauss_point_values(self, state: TransportState, eps_p_bar: np.ndarray):
        """``(C_L, C_T, N_T)`` at every Gauss point, traps in local equilibrium."""
        CL = state.C_L[self.mesh.elements] @ SHAPE_N.T
        NT = trap_density_field(eps_p_bar, self.params)
        CT = np.empty_like(CL)
        dCT = np.empty_like(CL)
        _nodal_trapped(CL.ravel(), NT.ravel(), self.tp, CT.ravel(), dCT.ravel())
        return CL, CT, NT


def transport_step(mesh: Mesh, state: TransportState, X: np.ndarray, sigma_kk: np.ndarray,
                   eps_p_bar: np.ndarray, dt: float, params: TrapParams) -> TransportState:
    """One backward-Euler transport step (convenience wrapper)."""
    return TransportSolver(mesh, params).step(state, X, sigma_kk, eps_p_bar, dt)
