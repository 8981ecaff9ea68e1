"""Quasi-static equilibrium of the axisymmetric bar at finite strain.

Hypoelastic updated-Lagrangian formulation: strain and rotation increments are
evaluated on the mid-increment configuration, the previous stress is rotated
with the Hughes-Winget approximation of the Jaumann rate, and internal forces
are integrated on the end-of-increment configuration. Four-node quads use a
B-bar (element-averaged) volumetric strain with 2x2 Gauss integration.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .._jit import kernel
from ..gurson import FAILED, NOT_CONVERGED, GursonParams, material_point
from ..tensor import ElasticConstants
from .mesh import Mesh

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
_G = 1.0 / math.sqrt(3.0)
GAUSS_XI = np.array([-_G, _G, _G, -_G])
GAUSS_ETA = np.array([-_G, -_G, _G, _G])


def shape_tables():
    """Shape values (4 gp x 4 nodes) and parent gradients (4 x 4 x 2)."""
    N = np.empty((4, 4))
    dN = np.empty((4, 4, 2))
    sx = np.array([-1.0, 1.0, 1.0, -1.0])
    sy = np.array([-1.0, -1.0, 1.0, 1.0])
    for g in range(4):
        xi, eta = GAUSS_XI[g], GAUSS_ETA[g]
        N[g] = 0.25 * (1 + sx * xi) * (1 + sy * eta)
        dN[g, :, 0] = 0.25 * sx * (1 + sy * eta)
        dN[g, :, 1] = 0.25 * sy * (1 + sx * xi)
    return N, dN


SHAPE_N, SHAPE_DN = shape_tables()


@kernel
def gp_geometry(x, Ng, dNg, dNdx):
    """Spatial gradients at one Gauss point. Returns (detJ, r)."""
    J00 = 0.0
    J01 = 0.0
    J10 = 0.0
    J11 = 0.0
    r = 0.0
    for a in range(4):
        J00 += dNg[a, 0] * x[a, 0]
        J01 += dNg[a, 0] * x[a, 1]
        J10 += dNg[a, 1] * x[a, 0]
        J11 += dNg[a, 1] * x[a, 1]
        r += Ng[a] * x[a, 0]
    det = J00 * J11 - J01 * J10
    if det != 0.0:
        for a in range(4):
            dNdx[a, 0] = (J11 * dNg[a, 0] - J01 * dNg[a, 1]) / det
            dNdx[a, 1] = (-J10 * dNg[a, 0] + J00 * dNg[a, 1]) / det
    return det, r


@kernel
def bbar_matrices(x, NS, DNS, Bt, dV, dNdx_all, rs):
    """B-bar strain matrices (tensor shear) for one element configuration.

    Fills ``Bt`` (4 gp x 4 comps x 8 dofs), ``dV`` (gp volumes incl. 2 pi r),
    gradients and radii. Returns the smallest Jacobian determinant.
    """
    bvol = np.zeros((4, 8))
    bbar = np.zeros(8)
    vol = 0.0
    dNdx = np.empty((4, 2))
    mindet = 1.0e300
    for g in range(4):
        det, r = gp_geometry(x, NS[g], DNS[g], dNdx)
        if det < mindet:
            mindet = det
        rs[g] = r
        dV[g] = TWO_PI * r * det
        for a in range(4):
            dNdx_all[g, a, 0] = dNdx[a, 0]
            dNdx_all[g, a, 1] = dNdx[a, 1]
            Na_r = NS[g, a] / r if r > 0.0 else 0.0
            bvol[g, 2 * a] = dNdx[a, 0] + Na_r
            bvol[g, 2 * a + 1] = dNdx[a, 1]
        for k in range(8):
            bbar[k] += bvol[g, k] * dV[g]
        vol += dV[g]
    if mindet <= 0.0:
        return mindet
    for k in range(8):
        bbar[k] /= vol
    for g in range(4):
        r = rs[g]
        for i in range(4):
            for k in range(8):
                Bt[g, i, k] = 0.0
        for a in range(4):
            Bt[g, 0, 2 * a] = dNdx_all[g, a, 0]
            Bt[g, 1, 2 * a + 1] = dNdx_all[g, a, 1]
            Bt[g, 2, 2 * a] = NS[g, a] / r
            Bt[g, 3, 2 * a] = 0.5 * dNdx_all[g, a, 1]
            Bt[g, 3, 2 * a + 1] = 0.5 * dNdx_all[g, a, 0]
        for i in range(3):
            for k in range(8):
                Bt[g, i, k] += (bbar[k] - bvol[g, k]) / 3.0
    return mindet


@kernel
def assemble_mech(X, du, conn, sig_n, ep_n, f_n, fail_n, CH, eH, mp, NS, DNS,
                  sig_o, ep_o, f_o, fail_o, dep_o, stat_o, Fint, Kel):
    """Material update at every Gauss point plus internal force and stiffness.

    Returns ``(bad_element, bad_kind)``: ``bad_kind`` 1 = non-positive
    Jacobian, 2 = local return map failure, 0 = success.
    """
    nel = conn.shape[0]
    for k in range(Fint.shape[0]):
        Fint[k] = 0.0
    xm = np.empty((4, 2))
    xn = np.empty((4, 2))
    ue = np.empty(8)
    Bm = np.empty((4, 4, 8))
    Bn = np.empty((4, 4, 8))
    dVm = np.empty(4)
    dVn = np.empty(4)
    gm = np.empty((4, 4, 2))
    gn = np.empty((4, 4, 2))
    rm = np.empty(4)
    rn = np.empty(4)
    de = np.empty(4)
    srot = np.empty(4)
    snew = np.empty(4)
    D = np.empty((4, 4))
    BD = np.empty((8, 4))
    fe = np.empty(8)
    bad_el = -1
    bad_kind = 0
    for e in range(nel):
        for a in range(4):
            nd = conn[e, a]
            for c in range(2):
                ue[2 * a + c] = du[nd, c]
                xm[a, c] = X[nd, c] + 0.5 * du[nd, c]
                xn[a, c] = X[nd, c] + du[nd, c]
        dm = bbar_matrices(xm, NS, DNS, Bm, dVm, gm, rm)
        dn = bbar_matrices(xn, NS, DNS, Bn, dVn, gn, rn)
        if dm <= 0.0 or dn <= 0.0:
            if bad_kind == 0:
                bad_el = e
                bad_kind = 1
            continue
        for k in range(8):
            fe[k] = 0.0
        for i in range(8):
            for j in range(8):
                Kel[e, i, j] = 0.0
        for g in range(4):
            for i in range(4):
                s = 0.0
                for k in range(8):
                    s += Bm[g, i, k] * ue[k]
                de[i] = s
            # spin increment 0.5 (d du_r/dz - d du_z/dr) on the mid configuration
            w = 0.0
            for a in range(4):
                w += 0.5 * (gm[g, a, 1] * ue[2 * a] - gm[g, a, 0] * ue[2 * a + 1])
            hw = 0.5 * w
            c = 1.0 / (1.0 + hw * hw)
            q00 = (1.0 - hw * hw) * c
            q01 = 2.0 * hw * c
            s_rr = sig_n[e, g, 0]
            s_zz = sig_n[e, g, 1]
            s_rz = sig_n[e, g, 3]
            # Q sigma Q^T with Q = [[q00, q01], [-q01, q00]]
            a00 = q00 * s_rr + q01 * s_rz
            a01 = q00 * s_rz + q01 * s_zz
            a10 = -q01 * s_rr + q00 * s_rz
            a11 = -q01 * s_rz + q00 * s_zz
            srot[0] = a00 * q00 + a01 * q01
            srot[1] = -a10 * q01 + a11 * q00
            srot[2] = sig_n[e, g, 2]
            srot[3] = -a00 * q01 + a01 * q00
            for i in range(3):
                de[i] -= eH[e, g]
            status, ep, f, dep, fl = material_point(
                srot, ep_n[e, g], f_n[e, g], fail_n[e, g], de, CH[e, g], mp, snew, D)
            if status == NOT_CONVERGED:
                if bad_kind == 0:
                    bad_el = e
                    bad_kind = 2
            for i in range(4):
                sig_o[e, g, i] = snew[i]
            ep_o[e, g] = ep
            f_o[e, g] = f
            fail_o[e, g] = fl
            dep_o[e, g] = dep
            stat_o[e, g] = status
            vol = dVn[g]
            # Jaumann -> Truesdell: D - C* + sigma (x) I, C*:d = d.sigma + sigma.d
            D[0, 0] -= 2.0 * snew[0]
            D[0, 3] -= 2.0 * snew[3]
            D[1, 1] -= 2.0 * snew[1]
            D[1, 3] -= 2.0 * snew[3]
            D[2, 2] -= 2.0 * snew[2]
            D[3, 0] -= snew[3]
            D[3, 1] -= snew[3]
            D[3, 3] -= snew[0] + snew[1]
            for i in range(4):
                for j in range(3):
                    D[i, j] += snew[i]
            for k in range(8):
                fe[k] += (Bn[g, 0, k] * snew[0] + Bn[g, 1, k] * snew[1]
                          + Bn[g, 2, k] * snew[2] + 2.0 * Bn[g, 3, k] * snew[3]) * vol
            # material stiffness B_eng^T D B
            for k in range(8):
                for j in range(4):
                    BD[k, j] = (Bn[g, 0, k] * D[0, j] + Bn[g, 1, k] * D[1, j]
                                + Bn[g, 2, k] * D[2, j] + 2.0 * Bn[g, 3, k] * D[3, j]) * vol
            for k in range(8):
                for l in range(8):
                    s = 0.0
                    for j in range(4):
                        s += BD[k, j] * Bn[g, j, l]
                    Kel[e, k, l] += s
            # initial-stress stiffness
            r = rn[g]
            for a in range(4):
                for b in range(4):
                    ga_r = gn[g, a, 0]
                    ga_z = gn[g, a, 1]
                    gb_r = gn[g, b, 0]
                    gb_z = gn[g, b, 1]
                    gab = (ga_r * (snew[0] * gb_r + snew[3] * gb_z)
                           + ga_z * (snew[3] * gb_r + snew[1] * gb_z)) * vol
                    Kel[e, 2 * a, 2 * b] += gab + snew[2] * NS[g, a] * NS[g, b] / (r * r) * vol
                    Kel[e, 2 * a + 1, 2 * b + 1] += gab
        for a in range(4):
            nd = conn[e, a]
            Fint[2 * nd] += fe[2 * a]
            Fint[2 * nd + 1] += fe[2 * a + 1]
    return bad_el, bad_kind


class EquilibriumError(RuntimeError):
    """Global Newton failed after all bisection levels."""

    def __init__(self, message, worst_element=None, history=None):
        super().__init__(message)
        self.worst_element = worst_element
        self.history = history or []


@dataclass
class SolverSettings:
    rtol: float = 1.0e-6
    utol: float = 1.0e-8  # times the gage length
    max_iter: int = 15
    max_line_search: int = 5
    max_bisections: int = 8


@dataclass
class MechState:
    """Committed mechanical history on the Gauss points of every element."""

    X: np.ndarray                 # current nodal coordinates
    u: np.ndarray                 # total nodal displacement
    sig: np.ndarray               # (nel, 4, 4)
    ep: np.ndarray                # (nel, 4)
    f: np.ndarray
    fail: np.ndarray              # int: -1 intact, k >= 1 extinction counter
    evp: np.ndarray               # accumulated volumetric plastic strain
    d_ep: np.ndarray = field(default=None)  # last committed epbar increment

    def copy(self) -> "MechState":
        return MechState(*(None if v is None else v.copy() for v in
                           (self.X, self.u, self.sig, self.ep, self.f, self.fail,
                            self.evp, self.d_ep)))


class MechanicsSolver:
    """Displacement-controlled Newton solver for the quarter bar."""

    def __init__(self, mesh: Mesh, params: GursonParams, elastic: ElasticConstants,
                 settings: SolverSettings | None = None):
        self.mesh = mesh
        self.params = params
        self.elastic = elastic
        self.mp = params.pack(elastic)
        self.settings = settings or SolverSettings()
        nn = mesh.n_nodes
        self.ndof = 2 * nn
        conn = mesh.elements
        edofs = np.empty((conn.shape[0], 8), dtype=np.int64)
        edofs[:, 0::2] = 2 * conn
        edofs[:, 1::2] = 2 * conn + 1
        self.edofs = edofs
        self._rows = np.repeat(edofs, 8, axis=1).ravel()
        self._cols = np.tile(edofs, (1, 8)).ravel()
        fixed = np.zeros(self.ndof, dtype=bool)
        fixed[2 * mesh.axis] = True
        fixed[2 * mesh.midplane + 1] = True
        self.load_dofs = 2 * mesh.loaded + 1
        fixed[self.load_dofs] = True
        self.free = np.flatnonzero(~fixed)
        self.fixed = fixed
        nel = conn.shape[0]
        self.state = MechState(
            X=mesh.nodes.copy(), u=np.zeros((nn, 2)),
            sig=np.zeros((nel, 4, 4)), ep=np.zeros((nel, 4)),
            f=np.full((nel, 4), params.f0), fail=np.full((nel, 4), -1, dtype=np.int64),
            evp=np.zeros((nel, 4)), d_ep=np.zeros((nel, 4)))
        self._last_du = None
        self.last_history: list[float] = []
        self.force_scale = params.sigma0 * math.pi * mesh.radius ** 2

    # -- evaluation ---------------------------------------------------------
    def evaluate(self, du: np.ndarray, CH: np.ndarray, eH: np.ndarray):
        """Trial update for a displacement increment ``du`` (n_nodes x 2)."""
        st = self.state
        nel = self.mesh.n_elements
        out = {
            "sig": np.empty((nel, 4, 4)), "ep": np.empty((nel, 4)),
            "f": np.empty((nel, 4)), "fail": np.empty((nel, 4), dtype=np.int64),
            "dep": np.empty((nel, 4)), "status": np.empty((nel, 4), dtype=np.int64),
        }
        Fint = np.empty(self.ndof)
        Kel = np.empty((nel, 8, 8))
        bad_el, bad_kind = assemble_mech(
            st.X, du, self.mesh.elements, st.sig, st.ep, st.f, st.fail, CH, eH,
            self.mp, SHAPE_N, SHAPE_DN, out["sig"], out["ep"], out["f"], out["fail"],
            out["dep"], out["status"], Fint, Kel)
        out["du"] = du
        out["Fint"] = Fint
        out["Kel"] = Kel
        out["bad"] = (int(bad_el), int(bad_kind))
        return out

    def stiffness(self, Kel: np.ndarray) -> sp.csr_matrix:
        return sp.coo_matrix((Kel.ravel(), (self._rows, self._cols)),
                             shape=(self.ndof, self.ndof)).tocsr()

    def reaction(self, Fint: np.ndarray) -> float:
        """Axial force carried through the loaded end (full circle, N)."""
        return float(Fint[self.load_dofs].sum())

    # -- solution -----------------------------------------------------------
    def _newton(self, du_end: float, CH, eH):
        s = self.settings
        nn = self.mesh.n_nodes
        if self._last_du is not None and self._last_du[1] != 0.0:
            flat = (self._last_du[0] * (du_end / self._last_du[1])).ravel()
        else:
            flat = np.zeros(2 * nn)
        flat[self.fixed] = 0.0
        flat[self.load_dofs] = du_end
        du = flat.reshape(nn, 2)
        history = []
        utol = s.utol * 2.0 * self.mesh.half_gage
        out = self.evaluate(du, CH, eH)
        for _it in range(s.max_iter):
            if out["bad"][1]:
                return None, history, out["bad"][0]
            R = out["Fint"]
            fref = max(np.linalg.norm(R), 1e-6 * self.force_scale)
            rnorm = np.linalg.norm(R[self.free])
            history.append(rnorm / fref)
            Kff = self.stiffness(out["Kel"])[self.free][:, self.free]
            delta = spla.spsolve(Kff.tocsc(), -R[self.free])
            if not np.all(np.isfinite(delta)):
                return None, history, -1
            if rnorm <= s.rtol * fref and np.linalg.norm(delta) <= utol:
                return out, history, -1
            step = 1.0
            for _ls in range(s.max_line_search + 1):
                trial = du.ravel().copy()
                trial[self.free] += step * delta
                new = self.evaluate(trial.reshape(nn, 2), CH, eH)
                if not new["bad"][1] and np.linalg.norm(new["Fint"][self.free]) <= rnorm:
                    break
                if _ls < s.max_line_search:
                    step *= 0.5
            du = trial.reshape(nn, 2)
            out = new
        if out["bad"][1]:
            worst = out["bad"][0]
        else:
            worst = int(np.argmax(np.abs(out["Fint"][self.edofs]).sum(axis=1)))
        return None, history, worst

    def commit(self, out) -> None:
        st = self.state
        st.X = st.X + out["du"]
        st.u = st.u + out["du"]
        st.sig = out["sig"]
        st.ep = out["ep"]
        st.f = out["f"]
        st.fail = out["fail"]
        st.evp = st.evp + out["dep"]

    def solve_increment(self, du_end: float, CH: np.ndarray, eH: np.ndarray):
        """Advance the loaded end by ``du_end``; bisects on failure.

        ``CH`` is the hydrogen concentration and ``eH`` the normal component of
        the hydrogen dilatation for this increment, both per Gauss point.
        Returns the internal force vector of the converged state.
        """
        s = self.settings
        ep_before = self.state.ep.copy()
        pending = [(du_end, 0)]
        Fint = None
        histories = []
        while pending:
            d, level = pending.pop(0)
            frac = d / du_end if du_end != 0.0 else 1.0
            out, hist, worst = self._newton(d, CH, eH * frac)
            histories.append(hist)
            if out is None:
                if level >= s.max_bisections:
                    raise EquilibriumError(
                        f"no convergence after {level} bisections (worst element {worst}); "
                        f"last residual history {hist}",
                        worst_element=worst, history=histories)
                log.debug("bisecting increment at level %d", level + 1)
                self._last_du = None
                pending[:0] = [(0.5 * d, level + 1), (0.5 * d, level + 1)]
                continue
            self.commit(out)
            self._last_du = (out["du"], d)
            Fint = out["Fint"]
        self.state.d_ep = self.state.ep - ep_before
        self.last_history = histories[-1] if histories else []
        return Fint
