"""Porous (Gurson-Tvergaard-Needleman) plasticity with hydrogen effects.

Hydrogen enters twice: it flattens the hardening curve (flow stress drops to
the initial yield stress once the local concentration reaches ``Cc``) and it
adds a void nucleation term proportional to ``B * C_H * d(epbar)``.

Sign conventions
----------------
``p`` is tension positive. The implicit update solves for the volumetric
plastic strain increment ``dep`` (positive = dilatation) and the equivalent
deviatoric increment ``deq`` so that::

    p = p_trial - K dep,   q = q_trial - 3 G deq,
    dep * dPhi/dq - deq * dPhi/dp = 0                  (normality)
    (1 - f) sigma_f d(epbar) = p dep + q deq            (plastic work)
    df = (1 - f) dep + (A(epbar) + B C_H) d(epbar)      (growth + nucleation)

with ``epbar`` the matrix equivalent plastic strain. All four equations are
solved together with an analytic Jacobian; the same Jacobian gives the
algorithmic tangent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._jit import kernel
from .tensor import ElasticConstants

# Layout of the packed material vector consumed by kernels.
MP_K, MP_G, MP_Q1, MP_Q2, MP_Q3, MP_FN, MP_EPSN, MP_SN = 0, 1, 2, 3, 4, 5, 6, 7
MP_SIG0, MP_EPS0, MP_N, MP_CC, MP_B, MP_FC, MP_FF = 8, 9, 10, 11, 12, 13, 14
MP_SIZE = 15

# Return codes of the point kernel.
ELASTIC, PLASTIC, FAILED, NOT_CONVERGED = 0, 1, 2, -1

FAIL_RAMP_INCREMENTS = 10
RESIDUAL_STIFFNESS = 1.0e-6  # fraction of C kept by extinct points
NEWTON_TOL = 1.0e-10
NEWTON_MAXIT = 60
SUBSTEPS = 10
LINE_SEARCH_MAX = 12
# |1.5 q2 p / sigma_f| cap: far outside any admissible state, but keeps trial
# iterates finite in plain Python where math.cosh raises on overflow
HYPERBOLIC_CAP = 700.0


@dataclass(frozen=True)
class GursonParams:
    """Constitutive constants. Stresses in Pa, concentrations in mol/m3."""

    q1: float = 1.5
    q2: float = 1.0
    q3: float | None = None
    f0: float = 1.0e-4
    fN: float = 0.05
    epsN: float = 1.0
    SN: float = 0.1
    sigma0: float = 420.0e6
    eps0: float = 0.012
    n_hard: float = 0.13
    Cc: float = 1500.0
    B: float = 3.0e-3
    fc: float = 0.15
    fF: float = 0.25

    def __post_init__(self):
        if self.q3 is None:
            object.__setattr__(self, "q3", self.q1 ** 2)
        if self.q1 <= 0.0:
            raise ValueError("q1 must be positive")
        if not 0.0 <= self.f0 < self.fc < self.fF:
            raise ValueError("need 0 <= f0 < fc < fF")
        if self.fF >= 1.0:
            raise ValueError("fF must be below 1")
        if self.SN <= 0.0:
            raise ValueError("SN must be positive")
        if not self.Cc > 0.0:
            raise ValueError("Cc must be positive (use inf to disable softening)")
        if self.B < 0.0:
            raise ValueError("B must be non-negative")
        if self.sigma0 <= 0.0 or self.eps0 <= 0.0:
            raise ValueError("sigma0 and eps0 must be positive")

    @property
    def f_ultimate(self) -> float:
        return 1.0 / self.q1

    def with_(self, **changes) -> "GursonParams":
        return replace(self, **changes)

    def pack(self, elastic: ElasticConstants) -> np.ndarray:
        mp = np.empty(MP_SIZE)
        mp[MP_K] = elastic.K
        mp[MP_G] = elastic.G
        mp[MP_Q1] = self.q1
        mp[MP_Q2] = self.q2
        mp[MP_Q3] = self.q3
        mp[MP_FN] = self.fN
        mp[MP_EPSN] = self.epsN
        mp[MP_SN] = self.SN
        mp[MP_SIG0] = self.sigma0
        mp[MP_EPS0] = self.eps0
        mp[MP_N] = self.n_hard
        mp[MP_CC] = self.Cc
        mp[MP_B] = self.B
        mp[MP_FC] = self.fc
        mp[MP_FF] = self.fF
        return mp


@dataclass
class PointState:
    """History of one integration point."""

    sigma: np.ndarray = field(default_factory=lambda: np.zeros(4))
    eps_p_bar: float = 0.0
    f: float = 0.0
    eps_p_trace_accum: float = 0.0
    C_H_seen: float = 0.0
    failed: bool = False
    fail_count: int = 0

    @classmethod
    def initial(cls, params: GursonParams) -> "PointState":
        return cls(f=params.f0)

    def copy(self) -> "PointState":
        return replace(self, sigma=np.array(self.sigma, dtype=float))


class StressUpdateError(RuntimeError):
    """Local Newton failed even after subincrementation."""

    def __init__(self, message, state=None, delta_eps=None, C_H=None):
        super().__init__(message)
        self.state = state
        self.delta_eps = delta_eps
        self.C_H = C_H


# ---------------------------------------------------------------------------
# scalar laws (kernel versions)


@kernel
def _flow(ep, CH, mp):
    crel = CH / mp[MP_CC]
    if crel < 0.0:
        crel = 0.0
    elif crel > 1.0:
        crel = 1.0
    soft = 1.0 - crel
    base = 1.0 + ep / mp[MP_EPS0] * soft
    sf = mp[MP_SIG0] * base ** mp[MP_N]
    h = mp[MP_SIG0] * mp[MP_N] * base ** (mp[MP_N] - 1.0) * soft / mp[MP_EPS0]
    return sf, h


@kernel
def _fstar(f, mp):
    fc = mp[MP_FC]
    fF = mp[MP_FF]
    fu = 1.0 / mp[MP_Q1]
    if f <= fc:
        return f, 1.0
    if f >= fF:
        return fu, 0.0
    kappa = (fu - fc) / (fF - fc)
    return fc + kappa * (f - fc), kappa


@kernel
def _nucl_rate(ep, mp):
    sn = mp[MP_SN]
    z = (ep - mp[MP_EPSN]) / sn
    A = mp[MP_FN] / (sn * math.sqrt(2.0 * math.pi)) * math.exp(-0.5 * z * z)
    dA = -A * z / sn
    return A, dA


@kernel
def _yield(q, p, sf, fs, mp):
    b = min(max(1.5 * mp[MP_Q2] * p / sf, -HYPERBOLIC_CAP), HYPERBOLIC_CAP)
    return (q / sf) ** 2 + 2.0 * mp[MP_Q1] * fs * math.cosh(b) - (1.0 + mp[MP_Q3] * fs * fs)


# ---------------------------------------------------------------------------
# point kernel


@kernel
def _elastic_matrix4(K, G, out):
    for i in range(4):
        for j in range(4):
            out[i, j] = 0.0
    lam = K - 2.0 * G / 3.0
    for i in range(3):
        for j in range(3):
            out[i, j] = lam
        out[i, i] += 2.0 * G
    out[3, 3] = 2.0 * G


@kernel
def solve_small(A, B, X):
    """Solve ``A X = B`` (n x n, n x m) by partial pivoting; False if singular."""
    n = A.shape[0]
    m = B.shape[1]
    M = A.copy()
    Y = B.copy()
    for k in range(n):
        piv = k
        big = abs(M[k, k])
        for i in range(k + 1, n):
            if abs(M[i, k]) > big:
                big = abs(M[i, k])
                piv = i
        if not big > 0.0 or not math.isfinite(big):
            return False
        if piv != k:
            for j in range(n):
                t = M[k, j]
                M[k, j] = M[piv, j]
                M[piv, j] = t
            for j in range(m):
                t = Y[k, j]
                Y[k, j] = Y[piv, j]
                Y[piv, j] = t
        for i in range(k + 1, n):
            c = M[i, k] / M[k, k]
            for j in range(k, n):
                M[i, j] -= c * M[k, j]
            for j in range(m):
                Y[i, j] -= c * Y[k, j]
    for k in range(n - 1, -1, -1):
        for j in range(m):
            s = Y[k, j]
            for i in range(k + 1, n):
                s -= M[k, i] * X[i, j]
            X[k, j] = s / M[k, k]
            if not math.isfinite(X[k, j]):
                return False
    return True


@kernel
def _local_system(dp, dq, ep, f, p_tr, q_tr, ep_n, f_n, CH, mp, R, J):
    """Residuals and Jacobian of the local system in (dep, deq, epbar, f)."""
    K = mp[MP_K]
    G = mp[MP_G]
    q1 = mp[MP_Q1]
    q2 = mp[MP_Q2]
    q3 = mp[MP_Q3]
    BC = mp[MP_B] * CH
    sf, h = _flow(ep, CH, mp)
    fs, dfs = _fstar(f, mp)
    p = p_tr - K * dp
    q = q_tr - 3.0 * G * dq
    b = min(max(1.5 * q2 * p / sf, -HYPERBOLIC_CAP), HYPERBOLIC_CAP)
    ch = math.cosh(b)
    sh = math.sinh(b)
    A, dA = _nucl_rate(ep, mp)
    dep = ep - ep_n
    # sf * dPhi/dq and sf * dPhi/dp
    g1 = 2.0 * q / sf
    g2 = 3.0 * q1 * q2 * fs * sh
    work = p * dp + q * dq
    R[0] = (q / sf) ** 2 + 2.0 * q1 * fs * ch - (1.0 + q3 * fs * fs)
    R[1] = dp * g1 - dq * g2
    R[2] = (1.0 - f) * dep - work / sf
    R[3] = f - f_n - (1.0 - f) * dp - (A + BC) * dep

    phi_s = -2.0 * q * q / sf ** 3 - 2.0 * q1 * fs * b * sh / sf
    J[0, 0] = -K * g2 / sf
    J[0, 1] = -3.0 * G * g1 / sf
    J[0, 2] = phi_s * h
    J[0, 3] = (2.0 * q1 * ch - 2.0 * q3 * fs) * dfs
    c3 = 3.0 * q1 * q2 * fs * ch
    J[1, 0] = g1 + dq * c3 * 1.5 * q2 / sf * K
    J[1, 1] = -dp * 6.0 * G / sf - g2
    J[1, 2] = -dp * 2.0 * q * h / (sf * sf) + dq * c3 * b / sf * h
    J[1, 3] = -dq * 3.0 * q1 * q2 * sh * dfs
    J[2, 0] = -(p - K * dp) / sf
    J[2, 1] = -(q - 3.0 * G * dq) / sf
    J[2, 2] = (1.0 - f) + work * h / (sf * sf)
    J[2, 3] = -dep
    J[3, 0] = -(1.0 - f)
    J[3, 1] = 0.0
    J[3, 2] = -(dA * dep + A + BC)
    J[3, 3] = 1.0 + dp
    return sf, fs, p, q, b


@kernel
def _return_map(sig_n, ep_n, f_n, de, CH, mp, sig_out, D_out):
    """Single implicit update. Returns (status, epbar, f, dep)."""
    K = mp[MP_K]
    G = mp[MP_G]
    q1 = mp[MP_Q1]
    q2 = mp[MP_Q2]
    lam = K - 2.0 * G / 3.0
    tr = de[0] + de[1] + de[2]
    str_ = np.empty(4)
    for i in range(3):
        str_[i] = sig_n[i] + lam * tr + 2.0 * G * de[i]
    str_[3] = sig_n[3] + 2.0 * G * de[3]
    p_tr = (str_[0] + str_[1] + str_[2]) / 3.0
    s = np.empty(4)
    for i in range(3):
        s[i] = str_[i] - p_tr
    s[3] = str_[3]
    q_tr = math.sqrt(max(1.5 * (s[0] ** 2 + s[1] ** 2 + s[2] ** 2 + 2.0 * s[3] ** 2), 0.0))

    sf0, _h0 = _flow(ep_n, CH, mp)
    fs0, _d0 = _fstar(f_n, mp)
    if _yield(q_tr, p_tr, sf0, fs0, mp) <= 0.0:
        for i in range(4):
            sig_out[i] = str_[i]
        _elastic_matrix4(K, G, D_out)
        return ELASTIC, ep_n, f_n, 0.0

    nrm = np.zeros(4)
    if q_tr > 0.0:
        for i in range(4):
            nrm[i] = 1.5 * s[i] / q_tr

    dp = 0.0
    dq = 0.0
    ep = ep_n
    f = f_n
    J = np.empty((4, 4))
    R = np.empty(4)
    R2 = np.empty(4)
    J2 = np.empty((4, 4))
    Rm = np.empty((4, 1))
    dx = np.empty((4, 1))
    converged = False
    polished = False
    for _it in range(NEWTON_MAXIT):
        _local_system(dp, dq, ep, f, p_tr, q_tr, ep_n, f_n, CH, mp, R, J)
        rn = max(abs(R[0]), abs(R[1]), abs(R[2]), abs(R[3]))
        if rn < NEWTON_TOL:
            # one extra step drives the residual to round-off
            if polished or rn < 1.0e-15:
                converged = True
                break
            polished = True
        for i in range(4):
            Rm[i, 0] = -R[i]
        if not solve_small(J, Rm, dx):
            break
        # backtracking: the cosh term makes full steps overshoot far outside
        step = 1.0
        for _ls in range(LINE_SEARCH_MAX):
            dp1 = dp + step * dx[0, 0]
            dq1 = max(dq + step * dx[1, 0], 0.0)
            ep1 = max(ep + step * dx[2, 0], ep_n)
            f1 = min(max(f + step * dx[3, 0], 0.0), 0.999)
            _local_system(dp1, dq1, ep1, f1, p_tr, q_tr, ep_n, f_n, CH, mp, R2, J2)
            rn1 = max(abs(R2[0]), abs(R2[1]), abs(R2[2]), abs(R2[3]))
            if math.isfinite(rn1) and (rn1 < rn or rn < NEWTON_TOL):
                break
            step *= 0.5
        dp = dp1
        dq = dq1
        ep = ep1
        f = f1
        if not (math.isfinite(dp) and math.isfinite(dq) and math.isfinite(ep) and math.isfinite(f)):
            break

    if not converged:
        if f >= mp[MP_FF]:
            return FAILED, ep, f, dp
        return NOT_CONVERGED, ep, f, dp

    for i in range(3):
        sig_out[i] = str_[i] - K * dp - 2.0 * G * dq * nrm[i]
    sig_out[3] = str_[3] - 2.0 * G * dq * nrm[3]
    if f >= mp[MP_FF]:
        return FAILED, ep, f, dp

    # consistent tangent: d(x) = -J^{-1} dR/d(p_tr, q_tr) d(p_tr, q_tr)
    sf, fs, p, q, b = _local_system(dp, dq, ep, f, p_tr, q_tr, ep_n, f_n, CH, mp, R, J)
    ch = math.cosh(b)
    sh = math.sinh(b)
    Rt = np.zeros((4, 2))
    Rt[0, 0] = 3.0 * q1 * q2 * fs * sh / sf
    Rt[0, 1] = 2.0 * q / (sf * sf)
    Rt[1, 0] = -dq * 3.0 * q1 * q2 * fs * ch * 1.5 * q2 / sf
    Rt[1, 1] = dp * 2.0 / sf
    Rt[2, 0] = -dp / sf
    Rt[2, 1] = -dq / sf
    X = np.empty((4, 2))
    for i in range(4):
        Rt[i, 0] = -Rt[i, 0]
        Rt[i, 1] = -Rt[i, 1]
    if not solve_small(J, Rt, X):
        return NOT_CONVERGED, ep, f, dp
    dpdp = X[0, 0]
    dpdq = X[0, 1]
    dqdp = X[1, 0]
    dqdq = X[1, 1]
    _elastic_matrix4(K, G, D_out)
    # d p_tr = K (1:de), d q_tr = 2G (n:de); tensor shear counts twice in ':'
    nw = nrm.copy()
    nw[3] = 2.0 * nrm[3]
    coef = 0.0
    if q_tr > 0.0:
        coef = 6.0 * G * G * dq / q_tr
    for i in range(4):
        oi = 1.0 if i < 3 else 0.0
        for j in range(4):
            oj = 1.0 if j < 3 else 0.0
            dvol = dpdp * K * oj + dpdq * 2.0 * G * nw[j]
            ddev = dqdp * K * oj + dqdq * 2.0 * G * nw[j]
            pdev = 0.0
            if i < 3 and j < 3:
                pdev = (1.0 if i == j else 0.0) - 1.0 / 3.0
            elif i == 3 and j == 3:
                pdev = 1.0
            D_out[i, j] -= (oi * K * dvol + 2.0 * G * nrm[i] * ddev
                            + coef * (pdev - 2.0 / 3.0 * nrm[i] * nw[j]))
    return PLASTIC, ep, f, dp


@kernel
def material_point(sig_n, ep_n, f_n, fail_n, de, CH, mp, sig_out, D_out):
    """Full point update with substepping and extinction.

    ``fail_n`` is -1 for intact points, otherwise the number of increments
    already spent ramping the stress down. Returns
    ``(status, epbar, f, dep, fail)``.
    """
    if fail_n >= 0:
        k = fail_n + 1
        remaining = FAIL_RAMP_INCREMENTS - fail_n
        scale = 0.0
        if remaining > 1:
            scale = (remaining - 1.0) / remaining
        _elastic_matrix4(mp[MP_K], mp[MP_G], D_out)
        lam = mp[MP_K] - 2.0 * mp[MP_G] / 3.0
        tr = de[0] + de[1] + de[2]
        for i in range(4):
            extra = 2.0 * mp[MP_G] * de[i]
            if i < 3:
                extra += lam * tr
            sig_out[i] = sig_n[i] * scale + RESIDUAL_STIFFNESS * extra
            for j in range(4):
                D_out[i, j] *= RESIDUAL_STIFFNESS
        return FAILED, ep_n, f_n, 0.0, k

    status, ep, f, dp = _return_map(sig_n, ep_n, f_n, de, CH, mp, sig_out, D_out)
    nsub = SUBSTEPS
    while status == NOT_CONVERGED and nsub <= SUBSTEPS * SUBSTEPS:
        sub = np.empty(4)
        for i in range(4):
            sub[i] = de[i] / nsub
        s_cur = sig_n.copy()
        ep = ep_n
        f = f_n
        dp = 0.0
        for _k in range(nsub):
            status, ep, f, dpk = _return_map(s_cur, ep, f, sub, CH, mp, sig_out, D_out)
            dp += dpk
            if status == NOT_CONVERGED or status == FAILED:
                break
            for i in range(4):
                s_cur[i] = sig_out[i]
        nsub *= SUBSTEPS
    if status == FAILED:
        # extinction starts from the last admissible state; past fF the
        # surface degenerates to a point and the map's strains mean nothing
        for i in range(4):
            sig_out[i] = sig_n[i] * (FAIL_RAMP_INCREMENTS - 1.0) / FAIL_RAMP_INCREMENTS
        _elastic_matrix4(mp[MP_K], mp[MP_G], D_out)
        for i in range(4):
            for j in range(4):
                D_out[i, j] *= RESIDUAL_STIFFNESS
        return FAILED, ep_n, mp[MP_FF], 0.0, 1
    return status, ep, f, dp, -1


# ---------------------------------------------------------------------------
# public scalar API


def flow_stress(eps_p_bar: float, C_H: float, params: GursonParams) -> float:
    """Hydrogen-softened power-law flow stress (Pa)."""
    if eps_p_bar < 0.0 or C_H < 0.0:
        raise ValueError("plastic strain and hydrogen concentration must be non-negative")
    crel = min(C_H / params.Cc, 1.0)
    return params.sigma0 * (1.0 + eps_p_bar / params.eps0 * (1.0 - crel)) ** params.n_hard


def yield_value(q: float, p: float, sigma_f: float, f_star: float, params: GursonParams) -> float:
    b = -3.0 * params.q2 * p / (2.0 * sigma_f)
    return (q / sigma_f) ** 2 + 2.0 * params.q1 * f_star * math.cosh(b) - (1.0 + params.q3 * f_star ** 2)


def f_star(f: float, params: GursonParams) -> float:
    """Effective void fraction with bilinear coalescence acceleration."""
    if f <= params.fc:
        return f
    if f >= params.fF:
        return params.f_ultimate
    kappa = (params.f_ultimate - params.fc) / (params.fF - params.fc)
    return params.fc + kappa * (f - params.fc)


def nucleation_increment(eps_p_bar: float, d_eps_p_bar: float, C_H: float,
                         params: GursonParams) -> float:
    """Strain-controlled plus hydrogen-assisted void nucleation."""
    if d_eps_p_bar < 0.0:
        raise ValueError("plastic strain increment must be non-negative")
    z = (eps_p_bar - params.epsN) / params.SN
    A = params.fN / (params.SN * math.sqrt(2.0 * math.pi)) * math.exp(-0.5 * z * z)
    return A * d_eps_p_bar + params.B * d_eps_p_bar * C_H


def growth_increment(f: float, d_eps_p_kk: float) -> float:
    return (1.0 - f) * d_eps_p_kk


def stress_update(state: PointState, delta_eps, C_H: float, params: GursonParams,
                  elastic: ElasticConstants) -> tuple[PointState, np.ndarray]:
    """Implicit stress update from ``state`` over a mechanical strain increment.

    ``delta_eps`` holds tensor components ``(rr, zz, tt, rz)`` and must already
    exclude hydrogen dilatation. Returns the new state and the 4x4 tangent
    ``dsigma/d(delta_eps)``.
    """
    if state.failed:
        raise ValueError("cannot update a failed point")
    de = np.asarray(delta_eps, dtype=float)
    mp = params.pack(elastic)
    sig = np.empty(4)
    D = np.empty((4, 4))
    status, ep, f, dp, fail = material_point(
        np.asarray(state.sigma, dtype=float), state.eps_p_bar, state.f, -1, de,
        float(C_H), mp, sig, D)
    if status == NOT_CONVERGED:
        raise StressUpdateError("local return map did not converge", state.copy(), de, C_H)
    new = PointState(
        sigma=sig, eps_p_bar=ep, f=f,
        eps_p_trace_accum=state.eps_p_trace_accum + dp,
        C_H_seen=float(C_H), failed=status == FAILED, fail_count=max(fail, 0))
    return new, D


def local_residuals(old: PointState, new: PointState, delta_eps, C_H: float,
                    params: GursonParams, elastic: ElasticConstants) -> np.ndarray:
    """Normalized residuals (yield, normality) of a plastic update, for audits."""
    from .tensor import deviator, invariants, trace

    K, G = elastic.K, elastic.G
    de = np.asarray(delta_eps, dtype=float)
    trial = np.asarray(old.sigma) + K * trace(de) * np.array([1, 1, 1, 0.0]) + 2 * G * deviator(de)
    p_tr, q_tr = invariants(trial)
    p, q = invariants(new.sigma)
    dp = (p_tr - p) / K
    dq = (q_tr - q) / (3.0 * G)
    sf = flow_stress(new.eps_p_bar, C_H, params)
    fs = f_star(new.f, params)
    phi = yield_value(q, p, sf, fs, params)
    b = 1.5 * params.q2 * p / sf
    normality = dp * 2.0 * q / sf - dq * 3.0 * params.q1 * params.q2 * fs * math.sinh(b)
    return np.array([phi, normality])


def uniaxial_stress_path(axial_increments, C_H: float, params: GursonParams,
                         elastic: ElasticConstants, state: PointState | None = None):
    """Drive a point in uniaxial stress along ``zz``.

    The lateral strain increment (rr = tt) is found by Newton so that the
    lateral stress vanishes. Returns the list of states after each increment.
    """
    st = state.copy() if state is not None else PointState.initial(params)
    out = []
    guess = -elastic.nu
    for dez in axial_increments:
        x = guess * dez
        for _ in range(50):
            de = np.array([x, dez, x, 0.0])
            new, D = stress_update(st, de, C_H, params, elastic)
            r = new.sigma[0]
            if abs(r) < 1e-9 * params.sigma0:
                break
            x -= r / (D[0, 0] + D[0, 2])
        else:
            raise StressUpdateError("lateral equilibrium not reached", st, de, C_H)
        if dez != 0.0:
            guess = x / dez
        st = new
        out.append(st)
        if st.failed:
            break
    return out
