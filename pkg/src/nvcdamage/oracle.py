"""Explicit reference integrator for the porous plasticity model.

Each strain increment is split into ``substeps`` equal parts. Within a part the
flow direction is frozen at the start (or at the elastic-plastic crossing) and
the plastic multiplier is found by bisection so that the end state sits on the
yield surface. Nothing here is shared with the implicit update in
:mod:`nvcdamage.gurson`, which makes it usable as an independent check.
"""
from __future__ import annotations

import math

import numpy as np

from ._jit import kernel
from .gurson import HYPERBOLIC_CAP, GursonParams, PointState
from .tensor import ElasticConstants

_BISECT_ITERS = 80


@kernel
def _phi(sig, ep, f, CH, prm):
    # prm: K, G, q1, q2, q3, fN, epsN, SN, sig0, eps0, n, Cc, B, fc, fF
    p = (sig[0] + sig[1] + sig[2]) / 3.0
    s0 = sig[0] - p
    s1 = sig[1] - p
    s2 = sig[2] - p
    q = math.sqrt(1.5 * (s0 * s0 + s1 * s1 + s2 * s2 + 2.0 * sig[3] * sig[3]))
    crel = min(max(CH / prm[11], 0.0), 1.0)
    sf = prm[8] * (1.0 + ep / prm[9] * (1.0 - crel)) ** prm[10]
    fc = prm[13]
    fF = prm[14]
    fu = 1.0 / prm[2]
    if f <= fc:
        fs = f
    elif f >= fF:
        fs = fu
    else:
        fs = fc + (fu - fc) / (fF - fc) * (f - fc)
    val = (q / sf) ** 2 - (1.0 + prm[4] * fs * fs)
    if fs > 0.0:
        b = min(max(1.5 * prm[3] * p / sf, -HYPERBOLIC_CAP), HYPERBOLIC_CAP)
        val += 2.0 * prm[2] * fs * math.cosh(b)
    return val, p, q, sf, fs


@kernel
def _hooke(de, K, G, out):
    tr = de[0] + de[1] + de[2]
    for i in range(3):
        out[i] = K * tr + 2.0 * G * (de[i] - tr / 3.0)
    out[3] = 2.0 * G * de[3]


@kernel
def _plastic_trial(sig_tr, sig_c, ep, f, N, trN, lam, CH, prm, out):
    """State after removing plastic strain ``lam * N`` from the trial.

    ``trN`` is the trace of ``N``, passed separately so that a void-free
    point cannot pick up volume change from round-off.
    """
    K = prm[0]
    G = prm[1]
    depl = np.empty(4)
    for i in range(4):
        depl[i] = lam * N[i]
    corr = np.empty(4)
    _hooke(depl, K, G, corr)
    for i in range(4):
        out[i] = sig_tr[i] - corr[i]
    _v, _p, _q, sf, _fs = _phi(sig_c, ep, f, CH, prm)
    work = sig_c[0] * depl[0] + sig_c[1] * depl[1] + sig_c[2] * depl[2] + 2.0 * sig_c[3] * depl[3]
    d_ep = work / ((1.0 - f) * sf)
    if d_ep < 0.0:
        d_ep = 0.0
    ekk = lam * trN
    z = (ep - prm[6]) / prm[7]
    A = prm[5] / (prm[7] * math.sqrt(2.0 * math.pi)) * math.exp(-0.5 * z * z)
    df = (1.0 - f) * ekk + (A + prm[12] * CH) * d_ep
    return ep + d_ep, f + df, ekk


@kernel
def _substep(sig, ep, f, dsub, CH, prm, out_sig):
    K = prm[0]
    G = prm[1]
    dsig = np.empty(4)
    _hooke(dsub, K, G, dsig)
    sig_tr = sig + dsig
    v_tr, _p, _q, _sf, _fs = _phi(sig_tr, ep, f, CH, prm)
    if v_tr <= 0.0:
        for i in range(4):
            out_sig[i] = sig_tr[i]
        return ep, f, 0.0
    # contact point: fraction of the elastic step that reaches the surface
    v0, _p, _q, _sf, _fs = _phi(sig, ep, f, CH, prm)
    sig_c = sig.copy()
    if v0 < 0.0:
        lo = 0.0
        hi = 1.0
        for _k in range(_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            for i in range(4):
                sig_c[i] = sig[i] + mid * dsig[i]
            vm, _p, _q, _sf, _fs = _phi(sig_c, ep, f, CH, prm)
            if vm > 0.0:
                hi = mid
            else:
                lo = mid
        for i in range(4):
            sig_c[i] = sig[i] + lo * dsig[i]
    # flow direction dPhi/dsigma at the contact point (tensor components)
    _v, p, q, sf, fs = _phi(sig_c, ep, f, CH, prm)
    b = min(max(1.5 * prm[3] * p / sf, -HYPERBOLIC_CAP), HYPERBOLIC_CAP)
    dpdp = 3.0 * prm[2] * prm[3] * fs / sf * math.sinh(b)
    dpdq = 2.0 * q / (sf * sf)
    N = np.empty(4)
    for i in range(3):
        N[i] = dpdp / 3.0
        if q > 0.0:
            N[i] += dpdq * 1.5 * (sig_c[i] - p) / q
    N[3] = 0.0
    if q > 0.0:
        N[3] = dpdq * 1.5 * sig_c[3] / q
    trial = np.empty(4)
    hi = 1.0e-12
    for _k in range(200):
        ep1, f1, _e = _plastic_trial(sig_tr, sig_c, ep, f, N, dpdp, hi, CH, prm, trial)
        vh, _p, _q, _sf, _fs = _phi(trial, ep1, f1, CH, prm)
        if vh < 0.0:
            break
        hi *= 2.0
    lo = 0.0
    for _k in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        ep1, f1, _e = _plastic_trial(sig_tr, sig_c, ep, f, N, dpdp, mid, CH, prm, trial)
        vm, _p, _q, _sf, _fs = _phi(trial, ep1, f1, CH, prm)
        if vm > 0.0:
            lo = mid
        else:
            hi = mid
    ep1, f1, ekk = _plastic_trial(sig_tr, sig_c, ep, f, N, dpdp, 0.5 * (lo + hi), CH, prm, out_sig)
    return ep1, f1, ekk


@kernel
def _integrate(sig0, ep0, f0, path, CH, prm, substeps):
    sig = sig0.copy()
    ep = ep0
    f = f0
    ekk_acc = 0.0
    out = np.empty(4)
    dsub = np.empty(4)
    for k in range(path.shape[0]):
        for i in range(4):
            dsub[i] = path[k, i] / substeps
        for _s in range(substeps):
            ep, f, ekk = _substep(sig, ep, f, dsub, CH, prm, out)
            ekk_acc += ekk
            for i in range(4):
                sig[i] = out[i]
    return sig, ep, f, ekk_acc


def oracle_integrate(state: PointState, strain_path, C_H: float, substeps: int,
                     params: GursonParams, elastic: ElasticConstants) -> PointState:
    """Integrate ``strain_path`` (sequence of 4-component increments) explicitly."""
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    path = np.asarray(strain_path, dtype=float).reshape(-1, 4)
    if path.shape[0] == 0:
        return state.copy()
    prm = params.pack(elastic)
    sig, ep, f, ekk = _integrate(np.asarray(state.sigma, dtype=float), state.eps_p_bar,
                                 state.f, path, float(C_H), prm, int(substeps))
    if not np.all(np.isfinite(sig)):
        raise FloatingPointError("oracle integration overflowed")
    return PointState(sigma=sig, eps_p_bar=ep, f=f,
                      eps_p_trace_accum=state.eps_p_trace_accum + ekk,
                      C_H_seen=float(C_H), failed=f >= params.fF)
