"""Compiled per-tick dynamics core.

Same algorithms as dynamics.py (forward kinematics + velocities, composite
rigid body mass matrix, Newton-Euler bias/gravity, CoM aggregation) over
flat arrays, jitted with numba.  dynamics.py falls back to the pure-numpy
path when numba is unavailable.
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:              # pragma: no cover - environment dependent
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f
        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def _xmat_to_child(R, p):
    X = np.zeros((6, 6))
    RT = R.T
    X[:3, :3] = RT
    X[3:, 3:] = RT
    S = np.zeros((3, 3))
    S[0, 1] = -p[2]
    S[0, 2] = p[1]
    S[1, 0] = p[2]
    S[1, 2] = -p[0]
    S[2, 0] = -p[1]
    S[2, 1] = p[0]
    X[3:, :3] = -(RT @ S)
    return X


@njit(cache=True)
def fk_dynamics(parent, jtype, vindex, jcoord, axis, K, K2, offR, offp,
                I6, mass, lcom, baseR, basep, basetw, qj, vj, gz, n_v,
                floating):
    """Returns (R, p, relR, relp, X, v, avp, A, bias_total, bias_gravity,
    com_pos, com_vel)."""
    n = parent.shape[0]
    R = np.zeros((n, 3, 3))
    P = np.zeros((n, 3))
    relR = np.zeros((n, 3, 3))
    relp = np.zeros((n, 3))
    X = np.zeros((n, 6, 6))
    V = np.zeros((n, 6))
    AVP = np.zeros((n, 6))
    INC = np.zeros((n, 6))

    # --- forward kinematics + velocities
    for i in range(n):
        if parent[i] < 0:
            if floating:
                R[i] = baseR
                P[i] = basep
                V[i] = basetw
            else:
                R[i] = np.eye(3)
            relR[i] = R[i]
            relp[i] = P[i]
            continue
        par = parent[i]
        if jtype[i] == 1:     # revolute
            th = qj[jcoord[i]]
            Rj = np.sin(th) * K[i] + (1.0 - np.cos(th)) * K2[i]
            Rj[0, 0] += 1.0
            Rj[1, 1] += 1.0
            Rj[2, 2] += 1.0
            rR = offR[i] @ Rj
            rp = offp[i]
        elif jtype[i] == 2:   # prismatic
            rR = offR[i].copy()
            rp = offp[i] + rR @ (axis[i] * qj[jcoord[i]])
        else:                 # fixed
            rR = offR[i].copy()
            rp = offp[i]
        relR[i] = rR
        relp[i] = rp
        R[i] = R[par] @ rR
        P[i] = R[par] @ rp + P[par]

        RT = rR.T
        vp = V[par]
        ap = AVP[par]
        w = RT @ vp[:3]
        vlin = RT @ (vp[3:] + _cross(vp[:3], rp))
        aw = RT @ ap[:3]
        alin = RT @ (ap[3:] + _cross(ap[:3], rp))
        vv = np.empty(6)
        vv[:3] = w
        vv[3:] = vlin
        aa = np.empty(6)
        aa[:3] = aw
        aa[3:] = alin
        if jtype[i] == 1:
            vj_ang = axis[i] * vj[jcoord[i]]
            inc = np.zeros(6)
            inc[:3] = _cross(vv[:3], vj_ang)
            inc[3:] = _cross(vv[3:], vj_ang)
            aa += inc
            vv[:3] = vv[:3] + vj_ang
            INC[i] = inc
        elif jtype[i] == 2:
            vj_lin = axis[i] * vj[jcoord[i]]
            inc = np.zeros(6)
            inc[3:] = _cross(vv[:3], vj_lin)
            aa += inc
            vv[3:] = vv[3:] + vj_lin
            INC[i] = inc
        V[i] = vv
        AVP[i] = aa

    for i in range(1, n):
        X[i] = _xmat_to_child(relR[i], relp[i])

    # --- composite rigid body algorithm
    Ic = np.zeros((n, 6, 6))
    for i in range(n):
        Ic[i] = I6[i]
    A = np.zeros((n_v, n_v))
    for i in range(n - 1, -1, -1):
        if parent[i] >= 0:
            Ic[parent[i]] += X[i].T @ Ic[i] @ X[i]
        if jtype[i] == 3:
            continue
        if jtype[i] == 0:
            A[0:6, 0:6] = Ic[i]
            continue
        vi = vindex[i]
        S = np.zeros(6)
        if jtype[i] == 1:
            S[:3] = axis[i]
        else:
            S[3:] = axis[i]
        F = Ic[i] @ S
        A[vi, vi] = S @ F
        j = i
        while parent[j] >= 0:
            F = X[j].T @ F
            j = parent[j]
            if jtype[j] == 0:
                A[0:6, vi] = F
                A[vi, 0:6] = F
            elif jtype[j] != 3:
                if jtype[j] == 1:
                    val = F[0] * axis[j][0] + F[1] * axis[j][1] + F[2] * axis[j][2]
                else:
                    val = F[3] * axis[j][0] + F[4] * axis[j][1] + F[5] * axis[j][2]
                A[vindex[j], vi] = val
                A[vi, vindex[j]] = val

    # --- Newton-Euler bias (two columns: with velocity, gravity-only)
    a2 = np.zeros((n, 6, 2))
    f2 = np.zeros((n, 6, 2))
    for i in range(n):
        if parent[i] < 0:
            gl = R[i].T @ np.array([0.0, 0.0, -gz])
            a2[i, 3:, 0] = -gl
            a2[i, 3:, 1] = -gl
        else:
            a2[i] = X[i] @ a2[parent[i]]
            a2[i, :, 0] += INC[i]
        f2[i] = I6[i] @ a2[i]
        v = V[i]
        Iv = I6[i] @ v
        f2[i, :3, 0] += _cross(v[:3], Iv[:3]) + _cross(v[3:], Iv[3:])
        f2[i, 3:, 0] += _cross(v[:3], Iv[3:])
    tau = np.zeros((n_v, 2))
    for i in range(n - 1, -1, -1):
        if jtype[i] == 0:
            tau[0:6] = f2[i]
        elif jtype[i] != 3:
            if jtype[i] == 1:
                for col in range(2):
                    tau[vindex[i], col] = (axis[i][0] * f2[i, 0, col]
                                           + axis[i][1] * f2[i, 1, col]
                                           + axis[i][2] * f2[i, 2, col])
            else:
                for col in range(2):
                    tau[vindex[i], col] = (axis[i][0] * f2[i, 3, col]
                                           + axis[i][1] * f2[i, 4, col]
                                           + axis[i][2] * f2[i, 5, col])
        if parent[i] >= 0:
            f2[parent[i]] += X[i].T @ f2[i]

    # --- CoM aggregation
    total = 0.0
    cp = np.zeros(3)
    cv = np.zeros(3)
    for i in range(n):
        m = mass[i]
        if m == 0.0:
            continue
        total += m
        cw = R[i] @ lcom[i] + P[i]
        ww = R[i] @ V[i, :3]
        vo = R[i] @ V[i, 3:]
        vc = vo + _cross(ww, cw - P[i])
        cp += m * cw
        cv += m * vc
    if total > 0.0:
        cp /= total
        cv /= total

    return R, P, relR, relp, X, V, AVP, A, tau[:, 0], tau[:, 1], cp, cv
