"""Dense convex quadratic programming.

    minimize    0.5 x'Hx + f'x
    subject to  A_eq x = b_eq
                lb <= A_in x <= ub      (one-sided rows use +-inf)

Solved with a primal-dual interior-point method (Mehrotra predictor-
corrector) over dense matrices.  Desk-scale problem sizes (n <= ~200) make
dense LU factorization of the condensed KKT system the right tool.  The
solver is fully deterministic: identical inputs give bit-identical output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import InputError, NumericalError

_INF = np.inf


@dataclass
class QpSettings:
    max_iter: int = 50
    eps_abs: float = 1e-9
    eps_rel: float = 1e-9
    regularization: float = 1e-8   # Tikhonov term added to H


@dataclass
class QpProblem:
    H: np.ndarray
    f: np.ndarray
    A_eq: np.ndarray = None
    b_eq: np.ndarray = None
    A_in: np.ndarray = None
    lb_in: np.ndarray = None
    ub_in: np.ndarray = None

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.f = np.asarray(self.f, dtype=float).ravel()
        n = len(self.f)
        if self.H.shape != (n, n):
            raise InputError(f"H shape {self.H.shape} does not match f length {n}")
        if np.max(np.abs(self.H - self.H.T), initial=0.0) > 1e-10:
            raise InputError("H must be symmetric to 1e-10")
        if self.A_eq is None:
            self.A_eq = np.zeros((0, n))
            self.b_eq = np.zeros(0)
        else:
            self.A_eq = np.asarray(self.A_eq, dtype=float).reshape(-1, n)
            self.b_eq = np.asarray(self.b_eq, dtype=float).ravel()
            if len(self.b_eq) != self.A_eq.shape[0]:
                raise InputError("A_eq/b_eq dimension mismatch")
        if self.A_in is None:
            self.A_in = np.zeros((0, n))
            self.lb_in = np.zeros(0)
            self.ub_in = np.zeros(0)
        else:
            self.A_in = np.asarray(self.A_in, dtype=float).reshape(-1, n)
            self.lb_in = np.asarray(self.lb_in, dtype=float).ravel()
            self.ub_in = np.asarray(self.ub_in, dtype=float).ravel()
            if not (len(self.lb_in) == len(self.ub_in) == self.A_in.shape[0]):
                raise InputError("A_in/lb/ub dimension mismatch")
            if np.any(self.lb_in > self.ub_in):
                raise InputError("lb_in must be <= ub_in elementwise")
        for arr in (self.H, self.f, self.A_eq, self.b_eq, self.A_in):
            if not np.all(np.isfinite(arr)):
                raise InputError("non-finite problem data")
        if np.any(np.isnan(self.lb_in)) or np.any(np.isnan(self.ub_in)):
            raise InputError("NaN bounds")

    @property
    def n(self):
        return len(self.f)


def problem_to_dict(problem: "QpProblem") -> dict:
    def enc(a):
        return np.asarray(a).tolist()
    return {
        "H": enc(problem.H), "f": enc(problem.f),
        "A_eq": enc(problem.A_eq), "b_eq": enc(problem.b_eq),
        "A_in": enc(problem.A_in),
        "lb_in": [None if not np.isfinite(v) else float(v) for v in problem.lb_in],
        "ub_in": [None if not np.isfinite(v) else float(v) for v in problem.ub_in],
    }


def problem_from_dict(doc) -> "QpProblem":
    lb = np.array([-np.inf if v is None else v for v in doc["lb_in"]]) \
        if doc["lb_in"] else None
    ub = np.array([np.inf if v is None else v for v in doc["ub_in"]]) \
        if doc["ub_in"] else None
    A_in = np.asarray(doc["A_in"]) if len(doc["A_in"]) else None
    A_eq = np.asarray(doc["A_eq"]) if len(doc["A_eq"]) else None
    b_eq = np.asarray(doc["b_eq"]) if A_eq is not None else None
    return QpProblem(H=np.asarray(doc["H"]), f=np.asarray(doc["f"]),
                     A_eq=A_eq, b_eq=b_eq, A_in=A_in, lb_in=lb, ub_in=ub)


def save_problem(problem: "QpProblem", path):
    import json
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(problem), fh)


def load_problem(path) -> "QpProblem":
    import json
    with open(path, "r", encoding="utf-8") as fh:
        return problem_from_dict(json.load(fh))


@dataclass
class QpSolution:
    x: np.ndarray
    status: str                    # "Optimal" | "MaxIterations" | "Infeasible"
    iterations: int
    primal_residual: float
    dual_residual: float
    y_eq: np.ndarray = field(default=None, repr=False)
    z_in: np.ndarray = field(default=None, repr=False)  # z_u - z_l per row
    objective: float = math.nan

    @property
    def optimal(self):
        return self.status == "Optimal"


def _solve_refined(K, rhs, steps=2):
    """LU solve with iterative refinement; min-norm fallback when singular.

    Singular-but-consistent systems (e.g. force distributions with internal
    null modes) get the deterministic least-squares/min-norm solution.
    """
    import warnings
    from scipy.linalg import LinAlgWarning
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        try:
            fact = lu_factor(K)
            x = lu_solve(fact, rhs)
            for _ in range(steps):
                x = x + lu_solve(fact, rhs - K @ x)
        except (np.linalg.LinAlgError, ValueError):
            x = np.full(len(rhs), np.nan)
    scale = float(np.max(np.abs(rhs), initial=1.0)) + 1.0
    if not np.all(np.isfinite(x)) or \
            float(np.max(np.abs(rhs - K @ x), initial=0.0)) > 1e-8 * scale:
        x, *_ = np.linalg.lstsq(K, rhs, rcond=1e-12)
        for _ in range(steps):
            dx, *_ = np.linalg.lstsq(K, rhs - K @ x, rcond=1e-12)
            x = x + dx
    return x


def solve_equality_kkt(H, f, A_eq=None, b_eq=None, regularization=1e-8):
    """One linear solve for the equality-constrained stationary point."""
    H = np.asarray(H, dtype=float)
    f = np.asarray(f, dtype=float).ravel()
    n = len(f)
    try:
        if A_eq is None or len(np.atleast_2d(A_eq)) == 0:
            return _solve_refined(H + regularization * np.eye(n), -f)
        A = np.asarray(A_eq, dtype=float).reshape(-1, n)
        b = np.asarray(b_eq, dtype=float).ravel()
        m = A.shape[0]
        K = np.zeros((n + m, n + m))
        K[:n, :n] = H + regularization * np.eye(n)
        K[:n, n:] = A.T
        K[n:, :n] = A
        K[n:, n:] = -regularization * np.eye(m)
        sol = _solve_refined(K, np.concatenate([-f, b]))
    except (np.linalg.LinAlgError, ValueError):
        raise NumericalError("singular KKT system after regularization")
    if not np.all(np.isfinite(sol)):
        raise NumericalError("KKT solve produced non-finite values")
    return sol[:n]


def _polish(H, f, A_eq, b_eq, A, lb, ub, has_lb, has_ub, zl, zu, gl, gu):
    """Refine the interior-point iterate via an exact active-set KKT solve.

    Returns (x, y, zl, zu) when the polished point verifies the KKT
    conditions better than the iterate, else None.
    """
    m_e = A_eq.shape[0]
    act_l = has_lb & (zl > gl)
    act_u = has_ub & (zu > gu) & ~act_l
    rows = [A_eq] if m_e else []
    vals = [b_eq] if m_e else []
    if np.any(act_l):
        rows.append(A[act_l])
        vals.append(lb[act_l])
    if np.any(act_u):
        rows.append(A[act_u])
        vals.append(ub[act_u])
    if rows:
        A_act = np.vstack(rows)
        b_act = np.concatenate(vals)
    else:
        A_act = np.zeros((0, len(f)))
        b_act = np.zeros(0)
    n = len(f)
    ma = A_act.shape[0]
    K = np.zeros((n + ma, n + ma))
    K[:n, :n] = H
    K[:n, n:] = A_act.T
    K[n:, :n] = A_act
    K[n:, n:] = -1e-13 * np.eye(ma)
    try:
        sol = _solve_refined(K, np.concatenate([-f, b_act]))
    except (np.linalg.LinAlgError, ValueError):
        return None
    xp = sol[:n]
    lam = sol[n:]
    if not np.all(np.isfinite(xp)):
        return None
    axp = A @ xp
    tol = 1e-9 * (1.0 + float(np.max(np.abs(axp), initial=0.0)))
    if np.any(axp < lb - tol) or np.any(axp > ub + tol):
        return None
    # Multiplier signs: with stationarity Hx + f + A_act' lam = 0, a
    # lower-active row needs lam <= 0, an upper-active row lam >= 0.
    k = m_e
    nl = int(np.sum(act_l))
    nu = int(np.sum(act_u))
    lam_l = lam[k:k + nl]
    lam_u = lam[k + nl:k + nl + nu]
    if np.any(lam_l > 1e-7) or np.any(lam_u < -1e-7):
        return None
    yp = lam[:m_e]
    zlp = np.zeros_like(zl)
    zup = np.zeros_like(zu)
    zlp[act_l] = np.maximum(-lam_l, 0.0)
    zup[act_u] = np.maximum(lam_u, 0.0)
    return xp, yp, zlp, zup


def solve(problem: QpProblem, settings: QpSettings = None, x0=None) -> QpSolution:
    """Interior-point solve; never raises on infeasibility (status instead)."""
    s = settings or QpSettings()
    n = problem.n
    H = 0.5 * (problem.H + problem.H.T) + s.regularization * np.eye(n)
    f = problem.f

    # Rows with lb == ub act as equalities; the interior-point slacks need
    # strictly separated bounds.
    tight = problem.ub_in - problem.lb_in < 1e-14
    A_eq = problem.A_eq
    b_eq = problem.b_eq
    if np.any(tight):
        A_eq = np.vstack([A_eq, problem.A_in[tight]])
        b_eq = np.concatenate([b_eq, problem.lb_in[tight]])
    A = problem.A_in[~tight]
    lb = problem.lb_in[~tight]
    ub = problem.ub_in[~tight]
    m_e = A_eq.shape[0]
    m_i = A.shape[0]

    if m_i == 0:
        x = solve_equality_kkt(H, f, A_eq if m_e else None, b_eq, 0.0)
        y = np.zeros(m_e)
        if m_e:
            y, *_ = np.linalg.lstsq(A_eq.T, -(H @ x + f), rcond=None)
        rd = float(np.max(np.abs(H @ x + f + (A_eq.T @ y if m_e else 0.0)), initial=0.0))
        rp = float(np.max(np.abs(A_eq @ x - b_eq), initial=0.0)) if m_e else 0.0
        status = "Optimal" if (rd <= 1e-6 and rp <= 1e-6) else "MaxIterations"
        return QpSolution(x, status, 1, rp, rd, y_eq=y, z_in=np.zeros(0),
                          objective=float(0.5 * x @ problem.H @ x + f @ x))

    has_lb = np.isfinite(lb)
    has_ub = np.isfinite(ub)
    AT = A.T

    # Fast path: if the equality-constrained stationary point already
    # satisfies every inequality strictly, it is the optimum.
    try:
        x_eq = solve_equality_kkt(H, f, A_eq if m_e else None, b_eq, 0.0)
    except NumericalError:
        x_eq = None
    if x_eq is not None:
        ax = A @ x_eq
        margin = 1e-11 * (1.0 + np.abs(ax))
        if (np.all(ax >= lb + margin) if np.any(has_lb) else True) and \
           (np.all(ax <= ub - margin) if np.any(has_ub) else True):
            y = np.zeros(m_e)
            if m_e:
                y, *_ = np.linalg.lstsq(A_eq.T, -(H @ x_eq + f), rcond=None)
            rd = H @ x_eq + f + (A_eq.T @ y if m_e else 0.0)
            rp = float(np.max(np.abs(A_eq @ x_eq - b_eq), initial=0.0)) if m_e else 0.0
            if float(np.max(np.abs(rd), initial=0.0)) <= max(1e-6, s.eps_abs * 1e3):
                return QpSolution(
                    x_eq, "Optimal", 1, rp, float(np.max(np.abs(rd), initial=0.0)),
                    y_eq=y, z_in=np.zeros(m_i),
                    objective=float(0.5 * x_eq @ problem.H @ x_eq + f @ x_eq))

    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    y = np.zeros(m_e)
    sl = A @ x
    span = np.where(has_lb & has_ub, np.minimum((ub - lb) * 0.5, 1.0), 1.0)
    sl = np.where(has_lb, np.maximum(sl, lb + span * 0.5), sl)
    sl = np.where(has_ub, np.minimum(sl, ub - span * 0.5), sl)
    zl = np.where(has_lb, 1.0, 0.0)
    zu = np.where(has_ub, 1.0, 0.0)

    f_scale = 1.0 + max(
        float(np.max(np.abs(f), initial=0.0)),
        float(np.max(np.abs(b_eq), initial=0.0)),
    )
    n_compl = max(int(np.sum(has_lb)) + int(np.sum(has_ub)), 1)
    tau = 0.995
    iters = 0
    status = "MaxIterations"

    def residuals():
        w = zu - zl
        rd = H @ x + f + AT @ w
        if m_e:
            rd = rd + A_eq.T @ y
        re = A_eq @ x - b_eq if m_e else np.zeros(0)
        ax = A @ x
        ri = ax - sl
        viol_l = np.where(has_lb, np.maximum(lb - ax, 0.0), 0.0)
        viol_u = np.where(has_ub, np.maximum(ax - ub, 0.0), 0.0)
        rp = max(
            float(np.max(np.abs(re), initial=0.0)),
            float(np.max(viol_l, initial=0.0)),
            float(np.max(viol_u, initial=0.0)),
        )
        return rd, re, ri, rp

    for iters in range(1, s.max_iter + 1):
        gl = np.where(has_lb, sl - lb, 1.0)
        gu = np.where(has_ub, ub - sl, 1.0)
        gl = np.maximum(gl, 1e-14)
        gu = np.maximum(gu, 1e-14)
        mu = (float(zl[has_lb] @ gl[has_lb]) + float(zu[has_ub] @ gu[has_ub])) / n_compl

        rd, re, ri, rp = residuals()
        rd_inf = float(np.max(np.abs(rd), initial=0.0))
        compl_inf = max(
            float(np.max(np.abs(zl * gl), initial=0.0) if np.any(has_lb) else 0.0),
            float(np.max(np.abs(zu * gu), initial=0.0) if np.any(has_ub) else 0.0),
        )
        tol_d = s.eps_abs + s.eps_rel * f_scale
        if rd_inf <= tol_d and rp <= s.eps_abs + s.eps_rel and compl_inf <= 10 * tol_d:
            status = "Optimal"
            break

        # Crude infeasibility certificate: duals blow up while the primal
        # residual refuses to move.
        dual_norm = max(
            float(np.max(np.abs(y), initial=0.0)),
            float(np.max(zl, initial=0.0)),
            float(np.max(zu, initial=0.0)),
        )
        if dual_norm > 1e9 and rp > 1e3 * s.eps_abs:
            status = "Infeasible"
            break

        D = zl / gl * has_lb + zu / gu * has_ub
        M = H + (A.T * D) @ A
        K = np.zeros((n + m_e, n + m_e))
        K[:n, :n] = M
        if m_e:
            K[:n, n:] = A_eq.T
            K[n:, :n] = A_eq
            K[n:, n:] = -1e-12 * np.eye(m_e)
        try:
            fact = lu_factor(K)
        except np.linalg.LinAlgError:
            status = "MaxIterations"
            break

        def kkt_step(rl, ru):
            # rl, ru are the complementarity right-hand sides.
            c0 = np.where(has_ub, ru / gu, 0.0) - np.where(has_lb, rl / gl, 0.0)
            rhs = np.concatenate([
                -(rd + A.T @ (c0 + D * ri)),
                -re if m_e else np.zeros(0),
            ])
            sol = lu_solve(fact, rhs)
            dx = sol[:n]
            dy = sol[n:]
            ds = A @ dx + ri
            dzl = np.where(has_lb, (rl - zl * ds) / gl, 0.0)
            dzu = np.where(has_ub, (ru + zu * ds) / gu, 0.0)
            return dx, dy, ds, dzl, dzu

        # Predictor (affine) step.
        rl_aff = -(zl * gl)
        ru_aff = -(zu * gu)
        dx, dy, ds, dzl, dzu = kkt_step(rl_aff, ru_aff)

        def max_step(v, dv, active):
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where((dv < 0) & active, -v / dv, np.inf)
            m = ratio.min() if len(ratio) else 1.0
            return m if m < 1.0 else 1.0

        a_p = min(max_step(gl, ds, has_lb), max_step(gu, -ds, has_ub))
        a_d = min(max_step(zl, dzl, has_lb), max_step(zu, dzu, has_ub))
        gl_a = gl + a_p * ds
        gu_a = gu - a_p * ds
        zl_a = zl + a_d * dzl
        zu_a = zu + a_d * dzu
        mu_aff = (float(zl_a[has_lb] @ gl_a[has_lb]) +
                  float(zu_a[has_ub] @ gu_a[has_ub])) / n_compl
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.1

        # Corrector step.
        rl = -(zl * gl) - dzl * ds + sigma * mu
        ru = -(zu * gu) + dzu * ds + sigma * mu
        rl = np.where(has_lb, rl, 0.0)
        ru = np.where(has_ub, ru, 0.0)
        dx, dy, ds, dzl, dzu = kkt_step(rl, ru)

        a_p = tau * min(max_step(gl, ds, has_lb), max_step(gu, -ds, has_ub))
        a_d = tau * min(max_step(zl, dzl, has_lb), max_step(zu, dzu, has_ub))
        a_p = min(a_p, 1.0)
        a_d = min(a_d, 1.0)

        x = x + a_p * dx
        sl = sl + a_p * ds
        y = y + a_d * dy
        zl = np.where(has_lb, zl + a_d * dzl, 0.0)
        zu = np.where(has_ub, zu + a_d * dzu, 0.0)

    if status == "Optimal":
        polished = _polish(H, f, A_eq, b_eq, A, lb, ub,
                           has_lb, has_ub, zl, zu, gl, gu)
        if polished is not None:
            x, y, zl, zu = polished

    rd, re, ri, rp = residuals()
    rd_inf = float(np.max(np.abs(rd), initial=0.0))
    if status == "MaxIterations" and rp > max(1e-4, 1e3 * s.eps_abs):
        # Could not reach the feasible set at all.
        dual_norm = max(
            float(np.max(np.abs(y), initial=0.0)),
            float(np.max(zl, initial=0.0)),
            float(np.max(zu, initial=0.0)),
        )
        if dual_norm > 1e6:
            status = "Infeasible"
    return QpSolution(
        x=x, status=status, iterations=iters,
        primal_residual=rp, dual_residual=rd_inf,
        y_eq=y, z_in=zu - zl,
        objective=float(0.5 * x @ problem.H @ x + f @ x),
    )
