"""Independent oracles used by the tests (kept free of the code under test)."""
import itertools

import numpy as np


def active_set_enumeration(H, f, A, lb, ub, tol=1e-8):
    """Brute-force QP oracle: solve the KKT system for every combination of
    {inactive, at-lower, at-upper} per inequality row and return the
    feasible, dual-feasible candidate with the lowest objective."""
    n = len(f)
    m = len(lb)
    best = None
    for combo in itertools.product((0, 1, 2), repeat=m):
        rows, vals, sides = [], [], []
        ok = True
        for i, c in enumerate(combo):
            if c == 1:
                if not np.isfinite(lb[i]):
                    ok = False
                    break
                rows.append(A[i])
                vals.append(lb[i])
                sides.append(-1)
            elif c == 2:
                if not np.isfinite(ub[i]):
                    ok = False
                    break
                rows.append(A[i])
                vals.append(ub[i])
                sides.append(+1)
        if not ok:
            continue
        ma = len(rows)
        K = np.zeros((n + ma, n + ma))
        K[:n, :n] = H
        if ma:
            Aa = np.array(rows)
            K[:n, n:] = Aa.T
            K[n:, :n] = Aa
        rhs = np.concatenate([-f, np.array(vals)]) if ma else -f
        try:
            sol = np.linalg.solve(K, rhs)
        except np.linalg.LinAlgError:
            continue
        x = sol[:n]
        lam = sol[n:]
        ax = A @ x
        if np.any(ax < lb - tol) or np.any(ax > ub + tol):
            continue
        # Stationarity uses Hx + f + A' lam = 0; a lower-active row needs
        # lam <= 0 and an upper-active row lam >= 0.
        good = True
        for k, side in enumerate(sides):
            if side < 0 and lam[k] > tol:
                good = False
            if side > 0 and lam[k] < -tol:
                good = False
        if not good:
            continue
        obj = 0.5 * x @ H @ x + f @ x
        if best is None or obj < best[1] - 1e-12:
            best = (x, obj)
    return best


def random_feasible_qp(rng, n_max=8, m_max=6):
    """A random strictly convex QP guaranteed feasible around a random point."""
    n = int(rng.integers(2, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    M = rng.normal(size=(n, n))
    H = M @ M.T + 0.1 * np.eye(n)
    f = rng.normal(size=n)
    A = rng.normal(size=(m, n))
    mid = A @ (rng.normal(size=n) * 0.3)
    lb = mid - rng.uniform(0.05, 1.0, size=m)
    ub = mid + rng.uniform(0.05, 1.0, size=m)
    for i in range(m):
        r = rng.random()
        if r < 0.2:
            lb[i] = -np.inf
        elif r < 0.3:
            ub[i] = np.inf
    return H, f, A, lb, ub
