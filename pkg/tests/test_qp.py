import numpy as np
import pytest

from oracles import active_set_enumeration, random_feasible_qp
from rpcsim import qp
from rpcsim.errors import InputError


def test_active_bound():
    p = qp.QpProblem(H=[[2.0]], f=[0.0], A_in=[[1.0]], lb_in=[1.0], ub_in=[np.inf])
    r = qp.solve(p)
    assert r.optimal
    assert r.x[0] == pytest.approx(1.0, abs=1e-8)


def test_unconstrained_minimum():
    r = qp.solve(qp.QpProblem(H=np.eye(2), f=[-1.0, -1.0]))
    assert r.optimal
    assert np.allclose(r.x, [1.0, 1.0], atol=1e-6)


def test_equality_kkt_symmetry():
    x = qp.solve_equality_kkt(2 * np.eye(2), np.zeros(2), [[1.0, 1.0]], [2.0],
                              regularization=0.0)
    assert np.allclose(x, [1.0, 1.0], atol=1e-12)


def test_equality_kkt_unconstrained():
    H = np.diag([2.0, 4.0])
    f = np.array([-2.0, -8.0])
    x = qp.solve_equality_kkt(H, f, regularization=0.0)
    assert np.allclose(x, [1.0, 2.0], atol=1e-12)


def test_equality_kkt_agrees_with_solve(rng):
    for _ in range(20):
        n = int(rng.integers(2, 7))
        M = rng.normal(size=(n, n))
        H = M @ M.T + 0.5 * np.eye(n)
        f = rng.normal(size=n)
        A = rng.normal(size=(1, n))
        b = rng.normal(size=1)
        xk = qp.solve_equality_kkt(H, f, A, b, regularization=0.0)
        r = qp.solve(qp.QpProblem(H=H, f=f, A_eq=A, b_eq=b),
                     qp.QpSettings(regularization=0.0))
        assert r.optimal
        assert np.max(np.abs(xk - r.x)) < 1e-9


def test_oracle_equivalence_100_random(rng):
    worst_x = worst_obj = 0.0
    for _ in range(100):
        H, f, A, lb, ub = random_feasible_qp(rng)
        r = qp.solve(qp.QpProblem(H=H, f=f, A_in=A, lb_in=lb, ub_in=ub),
                     qp.QpSettings(regularization=0.0, eps_abs=1e-10,
                                   eps_rel=1e-10))
        assert r.optimal
        xe, obje = active_set_enumeration(H, f, A, lb, ub)
        worst_x = max(worst_x, float(np.max(np.abs(r.x - xe))))
        worst_obj = max(worst_obj, abs(r.objective - obje))
    assert worst_x < 1e-6
    assert worst_obj < 1e-6


def test_constraint_violation_bound(rng):
    s = qp.QpSettings(regularization=0.0)
    for _ in range(30):
        H, f, A, lb, ub = random_feasible_qp(rng)
        r = qp.solve(qp.QpProblem(H=H, f=f, A_in=A, lb_in=lb, ub_in=ub), s)
        assert r.optimal
        ax = A @ r.x
        viol = max(np.max(np.where(np.isfinite(lb), lb - ax, 0.0), initial=0.0),
                   np.max(np.where(np.isfinite(ub), ax - ub, 0.0), initial=0.0))
        assert viol <= 10 * s.eps_abs + 1e-9


def test_objective_beats_random_feasible_points(rng):
    H, f, A, lb, ub = random_feasible_qp(rng)
    r = qp.solve(qp.QpProblem(H=H, f=f, A_in=A, lb_in=lb, ub_in=ub))
    assert r.optimal
    # Sample feasible points by pulling random points toward the solution
    # until every constraint holds.
    for _ in range(1000):
        x = r.x + rng.normal(size=len(f))
        for _ in range(40):
            ax = A @ x
            if np.all(ax >= lb - 1e-9) and np.all(ax <= ub + 1e-9):
                break
            x = 0.5 * (x + r.x)
        obj = 0.5 * x @ H @ x + f @ x
        assert obj >= r.objective - 1e-7


def test_deterministic_bitwise(rng):
    H, f, A, lb, ub = random_feasible_qp(rng)
    p1 = qp.QpProblem(H=H, f=f, A_in=A, lb_in=lb, ub_in=ub)
    p2 = qp.QpProblem(H=H.copy(), f=f.copy(), A_in=A.copy(), lb_in=lb.copy(),
                      ub_in=ub.copy())
    assert qp.solve(p1).x.tobytes() == qp.solve(p2).x.tobytes()


def test_infeasible_is_status_not_exception():
    p = qp.QpProblem(H=[[2.0]], f=[0.0], A_in=[[1.0], [-1.0]],
                     lb_in=[1.0, 1.0], ub_in=[np.inf, np.inf])
    r = qp.solve(p)
    assert r.status == "Infeasible"


def test_input_validation():
    with pytest.raises(InputError):
        qp.QpProblem(H=[[1.0, 0.5], [0.0, 1.0]], f=[0.0, 0.0])  # asymmetric
    with pytest.raises(InputError):
        qp.QpProblem(H=[[1.0]], f=[0.0], A_in=[[1.0]], lb_in=[2.0], ub_in=[1.0])
    with pytest.raises(InputError):
        qp.QpProblem(H=[[np.nan]], f=[0.0])


def test_tight_rows_promoted_to_equalities():
    p = qp.QpProblem(H=np.eye(2), f=[0.0, 0.0], A_in=[[1.0, 1.0]],
                     lb_in=[2.0], ub_in=[2.0])
    r = qp.solve(p)
    assert r.optimal
    assert np.allclose(r.x, [1.0, 1.0], atol=1e-7)


def test_problem_round_trip(tmp_path, rng):
    H, f, A, lb, ub = random_feasible_qp(rng)
    p = qp.QpProblem(H=H, f=f, A_in=A, lb_in=lb, ub_in=ub)
    path = tmp_path / "problem.json"
    qp.save_problem(p, path)
    q2 = qp.load_problem(path)
    assert qp.solve(p).x == pytest.approx(qp.solve(q2).x, abs=1e-12)
