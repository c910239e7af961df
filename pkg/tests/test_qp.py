import cvxpy as cp
import numpy as np
import pytest

from risisac.qp import (
    INFEASIBLE, OPTIMAL, ConeQpProblem, lift_hermitian, solve_cone_qp, solve_maxmin_margin,
    to_complex, to_real,
)

from conftest import crandn


def cvx_reference(F, ridge, q, H, gamma, b):
    """Interior-point solution with ``Q = F F^H + ridge I``."""
    n = q.size
    x = cp.Variable(n, complex=True)
    obj = (cp.sum_squares(F.conj().T @ x) + ridge * cp.sum_squares(x)
           + cp.real(cp.sum(cp.multiply(np.conj(q), x))))
    cons = [cp.abs(x) <= b]
    if H is not None and len(gamma):
        cons.append(cp.real(H @ x) >= gamma)
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver=cp.CLARABEL)
    return prob.value, x.value


def test_lifting_roundtrip():
    rng = np.random.default_rng(0)
    x = crandn(rng, 5)
    np.testing.assert_array_equal(to_complex(to_real(x)), x)
    A = crandn(rng, 5, 5)
    Q = A @ A.conj().T
    assert to_real(x) @ lift_hermitian(Q) @ to_real(x) == pytest.approx(np.vdot(x, Q @ x).real)


@pytest.mark.parametrize("seed", range(8))
def test_matches_interior_point_oracle(seed):
    rng = np.random.default_rng(seed)
    n, m = 6, 4
    F = crandn(rng, n, 2)
    Q = F @ F.conj().T + 0.1 * np.eye(n)
    q = 3 * crandn(rng, n)
    H = crandn(rng, m, n)
    gamma = 0.2 * rng.standard_normal(m)
    b = 1.0
    ref_val, _ = cvx_reference(F, 0.1, q, H, gamma, b)
    sol = solve_cone_qp(ConeQpProblem(n=n, Q=Q, q=q, H=H, gamma=gamma, radius=b))
    assert sol.status == OPTIMAL
    assert sol.violation <= 1e-6
    assert sol.objective == pytest.approx(ref_val, abs=1e-5 * max(1, abs(ref_val)))


def test_linear_objective_and_factor_form():
    rng = np.random.default_rng(3)
    n = 5
    q = crandn(rng, n)
    # pure linear objective: optimum is -b |q_j| per coordinate with no halfspaces
    sol = solve_cone_qp(ConeQpProblem(n=n, q=q, radius=2.0))
    assert sol.objective == pytest.approx(-2.0 * np.sum(np.abs(q)), rel=1e-5)
    F = crandn(rng, n, 1)
    s1 = solve_cone_qp(ConeQpProblem(n=n, Q_factor=F, q=q, radius=1.0))
    s2 = solve_cone_qp(ConeQpProblem(n=n, Q=F @ F.conj().T, q=q, radius=1.0))
    assert s1.objective == pytest.approx(s2.objective, rel=1e-5, abs=1e-7)


def test_disc_example():
    # minimise -Re{x} subject to |x| <= 1 -> x = 1
    sol = solve_cone_qp(ConeQpProblem(n=1, q=np.array([-2.0 + 0j]), radius=1.0))
    assert sol.point[0] == pytest.approx(1.0, abs=1e-6)


def test_infeasible_detected():
    # Re{x} >= 2 with |x| <= 1
    prob = ConeQpProblem(n=1, Q=np.eye(1), H=np.ones((1, 1)), gamma=np.array([2.0]), radius=1.0)
    assert solve_cone_qp(prob).status == INFEASIBLE


def test_problem_validation():
    with pytest.raises(ValueError):
        ConeQpProblem(n=2, radius=0.0)
    with pytest.raises(ValueError):
        ConeQpProblem(n=2, rho=-1.0)
    with pytest.raises(ValueError):
        ConeQpProblem(n=2, H=np.ones((2, 2)), gamma=np.zeros(3))


def test_maxmin_simple():
    # rows e_1, e_2 with radius 1: best worst-case margin is 1
    res = solve_maxmin_margin(np.eye(2), 1.0)
    assert res.delta == pytest.approx(1.0, abs=1e-4)
    # opposing rows: Re{x} >= d and -Re{x} >= d -> d = 0
    res = solve_maxmin_margin(np.array([[1.0], [-1.0]]), 1.0)
    assert res.delta == pytest.approx(0.0, abs=1e-4)


@pytest.mark.parametrize("seed", range(3))
def test_maxmin_vs_oracle(seed):
    rng = np.random.default_rng(seed)
    n, m = 4, 6
    H = crandn(rng, m, n)
    x = cp.Variable(n, complex=True)
    d = cp.Variable()
    cp.Problem(cp.Maximize(d), [cp.real(H @ x) >= d, cp.abs(x) <= 1.0]).solve(solver=cp.CLARABEL)
    res = solve_maxmin_margin(H, 1.0)
    assert res.delta <= d.value + 1e-6
    assert res.delta >= d.value - 1e-3 * max(1.0, abs(d.value))
    assert np.all(np.abs(res.point) <= 1.0 + 1e-12)
