import numpy as np
import pytest

from interval_observer.sdp import (AffineLmi, SolverOptions, Status, bisect_min, eig_sym,
                                   lambda_max, solve_feasibility)


def gamma_pair(g):
    # [[g, 1], [1, g]] >= 0, written as -[[g, 1], [1, g]] <= 0
    return AffineLmi(F0=-np.array([[g, 1.0], [1.0, g]]), Fs=np.zeros((1, 2, 2)), lb=[-1.0], ub=[1.0])


def assert_sound(lmi, res):
    assert lambda_max(lmi.evaluate(res.x)) <= -lmi.delta + 1e-8
    A, b = lmi.linear_rows()
    assert np.all(A @ res.x <= b + 1e-9)


def test_eig_sym_examples(rng):
    np.testing.assert_allclose(eig_sym(np.diag([3.0, 1.0, 2.0])), [1, 2, 3])
    np.testing.assert_allclose(eig_sym([[0.0, 1.0], [1.0, 0.0]]), [-1, 1])
    X = rng.normal(size=(10, 10))
    S = X + X.T
    w = eig_sym(S)
    assert np.all(np.diff(w) >= 0)
    assert abs(w.sum() - np.trace(S)) <= 1e-9 * (1 + abs(np.trace(S)))
    wf, V = np.linalg.eigh(S)
    np.testing.assert_allclose(V @ np.diag(wf) @ V.T, S, atol=1e-9)
    np.testing.assert_allclose(w, wf, atol=1e-12)


def test_eig_sym_rejects_asymmetric():
    with pytest.raises(ValueError):
        eig_sym([[0.0, 1.0], [0.0, 0.0]])


def test_weyl_spot_check(rng):
    for _ in range(20):
        A, B = rng.normal(size=(2, 6, 6))
        A, B = A + A.T, B + B.T
        assert lambda_max(A + B) <= lambda_max(A) + lambda_max(B) + 1e-12


def test_feasible_interval():
    lmi = AffineLmi(F0=np.diag([-1.0, -1.0]), Fs=np.diag([1.0, -1.0])[None], lb=[-10.0], ub=[10.0])
    res = solve_feasibility(lmi, SolverOptions(early_exit=False))
    assert res.status is Status.FEASIBLE
    assert -1 < res.x[0] < 1
    assert res.margin == pytest.approx(1.0, abs=1e-6)
    assert_sound(lmi, res)


def test_infeasible_scalar():
    lmi = AffineLmi(F0=np.zeros((1, 1)), Fs=-np.ones((1, 1, 1)), ub=[-1.0])
    res = solve_feasibility(lmi)
    assert res.status is Status.INFEASIBLE
    assert res.upper_bound < 0


def test_scalar_lyapunov():
    # 2 a p <= -delta with a = -1, p in [1e-3, 10]
    lmi = AffineLmi(F0=np.zeros((1, 1)), Fs=-2 * np.ones((1, 1, 1)), delta=1e-6, lb=[1e-3], ub=[10.0])
    res = solve_feasibility(lmi)
    assert res.feasible
    assert_sound(lmi, res)
    assert lambda_max(lmi.evaluate([1.0])) == -2.0


def test_linear_inequalities_respected():
    # x1 + x2 <= 1 and diag(x1, x2) >= 0.2 I
    lmi = AffineLmi(F0=0.2 * np.eye(2), Fs=-np.stack([np.diag([1.0, 0]), np.diag([0, 1.0])]),
                    lb=[-5, -5], ub=[5, 5], A_ineq=[[1.0, 1.0]], b_ineq=[1.0])
    res = solve_feasibility(lmi)
    assert res.feasible
    assert_sound(lmi, res)


def test_bisection_gamma_pair():
    res = bisect_min(gamma_pair, 1e-4, 1e6, tol=1e-9)
    assert res.status is Status.FEASIBLE
    assert abs(res.gamma - 1.0) <= 1e-6
    assert_sound(gamma_pair(res.gamma), type("R", (), {"x": res.x})())


def test_bisection_threshold_three():
    fam = lambda g: AffineLmi(F0=np.array([[3.0 - g]]), Fs=np.zeros((1, 1, 1)), lb=[0.0], ub=[1.0])
    res = bisect_min(fam, 1e-4, 1e6, tol=1e-9)
    assert res.gamma == pytest.approx(3.0, abs=1e-6)


def test_bisection_bracket_invariant():
    res = bisect_min(gamma_pair, 1e-4, 1e6, tol=1e-6)
    feas = [g for g, s, _ in res.history if s == Status.FEASIBLE.value]
    infeas = [g for g, s, _ in res.history if s != Status.FEASIBLE.value]
    assert min(feas) > max(infeas)
    # after the two bracket probes, feasible points decrease and infeasible ones increase
    assert all(a > b for a, b in zip(feas, feas[1:]))
    assert all(a < b for a, b in zip(infeas, infeas[1:]))


def test_bisection_reports_infeasible_top():
    fam = lambda g: AffineLmi(F0=np.array([[1.0]]), Fs=np.zeros((1, 1, 1)), lb=[0.0], ub=[1.0])
    res = bisect_min(fam, 1.0, 10.0)
    assert res.status is Status.INFEASIBLE and res.gamma is None


def test_affine_lmi_validation():
    with pytest.raises(ValueError):
        AffineLmi(F0=np.eye(2), Fs=np.zeros((1, 3, 3)))
    with pytest.raises(ValueError):
        AffineLmi(F0=np.eye(2), Fs=np.zeros((1, 2, 2)), delta=-1.0)
    with pytest.raises(ValueError):
        AffineLmi(F0=np.eye(1), Fs=np.zeros((1, 1, 1)), lb=[1.0], ub=[0.0])


def test_max_iter_is_inconclusive():
    lmi = AffineLmi(F0=np.diag([-1.0, -1.0]), Fs=np.diag([1.0, -1.0])[None], delta=0.999999,
                    lb=[-10.0], ub=[10.0])
    res = solve_feasibility(lmi, SolverOptions(max_iter=1))
    assert res.status is Status.MAX_ITER
    assert res.margin < lmi.delta
