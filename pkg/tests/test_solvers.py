import itertools

import numpy as np
import pytest

from sgbn_lab import kernels
from sgbn_lab.errors import SolverError
from sgbn_lab.solvers import (PenalizedConfig, constraint_violation, lasso_kkt_violation,
                              lasso_objective, minimize_penalized, solve_lp, solve_svm_dual,
                              svm_kkt_violation, weighted_lasso, weighted_lasso_gram)


# ---------------------------------------------------------------- lasso

def test_lasso_kill_condition(rng):
    a = rng.normal(size=(20, 5))
    y = rng.normal(size=20)
    w = 2 * np.abs(a.T @ y) + 0.1
    assert np.all(weighted_lasso(a, y, w) == 0)


def test_lasso_zero_weight_is_ols(rng):
    a = rng.normal(size=(30, 6))
    y = rng.normal(size=30)
    ols = np.linalg.lstsq(a, y, rcond=None)[0]
    assert np.max(np.abs(weighted_lasso(a, y, 0.0) - ols)) < 1e-8


def test_lasso_scalar_closed_form_and_grid(rng):
    for _ in range(10):
        a = rng.normal(size=(15, 1))
        a /= np.linalg.norm(a)
        y = rng.normal(size=15)
        w = float(rng.uniform(0, 3))
        c = float(a[:, 0] @ y)
        soft = np.sign(c) * max(abs(c) - w / 2, 0.0)
        got = weighted_lasso(a, y, [w])[0]
        assert got == pytest.approx(soft, abs=1e-10)
        grid = np.linspace(-4, 4, 80001)
        vals = [(y @ y) - 2 * t * c + t * t + w * abs(t) for t in grid]
        assert abs(grid[int(np.argmin(vals))] - got) < 2e-4


def test_lasso_kkt_random(rng):
    for _ in range(20):
        a = rng.normal(size=(25, 8))
        y = rng.normal(size=25)
        w = rng.uniform(0, 10, 8)
        th = weighted_lasso(a, y, w)
        assert lasso_kkt_violation(a, y, w, th) < 1e-6


def test_lasso_sweeps_monotone(rng):
    a = rng.normal(size=(25, 8))
    y = rng.normal(size=25)
    w = rng.uniform(0, 5, 8)
    th = np.zeros(8)
    prev = lasso_objective(a, y, w, th)
    for _ in range(30):
        th, _ = weighted_lasso_gram(a.T @ a, (a.T @ y)[:, None], w[:, None], th[:, None],
                                    max_sweeps=1)
        th = th[:, 0]
        cur = lasso_objective(a, y, w, th)
        assert cur <= prev + 1e-12
        prev = cur


def test_lasso_sweep_cap_raises(rng):
    a = rng.normal(size=(10, 6))
    a[:, 1] = a[:, 0] + 1e-3 * rng.normal(size=10)
    with pytest.raises(SolverError):
        weighted_lasso(a, rng.normal(size=10), 0.0, max_sweeps=1)


def test_lasso_free_mask_pins_entries(rng):
    a = rng.normal(size=(20, 4))
    y = rng.normal(size=20)
    free = np.array([[1], [0], [1], [1]], np.uint8)
    th0 = np.array([[0.0], [0.3], [0.0], [0.0]])
    th, _ = weighted_lasso_gram(a.T @ a, (a.T @ y)[:, None], np.zeros((4, 1)), th0, free=free)
    assert th[1, 0] == 0.3


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled backend not built")
def test_lasso_backends_agree(rng):
    a = rng.normal(size=(40, 12))
    y = rng.normal(size=(40, 3))
    w = rng.uniform(0, 4, (12, 3))
    out = [weighted_lasso_gram(a.T @ a, a.T @ y, w, np.zeros((12, 3)), backend=b)[0]
           for b in ("cython", "python")]
    assert np.max(np.abs(out[0] - out[1])) < 1e-12


# ---------------------------------------------------------------- svm dual

def test_svm_two_points_identity():
    sol = solve_svm_dual(np.eye(2), np.array([1.0, -1.0]))
    assert np.allclose(sol.alpha, [1.0, 1.0], atol=1e-8)
    assert sol.objective == pytest.approx(1.0, abs=1e-8)


def test_svm_two_points_closed_form(rng):
    # opposite labels: alpha1 = alpha2 = 2 / (K11 + K22 - 2 K12)
    for _ in range(10):
        z = rng.normal(size=(2, 3))
        k = z @ z.T
        sol = solve_svm_dual(k, np.array([1.0, -1.0]))
        expect = 2.0 / (k[0, 0] + k[1, 1] - 2 * k[0, 1])
        assert np.allclose(sol.alpha, expect, rtol=1e-7)


def test_svm_same_labels():
    sol = solve_svm_dual(np.eye(3), np.ones(3))
    assert np.all(sol.alpha == 0) and sol.objective == 0.0
    assert sol.report.converged and sol.report.note


def _qp_oracle(k, y):
    """Brute-force active sets: solve the equality-constrained KKT system on
    every support subset and keep the best feasible candidate."""
    n = y.size
    q = np.outer(y, y) * k
    best = -np.inf
    for r in range(2, n + 1):
        for s in itertools.combinations(range(n), r):
            s = list(s)
            ys = y[s]
            if np.all(ys == ys[0]):
                continue
            kkt = np.block([[q[np.ix_(s, s)], ys[:, None]], [ys[None, :], np.zeros((1, 1))]])
            rhs = np.r_[np.ones(r), 0.0]
            sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
            a = np.zeros(n)
            a[s] = sol[:r]
            if np.any(a < -1e-12) or abs(a @ y) > 1e-9:
                continue
            best = max(best, a.sum() - 0.5 * a @ q @ a)
    return best


def test_svm_matches_dense_oracle(rng):
    for _ in range(15):
        x = rng.normal(size=(6, 3))
        y = np.array([1, 1, 1, -1, -1, -1], float)
        x[y > 0] += 2.0
        k = x @ x.T
        sol = solve_svm_dual(k, y)
        assert sol.objective == pytest.approx(_qp_oracle(k, y), abs=1e-4)
        assert svm_kkt_violation(k, y, sol) < 1e-5
        assert abs(sol.alpha @ y) < 1e-8 and np.all(sol.alpha >= 0)
        # primal-dual gap on a separable instance
        w = (sol.alpha * y) @ x
        assert 0.5 * w @ w == pytest.approx(sol.objective, abs=1e-5)
        assert np.all(y * (x @ w + sol.bias) >= 1 - 1e-5)


def test_svm_deterministic(rng):
    x = rng.normal(size=(40, 5))
    y = np.where(x[:, 0] + 0.1 * rng.normal(size=40) > 0, 1.0, -1.0)
    k = x @ x.T + np.eye(40)
    a = solve_svm_dual(k, y)
    b = solve_svm_dual(k, y)
    assert np.array_equal(a.alpha, b.alpha) and a.bias == b.bias


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled backend not built")
def test_svm_backends_agree(rng):
    x = rng.normal(size=(30, 4))
    y = np.where(x[:, 1] > 0, 1.0, -1.0)
    k = x @ x.T + 0.5 * np.eye(30)
    a, b = (solve_svm_dual(k, y, backend=be) for be in ("cython", "python"))
    assert np.max(np.abs(a.alpha - b.alpha)) < 1e-10


# ---------------------------------------------------------------- lp

def test_lp_trivial():
    x, f = solve_lp([1.0], [[-1.0]], [-3.0], [(None, None)])
    assert x[0] == pytest.approx(3.0) and f == pytest.approx(3.0)
    x, f = solve_lp([-1.0], bounds=[(0.0, 2.5)])
    assert x[0] == pytest.approx(2.5)


def test_lp_errors():
    with pytest.raises(SolverError):
        solve_lp([1.0], [[1.0], [-1.0]], [0.0, -1.0], [(None, None)])
    with pytest.raises(SolverError):
        solve_lp([-1.0], bounds=[(0.0, None)])


def _vertex_oracle(c, a, b):
    """Enumerate intersections of n tight constraints among a x <= b, x >= 0."""
    n = c.size
    rows = np.vstack([a, -np.eye(n)])
    rhs = np.r_[b, np.zeros(n)]
    best = np.inf
    for s in itertools.combinations(range(rows.shape[0]), n):
        m = rows[list(s)]
        if abs(np.linalg.det(m)) < 1e-12:
            continue
        x = np.linalg.solve(m, rhs[list(s)])
        if np.all(rows @ x <= rhs + 1e-9):
            best = min(best, c @ x)
    return best


def test_lp_vertex_oracle(rng):
    for _ in range(30):
        n = int(rng.integers(2, 4))
        k = int(rng.integers(1, 5))
        a = rng.uniform(0.1, 2.0, (k, n))
        b = rng.uniform(1.0, 5.0, k)
        c = rng.normal(size=n)
        _, f = solve_lp(c, a, b, [(0.0, None)] * n)
        assert f == pytest.approx(_vertex_oracle(c, a, b), abs=1e-8)


# ---------------------------------------------------------------- penalized

def test_penalized_unconstrained_quadratic(rng):
    h = rng.normal(size=(4, 4))
    h = h @ h.T + np.eye(4)
    g = rng.normal(size=4)
    x, rep = minimize_penalized(lambda x: 0.5 * x @ h @ x - g @ x, lambda x: h @ x - g,
                                np.zeros(4))
    assert np.max(np.abs(x - np.linalg.solve(h, g))) < 1e-6


def test_penalized_one_equality(rng):
    h = np.diag([1.0, 2.0, 3.0])
    g = np.array([1.0, -1.0, 0.5])
    a = np.array([1.0, 1.0, 1.0])
    b = 2.0
    kkt = np.block([[h, a[:, None]], [a[None, :], np.zeros((1, 1))]])
    exact = np.linalg.solve(kkt, np.r_[g, b])[:3]
    cons = [{"type": "eq", "fun": lambda x: np.array([a @ x - b]),
             "jac": lambda x: a[None, :]}]
    x, rep = minimize_penalized(lambda x: 0.5 * x @ h @ x - g @ x, lambda x: h @ x - g,
                                np.array([2.0, 0.0, 0.0]), cons)
    assert np.max(np.abs(x - exact)) < 1e-6
    assert rep.max_constraint_violation <= 1e-6


def test_penalized_start_optimal():
    x, rep = minimize_penalized(lambda x: float(x @ x), lambda x: 2 * x, np.zeros(3))
    assert np.array_equal(x, np.zeros(3)) and rep.final_objective == 0.0


def test_penalized_descent_contract(rng):
    for _ in range(20):
        x0 = rng.normal(size=3)
        fun = lambda x: float(np.sin(x).sum() + 0.1 * x @ x)  # noqa: E731
        jac = lambda x: np.cos(x) + 0.2 * x  # noqa: E731
        cons = [{"type": "ineq", "fun": lambda x: np.array([4.0 - x @ x]),
                 "jac": lambda x: -2 * x[None, :]}]
        x, rep = minimize_penalized(fun, jac, x0, cons)
        assert fun(x) <= fun(x0)
        if rep.converged:
            assert constraint_violation(cons, x) <= 1e-6
        x2, _ = minimize_penalized(fun, jac, x0, cons)
        assert np.array_equal(x, x2)


def test_penalized_gradient_failure():
    def bad(x):
        raise FloatingPointError("boom")
    with pytest.raises(SolverError):
        minimize_penalized(lambda x: 0.0, bad, np.zeros(2))
