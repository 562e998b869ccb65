"""Optimisation kernels shared by every learner."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog, minimize

from . import kernels
from .errors import DimensionError, InputError, SolverError

log = logging.getLogger(__name__)

LASSO_TOL = 1e-10
LASSO_MAX_SWEEPS = 10_000


@dataclass(frozen=True)
class SolveReport:
    converged: bool
    iterations: int
    final_objective: float
    max_constraint_violation: float = 0.0
    note: str = ""

    def __post_init__(self):
        if self.max_constraint_violation < 0:
            raise ValueError("constraint violation must be nonnegative")

    def to_dict(self):
        return {
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "final_objective": float(self.final_objective),
            "max_constraint_violation": float(self.max_constraint_violation),
            "note": self.note,
        }


@dataclass(frozen=True)
class QpDualSolution:
    alpha: np.ndarray
    bias: float
    objective: float
    report: Optional[SolveReport] = field(default=None, compare=False)


# ---------------------------------------------------------------------------
# weighted lasso

def lasso_objective(a, y, w, theta):
    r = y - a @ theta
    return float(r @ r + np.sum(w * np.abs(theta)))


def weighted_lasso_gram(G, C, W, theta0, free=None, tol=LASSO_TOL,
                        max_sweeps=LASSO_MAX_SWEEPS, backend=None):
    """Column-separable weighted lasso in covariance form.

    Column ``j`` minimises ``t'Gt - 2 C[:, j]'t + sum_k W[k, j] |t_k|`` over the
    coordinates marked in ``free`` (default: all). Returns ``(theta, report)``.
    """
    G = np.ascontiguousarray(G, dtype=float)
    C = np.asarray(C, dtype=float)
    C = np.ascontiguousarray(C[:, None] if C.ndim == 1 else C)
    p, m = C.shape
    W = np.ascontiguousarray(np.broadcast_to(W, (p, m)), dtype=float)
    if np.any(W < 0):
        raise InputError("lasso weights must be nonnegative")
    theta = np.array(np.broadcast_to(theta0, (p, m)), dtype=float, order="C")
    if free is None:
        free = np.ones((p, m), dtype=np.uint8)
    free = np.ascontiguousarray(free, dtype=np.uint8)
    impl = kernels if backend is None else kernels.get(backend)
    sweeps, conv = impl.cd_columns(G, C, W, free, theta, float(tol), int(max_sweeps))
    ok = bool(np.all(conv))
    report = SolveReport(ok, int(np.max(sweeps)) if len(sweeps) else 0, float("nan"),
                         note="" if ok else "coordinate descent hit the sweep cap")
    return theta, report


def weighted_lasso(a, y, w, theta0=None, tol=LASSO_TOL, max_sweeps=LASSO_MAX_SWEEPS,
                   backend=None):
    """min_t ||y - a t||^2 + sum_k w_k |t_k| by cyclic coordinate descent."""
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    if a.ndim != 2 or y.shape != (a.shape[0],):
        raise DimensionError("design matrix and target disagree")
    p = a.shape[1]
    w = np.broadcast_to(np.asarray(w, dtype=float), (p,))
    theta0 = np.zeros(p) if theta0 is None else np.asarray(theta0, dtype=float)
    if theta0.shape != (p,):
        raise DimensionError("warm start has the wrong length")
    theta, rep = weighted_lasso_gram(a.T @ a, (a.T @ y)[:, None], w[:, None],
                                     theta0[:, None], tol=tol, max_sweeps=max_sweeps,
                                     backend=backend)
    theta = theta[:, 0]
    obj = lasso_objective(a, y, w, theta)
    rep = SolveReport(rep.converged, rep.iterations, obj, 0.0, rep.note)
    if not rep.converged:
        raise SolverError("weighted lasso did not converge", rep)
    return theta


def lasso_kkt_violation(a, y, w, theta):
    """Largest breach of the lasso subgradient conditions."""
    g = 2.0 * a.T @ (y - a @ theta)
    nz = theta != 0
    v_nz = np.abs(g[nz] - w[nz] * np.sign(theta[nz]))
    v_z = np.maximum(np.abs(g[~nz]) - w[~nz], 0.0)
    return float(max(v_nz.max(initial=0.0), v_z.max(initial=0.0)))


# ---------------------------------------------------------------------------
# SVM dual

SMO_EPS = 1e-7
SMO_BLOWUP = 1e12


def solve_svm_dual(k, y, eps=SMO_EPS, max_iter=None, backend=None) -> QpDualSolution:
    """max sum(a) - 1/2 sum_ij y_i y_j a_i a_j K_ij  s.t.  y'a = 0, a >= 0.

    Pairwise (SMO) working-set updates with second-order pair selection. The
    bias is averaged over support vectors (every support vector is unbounded
    here since the multipliers have no upper limit).
    """
    k = np.asarray(k, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.size
    if k.shape != (n, n):
        raise DimensionError("kernel matrix and labels disagree")
    if not np.all(np.abs(y) == 1):
        raise InputError("labels must be +1/-1")
    if not np.allclose(k, k.T, atol=1e-10 * max(1.0, np.abs(k).max())):
        raise InputError("kernel matrix is not symmetric")
    if np.all(y == y[0]):
        rep = SolveReport(True, 0, 0.0, 0.0,
                          note="all labels identical: equality constraint forces alpha = 0")
        return QpDualSolution(np.zeros(n), float(y[0]), 0.0, rep)
    Q = np.ascontiguousarray(np.outer(y, y) * k)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    if max_iter is None:
        max_iter = max(1_000_000, 200 * n)
    impl = kernels if backend is None else kernels.get(backend)
    it, status = impl.smo(Q, np.ascontiguousarray(y), alpha, grad, float(eps),
                          int(max_iter), SMO_BLOWUP)
    if status == 2:
        raise SolverError("SVM dual is unbounded (data not separable under this kernel)",
                          SolveReport(False, int(it), float("inf"), 0.0, "divergence"))
    alpha = np.maximum(alpha, 0.0)
    # exact restoration of y'a = 0 after clipping noise
    s = float(alpha @ y)
    if s != 0.0:
        side = y * s > 0
        tot = alpha[side].sum()
        if tot > 0:
            alpha[side] *= 1.0 - abs(s) / tot
    f = (alpha * y) @ k
    obj = float(alpha.sum() - 0.5 * (alpha * y) @ f)
    sv = alpha > 1e-10 * max(1.0, alpha.max())
    if sv.any():
        bias = float(np.mean(y[sv] - f[sv]))
    else:
        bias = 0.0
    rep = SolveReport(status == 0, int(it), obj, abs(float(alpha @ y)),
                      note="" if status == 0 else "iteration cap reached")
    if status != 0:
        log.warning("SMO stopped at the iteration cap (%d)", it)
    return QpDualSolution(alpha, bias, obj, rep)


def svm_kkt_violation(k, y, sol: QpDualSolution):
    """max over samples of the complementary-slackness/feasibility breach."""
    f = (sol.alpha * y) @ k + sol.bias
    margin = y * f - 1.0
    sv = sol.alpha > 1e-10 * max(1.0, sol.alpha.max(initial=0.0))
    v_sv = np.abs(margin[sv])
    v_other = np.maximum(-margin[~sv], 0.0)
    return float(max(v_sv.max(initial=0.0), v_other.max(initial=0.0)))


# ---------------------------------------------------------------------------
# linear programming

def solve_lp(c, a_ub=None, b_ub=None, bounds=None, a_eq=None, b_eq=None):
    """min c'x s.t. a_ub x <= b_ub, a_eq x = b_eq, bounds. Returns (x, objective)."""
    res = linprog(np.asarray(c, dtype=float), A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status == 2:
        raise SolverError("linear program is infeasible")
    if res.status == 3:
        raise SolverError("linear program is unbounded")
    if res.status != 0:
        raise SolverError(f"linear program failed: {res.message}")
    return res.x, float(res.fun)


# ---------------------------------------------------------------------------
# smooth constrained minimisation

@dataclass(frozen=True)
class PenalizedConfig:
    max_iter: int = 300
    ftol: float = 1e-10
    feas_tol: float = 1e-6


def constraint_violation(constraints: Sequence[dict], x) -> float:
    worst = 0.0
    for c in constraints:
        v = np.atleast_1d(c["fun"](x))
        if c["type"] == "ineq":
            worst = max(worst, float(np.max(-v, initial=0.0)))
        else:
            worst = max(worst, float(np.max(np.abs(v), initial=0.0)))
    return worst


def _bounds_violation(bounds, x):
    if bounds is None:
        return 0.0
    worst = 0.0
    for xi, (lo, hi) in zip(x, bounds):
        if lo is not None:
            worst = max(worst, lo - xi)
        if hi is not None:
            worst = max(worst, xi - hi)
    return worst


def minimize_penalized(fun: Callable, jac: Callable, x0, constraints=(), bounds=None,
                       config: PenalizedConfig = PenalizedConfig()):
    """Minimise a smooth objective under smooth constraints by SQP.

    Constraints follow the scipy convention (``{"type": "ineq", "fun", "jac"}``
    with ``fun(x) >= 0``). The result never has a worse objective than ``x0``
    and never exceeds ``config.feas_tol`` of constraint violation: if the SQP
    iterate fails either test the start point is returned with
    ``converged=False``.
    """
    x0 = np.asarray(x0, dtype=float)
    constraints = list(constraints)
    try:
        f0 = float(fun(x0))
        jac(x0)
    except Exception as exc:  # noqa: BLE001
        raise SolverError(f"objective or gradient failed at the start point: {exc}") from exc
    v0 = max(constraint_violation(constraints, x0), _bounds_violation(bounds, x0))

    if x0.size == 0:
        return x0.copy(), SolveReport(True, 0, f0, v0)

    res = minimize(fun, x0, jac=jac, method="SLSQP", bounds=bounds,
                   constraints=constraints,
                   options={"maxiter": config.max_iter, "ftol": config.ftol})
    x = np.asarray(res.x, dtype=float)
    if bounds is not None:
        lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds])
        hi = np.array([np.inf if b[1] is None else b[1] for b in bounds])
        x = np.clip(x, lo, hi)
    if not np.all(np.isfinite(x)):
        return x0.copy(), SolveReport(False, int(res.nit), f0, v0, "non-finite iterate")
    f = float(fun(x))
    v = constraint_violation(constraints, x)
    if v <= config.feas_tol and f <= f0:
        return x, SolveReport(bool(res.success), int(res.nit), f, v, str(res.message))
    note = f"rejected SQP iterate (objective {f:.6g} vs start {f0:.6g}, violation {v:.3g})"
    return x0.copy(), SolveReport(False, int(res.nit), f0, v0, note)
