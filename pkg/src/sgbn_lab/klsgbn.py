"""Discriminative learning of an SGBN pair through its Fisher kernel.

The criterion is the radius-margin surrogate ``J = J0 * tr(S_T)``, with
``J0`` the optimal value of the squared-slack SVM dual on the augmented
kernel ``K + I/C`` and ``tr(S_T)`` the total scatter of the Fisher vectors.

Each outer iteration
  1. solves the dual for the current pair, giving the multipliers alpha*;
  2. holds alpha* fixed and minimises ``tr(S_T) * J0(theta; alpha*)`` over the
     selected parameters under both fitting budgets, inside a trust region
     around the current point. The step is kept only if the re-solved J goes
     down; otherwise the region shrinks. The J trace is therefore decreasing;
  3. refreshes both ordering certificates.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .classifiers import ClassPairModel
from .errors import InfeasibleBudgetError, InputError, SolverError
from .fisher import SvmConfig, _signed, fisher_matrix, gram, scatter_trace, select_edges
from .model import augment, fitting_error
from .ordering import DEFAULT_DELTA, OrderingCertificate, solve_ordering, verify_certificate
from .pairparams import Selection, feasible_fraction, fitting_error_grad
from .solvers import (PenalizedConfig, QpDualSolution, SolveReport, minimize_penalized,
                      solve_svm_dual)

log = logging.getLogger(__name__)

DEFAULT_C = 0.001
TRUST_INIT = 0.1
TRUST_SHRINKS = 6


@dataclass(frozen=True)
class KlConfig:
    c: float = DEFAULT_C
    t1: Optional[float] = None
    t2: Optional[float] = None
    budget_slack: float = 0.01
    k_edges: Optional[int] = None     # None: every nonzero parameter
    max_outer_iters: int = 20
    tol: float = 1e-4
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        SvmConfig(self.c)
        if self.k_edges is not None and self.k_edges < 0:
            raise InputError("k_edges must be nonnegative")
        if self.budget_slack < 0:
            raise InputError("budget slack must be nonnegative")
        for t in (self.t1, self.t2):
            if t is not None and not t >= 0:
                raise InputError("budgets must be nonnegative")

    def budgets(self, h1, h2):
        t1 = (1.0 + self.budget_slack) * h1 if self.t1 is None else float(self.t1)
        t2 = (1.0 + self.budget_slack) * h2 if self.t2 is None else float(self.t2)
        return t1, t2


class KlResult(NamedTuple):
    pair: ClassPairModel
    report: SolveReport
    certificates: tuple
    selected: tuple
    j_trace: tuple


def _stack(x1, x2):
    v1 = getattr(x1, "values", x1)
    v2 = getattr(x2, "values", x2)
    v1, v2 = np.asarray(v1, float), np.asarray(v2, float)
    x = np.vstack([v1, v2])
    y = np.r_[np.ones(len(v1)), -np.ones(len(v2))]
    return v1, v2, x, y


def evaluate_j(pair: ClassPairModel, x, labels, cfg):
    """``(J, dual)`` for a pair on labelled training rows.

    ``cfg`` is a :class:`KlConfig` or :class:`SvmConfig`; labels are 1/2 or +1/-1.
    """
    c = cfg.c
    phi = fisher_matrix(np.asarray(getattr(x, "values", x), float),
                        pair.theta1, pair.theta2, pair.sigma1, pair.sigma2)
    y = _signed(labels)
    return _j_from_phi(phi, y, c)


def _j_from_phi(phi, y, c):
    dual = solve_svm_dual(gram(phi, c), y)
    trs = scatter_trace(gram(phi))
    return dual.objective * trs, dual


def _scatter_and_grad(phi, xa, inv_s2, m):
    """Total scatter of ``phi`` and its gradient in each class grid."""
    pc = phi - phi.mean(axis=0)
    val = float(np.sum(pc * pc))
    p = m + 1
    grads = []
    for c in range(2):
        blk = pc[:, c * m * p:(c + 1) * m * p].reshape(-1, m, p)
        u = np.einsum("nik,nk->ni", blk, xa)
        grads.append(-2.0 * (xa.T @ u) * inv_s2[c][None, :])
    return val, grads


def _w_jacobian(w, wts, xa, inv_s2, m, sel: Selection):
    """Gradient of ``sum_n wts_n * w'phi_n`` in the selected parameters, w fixed."""
    p = m + 1
    s = [xa @ w[c * m * p:(c + 1) * m * p].reshape(m, p).T for c in range(2)]
    out = np.empty(len(sel))
    for col, (c, k, i) in enumerate(sel.entries):
        out[col] = -np.sum(wts * xa[:, k] * s[c - 1][:, i]) * inv_s2[c - 1][i]
    return out


def _theta_step(pair, sel, x, y, v1, v2, dual, c, budgets, radius, solver_cfg):
    """Minimise ``tr(S_T) * J0(theta; alpha*)`` inside a trust region.

    With the multipliers held at ``alpha*`` the dual value is an explicit
    quadratic in the Fisher vectors; its gradient at the current point is the
    gradient of J itself. The radius keeps the step where that surrogate is
    trustworthy; the caller accepts the step only if J really decreases.
    """
    m = pair.m
    xa = augment(x)
    inv_s2 = (1.0 / pair.sigma1.sigma ** 2, 1.0 / pair.sigma2.sigma ** 2)
    t1_0, t2_0 = pair.theta1.theta, pair.theta2.theta
    v0 = sel.get(t1_0, t2_0)
    ay = dual.alpha * y
    const = dual.alpha.sum() - 0.5 * dual.alpha @ dual.alpha / c

    def thetas(v):
        return sel.put(t1_0, t2_0, v)

    def parts(v):
        a, b = thetas(v)
        phi = fisher_matrix(x, a, b, pair.sigma1, pair.sigma2)
        trs, g = _scatter_and_grad(phi, xa, inv_s2, m)
        w = ay @ phi
        j0 = const - 0.5 * w @ w
        return trs, sel.scatter(g[0], g[1]), j0, w

    trs0, _, j00, _ = parts(v0)
    fscale = max(abs(trs0 * j00), 1e-300)

    def obj(v):
        trs, _, j0, _ = parts(v)
        return trs * j0 / fscale

    def obj_grad(v):
        trs, gt, j0, w = parts(v)
        gj0 = -_w_jacobian(w, ay, xa, inv_s2, m, sel)
        return (gt * j0 + trs * gj0) / fscale

    def budget(v):
        a, b = thetas(v)
        return np.array([1.0 - fitting_error(v1, a) / budgets[0],
                         1.0 - fitting_error(v2, b) / budgets[1]])

    def budget_jac(v):
        a, b = thetas(v)
        z = np.zeros_like(a)
        g1 = sel.scatter(fitting_error_grad(v1, a), z) / budgets[0]
        g2 = sel.scatter(z, fitting_error_grad(v2, b)) / budgets[1]
        return -np.vstack([g1, g2])

    r2 = radius * radius
    cons = [
        {"type": "ineq", "fun": budget, "jac": budget_jac},
        {"type": "ineq", "fun": lambda v: np.array([1.0 - np.sum((v - v0) ** 2) / r2]),
         "jac": lambda v: (-2.0 * (v - v0) / r2)[None, :]},
    ]
    v, rep = minimize_penalized(obj, obj_grad, v0, cons, None, solver_cfg)
    # budgets are convex and hold at v0: pull back until they hold exactly
    d = v - v0
    v = v0 + feasible_fraction(lambda t: budget(v0 + t * d)) * d
    return thetas(v), rep


def _certify(pair, delta):
    certs = []
    for t in (pair.theta1, pair.theta2):
        cert, _ = solve_ordering(t, delta)
        if not verify_certificate(t, cert):
            raise SolverError("ordering certificate failed verification")
        certs.append(cert)
    return tuple(certs)


def learn(x1, x2, init: ClassPairModel, cfg: KlConfig = KlConfig(),
          certificates: Optional[tuple] = None,
          solver_cfg: PenalizedConfig = PenalizedConfig()) -> KlResult:
    """Refine ``init`` on class-1 rows ``x1`` and class-2 rows ``x2``."""
    v1, v2, x, y = _stack(x1, x2)
    if certificates is not None:
        for t, cert in zip((init.theta1, init.theta2), certificates):
            if not verify_certificate(t, cert):
                raise InputError("initial model does not satisfy its ordering certificate")
    h1, h2 = init.fitting_errors(v1, v2)
    t1, t2 = cfg.budgets(h1, h2)
    if h1 > t1 or h2 > t2:
        raise InfeasibleBudgetError(
            f"initial fitting errors ({h1:.6g}, {h2:.6g}) exceed budgets ({t1:.6g}, {t2:.6g})")
    pair = init.replace(t1=t1, t2=t2)
    certs = _certify(pair, cfg.delta)

    phi = fisher_matrix(x, pair.theta1, pair.theta2, pair.sigma1, pair.sigma2)
    n_free = int(np.count_nonzero(pair.theta1.theta) + np.count_nonzero(pair.theta2.theta))
    k = n_free if cfg.k_edges is None else cfg.k_edges
    entries = select_edges(phi, y, k, (pair.theta1, pair.theta2)) if k else ()
    sel = Selection(entries)
    j, dual = _j_from_phi(phi, y, cfg.c)
    trace = [j]
    if not len(sel) or scatter_trace(gram(phi)) == 0.0:
        note = "nothing to optimise" if not len(sel) else "zero scatter"
        return KlResult(pair, SolveReport(True, 0, j, 0.0, note), certs, entries, tuple(trace))

    v0 = sel.get(pair.theta1.theta, pair.theta2.theta)
    radius = TRUST_INIT * max(float(np.linalg.norm(v0)), 1.0)
    converged = False
    it = 0
    best = (pair, certs, j)
    for it in range(1, cfg.max_outer_iters + 1):
        accepted = False
        for _ in range(TRUST_SHRINKS):
            (a, b), _ = _theta_step(pair, sel, x, y, v1, v2, dual, cfg.c, (t1, t2), radius,
                                    solver_cfg)
            cand = pair.replace(theta1=type(pair.theta1)(a), theta2=type(pair.theta2)(b))
            j_new, dual_new = evaluate_j(cand, x, y, cfg)
            if j_new < j:
                accepted = True
                break
            radius *= 0.25
        if not accepted:
            # a run that never improved on the start is reported as not converged
            converged = len(trace) > 1
            break
        log.debug("kl iter %d: J %.6g -> %.6g (radius %.3g)", it, j, j_new, radius)
        pair, dual = cand, dual_new
        certs = _certify(pair, cfg.delta)
        rel = (j - j_new) / max(abs(j), 1e-300)
        j = j_new
        trace.append(j)
        best = (pair, certs, j)
        radius *= 2.0
        if rel < cfg.tol:
            converged = True
            break

    pair, certs, j = best
    h1, h2 = pair.fitting_errors(v1, v2)
    viol = max(h1 - t1, h2 - t2, 0.0)
    note = "" if converged else ("no improvement over the initial pair" if len(trace) == 1
                                 else "outer iteration cap reached")
    return KlResult(pair, SolveReport(converged, it, j, viol, note), certs, entries,
                    tuple(trace))
