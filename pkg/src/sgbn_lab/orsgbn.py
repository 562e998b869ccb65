"""Single-class sparse Gaussian BN estimation under the ordering constraint.

The objective for fixed acyclicity penalty ``lambda_dag`` is::

    f(theta, o, U) = sum_j ||x_j - [X, 1] theta_j||^2
                     + lambda1 * sum_{i != j} |theta_ij|
                     + lambda_dag * sum_{i != j} U_ij |theta_ij|

It is minimised by alternating a weighted lasso over theta (all columns at
once; the problem separates by column for fixed U) and the ordering LP over
(o, U). The bias row is not penalised.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import NotDagError, SolverError
from .model import Dataset, SgbnParams, augment, is_dag, structure_of
from .ordering import (DEFAULT_DELTA, OrderingCertificate, lambda_dag_bound,
                       solve_ordering, verify_certificate)
from .solvers import SolveReport, weighted_lasso_gram

log = logging.getLogger(__name__)

SCHEDULE_STEPS = (1.0, 10.0, 100.0, 1000.0)
SCHEDULE_MARGIN = 1.01


def default_lambda1(n: int) -> float:
    """Sparsity weight used when none is given: 0.2 * (n - 1).

    On standardised data this keeps a parent whose partial correlation with
    the child exceeds roughly 0.1.
    """
    return 0.2 * (n - 1)


def kill_level(m, n, lambda1, delta=DEFAULT_DELTA):
    """Penalty above which no cycle survives a converged alternation.

    Around any cycle constraint (a) forces some upsilon >= delta/m, and on
    standardised data no lasso gradient exceeds 2(n-1), so that arc is zeroed
    once lambda1 + lambda_dag * delta/m > 2(n-1).
    """
    return max(m * (2.0 * (n - 1) - lambda1) / delta, 0.0)


def default_schedule(m, n, lambda1, delta=DEFAULT_DELTA):
    top = max(lambda_dag_bound(m, n, lambda1, delta), kill_level(m, n, lambda1, delta))
    top = max(SCHEDULE_MARGIN * top, 1.0)
    return tuple(top * s / SCHEDULE_STEPS[-1] for s in SCHEDULE_STEPS)


@dataclass(frozen=True)
class OrConfig:
    lambda1: float
    lambda_dag_schedule: Optional[Tuple[float, ...]] = None
    delta: float = DEFAULT_DELTA
    max_outer_iters: int = 50
    tol: float = 1e-6

    def __post_init__(self):
        if not self.lambda1 > 0:
            raise ValueError("lambda1 must be positive")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        s = self.lambda_dag_schedule
        if s is not None:
            s = tuple(float(v) for v in s)
            if not s or any(v <= 0 for v in s) or any(b <= a for a, b in zip(s, s[1:])):
                raise ValueError("lambda_dag schedule must be positive and strictly increasing")
            object.__setattr__(self, "lambda_dag_schedule", s)

    def schedule_for(self, m, n):
        if self.lambda_dag_schedule is not None:
            return self.lambda_dag_schedule
        return default_schedule(m, n, self.lambda1, self.delta)


class OrFit(NamedTuple):
    params: SgbnParams
    certificate: OrderingCertificate
    report: SolveReport
    trace: tuple  # objective after every outer iteration, final lambda_dag


def _design(values):
    values = np.ascontiguousarray(values)
    xa = augment(values)
    return xa.T @ xa, xa.T @ values


def _penalty(m, lambda1, lambda_dag=0.0, upsilon=None):
    w = np.full((m + 1, m), float(lambda1))
    if upsilon is not None:
        w[:m] += lambda_dag * upsilon
    w[m] = 0.0
    np.fill_diagonal(w[:m], 0.0)
    return w


def _free(m):
    free = np.ones((m + 1, m), dtype=np.uint8)
    np.fill_diagonal(free[:m], 0)
    return free


def objective(x, theta, cert: Optional[OrderingCertificate], lambda1, lambda_dag=0.0):
    """The single-class objective f at (theta, o, U)."""
    values = x.values if isinstance(x, Dataset) else np.asarray(x, float)
    t = theta.theta if isinstance(theta, SgbnParams) else np.asarray(theta, float)
    r = values - augment(values) @ t
    w = np.abs(t[:-1]).copy()
    np.fill_diagonal(w, 0.0)
    val = float(np.sum(r * r)) + lambda1 * float(w.sum())
    if cert is not None and lambda_dag:
        u = cert.upsilon.copy()
        np.fill_diagonal(u, 0.0)
        val += lambda_dag * float(np.sum(u * w))
    return val


def init_theta(x, lambda1: float) -> SgbnParams:
    """Per-node lasso of each column on all the others plus bias; no DAG constraint."""
    values = x.values if isinstance(x, Dataset) else np.asarray(x, float)
    m = values.shape[1]
    G, C = _design(values)
    theta, rep = weighted_lasso_gram(G, C, _penalty(m, lambda1), np.zeros((m + 1, m)),
                                     free=_free(m))
    if not rep.converged:
        raise SolverError("initial lasso did not converge", rep)
    return SgbnParams(theta)


def fit(x, config: OrConfig, theta0: Optional[SgbnParams] = None) -> OrFit:
    """Alternate weighted-lasso and ordering steps, warm-starting lambda_dag.

    Raises :class:`NotDagError` when the final structure is still cyclic,
    reporting the penalty level that guarantees acyclicity.
    """
    values = x.values if isinstance(x, Dataset) else np.asarray(x, float)
    n, m = values.shape
    schedule = config.schedule_for(m, n)
    lam_top = schedule[-1]
    G, C = _design(values)
    free = _free(m)

    params = init_theta(values, config.lambda1) if theta0 is None else theta0
    theta = np.array(params.theta)
    cert, _ = solve_ordering(theta, config.delta)
    f_prev = objective(values, theta, cert, config.lambda1, lam_top)
    trace = [f_prev]
    converged = False
    it = 0
    for it in range(1, config.max_outer_iters + 1):
        u = cert.upsilon
        cur = theta
        for lam in schedule:
            cur, rep = weighted_lasso_gram(G, C, _penalty(m, config.lambda1, lam, u), cur,
                                           free=free)
            if not rep.converged:
                raise SolverError("weighted lasso did not converge", rep)
        f_theta = objective(values, cur, cert, config.lambda1, lam_top)
        if f_theta > f_prev:
            # warm-start path landed above the previous iterate; descend from it instead
            alt, rep = weighted_lasso_gram(G, C, _penalty(m, config.lambda1, lam_top, u), theta,
                                           free=free)
            f_alt = objective(values, alt, cert, config.lambda1, lam_top)
            if f_alt < f_theta:
                cur, f_theta = alt, f_alt
        theta = cur
        new_cert, _ = solve_ordering(theta, config.delta)
        f_new = objective(values, theta, new_cert, config.lambda1, lam_top)
        if f_new <= f_theta:
            cert = new_cert
        else:
            f_new = f_theta
        trace.append(f_new)
        change = abs(f_prev - f_new) / max(abs(f_prev), 1e-300)
        f_prev = f_new
        if change < config.tol and is_dag(structure_of(theta, 0.0)):
            converged = True
            break

    final = SgbnParams(theta)
    g = structure_of(final, 0.0)
    if not is_dag(g):
        bound = lambda_dag_bound(m, n, config.lambda1, config.delta)
        raise NotDagError(
            f"estimate is cyclic after the lambda_dag schedule (top {lam_top:.6g}); "
            f"use a final value above {bound:.6g}", bound=bound,
            report=SolveReport(False, it, f_prev, 0.0, "cyclic"))
    cert, _ = solve_ordering(final, config.delta)
    if not verify_certificate(final, cert):
        raise SolverError("ordering certificate failed verification")
    report = SolveReport(converged, it, f_prev, 0.0,
                         "" if converged else "outer iteration cap reached")
    return OrFit(final, cert, report, tuple(trace))
