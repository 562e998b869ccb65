"""Max-margin discriminative learning of an SGBN pair.

Solves::

    min  lam * sum(xi) - r
    s.t. y_n * (L1(x_n) - L2(x_n)) >= r - xi_n     (margins)
         xi >= 0, r >= 0
         h(X1, theta1) <= T1, h(X2, theta2) <= T2  (fitting budgets)
         both structures acyclic

The margins are quadratic in the parameters and their gradients are the
Fisher vectors (class-2 block negated). Only parameters that are already
nonzero move, so acyclicity is inherited from the initial pair; certificates
are refreshed after every outer iteration.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .classifiers import ClassPairModel
from .errors import InfeasibleBudgetError, InputError, SolverError
from .fisher import fisher_matrix, select_edges, _signed
from .model import fitting_error, log_likelihood, log_likelihood_rows
from .ordering import DEFAULT_DELTA, solve_ordering, verify_certificate
from .pairparams import Selection, feasible_fraction, fitting_error_grad
from .solvers import PenalizedConfig, SolveReport, minimize_penalized, solve_lp

log = logging.getLogger(__name__)

LAMBDA_PER_SAMPLE = 5.0


@dataclass(frozen=True)
class MmConfig:
    lam: Optional[float] = None        # None: 5 / n
    t1: Optional[float] = None
    t2: Optional[float] = None
    budget_slack: float = 0.01
    k_edges: Optional[int] = None
    max_outer_iters: int = 20
    tol: float = 1e-4
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        if self.lam is not None and not self.lam > 0:
            raise InputError("lambda must be positive")
        if self.k_edges is not None and self.k_edges < 0:
            raise InputError("k_edges must be nonnegative")
        if self.budget_slack < 0:
            raise InputError("budget slack must be nonnegative")

    def lam_for(self, n):
        return LAMBDA_PER_SAMPLE / n if self.lam is None else float(self.lam)

    def budgets(self, h1, h2):
        t1 = (1.0 + self.budget_slack) * h1 if self.t1 is None else float(self.t1)
        t2 = (1.0 + self.budget_slack) * h2 if self.t2 is None else float(self.t2)
        return t1, t2


@dataclass(frozen=True)
class MarginState:
    r: float
    xi: np.ndarray

    def __post_init__(self):
        xi = np.array(self.xi, dtype=float)
        if not self.r >= 0 or np.any(xi < 0):
            raise InputError("margin and slacks must be nonnegative")
        xi.setflags(write=False)
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "xi", xi)

    def objective(self, lam):
        return lam * float(self.xi.sum()) - self.r


class MmResult(NamedTuple):
    pair: ClassPairModel
    state: MarginState
    report: SolveReport
    certificates: tuple
    selected: tuple
    trace: tuple


def margin_term(x, theta1, theta2, sigma1=None, sigma2=None) -> float:
    """``L(theta1, x) - L(theta2, x)`` for one sample."""
    return log_likelihood(x, theta1, sigma1) - log_likelihood(x, theta2, sigma2)


def margin_terms(x, pair: ClassPairModel):
    x = np.atleast_2d(np.asarray(getattr(x, "values", x), float))
    return (log_likelihood_rows(x, pair.theta1, pair.sigma1)
            - log_likelihood_rows(x, pair.theta2, pair.sigma2))


def _lp_margin(s, lam):
    """Exact (r, xi) minimising lam*sum(xi) - r given signed margins ``s``."""
    n = s.size
    if lam * n < 1.0:
        # each unit of r then gains more than the slacks it costs: no optimum
        raise InputError(f"lambda * n = {lam * n:.6g} < 1 leaves the margin unbounded")
    c = np.r_[-1.0, np.full(n, lam)]
    a = np.hstack([np.ones((n, 1)), -np.eye(n)])  # r - xi_n <= s_n
    x, _ = solve_lp(c, a, s, [(0.0, None)] * (n + 1))
    r = max(float(x[0]), 0.0)
    xi = np.maximum(r - s, 0.0)  # tightest slacks for this r
    return MarginState(r, xi)


def init_margin(pair: ClassPairModel, x, labels, lam: float) -> MarginState:
    """Margin and slacks at fixed parameters (linear program)."""
    if not lam > 0:
        raise InputError("lambda must be positive")
    s = _signed(labels) * margin_terms(x, pair)
    return _lp_margin(s, lam)


def check_state(pair, state: MarginState, x, y, lam, budgets=None):
    """Worst breach of the margin, sign and budget constraints."""
    s = y * margin_terms(x, pair)
    worst = float(np.max(np.maximum(state.r - state.xi - s, 0.0), initial=0.0))
    worst = max(worst, max(-state.r, 0.0), float(np.max(-state.xi, initial=0.0)))
    return worst


def _certify(pair, delta):
    certs = []
    for t in (pair.theta1, pair.theta2):
        cert, _ = solve_ordering(t, delta)
        if not verify_certificate(t, cert):
            raise SolverError("ordering certificate failed verification")
        certs.append(cert)
    return tuple(certs)


def _step(pair, sel, x, y, v1, v2, state, lam, budgets, solver_cfg):
    t1_0, t2_0 = pair.theta1.theta, pair.theta2.theta
    v0 = sel.get(t1_0, t2_0)
    nv, n = len(sel), y.size
    m = pair.m
    p = m + 1
    cols = np.array([(c - 1) * m * p + i * p + k for c, k, i in sel.entries], dtype=int)
    sign = np.array([1.0 if c == 1 else -1.0 for c, _, _ in sel.entries])

    def thetas(v):
        return sel.put(t1_0, t2_0, v)

    def split(z):
        return z[:nv], z[nv], z[nv + 1:]

    def margins(z):
        v, r, xi = split(z)
        a, b = thetas(v)
        d = log_likelihood_rows(x, a, pair.sigma1) - log_likelihood_rows(x, b, pair.sigma2)
        return y * d - r + xi

    def margins_jac(z):
        v, _, _ = split(z)
        a, b = thetas(v)
        phi = fisher_matrix(x, a, b, pair.sigma1, pair.sigma2)[:, cols] * sign
        return np.hstack([y[:, None] * phi, -np.ones((n, 1)), np.eye(n)])

    def budget(z):
        a, b = thetas(split(z)[0])
        return np.array([1.0 - fitting_error(v1, a) / budgets[0],
                         1.0 - fitting_error(v2, b) / budgets[1]])

    def budget_jac(z):
        a, b = thetas(split(z)[0])
        zero = np.zeros_like(a)
        g1 = sel.scatter(fitting_error_grad(v1, a), zero) / budgets[0]
        g2 = sel.scatter(zero, fitting_error_grad(v2, b)) / budgets[1]
        return np.hstack([-np.vstack([g1, g2]), np.zeros((2, n + 1))])

    grad = np.r_[np.zeros(nv), -1.0, np.full(n, lam)]
    z0 = np.r_[v0, state.r, state.xi]
    cons = [{"type": "ineq", "fun": margins, "jac": margins_jac},
            {"type": "ineq", "fun": budget, "jac": budget_jac}]
    bounds = [(None, None)] * nv + [(0.0, None)] * (n + 1)
    z, rep = minimize_penalized(lambda z: float(grad @ z), lambda z: grad, z0, cons, bounds,
                                solver_cfg)
    v = split(z)[0]
    # exact budgets: pull the parameters back toward the feasible start
    d = v - v0
    t = feasible_fraction(lambda t: budget(np.r_[v0 + t * d, 0.0, np.zeros(n)]))
    v = v0 + t * d
    return thetas(v), rep


def learn(x1, x2, init: ClassPairModel, cfg: MmConfig = MmConfig(),
          certificates: Optional[tuple] = None,
          solver_cfg: PenalizedConfig = PenalizedConfig()) -> MmResult:
    """Refine ``init`` to widen the log-likelihood-ratio margin."""
    v1 = np.asarray(getattr(x1, "values", x1), float)
    v2 = np.asarray(getattr(x2, "values", x2), float)
    x = np.vstack([v1, v2])
    y = np.r_[np.ones(len(v1)), -np.ones(len(v2))]
    lam = cfg.lam_for(y.size)
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
    state = _lp_margin(y * margin_terms(x, pair), lam)
    f = state.objective(lam)
    trace = [f]

    n_free = int(np.count_nonzero(pair.theta1.theta) + np.count_nonzero(pair.theta2.theta))
    k = n_free if cfg.k_edges is None else cfg.k_edges
    entries = ()
    if k:
        phi = fisher_matrix(x, pair.theta1, pair.theta2, pair.sigma1, pair.sigma2)
        entries = select_edges(phi, y, k, (pair.theta1, pair.theta2))
    sel = Selection(entries)
    if not len(sel):
        return MmResult(pair, state, SolveReport(True, 0, f, 0.0, "nothing to optimise"),
                        certs, entries, tuple(trace))

    converged = False
    it = 0
    for it in range(1, cfg.max_outer_iters + 1):
        (a, b), step = _step(pair, sel, x, y, v1, v2, state, lam, (t1, t2), solver_cfg)
        cand = pair.replace(theta1=type(pair.theta1)(a), theta2=type(pair.theta2)(b))
        cand_state = _lp_margin(y * margin_terms(x, cand), lam)
        f_new = cand_state.objective(lam)
        log.debug("mm iter %d: objective %.6g -> %.6g (%s)", it, f, f_new, step.note)
        if not f_new < f:
            converged = True
            break
        rel = (f - f_new) / max(abs(f), 1e-300)
        pair, state, f = cand, cand_state, f_new
        certs = _certify(pair, cfg.delta)
        trace.append(f)
        if rel < cfg.tol:
            converged = True
            break

    h1, h2 = pair.fitting_errors(v1, v2)
    viol = max(h1 - t1, h2 - t2, check_state(pair, state, x, y, lam), 0.0)
    note = "" if converged else "outer iteration cap reached"
    return MmResult(pair, state, SolveReport(converged, it, f, viol, note), certs, entries,
                    tuple(trace))
