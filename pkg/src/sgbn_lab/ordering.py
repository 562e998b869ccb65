"""Topological-ordering certificates for acyclicity.

A certificate ``(o, upsilon, delta)`` witnesses that the node-to-node block of
``theta`` is acyclic when, for every ordered pair ``i != j``::

    o[j] - o[i] >= delta / m - upsilon[i, j]        (a)
    upsilon[i, j] >= 0                              (b)
    upsilon[i, j] * theta[i, j] == 0                (c)
    0 <= o[i] <= delta                              (d)

With theta fixed, choosing (o, upsilon) to minimise
``sum upsilon[i, j] * |theta[i, j]|`` is a linear program whose value is zero
exactly when the structure is a DAG.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CycleError, DimensionError, InputError
from .model import SgbnParams, structure_of, topological_order
from .solvers import solve_lp

DEFAULT_DELTA = 1.0
VERIFY_TOL = 1e-8


@dataclass(frozen=True)
class OrderingCertificate:
    o: np.ndarray
    upsilon: np.ndarray
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        o = np.array(self.o, dtype=float)
        u = np.array(self.upsilon, dtype=float)
        if o.ndim != 1 or u.shape != (o.size, o.size):
            raise DimensionError("certificate shapes disagree")
        if not self.delta > 0:
            raise InputError("delta must be positive")
        o.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "o", o)
        object.__setattr__(self, "upsilon", u)
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def m(self):
        return self.o.size

    def to_dict(self):
        return {"o": self.o.tolist(), "upsilon": self.upsilon.tolist(), "delta": self.delta}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["o"], float), np.asarray(d["upsilon"], float), float(d["delta"]))


def _weights(theta):
    t = theta.theta if isinstance(theta, SgbnParams) else np.asarray(theta, dtype=float)
    return t[:-1] if t.shape[0] == t.shape[1] + 1 else t


def fill_value(m, delta):
    """Upsilon value that satisfies (a) for any admissible o."""
    return (1.0 / m + 1.0) * delta


def certificate_violations(theta, cert: OrderingCertificate):
    """Worst breach of each of the four constraint families, keyed a-d."""
    w = _weights(theta)
    m = w.shape[0]
    if cert.m != m:
        raise DimensionError("certificate and theta sizes differ")
    o, u, d = cert.o, cert.upsilon, cert.delta
    off = ~np.eye(m, dtype=bool)
    gap = (o[None, :] - o[:, None]) - (d / m - u)
    return {
        "a": float(np.max(np.maximum(-gap, 0.0)[off], initial=0.0)),
        "b": float(np.max(np.maximum(-u, 0.0)[off], initial=0.0)),
        "c": float(np.max(np.abs(u * w)[off], initial=0.0)),
        "d": float(max(np.max(-o, initial=0.0), np.max(o - d, initial=0.0), 0.0)),
    }


def verify_certificate(theta, cert: OrderingCertificate, tol: float = VERIFY_TOL) -> bool:
    return all(v <= tol for v in certificate_violations(theta, cert).values())


def sufficiency_certificate(g, delta=DEFAULT_DELTA) -> OrderingCertificate:
    """Certificate built from a topological sort of an acyclic structure.

    Node at sort position k gets o = k * delta / m; edges get upsilon 0 and
    every non-edge the fill value.
    """
    g = np.asarray(g, dtype=bool)
    m = g.shape[0]
    order = topological_order(g)
    if order is None:
        raise CycleError("structure has a directed cycle; no certificate exists")
    pos = np.empty(m)
    pos[order] = np.arange(m)
    o = pos * delta / m
    u = np.where(g, 0.0, fill_value(m, delta))
    np.fill_diagonal(u, 0.0)
    return OrderingCertificate(o, u, delta)


def active_constraints(theta) -> set:
    w = _weights(theta)
    idx = np.argwhere(w != 0)
    return {(int(i), int(j)) for i, j in idx if i != j}


def ordering_objective(theta, cert: OrderingCertificate) -> float:
    w = _weights(theta)
    u = cert.upsilon.copy()
    np.fill_diagonal(u, 0.0)
    return float(np.sum(u * np.abs(w)))


def _ordering_lp(w, delta, pairs):
    """LP over o and one upsilon per listed pair. Returns o.

    A second pass stays on the optimal face and breaks ties with a secondary
    cost that grows with the pair's rank. Exact ties are common (two
    standardised variables regress on each other with equal weights) and the
    symmetric optimum spreads upsilon evenly over a cycle, which lets the
    alternating fit stall with every arc of the cycle alive; the tie-broken
    optimum is an extreme point that loads one arc per tie.
    """
    m = w.shape[0]
    k = len(pairs)
    cost = np.array([abs(w[i, j]) for i, j in pairs])
    c = np.concatenate([np.zeros(m), cost])
    a = np.zeros((k, m + k))
    for r, (i, j) in enumerate(pairs):
        # o_i - o_j - u_ij <= -delta/m
        a[r, i] += 1.0
        a[r, j] -= 1.0
        a[r, m + r] = -1.0
    b = np.full(k, -delta / m)
    bounds = [(0.0, delta)] * m + [(0.0, None)] * k
    x, best = solve_lp(c, a, b, bounds)
    if k > 1 and best > 0:
        tie = np.concatenate([np.zeros(m), cost * (1.0 + np.arange(k) / k)])
        a2 = np.vstack([a, c])
        b2 = np.append(b, best + 1e-10 * max(1.0, abs(best)))
        x, _ = solve_lp(tie, a2, b2, bounds)
    return np.clip(x[:m], 0.0, delta)


def solve_ordering(theta, delta: float = DEFAULT_DELTA, reduced: bool = True):
    """Minimise sum upsilon * |theta| over certificates with theta fixed.

    Returns ``(certificate, objective)``. Acyclic structures short-cut to the
    topological-sort certificate (objective exactly 0). Otherwise the LP is
    solved over the active pairs (``reduced``) or over every pair, upsilon is
    recomputed as the smallest value (a) allows for the optimal o, and
    inactive pairs receive the fill value.
    """
    if not delta > 0:
        raise InputError("delta must be positive")
    w = _weights(theta)
    m = w.shape[0]
    g = w != 0
    np.fill_diagonal(g, False)
    if topological_order(g) is not None:
        cert = sufficiency_certificate(g, delta)
        return cert, 0.0
    if reduced:
        pairs = sorted(active_constraints(w))
    else:
        pairs = [(i, j) for i in range(m) for j in range(m) if i != j]
    o = _ordering_lp(w, delta, pairs)
    u = np.full((m, m), fill_value(m, delta))
    tight = np.maximum(delta / m - (o[None, :] - o[:, None]), 0.0)
    u[g] = tight[g]
    np.fill_diagonal(u, 0.0)
    cert = OrderingCertificate(o, u, delta)
    return cert, ordering_objective(w, cert)


def lambda_dag_bound(m: int, n: int, lambda1: float, delta: float = DEFAULT_DELTA) -> float:
    """Acyclicity penalty weight above which the single-class fit is a DAG."""
    if m < 1 or n < 2:
        raise InputError("need m >= 1 and n >= 2")
    if not lambda1 > 0 or not delta > 0:
        raise InputError("lambda1 and delta must be positive")
    num = 2.0 * m * (m - 2) * (n - 1) ** 2 + m * lambda1 * (2.0 * n - 2.0 - lambda1)
    return num / (lambda1 * (1.0 + m) * delta)


__all__ = [
    "OrderingCertificate", "verify_certificate", "certificate_violations",
    "sufficiency_certificate", "active_constraints", "solve_ordering",
    "ordering_objective", "lambda_dag_bound", "fill_value", "structure_of",
]
