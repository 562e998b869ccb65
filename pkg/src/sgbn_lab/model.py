"""Core data types, Gaussian likelihoods and graph-structure operations.

Parameter layout
----------------
``theta`` has shape ``(m + 1, m)``. Column ``j`` holds the regression of node
``j`` on every node: ``theta[i, j]`` is the coefficient of parent ``i`` and the
last row is the per-node bias (a virtual always-one input). The diagonal is
kept at zero and the bias row never takes part in structure or DAG checks.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import log, pi, sqrt
from typing import Optional, Sequence

import numpy as np

from .errors import CycleError, DimensionError, InputError, ZeroVarianceError

DEFAULT_TAU = 0.01
_LOG_SQRT_2PI = 0.5 * log(2.0 * pi)


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True, order="C")  # fixed layout keeps BLAS sums reproducible
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """``n x m`` sample matrix with optional class labels in {1, 2}."""

    values: np.ndarray
    labels: Optional[np.ndarray] = None
    names: Optional[tuple] = None
    standardized: bool = False

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 2:
            raise DimensionError(f"values must be 2-D, got shape {v.shape}")
        n, m = v.shape
        if n < 2 or m < 1:
            raise DimensionError(f"need n >= 2 and m >= 1, got n={n}, m={m}")
        if not np.all(np.isfinite(v)):
            raise InputError("dataset contains non-finite values")
        object.__setattr__(self, "values", v)
        if self.labels is not None:
            lab = _frozen(self.labels, dtype=int)
            if lab.shape != (n,):
                raise DimensionError("labels must have one entry per row")
            if not np.all((lab == 1) | (lab == 2)):
                raise InputError("labels must be 1 or 2")
            object.__setattr__(self, "labels", lab)
        names = self.names
        if names is None:
            names = tuple(f"x{i + 1}" for i in range(m))
        names = tuple(str(s) for s in names)
        if len(names) != m:
            raise DimensionError("one name per column required")
        object.__setattr__(self, "names", names)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def m(self):
        return self.values.shape[1]

    def subset(self, rows):
        rows = np.asarray(rows)
        lab = None if self.labels is None else self.labels[rows]
        return Dataset(self.values[rows], lab, self.names, standardized=False)

    def with_values(self, values, standardized=False):
        return Dataset(values, self.labels, self.names, standardized)

    def class_rows(self, c):
        if self.labels is None:
            raise InputError("dataset has no labels")
        return self.values[self.labels == c]


@dataclass(frozen=True)
class SgbnParams:
    theta: np.ndarray

    def __post_init__(self):
        t = _frozen(self.theta)
        if t.ndim != 2 or t.shape[0] != t.shape[1] + 1:
            raise DimensionError(f"theta must have shape (m+1, m), got {t.shape}")
        if np.any(np.diag(t[:-1]) != 0.0):
            raise InputError("theta has a nonzero self-loop on its diagonal")
        if not np.all(np.isfinite(t)):
            raise InputError("theta contains non-finite values")
        object.__setattr__(self, "theta", t)

    @property
    def m(self):
        return self.theta.shape[1]

    @property
    def weights(self):
        """The ``m x m`` node-to-node block (bias row dropped)."""
        return self.theta[:-1]

    @property
    def bias(self):
        return self.theta[-1]

    @classmethod
    def zeros(cls, m):
        return cls(np.zeros((m + 1, m)))


@dataclass(frozen=True)
class NoiseModel:
    sigma: np.ndarray

    def __post_init__(self):
        s = _frozen(self.sigma)
        if s.ndim != 1 or s.size < 1:
            raise DimensionError("sigma must be a non-empty vector")
        if not np.all(s > 0) or not np.all(np.isfinite(s)):
            raise InputError("sigma must be positive and finite")
        object.__setattr__(self, "sigma", s)

    @property
    def m(self):
        return self.sigma.size

    @classmethod
    def ones(cls, m):
        return cls(np.ones(m))


@dataclass(frozen=True)
class Cpdag:
    """Completed PDAG.

    ``skeleton`` is a symmetric boolean matrix. ``compelled[i, j]`` marks an
    edge whose orientation i -> j is shared by the whole equivalence class;
    skeleton edges without a compelled orientation are undirected.
    """

    skeleton: np.ndarray
    compelled: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "skeleton", _frozen(self.skeleton, bool))
        object.__setattr__(self, "compelled", _frozen(self.compelled, bool))

    @property
    def undirected(self):
        return self.skeleton & ~self.compelled & ~self.compelled.T

    def key(self):
        return (self.skeleton.tobytes(), self.compelled.tobytes())

    def __eq__(self, other):
        if not isinstance(other, Cpdag):
            return NotImplemented
        return (np.array_equal(self.skeleton, other.skeleton)
                and np.array_equal(self.compelled, other.compelled))

    def __hash__(self):
        return hash(self.key())


# ---------------------------------------------------------------------------
# data transforms and likelihoods

def _as_matrix(x):
    if isinstance(x, Dataset):
        return x.values
    return np.asarray(x, dtype=float)


def _theta(theta):
    return theta.theta if isinstance(theta, SgbnParams) else np.asarray(theta, float)


def _sigma(sigma, m):
    if sigma is None:
        return np.ones(m)
    s = sigma.sigma if isinstance(sigma, NoiseModel) else np.asarray(sigma, float)
    if s.shape != (m,):
        raise DimensionError(f"sigma has {s.size} entries, expected {m}")
    return s


def column_moments(values):
    values = np.asarray(values, dtype=float)
    return values.mean(axis=0), values.std(axis=0, ddof=1)


def standardize(d: Dataset) -> Dataset:
    """Zero mean, unit sample std (divisor n-1) per column."""
    mean, std = column_moments(d.values)
    for j, s in enumerate(std):
        # relative test so that tiny-but-real scales survive
        if not s > 1e-12 * max(1.0, abs(mean[j])):
            raise ZeroVarianceError(j, d.names[j])
    z = (d.values - mean) / std
    # second pass removes the rounding residue of the first
    z = z - z.mean(axis=0)
    z = z / z.std(axis=0, ddof=1)
    return Dataset(z, d.labels, d.names, standardized=True)


def augment(values):
    """Append the always-one bias input as a last column."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    return np.hstack([values, np.ones((values.shape[0], 1))])


def residuals(x, theta):
    """``X - [X, 1] @ theta`` for a sample matrix (or single sample)."""
    t = _theta(theta)
    v = _as_matrix(x)
    single = v.ndim == 1
    v = np.atleast_2d(v)
    if v.shape[1] != t.shape[1]:
        raise DimensionError(f"sample has {v.shape[1]} entries, theta expects {t.shape[1]}")
    r = v - augment(v) @ t
    return r[0] if single else r


def log_likelihood_rows(x, theta, sigma=None):
    """Per-row Gaussian BN log-likelihood."""
    t = _theta(theta)
    r = np.atleast_2d(residuals(x, t))
    s = _sigma(sigma, t.shape[1])
    const = np.sum(np.log(s)) + t.shape[1] * _LOG_SQRT_2PI
    return -0.5 * np.sum((r / s) ** 2, axis=1) - const


def log_likelihood(x, theta, sigma=None) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionError("log_likelihood takes a single sample vector")
    return float(log_likelihood_rows(x[None, :], theta, sigma)[0])


def fitting_error(x, theta) -> float:
    """Total squared regression residual over all nodes."""
    r = residuals(_as_matrix(x), theta)
    return float(np.sum(r * r))


# ---------------------------------------------------------------------------
# structures

def structure_of(theta, tau: float = DEFAULT_TAU) -> np.ndarray:
    if tau < 0:
        raise InputError("tau must be nonnegative")
    w = _theta(theta)[:-1]
    g = np.abs(w) > tau
    np.fill_diagonal(g, False)
    return g


def _square_bool(g):
    g = np.asarray(g).astype(bool)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DimensionError("adjacency matrix must be square")
    return g


def reachability(g) -> np.ndarray:
    """Transitive closure over paths of length >= 1."""
    p = _square_bool(g).copy()
    for k in range(p.shape[0]):
        p |= np.outer(p[:, k], p[k, :])
    return p


def topological_order(g) -> Optional[list]:
    """Kahn ordering (smallest index first among ready nodes) or None if cyclic."""
    g = _square_bool(g)
    indeg = g.sum(axis=0).astype(int)
    ready = sorted(np.flatnonzero(indeg == 0).tolist())
    order = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        for w in np.flatnonzero(g[v]):
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(int(w))
        ready.sort()
    return order if len(order) == g.shape[0] else None


def is_dag(g) -> bool:
    return topological_order(g) is not None


def v_structures(g) -> set:
    """Triples (a, c, b) with a -> c <- b, a < b, a and b nonadjacent."""
    g = _square_bool(g)
    adj = g | g.T
    out = set()
    for c in range(g.shape[0]):
        pa = np.flatnonzero(g[:, c])
        for ia, a in enumerate(pa):
            for b in pa[ia + 1:]:
                if not adj[a, b]:
                    out.add((int(a), c, int(b)))
    return out


def _meek_closure(directed, undirected):
    """Apply Meek's rules R1-R4 until nothing changes. Mutates the inputs."""
    m = directed.shape[0]
    adj = lambda a, b: directed[a, b] or directed[b, a] or undirected[a, b]  # noqa: E731

    def orient(a, b):
        directed[a, b] = True
        undirected[a, b] = undirected[b, a] = False

    changed = True
    while changed:
        changed = False
        for a in range(m):
            for b in range(m):
                if not undirected[a, b]:
                    continue
                # R1: c -> a - b, c and b nonadjacent
                if any(directed[c, a] and not adj(c, b) for c in range(m) if c != b):
                    orient(a, b)
                    changed = True
                    continue
                # R2: a -> c -> b with a - b
                if any(directed[a, c] and directed[c, b] for c in range(m)):
                    orient(a, b)
                    changed = True
                    continue
                # R3: a - c -> b, a - d -> b, c and d nonadjacent
                cs = [c for c in range(m) if undirected[a, c] and directed[c, b]]
                if any(not adj(c, d) for i, c in enumerate(cs) for d in cs[i + 1:]):
                    orient(a, b)
                    changed = True
                    continue
                # R4: a ~ c -> d -> b, a - d adjacent, c and b nonadjacent
                hit = False
                for c in range(m):
                    if c in (a, b) or not adj(a, c) or adj(c, b):
                        continue
                    for d in range(m):
                        if d not in (a, b, c) and directed[c, d] and directed[d, b] and undirected[a, d]:
                            hit = True
                            break
                    if hit:
                        break
                if hit:
                    orient(a, b)
                    changed = True
    return directed, undirected


def dag_to_cpdag(g) -> Cpdag:
    """Equivalence-class representative: v-structures, then Meek closure."""
    g = _square_bool(g)
    if not is_dag(g):
        raise CycleError("dag_to_cpdag needs an acyclic graph")
    skeleton = g | g.T
    directed = np.zeros_like(g)
    for a, c, b in v_structures(g):
        directed[a, c] = directed[b, c] = True
    undirected = skeleton & ~directed & ~directed.T
    directed, _ = _meek_closure(directed, undirected)
    return Cpdag(skeleton, directed)


def arcs_to_adjacency(m: int, arcs: Sequence) -> np.ndarray:
    g = np.zeros((m, m), dtype=bool)
    for i, j in arcs:
        g[i, j] = True
    return g
