"""Structure-recovery experiments and the synthetic two-class generator."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import CycleError, DimensionError, InputError
from .model import (Dataset, arcs_to_adjacency, dag_to_cpdag, is_dag, standardize,
                    topological_order)

COEF_LOW, COEF_HIGH = 0.5, 1.0


@dataclass(frozen=True)
class BenchmarkNetwork:
    name: str
    m: int
    arcs: tuple  # 0-based (parent, child) pairs

    def __post_init__(self):
        arcs = tuple(sorted({(int(i), int(j)) for i, j in self.arcs}))
        if self.m < 1:
            raise InputError("network needs at least one node")
        for i, j in arcs:
            if not (0 <= i < self.m and 0 <= j < self.m) or i == j:
                raise InputError(f"bad arc ({i + 1}, {j + 1})")
        object.__setattr__(self, "arcs", arcs)
        if not is_dag(self.adjacency()):
            raise CycleError(f"network {self.name!r} has a directed cycle")

    def adjacency(self):
        return arcs_to_adjacency(self.m, self.arcs)

    def to_dict(self):
        return {"name": self.name, "m": self.m, "arcs": [[i + 1, j + 1] for i, j in self.arcs]}


@dataclass(frozen=True)
class RecoveryMetrics:
    false_edges: int
    missing_edges: int
    total_errors: int
    pdag_errors: int

    def __post_init__(self):
        if self.total_errors != self.false_edges + self.missing_edges:
            raise ValueError("total_errors must equal false + missing")


def builtin_chain(m: int = 7) -> BenchmarkNetwork:
    if m < 1:
        raise InputError("chain needs m >= 1")
    return BenchmarkNetwork(f"chain{m}", m, tuple((i, i + 1) for i in range(m - 1)))


def random_network(m: int, edge_prob: float, rng, name="random") -> BenchmarkNetwork:
    """Random DAG: arcs i -> j for i before j in a random node order."""
    order = rng.permutation(m)
    arcs = [(int(order[a]), int(order[b])) for a in range(m) for b in range(a + 1, m)
            if rng.random() < edge_prob]
    return BenchmarkNetwork(name, m, tuple(arcs))


def load_structure(path) -> BenchmarkNetwork:
    """Read ``{"name", "m", "arcs": [[i, j], ...]}`` with 1-indexed arcs."""
    try:
        with open(path) as fh:
            d = json.load(fh)
        m = int(d["m"])
        arcs = [(int(a) - 1, int(b) - 1) for a, b in d["arcs"]]
        name = str(d.get("name", path))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read structure file {path}: {exc}") from exc
    return BenchmarkNetwork(name, m, tuple(arcs))


def sample_coefficients(net: BenchmarkNetwork, rng):
    """``B[i, j]`` for every arc, magnitude U(0.5, 1) with a random sign."""
    b = np.zeros((net.m, net.m))
    for i, j in net.arcs:
        b[i, j] = rng.uniform(COEF_LOW, COEF_HIGH) * rng.choice((-1.0, 1.0))
    return b


def simulate(b, n: int, rng):
    """Rows of the linear SEM ``x_j = sum_i B[i, j] x_i + N(0, 1)``."""
    b = np.asarray(b, dtype=float)
    m = b.shape[0]
    order = topological_order(b != 0)
    if order is None:
        raise CycleError("coefficient matrix is cyclic")
    x = rng.standard_normal((n, m))
    for j in order:
        x[:, j] += x @ b[:, j]
    return x


def sample_data(net: BenchmarkNetwork, n: int, seed) -> Dataset:
    if n < 2:
        raise InputError("need n >= 2")
    rng = np.random.default_rng(seed)
    b = sample_coefficients(net, rng)
    return standardize(Dataset(simulate(b, n, rng)))


def _est_adjacency(estimated, m):
    g = np.asarray(estimated, dtype=bool)
    if g.shape == (m + 1, m):
        g = g[:m]
    if g.shape != (m, m):
        raise DimensionError("estimated structure and truth differ in size")
    g = g.copy()
    np.fill_diagonal(g, False)
    return g


def pdag_errors(estimated, truth) -> int:
    """Disagreements between the two equivalence-class graphs.

    One unit for every skeleton edge found in only one of them, and one for
    every shared skeleton edge whose status (directed/undirected) or direction
    differs.
    """
    t = truth.adjacency() if isinstance(truth, BenchmarkNetwork) else np.asarray(truth, bool)
    e = _est_adjacency(estimated, t.shape[0])
    if not is_dag(e):
        raise CycleError("estimated structure is cyclic")
    ce, ct = dag_to_cpdag(e), dag_to_cpdag(t)
    iu = np.triu_indices(t.shape[0], 1)
    sk_e, sk_t = ce.skeleton[iu], ct.skeleton[iu]
    count = int(np.sum(sk_e != sk_t))
    for a, b in zip(*iu):
        if ce.skeleton[a, b] and ct.skeleton[a, b]:
            se = (ce.compelled[a, b], ce.compelled[b, a])
            st = (ct.compelled[a, b], ct.compelled[b, a])
            count += se != st
    return count


def recovery_metrics(estimated, truth: BenchmarkNetwork) -> RecoveryMetrics:
    t = truth.adjacency()
    e = _est_adjacency(estimated, truth.m)
    false = int(np.sum(e & ~t))
    missing = int(np.sum(t & ~e))
    return RecoveryMetrics(false, missing, false + missing, pdag_errors(e, truth))


# ---------------------------------------------------------------------------
# feature-ordering invariance

def restore_order(theta, perm):
    """Map a fit on ``x[:, perm]`` back to the original column order."""
    t = np.asarray(theta.theta if hasattr(theta, "theta") else theta, dtype=float)
    m = t.shape[1]
    perm = np.asarray(perm)
    out = np.zeros_like(t)
    out[np.ix_(perm, perm)] = t[:m]
    out[m, perm] = t[m]
    return out


def compare_params(a, b):
    """(Euclidean distance, Pearson r) over the off-diagonal node weights."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m = a.shape[1]
    mask = ~np.eye(m, dtype=bool)
    va, vb = a[:m][mask], b[:m][mask]
    dist = float(np.linalg.norm(va - vb))
    if np.array_equal(va, vb):
        return dist, 1.0
    sa, sb = va.std(), vb.std()
    if sa == 0 or sb == 0:
        return dist, 0.0
    return dist, float(np.corrcoef(va, vb)[0, 1])


def permutation_invariance_test(x: Dataset, fit_config, trials: int, seed,
                                identity: bool = False):
    """Mean (distance, correlation) between permuted-and-restored fits and the
    fit in the original order."""
    from .orsgbn import fit

    if trials < 1:
        raise InputError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    base = fit(x, fit_config).params.theta
    dists, cors = [], []
    for _ in range(trials):
        perm = np.arange(x.m) if identity else rng.permutation(x.m)
        xp = Dataset(x.values[:, perm], None, tuple(x.names[p] for p in perm), x.standardized)
        restored = restore_order(fit(xp, fit_config).params, perm)
        d, r = compare_params(base, restored)
        dists.append(d)
        cors.append(r)
    return float(np.mean(dists)), float(np.mean(cors))


# ---------------------------------------------------------------------------
# two-class synthetic data

class TwoClassTruth(NamedTuple):
    network: BenchmarkNetwork
    b1: np.ndarray
    b2: np.ndarray


def two_class_truth(m: int, perturb_fraction: float, perturb_scale: float, seed,
                    edge_prob: float = 0.3) -> TwoClassTruth:
    """Generating coefficients of both classes (same seed use as make_two_class)."""
    if not 0 <= perturb_fraction <= 1:
        raise InputError("perturb_fraction must lie in [0, 1]")
    if perturb_scale < 0:
        raise InputError("perturb_scale must be nonnegative")
    model_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    net = random_network(m, edge_prob, model_rng, name=f"two-class-{m}")
    b1 = sample_coefficients(net, model_rng)
    b2 = b1.copy()
    k = int(round(perturb_fraction * len(net.arcs)))
    if k and perturb_scale:
        picks = model_rng.choice(len(net.arcs), size=k, replace=False)
        for p in sorted(picks):
            i, j = net.arcs[p]
            b2[i, j] += perturb_scale * model_rng.choice((-1.0, 1.0))
    return TwoClassTruth(net, b1, b2)


def make_two_class(m: int, n_per_class: int, perturb_fraction: float, perturb_scale: float,
                   seed, edge_prob: float = 0.3):
    """Two unstandardised datasets sharing one DAG; class 2 perturbs some arc weights."""
    truth = two_class_truth(m, perturb_fraction, perturb_scale, seed, edge_prob)
    ss = np.random.SeedSequence(seed).spawn(3)
    x1 = simulate(truth.b1, n_per_class, np.random.default_rng(ss[1]))
    x2 = simulate(truth.b2, n_per_class, np.random.default_rng(ss[2]))
    return Dataset(x1), Dataset(x2)


def truth_pair_values(truth: TwoClassTruth):
    """Generating models as parameter grids (bias 0)."""
    m = truth.network.m
    pad = np.zeros((1, m))
    return np.vstack([truth.b1, pad]), np.vstack([truth.b2, pad])


class Split(NamedTuple):
    train1: np.ndarray
    train2: np.ndarray
    test1: np.ndarray
    test2: np.ndarray


def split_two_class(x1, x2, seed, train_fraction: float = 0.5) -> Split:
    """Random per-class train/test split, standardised with pooled training moments."""
    rng = np.random.default_rng(seed)
    v1 = x1.values if isinstance(x1, Dataset) else np.asarray(x1, float)
    v2 = x2.values if isinstance(x2, Dataset) else np.asarray(x2, float)
    parts = []
    for v in (v1, v2):
        idx = rng.permutation(v.shape[0])
        cut = int(round(train_fraction * v.shape[0]))
        parts.append((v[np.sort(idx[:cut])], v[np.sort(idx[cut:])]))
    pooled = np.vstack([parts[0][0], parts[1][0]])
    mu = pooled.mean(axis=0)
    sd = pooled.std(axis=0, ddof=1)
    if np.any(sd <= 0):
        raise InputError("a column is constant on the training rows")
    z = [(a - mu) / sd for pair in parts for a in pair]
    return Split(z[0], z[2], z[1], z[3])
