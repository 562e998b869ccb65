import itertools

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_dag(m, p, rng):
    order = rng.permutation(m)
    g = np.zeros((m, m), dtype=bool)
    for a in range(m):
        for b in range(a + 1, m):
            if rng.random() < p:
                g[order[a], order[b]] = True
    return g


def random_cyclic(m, rng):
    """A random graph that is guaranteed to contain a directed cycle."""
    g = random_dag(m, 0.3, rng)
    k = rng.integers(2, m + 1)
    cyc = rng.permutation(m)[:k]
    for a, b in zip(cyc, np.roll(cyc, -1)):
        g[a, b] = True
    return g


def theta_from(g, rng, low=0.3, high=1.0):
    m = g.shape[0]
    t = np.zeros((m + 1, m))
    t[:m][g] = rng.uniform(low, high, g.sum()) * rng.choice([-1, 1], g.sum())
    t[m] = rng.normal(size=m) * 0.1
    return t


def all_dags(m):
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    out = []
    # each unordered pair: absent, i->j, j->i
    for states in itertools.product(range(3), repeat=len(pairs)):
        g = np.zeros((m, m), dtype=bool)
        for (i, j), s in zip(pairs, states):
            if s == 1:
                g[i, j] = True
            elif s == 2:
                g[j, i] = True
        from sgbn_lab.model import is_dag
        if is_dag(g):
            out.append(g)
    return out


@pytest.fixture(scope="session")
def small_pair():
    """Train split and OR-SGBN init pair of a small two-class problem."""
    from sgbn_lab.bench import make_two_class, split_two_class
    from sgbn_lab.experiments import fit_init_pair

    x1, x2 = make_two_class(6, 80, 0.4, 0.8, seed=3)
    sp = split_two_class(x1, x2, seed=4)
    pair, certs = fit_init_pair(sp.train1, sp.train2, 0.05)
    return sp, pair, certs
