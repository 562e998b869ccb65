import itertools

import numpy as np
import pytest

from sgbn_lab.errors import CycleError, InputError
from sgbn_lab.model import is_dag, structure_of
from sgbn_lab.ordering import (OrderingCertificate, active_constraints, fill_value,
                               lambda_dag_bound, ordering_objective, solve_ordering,
                               sufficiency_certificate, verify_certificate)

from conftest import random_cyclic, random_dag, theta_from


def chain_theta(m=3):
    t = np.zeros((m + 1, m))
    for i in range(m - 1):
        t[i, i + 1] = 0.8
    return t


def lattice_value(w, delta):
    """Exact LP optimum by enumerating o on the grid {0, d/m, ..., d}^m.

    The constraint matrix is a network matrix with right-hand sides that are
    multiples of d/m, so an optimal vertex lies on this grid.
    """
    m = w.shape[0]
    grid = np.arange(m + 1) * delta / m
    a = np.abs(w).copy()
    np.fill_diagonal(a, 0.0)
    best = np.inf
    for o in itertools.product(grid, repeat=m):
        o = np.array(o)
        need = np.maximum(delta / m - (o[None, :] - o[:, None]), 0.0)
        best = min(best, float(np.sum(need * a)))
    return best


def permutation_value(w, delta):
    """Best cost over node orderings with evenly spaced positions."""
    m = w.shape[0]
    a = np.abs(w).copy()
    np.fill_diagonal(a, 0.0)
    best = np.inf
    for perm in itertools.permutations(range(m)):
        o = np.empty(m)
        o[list(perm)] = np.arange(m) * delta / m
        need = np.maximum(delta / m - (o[None, :] - o[:, None]), 0.0)
        best = min(best, float(np.sum(need * a)))
    return best


def test_chain_certificate_by_hand():
    d = 1.0
    u = np.full((3, 3), 2 * d)
    u[0, 1] = u[1, 2] = 0.0
    np.fill_diagonal(u, 0.0)
    cert = OrderingCertificate(np.array([0, d / 3, 2 * d / 3]), u, d)
    assert verify_certificate(chain_theta(), cert, 1e-8)


def test_two_cycle_has_no_certificate(rng):
    t = np.zeros((3, 2))
    t[0, 1] = t[1, 0] = 0.5
    for _ in range(200):
        o = rng.uniform(0, 1, 2)
        u = rng.uniform(0, 3, (2, 2)) * (rng.random((2, 2)) < 0.5)
        np.fill_diagonal(u, 0)
        assert not verify_certificate(t, OrderingCertificate(o, u, 1.0))
    _, obj = solve_ordering(t)
    assert obj > 0


def test_sufficiency_certificate_random_dags(rng):
    for _ in range(50):
        m = int(rng.integers(1, 9))
        g = random_dag(m, 0.4, rng)
        t = theta_from(g, rng)
        d = float(rng.uniform(0.5, 3.0))
        cert = sufficiency_certificate(g, d)
        assert verify_certificate(t, cert)
        assert cert.upsilon[~g & ~np.eye(m, dtype=bool)] == pytest.approx(fill_value(m, d))


def test_sufficiency_rejects_cycle(rng):
    with pytest.raises(CycleError):
        sufficiency_certificate(random_cyclic(5, rng))


def test_solve_ordering_dag_zero(rng):
    for _ in range(20):
        g = random_dag(6, 0.4, rng)
        t = theta_from(g, rng)
        cert, obj = solve_ordering(t)
        assert obj == 0.0
        assert np.all(cert.upsilon[g] == 0.0)
        assert verify_certificate(t, cert)


def test_solve_ordering_matches_lattice_oracle(rng):
    for _ in range(25):
        t = rng.normal(size=(5, 4)) * (rng.random((5, 4)) < 0.6)
        np.fill_diagonal(t[:4], 0.0)
        d = float(rng.choice([1.0, 2.5]))
        cert, obj = solve_ordering(t, d)
        assert obj == pytest.approx(lattice_value(t[:4], d), abs=1e-8)
        assert obj <= permutation_value(t[:4], d) + 1e-9
        assert obj == pytest.approx(ordering_objective(t, cert), abs=1e-12)
        # hard constraints (a), (b), (d) hold exactly
        o, u = cert.o, cert.upsilon
        off = ~np.eye(4, dtype=bool)
        assert np.all(((o[None, :] - o[:, None]) - (d / 4 - u))[off] >= -1e-9)
        assert np.all(u >= 0) and np.all((o >= 0) & (o <= d))


def test_reduced_equals_full(rng):
    for _ in range(30):
        m = int(rng.integers(2, 6))
        t = rng.normal(size=(m + 1, m)) * (rng.random((m + 1, m)) < 0.4)
        np.fill_diagonal(t[:m], 0.0)
        _, a = solve_ordering(t, 1.0, reduced=True)
        _, b = solve_ordering(t, 1.0, reduced=False)
        assert a == pytest.approx(b, abs=1e-8)


def test_cyclic_positive_and_relabel_invariant(rng):
    for _ in range(30):
        m = int(rng.integers(2, 7))
        g = random_cyclic(m, rng)
        t = theta_from(g, rng)
        _, obj = solve_ordering(t)
        assert obj > 0
        p = rng.permutation(m)
        tp = np.vstack([t[:m][np.ix_(p, p)], t[m][p]])
        _, objp = solve_ordering(tp)
        assert objp == pytest.approx(obj, abs=1e-8)


def test_verified_certificate_implies_dag(rng):
    for _ in range(60):
        m = int(rng.integers(2, 7))
        t = rng.normal(size=(m + 1, m)) * (rng.random((m + 1, m)) < 0.35)
        np.fill_diagonal(t[:m], 0.0)
        cert, obj = solve_ordering(t)
        if verify_certificate(t, cert, 0.0):
            assert is_dag(structure_of(t, 0.0))
        assert (obj == 0.0) == is_dag(structure_of(t, 0.0))


def test_active_constraints():
    assert active_constraints(np.zeros((4, 3))) == set()
    assert active_constraints(chain_theta(4)) == {(0, 1), (1, 2), (2, 3)}
    t = chain_theta(3)
    t[3, 0] = 5.0       # bias never enters
    assert active_constraints(t) == {(0, 1), (1, 2)}


def test_lambda_dag_bound_values():
    assert lambda_dag_bound(3, 11, 1.0, 1.0) == pytest.approx(164.25, abs=1e-12)
    assert lambda_dag_bound(7, 1001, 2.0, 1.0) == pytest.approx(4_376_748.25, rel=1e-15)
    n, l1, d = 9, 0.7, 2.0
    assert lambda_dag_bound(2, n, l1, d) == pytest.approx(2 * (2 * n - 2 - l1) / (3 * d))


def test_lambda_dag_bound_monotone():
    vals = [lambda_dag_bound(6, n, 1.0, 1.0) for n in range(2, 60)]
    assert np.all(np.diff(vals) > 0)
    vals = [lambda_dag_bound(6, 50, 1.0, d) for d in np.linspace(0.1, 5, 30)]
    assert np.all(np.diff(vals) < 0)


@pytest.mark.parametrize("args", [(3, 10, 0.0, 1.0), (3, 10, -1.0, 1.0), (3, 10, 1.0, 0.0),
                                  (0, 10, 1.0, 1.0), (3, 1, 1.0, 1.0)])
def test_lambda_dag_bound_rejects(args):
    with pytest.raises(InputError):
        lambda_dag_bound(*args)


def test_certificate_json_round_trip(rng):
    g = random_dag(5, 0.5, rng)
    cert = sufficiency_certificate(g, 1.5)
    back = OrderingCertificate.from_dict(cert.to_dict())
    assert np.array_equal(back.o, cert.o) and np.array_equal(back.upsilon, cert.upsilon)
    assert back.delta == cert.delta


def test_tied_two_cycle_loads_one_arc():
    t = np.zeros((3, 2))
    t[0, 1] = t[1, 0] = 0.7
    cert, obj = solve_ordering(t)
    assert obj == pytest.approx(0.7, abs=1e-9)
    u = sorted([cert.upsilon[0, 1], cert.upsilon[1, 0]])
    assert u[0] == pytest.approx(0.0, abs=1e-9) and u[1] == pytest.approx(1.0, abs=1e-9)
