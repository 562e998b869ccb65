import warnings

import numpy as np
import pytest

from sgbn_lab.errors import InputError
from sgbn_lab.fisher import (FisherVector, SvmConfig, component_index, component_names,
                             component_of, fisher_affine, fisher_matrix, fisher_vector,
                             fisher_vectors, kernel_matrix, label_correlations, scatter_trace,
                             select_edges)
from sgbn_lab.model import NoiseModel, log_likelihood


def rand_theta(m, rng, density=0.5):
    t = rng.normal(size=(m + 1, m)) * (rng.random((m + 1, m)) < density)
    np.fill_diagonal(t[:m], 0.0)
    return t


def fd_gradient(x, t, sigma, h=1e-5):
    m = t.shape[1]
    g = np.zeros_like(t)
    for k in range(m + 1):
        for i in range(m):
            e = np.zeros_like(t)
            e[k, i] = h
            g[k, i] = (log_likelihood(x, t + e, sigma) - log_likelihood(x, t - e, sigma)) / (2 * h)
    return g


def test_exact_fit_sample_zero_gradient(rng):
    m = 4
    t = rand_theta(m, rng)
    t[:m] = np.triu(t[:m], 1)
    x = np.zeros(m)
    for j in range(m):
        x[j] = x @ t[:m, j] + t[m, j]
    phi = fisher_vector(x, t, t).blocks
    assert np.max(np.abs(phi)) < 1e-12


def test_gradient_matches_finite_differences(rng):
    worst = 0.0
    for _ in range(20):
        m = int(rng.integers(1, 7))
        t1, t2 = rand_theta(m, rng), rand_theta(m, rng)
        s1, s2 = (NoiseModel(rng.uniform(0.5, 2.0, m)) for _ in range(2))
        x = rng.normal(size=m)
        phi = fisher_vector(x, t1, t2, s1, s2).blocks
        for c, (t, s) in enumerate(((t1, s1), (t2, s2))):
            g = fd_gradient(x, t, s)
            for k in range(m + 1):
                for i in range(m):
                    if k == i:
                        continue
                    a = phi[component_index(c + 1, k, i, m)]
                    worst = max(worst, abs(a - g[k, i]) / max(abs(g[k, i]), 1e-2))
    assert worst < 1e-5


def test_affine_form(rng):
    m = 4
    x = rng.normal(size=m)
    s1 = NoiseModel(rng.uniform(0.5, 2, m))
    s2 = NoiseModel(rng.uniform(0.5, 2, m))
    S, s0 = fisher_affine(x, s1, s2)
    ta = [rand_theta(m, rng, 1.0) for _ in range(2)]
    tb = [rand_theta(m, rng, 1.0) for _ in range(2)]
    vec = lambda p: np.r_[p[0].T.ravel(), p[1].T.ravel()]  # noqa: E731
    pa = fisher_vector(x, *ta, s1, s2).blocks
    pb = fisher_vector(x, *tb, s1, s2).blocks
    assert np.max(np.abs(pa - pb - S @ (vec(ta) - vec(tb)))) < 1e-10
    assert np.max(np.abs(pa - (S @ vec(ta) + s0))) < 1e-10


def test_fisher_vector_layout(rng):
    m = 3
    t1, t2 = rand_theta(m, rng), rand_theta(m, rng)
    fv = fisher_vector(rng.normal(size=m), t1, t2)
    assert fv.blocks.size == 2 * m * (m + 1)
    names = component_names(m)
    assert len(names) == fv.blocks.size and names[0] == "c1_t1_1"
    assert names[component_index(2, m, 1, m)] == "c2_t4_2"
    for idx in range(len(names)):
        assert component_index(*component_of(idx, m), m) == idx


def test_augmentation_one_nonzero(rng):
    m = 2
    t = rand_theta(m, rng)
    vs = fisher_vectors(rng.normal(size=(5, m)), t, t, labels=[1, 2, 1, 2, 2],
                        cfg=SvmConfig(4.0))
    for i, v in enumerate(vs):
        assert np.count_nonzero(v.augmentation) == 1
        assert abs(v.augmentation[i]) == pytest.approx(0.5)
    with pytest.raises(InputError):
        FisherVector(np.zeros(3), np.zeros(3))


def test_kernel_identical_vectors_constant():
    v = [FisherVector(np.array([1.0, 2.0, -1.0]), None, "p")] * 4
    k = kernel_matrix(v, augment_kernel=False)
    assert np.all(k == 6.0)
    assert scatter_trace(k) == pytest.approx(0.0, abs=1e-12)


def test_kernel_large_c_limit(rng):
    v = [FisherVector(rng.normal(size=5), None, "p") for _ in range(6)]
    plain = kernel_matrix(v, augment_kernel=False)
    aug = kernel_matrix(v, SvmConfig(1e12))
    assert np.max(np.abs(aug - plain)) < 1e-11


def test_kernel_double_loop_oracle(rng):
    vs = [FisherVector(rng.normal(size=7), None, "p") for _ in range(9)]
    k = kernel_matrix(vs, SvmConfig(2.0))
    for i in range(9):
        for j in range(9):
            dot = sum(a * b for a, b in zip(vs[i].blocks, vs[j].blocks))
            assert k[i, j] == pytest.approx(dot + (0.5 if i == j else 0.0), abs=1e-10)
    assert np.array_equal(k, k.T)


def test_kernel_rejects_mixed_pairs():
    with pytest.raises(InputError):
        kernel_matrix([FisherVector(np.ones(2), None, "a"), FisherVector(np.ones(2), None, "b")],
                      SvmConfig())


def test_scatter_trace_oracle_and_centering(rng):
    for _ in range(10):
        phi = rng.normal(size=(int(rng.integers(1, 12)), 5))
        k = phi @ phi.T
        explicit = float(np.sum((phi - phi.mean(axis=0)) ** 2))
        assert scatter_trace(k) == pytest.approx(explicit, abs=1e-8)
        shifted = phi + rng.normal(size=5)
        assert scatter_trace(shifted @ shifted.T) == pytest.approx(explicit, abs=1e-8)
    assert scatter_trace(np.array([[3.0]])) == 0.0


def test_select_edges_label_component_first(rng):
    m = 2
    t1 = np.array([[0.0, 0.5], [0.0, 0.0], [0.1, 0.2]])
    t2 = t1.copy()
    y = np.array([1, 1, 2, 2, 1, 2])
    phi = rng.normal(size=(6, 12))
    target = component_index(1, 0, 1, m)
    phi[:, target] = y
    phi[:, component_index(2, 2, 0, m)] = 3.0     # constant: correlation 0
    sel = select_edges(phi, y, 1, (t1, t2))
    assert sel == ((1, 0, 1),)
    full = select_edges(phi, y, 6, (t1, t2))
    assert full[-1] == (2, 2, 0)


def test_select_edges_brute_force(rng):
    m = 3
    t1, t2 = rand_theta(m, rng), rand_theta(m, rng)
    y = rng.choice([1, 2], size=30)
    phi = rng.normal(size=(30, 24))
    r = np.array([abs(np.corrcoef(phi[:, j], y)[0, 1]) for j in range(24)])
    assert np.allclose(label_correlations(phi, y), r, atol=1e-12)
    elig = [j for j in range(24) if (t1.T.ravel().tolist() + t2.T.ravel().tolist())[j] != 0]
    expect = sorted(elig, key=lambda j: (-r[j], j))[:5]
    got = select_edges(phi, y, 5, (t1, t2))
    assert [component_index(*e, m) for e in got] == expect
    # monotone relabelling of the class encoding keeps the ranking
    assert select_edges(phi, np.where(y == 1, -7.0, 3.0), 5, (t1, t2)) == got


def test_select_edges_warns_when_k_too_large(rng):
    m = 2
    t = np.zeros((3, 2))
    t[0, 1] = 1.0
    phi = rng.normal(size=(4, 12))
    with pytest.warns(UserWarning):
        sel = select_edges(phi, [1, 2, 1, 2], 10, (t, t))
    assert len(sel) == 2
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert select_edges(phi, [1, 2, 1, 2], 0, (t, t)) == ()


def test_fisher_matrix_rows_match_single(rng):
    m = 3
    t1, t2 = rand_theta(m, rng), rand_theta(m, rng)
    x = rng.normal(size=(5, m))
    phi = fisher_matrix(x, t1, t2)
    for i in range(5):
        assert np.allclose(phi[i], fisher_vector(x[i], t1, t2).blocks, rtol=1e-13, atol=1e-15)
