"""Time the compiled and NumPy kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per (kernel, size, backend) with the best wall time and the
largest difference between the two backends' outputs.
"""
import argparse
import time

import numpy as np

from sgbn_lab import kernels
from sgbn_lab._kernels_py import cd_columns as py_cd, smo as py_smo


def best_time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def lasso_case(m, n, rng):
    x = rng.standard_normal((n, m))
    for j in range(1, m):
        x[:, j] += 0.7 * x[:, j - 1]
    xa = np.hstack([x, np.ones((n, 1))])
    g = np.ascontiguousarray(xa.T @ xa)
    c = np.ascontiguousarray(xa.T @ x)
    w = np.full((m + 1, m), 0.05 * n)
    w[m] = 0.0
    free = np.ones((m + 1, m), dtype=np.uint8)
    free[np.arange(m), np.arange(m)] = 0
    return g, c, w, free


def run_lasso(impl, case):
    g, c, w, free = case
    theta = np.zeros_like(w)
    impl(g, c, w, free, theta, 1e-10, 10000)
    return theta


def svm_case(n, d, rng):
    y = np.where(np.arange(n) < n // 2, 1.0, -1.0)
    phi = rng.standard_normal((n, d)) + 0.3 * y[:, None]
    k = phi @ phi.T + np.eye(n) / 0.01
    return np.ascontiguousarray(np.outer(y, y) * k), y


def run_smo(impl, case):
    q, y = case
    alpha = np.zeros(y.size)
    grad = -np.ones(y.size)
    impl(q, y, alpha, grad, 1e-7, 1_000_000, 1e12)
    return alpha


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.BACKEND != "cython":
        print("compiled extension not available; only the NumPy backend would run")
        return
    fast = kernels.get("cython")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<8}{'size':>12}{'backend':>10}{'seconds':>12}{'speedup':>10}{'max diff':>12}")
    for m, n in ((10, 200), (37, 1000), (60, 1000)):
        case = lasso_case(m, n, rng)
        t_c, a = best_time(lambda: run_lasso(fast.cd_columns, case), args.repeat)
        t_p, b = best_time(lambda: run_lasso(py_cd, case), max(1, args.repeat // 2))
        diff = float(np.max(np.abs(a - b)))
        print(f"{'lasso':<8}{f'm={m}':>12}{'cython':>10}{t_c:>12.5f}{'':>10}{'':>12}")
        print(f"{'lasso':<8}{f'm={m}':>12}{'python':>10}{t_p:>12.5f}{t_p / t_c:>10.1f}{diff:>12.2e}")
    for n, d in ((100, 50), (200, 220), (400, 220)):
        case = svm_case(n, d, rng)
        t_c, a = best_time(lambda: run_smo(fast.smo, case), args.repeat)
        t_p, b = best_time(lambda: run_smo(py_smo, case), max(1, args.repeat // 2))
        diff = float(np.max(np.abs(a - b)))
        print(f"{'smo':<8}{f'n={n}':>12}{'cython':>10}{t_c:>12.5f}{'':>10}{'':>12}")
        print(f"{'smo':<8}{f'n={n}':>12}{'python':>10}{t_p:>12.5f}{t_p / t_c:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
