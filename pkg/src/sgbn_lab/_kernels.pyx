# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: covariance-mode weighted-L1 coordinate descent and
SMO for the bias-constrained, upper-unbounded SVM dual.

Both functions mutate their output buffers in place and release the GIL.
``_kernels_py`` holds the NumPy reference versions with identical signatures.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY

cnp.import_array()


def cd_columns(const double[:, ::1] G, const double[:, ::1] C,
               const double[:, ::1] W, const unsigned char[:, ::1] free,
               double[:, ::1] theta, double tol, long max_sweeps):
    """Minimise, for every column j independently,

        t' G t - 2 C[:, j]' t + sum_k W[k, j] |t_k|

    over the coordinates with ``free[k, j]``; the others stay fixed.
    Returns (sweeps, converged) per column.
    """
    cdef Py_ssize_t p = G.shape[0]
    cdef Py_ssize_t m = C.shape[1]
    cdef Py_ssize_t j, k, l
    cdef long sweep
    cdef double rho, new, old, delta, maxchange, half_w, gkk
    sweeps_arr = np.zeros(m, dtype=np.int64)
    conv_arr = np.zeros(m, dtype=np.uint8)
    cdef long long[::1] sweeps = sweeps_arr
    cdef unsigned char[::1] conv = conv_arr
    q_arr = np.zeros(p, dtype=np.float64)
    cdef double[::1] q = q_arr

    with nogil:
        for j in range(m):
            for k in range(p):
                q[k] = 0.0
                for l in range(p):
                    q[k] += G[k, l] * theta[l, j]
            sweep = 0
            while sweep < max_sweeps:
                sweep += 1
                maxchange = 0.0
                for k in range(p):
                    if not free[k, j]:
                        continue
                    gkk = G[k, k]
                    old = theta[k, j]
                    if gkk <= 0.0:
                        new = 0.0
                    else:
                        rho = C[k, j] - (q[k] - gkk * old)
                        half_w = 0.5 * W[k, j]
                        if rho > half_w:
                            new = (rho - half_w) / gkk
                        elif rho < -half_w:
                            new = (rho + half_w) / gkk
                        else:
                            new = 0.0
                    delta = new - old
                    if delta != 0.0:
                        theta[k, j] = new
                        for l in range(p):
                            q[l] += G[l, k] * delta
                        if fabs(delta) > maxchange:
                            maxchange = fabs(delta)
                if maxchange < tol:
                    conv[j] = 1
                    break
            sweeps[j] = sweep
    return sweeps_arr, conv_arr


def smo(const double[:, ::1] Q, const double[::1] y, double[::1] alpha,
        double[::1] grad, double eps, long max_iter, double blowup):
    """Minimise 0.5 a'Qa - sum(a) s.t. y'a = 0, a >= 0.

    ``grad`` must hold Q @ alpha - 1 on entry. Status: 0 converged,
    1 iteration cap, 2 divergence (unbounded dual).
    """
    cdef Py_ssize_t n = Q.shape[0]
    cdef Py_ssize_t t, i, j
    cdef long it = 0
    cdef int status = 1
    cdef double gmax, gmin, v, b, a, obj, best, quad, delta, diff, total
    cdef double ai_old, aj_old, dai, daj
    cdef double tau = 1e-12

    with nogil:
        while it < max_iter:
            # i: maximal violator in I_up
            gmax = -INFINITY
            i = -1
            for t in range(n):
                if y[t] > 0 or alpha[t] > 0:
                    v = -y[t] * grad[t]
                    if v > gmax:
                        gmax = v
                        i = t
            gmin = INFINITY
            j = -1
            best = INFINITY
            for t in range(n):
                if y[t] < 0 or alpha[t] > 0:
                    v = -y[t] * grad[t]
                    if v < gmin:
                        gmin = v
                    if i >= 0:
                        b = gmax - v
                        if b > 0:
                            a = Q[i, i] + Q[t, t] - 2.0 * y[i] * y[t] * Q[i, t]
                            if a <= 0:
                                a = tau
                            obj = -(b * b) / a
                            if obj <= best:
                                best = obj
                                j = t
            if i < 0 or j < 0 or gmax - gmin < eps:
                status = 0
                break
            it += 1
            ai_old = alpha[i]
            aj_old = alpha[j]
            if y[i] != y[j]:
                quad = Q[i, i] + Q[j, j] + 2.0 * Q[i, j]
                if quad <= 0:
                    quad = tau
                delta = (-grad[i] - grad[j]) / quad
                diff = alpha[i] - alpha[j]
                alpha[i] += delta
                alpha[j] += delta
                if diff > 0:
                    if alpha[j] < 0:
                        alpha[j] = 0
                        alpha[i] = diff
                else:
                    if alpha[i] < 0:
                        alpha[i] = 0
                        alpha[j] = -diff
            else:
                quad = Q[i, i] + Q[j, j] - 2.0 * Q[i, j]
                if quad <= 0:
                    quad = tau
                delta = (grad[i] - grad[j]) / quad
                total = alpha[i] + alpha[j]
                alpha[i] -= delta
                alpha[j] += delta
                if alpha[i] < 0:
                    alpha[i] = 0
                    alpha[j] = total
                if alpha[j] < 0:
                    alpha[j] = 0
                    alpha[i] = total
            dai = alpha[i] - ai_old
            daj = alpha[j] - aj_old
            for t in range(n):
                grad[t] += Q[t, i] * dai + Q[t, j] * daj
            if alpha[i] > blowup or alpha[j] > blowup:
                status = 2
                break
    return it, status
