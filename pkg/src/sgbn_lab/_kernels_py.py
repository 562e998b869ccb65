"""NumPy reference implementations of the compiled kernels in ``_kernels.pyx``.

Same signatures, same in-place contract, same update order. Used when the
extension is not built or when ``SGBN_LAB_PURE_PYTHON=1``.
"""
import numpy as np


def cd_columns(G, C, W, free, theta, tol, max_sweeps):
    p = G.shape[0]
    m = C.shape[1]
    sweeps = np.zeros(m, dtype=np.int64)
    conv = np.zeros(m, dtype=np.uint8)
    diag = np.diag(G).copy()
    for j in range(m):
        q = G @ theta[:, j]
        coords = [k for k in range(p) if free[k, j]]
        sweep = 0
        while sweep < max_sweeps:
            sweep += 1
            maxchange = 0.0
            for k in coords:
                gkk = diag[k]
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
                    q += G[:, k] * delta
                    if abs(delta) > maxchange:
                        maxchange = abs(delta)
            if maxchange < tol:
                conv[j] = 1
                break
        sweeps[j] = sweep
    return sweeps, conv


def smo(Q, y, alpha, grad, eps, max_iter, blowup):
    tau = 1e-12
    diag = np.diag(Q)
    it = 0
    status = 1
    while it < max_iter:
        score = -y * grad
        up = (y > 0) | (alpha > 0)
        low = (y < 0) | (alpha > 0)
        if not up.any() or not low.any():
            status = 0
            break
        up_idx = np.flatnonzero(up)
        i = int(up_idx[np.argmax(score[up_idx])])
        gmax = score[i]
        low_idx = np.flatnonzero(low)
        gmin = score[low_idx].min()
        if gmax - gmin < eps:
            status = 0
            break
        b = gmax - score[low_idx]
        cand = low_idx[b > 0]
        if cand.size == 0:
            status = 0
            break
        bc = gmax - score[cand]
        a = diag[i] + diag[cand] - 2.0 * y[i] * y[cand] * Q[i, cand]
        a = np.where(a <= 0, tau, a)
        obj = -(bc * bc) / a
        # last minimiser wins, matching the compiled loop's "<=" scan
        j = int(cand[len(obj) - 1 - np.argmin(obj[::-1])])
        it += 1
        ai_old, aj_old = alpha[i], alpha[j]
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
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
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
                alpha[i] = 0.0
                alpha[j] = total
            if alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = total
        grad += Q[:, i] * (alpha[i] - ai_old) + Q[:, j] * (alpha[j] - aj_old)
        if alpha[i] > blowup or alpha[j] > blowup:
            status = 2
            break
    return it, status
