"""Fisher vectors of a two-class SGBN pair and the kernels built from them.

For one class with parameters ``theta`` (shape ``(m+1, m)``) and noise
``sigma`` the gradient of a sample's log-likelihood with respect to column
``i`` of ``theta`` is ``r_i * xa / sigma_i**2`` with ``xa = [x, 1]`` and
``r_i = x_i - xa @ theta[:, i]``. A block is the full ``(m+1) x m`` grid of
these entries flattened column by column, so entry ``(k, i)`` lands at
position ``i * (m + 1) + k``. The Fisher vector stacks the class-1 and class-2
blocks.
"""
from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, InputError
from .model import Dataset, NoiseModel, SgbnParams, augment


@dataclass(frozen=True)
class SvmConfig:
    c: float = 1.0

    def __post_init__(self):
        if not (self.c > 0 and np.isfinite(self.c)):
            raise InputError("SVM regularisation C must be positive and finite")


@dataclass(frozen=True)
class FisherVector:
    blocks: np.ndarray
    augmentation: Optional[np.ndarray] = None
    class_pair_id: str = ""

    def __post_init__(self):
        b = np.array(self.blocks, dtype=float)
        if b.ndim != 1:
            raise DimensionError("Fisher vector blocks must be 1-D")
        b.setflags(write=False)
        object.__setattr__(self, "blocks", b)
        if self.augmentation is not None:
            a = np.array(self.augmentation, dtype=float)
            if a.ndim != 1 or np.count_nonzero(a) != 1:
                raise InputError("augmentation block needs exactly one nonzero entry")
            a.setflags(write=False)
            object.__setattr__(self, "augmentation", a)


def _t(p):
    return p.theta if isinstance(p, SgbnParams) else np.asarray(p, dtype=float)


def _s(sigma, m):
    if sigma is None:
        return np.ones(m)
    s = sigma.sigma if isinstance(sigma, NoiseModel) else np.broadcast_to(
        np.asarray(sigma, dtype=float), (m,))
    if s.shape != (m,):
        raise DimensionError("sigma length does not match the model")
    return np.asarray(s, dtype=float)


def pair_id(theta1, theta2, sigma1=None, sigma2=None) -> str:
    """Content digest identifying the generating model pair."""
    t1, t2 = _t(theta1), _t(theta2)
    m = t1.shape[1]
    h = hashlib.sha256()
    for a in (t1, t2, _s(sigma1, m), _s(sigma2, m)):
        h.update(np.ascontiguousarray(a, dtype="<f8").tobytes())
    return h.hexdigest()[:16]


def gradient_block(x, theta, sigma=None):
    """Rows of per-sample gradient blocks, shape ``(n, m*(m+1))``."""
    t = _t(theta)
    m = t.shape[1]
    x2 = np.atleast_2d(np.asarray(x, dtype=float))
    if x2.shape[1] != m or t.shape != (m + 1, m):
        raise DimensionError("sample and parameter sizes disagree")
    xa = augment(x2)
    r = (x2 - xa @ t) / _s(sigma, m) ** 2
    return np.einsum("ni,nk->nik", r, xa).reshape(x2.shape[0], m * (m + 1))


def fisher_matrix(x, theta1, theta2, sigma1=None, sigma2=None):
    """Fisher vectors of every row of ``x`` as an ``(n, 2m(m+1))`` array."""
    values = x.values if isinstance(x, Dataset) else x
    return np.hstack([gradient_block(values, theta1, sigma1),
                      gradient_block(values, theta2, sigma2)])


def fisher_vector(x, theta1, theta2, sigma1=None, sigma2=None) -> FisherVector:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionError("fisher_vector takes a single sample")
    phi = fisher_matrix(x[None, :], theta1, theta2, sigma1, sigma2)[0]
    return FisherVector(phi, None, pair_id(theta1, theta2, sigma1, sigma2))


def fisher_vectors(x, theta1, theta2, sigma1=None, sigma2=None, labels=None,
                   cfg: Optional[SvmConfig] = None):
    """List of :class:`FisherVector`; with ``labels`` and ``cfg`` each carries
    its training augmentation ``e_i * y_i / sqrt(C)``."""
    phi = fisher_matrix(x, theta1, theta2, sigma1, sigma2)
    pid = pair_id(theta1, theta2, sigma1, sigma2)
    n = phi.shape[0]
    out = []
    for i in range(n):
        aug = None
        if labels is not None and cfg is not None:
            aug = np.zeros(n)
            aug[i] = _signed(labels)[i] / np.sqrt(cfg.c)
        out.append(FisherVector(phi[i], aug, pid))
    return out


def _signed(labels):
    """Map a two-valued label vector to +1 (first class) / -1."""
    y = np.asarray(labels)
    if np.all(np.isin(y, (-1, 1))):
        return y.astype(float)
    if np.all(np.isin(y, (1, 2))):
        return np.where(y == 1, 1.0, -1.0)
    raise InputError("labels must be in {1, 2} or {+1, -1}")


def fisher_affine(x, sigma1=None, sigma2=None):
    """``(S, s0)`` with ``phi(x) = S @ vec + s0`` for every parameter pair.

    ``vec`` stacks ``theta1.T.ravel()`` and ``theta2.T.ravel()`` (the same
    column-major layout as the blocks). S is block diagonal and does not
    depend on the parameters.
    """
    x = np.asarray(x, dtype=float)
    m = x.size
    xa = np.append(x, 1.0)
    p = m + 1
    outer = np.outer(xa, xa)
    S = np.zeros((2 * m * p, 2 * m * p))
    s0 = np.empty(2 * m * p)
    for c, sig in enumerate((_s(sigma1, m), _s(sigma2, m))):
        off = c * m * p
        for i in range(m):
            sl = slice(off + i * p, off + (i + 1) * p)
            S[sl, sl] = -outer / sig[i] ** 2
            s0[sl] = x[i] * xa / sig[i] ** 2
    return S, s0


def _stack(vectors):
    if isinstance(vectors, np.ndarray):
        return np.atleast_2d(vectors), None
    vectors = list(vectors)
    if not vectors:
        raise InputError("no Fisher vectors given")
    ids = {v.class_pair_id for v in vectors}
    if len(ids) > 1:
        raise InputError("Fisher vectors come from different model pairs")
    return np.vstack([v.blocks for v in vectors]), ids.pop()


def gram(phi, c=None):
    """``phi @ phi.T`` plus ``I / c`` when ``c`` is given; exactly symmetric."""
    k = phi @ phi.T
    k = 0.5 * (k + k.T)
    if c is not None:
        k = k + np.eye(k.shape[0]) / c
    return k


def kernel_matrix(vectors, cfg: Optional[SvmConfig] = None, augment_kernel: bool = True):
    """Fisher kernel ``K_ij = <phi_i, phi_j>``, plus ``I/C`` when augmenting."""
    phi, _ = _stack(vectors)
    if augment_kernel and cfg is None:
        raise InputError("augmentation needs an SvmConfig")
    return gram(phi, cfg.c if augment_kernel else None)


def scatter_trace(k) -> float:
    """Trace of the total scatter in feature space: ``tr(K) - 1'K1 / n``."""
    k = np.asarray(k, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise DimensionError("kernel matrix must be square")
    n = k.shape[0]
    if n == 0:
        return 0.0
    return float(np.trace(k) - k.sum() / n)


def component_names(m: int):
    """Column labels ``c{class}_t{row}_{col}``, 1-indexed; row m+1 is the bias."""
    return [f"c{c}_t{k + 1}_{i + 1}" for c in (1, 2) for i in range(m) for k in range(m + 1)]


def component_index(c: int, k: int, i: int, m: int) -> int:
    """Flat position of ``theta_c[k, i]`` (0-based ``k``, ``i``; ``c`` in {1, 2})."""
    return (c - 1) * m * (m + 1) + i * (m + 1) + k


def component_of(idx: int, m: int):
    """Inverse of :func:`component_index`: ``(c, k, i)``."""
    c, rest = divmod(idx, m * (m + 1))
    i, k = divmod(rest, m + 1)
    return c + 1, k, i


def label_correlations(phi, labels):
    """|Pearson r| between every column of ``phi`` and the labels (0 when undefined)."""
    phi = np.asarray(phi, dtype=float)
    y = np.asarray(labels, dtype=float)
    yc = y - y.mean()
    pc = phi - phi.mean(axis=0)
    num = yc @ pc
    den = np.sqrt((yc @ yc) * np.einsum("ij,ij->j", pc, pc))
    r = np.zeros(phi.shape[1])
    ok = den > 0
    r[ok] = np.abs(num[ok]) / den[ok]
    return np.minimum(r, 1.0)


def select_edges(train_vectors, labels, k: int, theta_pair: Sequence):
    """Top-``k`` parameter positions by label correlation of their Fisher component.

    Only positions whose parameter is currently nonzero are eligible, so
    optimising them cannot create new edges. Returns a tuple of ``(c, k, i)``
    triples in rank order (ties broken by position).
    """
    if k < 0:
        raise InputError("k must be nonnegative")
    phi, _ = _stack(train_vectors)
    t1, t2 = (_t(p) for p in theta_pair)
    m = t1.shape[1]
    if phi.shape[1] != 2 * m * (m + 1):
        raise DimensionError("Fisher vectors do not match the parameter pair")
    eligible = np.concatenate([t1.T.ravel(), t2.T.ravel()]) != 0
    r = label_correlations(phi, labels)
    cand = np.flatnonzero(eligible)
    if k > cand.size:
        warnings.warn(f"k={k} exceeds the {cand.size} nonzero parameters; using all of them",
                      stacklevel=2)
    order = cand[np.lexsort((cand, -r[cand]))][:k]
    return tuple(component_of(int(j), m) for j in order)
