"""Likelihood-ratio and Fisher-kernel SVM classifiers for a class pair."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, InputError
from .fisher import SvmConfig, _signed, fisher_matrix, gram, pair_id
from .model import NoiseModel, SgbnParams, fitting_error, log_likelihood_rows
from .solvers import QpDualSolution, solve_svm_dual


@dataclass(frozen=True)
class ClassPairModel:
    theta1: SgbnParams
    theta2: SgbnParams
    sigma1: Optional[NoiseModel] = None
    sigma2: Optional[NoiseModel] = None
    priors: tuple = (0.5, 0.5)
    t1: float = float("inf")
    t2: float = float("inf")

    def __post_init__(self):
        m = self.theta1.m
        if self.theta2.m != m:
            raise DimensionError("class models have different sizes")
        for name in ("sigma1", "sigma2"):
            s = getattr(self, name)
            if s is None:
                object.__setattr__(self, name, NoiseModel.ones(m))
            elif s.m != m:
                raise DimensionError(f"{name} has the wrong length")
        p = tuple(float(v) for v in self.priors)
        if len(p) != 2 or min(p) < 0 or abs(sum(p) - 1.0) > 1e-12:
            raise InputError("priors must be two nonnegative numbers summing to 1")
        object.__setattr__(self, "priors", p)

    @property
    def m(self):
        return self.theta1.m

    @property
    def pair_id(self):
        return pair_id(self.theta1, self.theta2, self.sigma1, self.sigma2)

    def fitting_errors(self, x1, x2):
        return fitting_error(x1, self.theta1), fitting_error(x2, self.theta2)

    def replace(self, **kw):
        d = dict(theta1=self.theta1, theta2=self.theta2, sigma1=self.sigma1,
                 sigma2=self.sigma2, priors=self.priors, t1=self.t1, t2=self.t2)
        d.update(kw)
        return ClassPairModel(**d)


def sgbn_scores(x, model: ClassPairModel):
    """Per-row ``(score1, score2)``: log prior plus log-likelihood."""
    x2 = np.atleast_2d(np.asarray(x, dtype=float))
    with np.errstate(divide="ignore"):
        lp = np.log(np.asarray(model.priors))
    s1 = lp[0] + log_likelihood_rows(x2, model.theta1, model.sigma1)
    s2 = lp[1] + log_likelihood_rows(x2, model.theta2, model.sigma2)
    return s1, s2


def sgbn_predict(x, model: ClassPairModel):
    """Class (1 or 2) with the larger posterior score; ties go to class 1.

    A single sample gives an int, a matrix gives an int array.
    """
    single = np.asarray(x).ndim == 1
    s1, s2 = sgbn_scores(x, model)
    lab = np.where(s1 >= s2, 1, 2)
    return int(lab[0]) if single else lab


@dataclass(frozen=True)
class SvmModel:
    dual: QpDualSolution
    train_vectors: np.ndarray          # rows for support samples only
    train_labels: np.ndarray           # +1/-1 for the same rows
    cfg: SvmConfig
    selected_components: Optional[tuple] = None
    pair_id: str = ""
    support: np.ndarray = field(default=None, compare=False)

    def weights(self):
        """Primal normal over the (selected) gradient components."""
        a = self.dual.alpha[self.support]
        return (a * self.train_labels) @ self.train_vectors


def _select(phi, selected):
    if selected is None:
        return phi
    return phi[:, np.asarray(selected, dtype=int)]


def svm_train(vectors, labels, cfg: SvmConfig, selected: Optional[Sequence[int]] = None,
              pair: str = "", backend=None) -> SvmModel:
    """Hard-margin SVM on the augmented kernel ``K + I/C`` (squared-slack SVM).

    ``vectors`` is an ``(n, d)`` array of Fisher vectors (or a list of
    :class:`~sgbn_lab.fisher.FisherVector`); ``selected`` restricts training to
    a subset of gradient components.
    """
    if not isinstance(vectors, np.ndarray):
        vs = list(vectors)
        pair = pair or (vs[0].class_pair_id if vs else "")
        vectors = np.vstack([v.blocks for v in vs])
    phi = _select(np.atleast_2d(np.asarray(vectors, dtype=float)), selected)
    y = _signed(labels)
    if y.size != phi.shape[0]:
        raise DimensionError("labels and vectors disagree")
    if np.all(y == y[0]):
        raise InputError("SVM training needs samples from both classes")
    sol = solve_svm_dual(gram(phi, cfg.c), y, backend=backend)
    sv = sol.alpha > 0
    sel = None if selected is None else tuple(int(s) for s in selected)
    return SvmModel(sol, phi[sv].copy(), y[sv].copy(), cfg, sel, pair, np.flatnonzero(sv))


def svm_decision(phi, svm: SvmModel):
    """Decision values; test samples carry a zero augmentation block."""
    phi = _select(np.atleast_2d(np.asarray(phi, dtype=float)), svm.selected_components)
    return phi @ svm.weights() + svm.dual.bias


def svm_predict(x, svm: SvmModel, pair: ClassPairModel):
    """Class (1 or 2) from the sign of the decision value; zero goes to class 1."""
    single = np.asarray(x).ndim == 1
    phi = fisher_matrix(np.atleast_2d(x), pair.theta1, pair.theta2, pair.sigma1, pair.sigma2)
    lab = np.where(svm_decision(phi, svm) >= 0, 1, 2)
    return int(lab[0]) if single else lab


def accuracy(pred, labels) -> float:
    pred = np.asarray(pred)
    labels = np.asarray(labels)
    if pred.size == 0:
        raise InputError("no samples to score")
    return float(np.mean(pred == labels))
