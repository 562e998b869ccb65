"""Paired train/test evaluation of the initial, KL-refined and MM-refined pairs."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import klsgbn, mmsgbn, orsgbn
from .bench import make_two_class, split_two_class
from .classifiers import ClassPairModel, accuracy, sgbn_predict, svm_predict, svm_train
from .fisher import SvmConfig, fisher_matrix


@dataclass(frozen=True)
class HarnessConfig:
    m: int = 10
    n_per_class: int = 200
    perturb_fraction: float = 0.3
    perturb_scale: float = 0.5
    splits: int = 10
    lambda1_scale: float = 0.05         # lambda1 = scale * (n_train - 1)
    kl: klsgbn.KlConfig = field(default_factory=klsgbn.KlConfig)
    mm: mmsgbn.MmConfig = field(default_factory=mmsgbn.MmConfig)


class SplitResult(NamedTuple):
    seed: int
    acc: dict             # method -> {"sgbn": acc, "svm": acc}
    fitting: dict         # method -> (h1, h2, T1, T2)


def _svm_accuracy(pair, train, y_train, test, y_test, c):
    phi = fisher_matrix(train, pair.theta1, pair.theta2, pair.sigma1, pair.sigma2)
    svm = svm_train(phi, y_train, SvmConfig(c))
    return accuracy(svm_predict(test, svm, pair), y_test)


def fit_init_pair(train1, train2, lambda1_scale):
    fits = [orsgbn.fit(t, orsgbn.OrConfig(lambda1_scale * (len(t) - 1)))
            for t in (train1, train2)]
    pair = ClassPairModel(fits[0].params, fits[1].params)
    return pair, (fits[0].certificate, fits[1].certificate)


def run_split(x1, x2, seed: int, cfg: HarnessConfig) -> SplitResult:
    sp = split_two_class(x1, x2, seed)
    init, certs = fit_init_pair(sp.train1, sp.train2, cfg.lambda1_scale)
    kl = klsgbn.learn(sp.train1, sp.train2, init, cfg.kl, certs)
    mm = mmsgbn.learn(sp.train1, sp.train2, init, cfg.mm, certs)
    train = np.vstack([sp.train1, sp.train2])
    test = np.vstack([sp.test1, sp.test2])
    y_train = np.r_[np.ones(len(sp.train1), int), np.full(len(sp.train2), 2)]
    y_test = np.r_[np.ones(len(sp.test1), int), np.full(len(sp.test2), 2)]
    h0 = init.fitting_errors(sp.train1, sp.train2)
    acc, fitting = {}, {}
    for name, pair in (("init", init), ("kl", kl.pair), ("mm", mm.pair)):
        acc[name] = {
            "sgbn": accuracy(sgbn_predict(test, pair), y_test),
            "svm": _svm_accuracy(pair, train, y_train, test, y_test, cfg.kl.c),
        }
        h = pair.fitting_errors(sp.train1, sp.train2)
        fitting[name] = (h[0], h[1], h0[0], h0[1])
    return SplitResult(seed, acc, fitting)


def run_harness(cfg: HarnessConfig, seed: int = 0, workers: int = 1):
    """One data draw, ``cfg.splits`` random splits; results ordered by split."""
    x1, x2 = make_two_class(cfg.m, cfg.n_per_class, cfg.perturb_fraction,
                            cfg.perturb_scale, seed)
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(cfg.splits)]
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(lambda s: run_split(x1, x2, s, cfg), seeds))
    return [run_split(x1, x2, s, cfg) for s in seeds]


def summarize(results):
    """Mean accuracy per (method, classifier)."""
    out = {}
    for method in results[0].acc:
        for clf in ("sgbn", "svm"):
            out[(method, clf)] = float(np.mean([r.acc[method][clf] for r in results]))
    return out
