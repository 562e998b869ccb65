"""Selected entries of a two-class parameter pair as one flat vector."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .model import augment, residuals


@dataclass(frozen=True)
class Selection:
    """Parameter positions ``(c, k, i)``: class ``c`` in {1, 2}, row ``k``, column ``i``."""

    entries: tuple

    def __post_init__(self):
        ent = tuple((int(c), int(k), int(i)) for c, k, i in self.entries)
        if len(set(ent)) != len(ent):
            raise InputError("duplicate entries in the selection")
        object.__setattr__(self, "entries", ent)

    def __len__(self):
        return len(self.entries)

    def _index(self, c):
        rows = [k for cc, k, _ in self.entries if cc == c]
        cols = [i for cc, _, i in self.entries if cc == c]
        pos = [p for p, (cc, _, _) in enumerate(self.entries) if cc == c]
        return np.array(rows, int), np.array(cols, int), np.array(pos, int)

    def get(self, t1, t2):
        v = np.empty(len(self))
        for c, t in ((1, t1), (2, t2)):
            r, k, p = self._index(c)
            v[p] = t[r, k]
        return v

    def put(self, t1, t2, v):
        """Copies of ``t1, t2`` with the selected entries replaced by ``v``."""
        out = [np.array(t1, dtype=float), np.array(t2, dtype=float)]
        for c in (1, 2):
            r, k, p = self._index(c)
            out[c - 1][r, k] = v[p]
        return out[0], out[1]

    def scatter(self, g1, g2):
        """Gather full ``(m+1, m)`` gradient grids into the selection order."""
        return self.get(g1, g2)


def fitting_error_grad(x, theta):
    """Gradient of the squared fitting error in every entry of ``theta``."""
    return -2.0 * augment(x).T @ residuals(x, theta)


def feasible_fraction(slack_at, shrink: float = 1e-9) -> float:
    """Largest ``t`` in [0, 1] with every entry of ``slack_at(t) >= 0``.

    ``slack_at`` must be quadratic in ``t`` entrywise (fitting budgets along a
    straight segment are) and nonnegative at ``t = 0``. The quadratic is
    recovered from three evaluations and its root located exactly; a tiny
    shrink guards the boundary against rounding.
    """
    s0, sh, s1 = (np.atleast_1d(slack_at(t)) for t in (0.0, 0.5, 1.0))
    if np.all(s1 >= 0):
        return 1.0
    a = 2.0 * s1 - 4.0 * sh + 2.0 * s0      # s(t) = a t^2 + b t + s0
    b = s1 - s0 - a
    t_best = 1.0
    for ai, bi, ci, end in zip(a, b, s0, s1):
        if end >= 0:
            continue
        if abs(ai) < 1e-300:
            roots = [-ci / bi] if bi != 0 else []
        else:
            disc = max(bi * bi - 4.0 * ai * ci, 0.0)
            q = -0.5 * (bi + np.copysign(np.sqrt(disc), bi))
            roots = [q / ai] + ([ci / q] if q != 0 else [])
        inside = [r for r in roots if 0.0 <= r <= 1.0]
        t_best = min(t_best, min(inside) if inside else 0.0)
    t = t_best * (1.0 - shrink)
    for _ in range(60):
        if np.all(np.atleast_1d(slack_at(t)) >= 0):
            return t
        t *= 0.5
    return 0.0
