"""File formats: dataset CSV, model/pair/certificate JSON, Fisher-vector CSV.

Floats are written with 17 significant digits in CSV and with Python's
round-trip ``repr`` in JSON, so a save/load cycle is lossless.
"""
from __future__ import annotations

import csv
import json
from typing import Optional

import numpy as np

from .classifiers import ClassPairModel
from .errors import InputError
from .model import DEFAULT_TAU, Dataset, NoiseModel, SgbnParams
from .ordering import OrderingCertificate

LABEL_COLUMN = "label"
FLOAT_FMT = "%.17g"


def _fmt(v):
    return FLOAT_FMT % v


# ---------------------------------------------------------------------------
# CSV

def read_dataset(path) -> Dataset:
    """Header row of names; a final ``label`` column (values 1/2) is optional."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise InputError(f"{path} has no data rows")
    if any(len(r) != len(header) for r in body):
        raise InputError(f"{path}: ragged rows")
    try:
        arr = np.array([[float(c) for c in r] for r in body])
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric entry ({exc})") from exc
    labels = None
    if header[-1].lower() == LABEL_COLUMN:
        lab = arr[:, -1]
        if not np.all(np.isin(lab, (1.0, 2.0))):
            raise InputError(f"{path}: labels must be 1 or 2")
        labels = lab.astype(int)
        arr = arr[:, :-1]
        header = header[:-1]
    if arr.shape[1] == 0:
        raise InputError(f"{path} has no variable columns")
    return Dataset(arr, labels, tuple(header))


def write_matrix_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) if isinstance(v, float)
                        else str(v) for v in r])


def write_dataset(path, d: Dataset):
    header = list(d.names)
    rows = [list(map(float, r)) for r in d.values]
    if d.labels is not None:
        header.append(LABEL_COLUMN)
        rows = [r + [int(l)] for r, l in zip(rows, d.labels)]
    write_matrix_csv(path, header, rows)


def write_table(path, header, rows):
    """Result table; floats at full precision, other cells as text."""
    write_matrix_csv(path, header, [[float(v) if isinstance(v, (float, np.floating)) else v
                                     for v in r] for r in rows])


# ---------------------------------------------------------------------------
# JSON

def dump_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, allow_nan=False)
        fh.write("\n")


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def model_to_dict(params: SgbnParams, sigma: Optional[NoiseModel] = None,
                  tau: float = DEFAULT_TAU):
    sig = NoiseModel.ones(params.m) if sigma is None else sigma
    return {"m": params.m, "theta": params.theta.tolist(), "sigma": sig.sigma.tolist(),
            "tau": float(tau)}


def model_from_dict(d):
    try:
        theta = np.asarray(d["theta"], dtype=float)
        m = int(d["m"])
        if theta.shape != (m + 1, m):
            raise InputError("theta shape does not match m")
        sigma = NoiseModel(np.asarray(d.get("sigma", np.ones(m)), dtype=float))
        return SgbnParams(theta), sigma, float(d.get("tau", DEFAULT_TAU))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed model: {exc}") from exc


def pair_to_dict(pair: ClassPairModel, certificates=None):
    d = {
        "class1": model_to_dict(pair.theta1, pair.sigma1),
        "class2": model_to_dict(pair.theta2, pair.sigma2),
        "priors": list(pair.priors),
        "t1": None if not np.isfinite(pair.t1) else float(pair.t1),
        "t2": None if not np.isfinite(pair.t2) else float(pair.t2),
    }
    if certificates is not None:
        d["certificates"] = [c.to_dict() for c in certificates]
    return d


def pair_from_dict(d):
    """``(ClassPairModel, certificates or None)``."""
    try:
        t1, s1, _ = model_from_dict(d["class1"])
        t2, s2, _ = model_from_dict(d["class2"])
        b1 = float("inf") if d.get("t1") is None else float(d["t1"])
        b2 = float("inf") if d.get("t2") is None else float(d["t2"])
        pair = ClassPairModel(t1, t2, s1, s2, tuple(d.get("priors", (0.5, 0.5))), b1, b2)
        certs = d.get("certificates")
        if certs is not None:
            certs = tuple(OrderingCertificate.from_dict(c) for c in certs)
        return pair, certs
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed model pair: {exc}") from exc
