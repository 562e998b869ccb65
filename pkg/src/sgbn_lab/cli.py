"""Command-line entry point ``sgbn-lab``.

Exit status: 0 on success, 2 for usage or input problems, 3 when an algorithm
cannot produce a certified result. Every output file gets a sibling
``<file>.manifest.json`` recording the command, resolved options, seed and
input digests.
"""
from __future__ import annotations

import hashlib
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np

from . import __version__, bench, io, klsgbn, mmsgbn, orsgbn
from .classifiers import (ClassPairModel, accuracy, sgbn_predict, svm_predict, svm_train)
from .errors import AlgorithmError, InputError, NotDagError
from .fisher import SvmConfig, component_names, fisher_matrix
from .model import Dataset, standardize, structure_of
from .ordering import lambda_dag_bound


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out, command, config, seed, inputs):
    io.dump_json(str(out) + ".manifest.json", {
        "command": command,
        "config": config,
        "seed": seed,
        "input_hashes": {os.path.basename(p): _sha256(p) for p in inputs},
        "version": __version__,
    })


def workers():
    try:
        return max(1, int(os.environ.get("SGBN_LAB_THREADS", "1")))
    except ValueError:
        return 1


def _schedule(text):
    if text is None:
        return None
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise click.BadParameter(f"not a comma-separated list of numbers: {text}") from exc


def _load_std(path):
    d = io.read_dataset(path)
    return standardize(d)


def _or_config(lambda1, schedule, delta, n):
    lam = orsgbn.default_lambda1(n) if lambda1 is None else lambda1
    return orsgbn.OrConfig(lam, schedule, delta)


@click.group()
@click.version_option(__version__)
def cli():
    """Sparse Gaussian Bayesian network estimation and discriminative learning."""


@cli.command("standardize")
@click.argument("inp", type=click.Path(exists=True, dir_okay=False))
@click.argument("out", type=click.Path(dir_okay=False))
def cmd_standardize(inp, out):
    """Zero-mean, unit-variance columns (label column passed through)."""
    io.write_dataset(out, _load_std(inp))
    write_manifest(out, "standardize", {}, None, [inp])


@cli.command("fit-single")
@click.argument("data", type=click.Path(exists=True, dir_okay=False))
@click.option("--lambda1", type=float, default=None, help="Sparsity weight (default 0.2*(n-1)).")
@click.option("--lambda-dag-schedule", default=None, help="Comma-separated increasing values.")
@click.option("--delta", type=float, default=1.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
def cmd_fit_single(data, lambda1, lambda_dag_schedule, delta, seed, out):
    """Fit one acyclic SGBN to DATA."""
    x = _load_std(data)
    cfg = _or_config(lambda1, _schedule(lambda_dag_schedule), delta, x.n)
    try:
        res = orsgbn.fit(x, cfg)
    except NotDagError as exc:
        click.echo(f"error: {exc} (lambda_dag bound {exc.bound:.17g})", err=True)
        raise
    io.dump_json(out, {
        "model": io.model_to_dict(res.params),
        "certificate": res.certificate.to_dict(),
        "report": res.report.to_dict(),
        "trace": list(res.trace),
        "lambda_dag_bound": lambda_dag_bound(x.m, x.n, cfg.lambda1, cfg.delta),
    })
    write_manifest(out, "fit-single", {"lambda1": cfg.lambda1,
                                       "lambda_dag_schedule": list(cfg.schedule_for(x.m, x.n)),
                                       "delta": cfg.delta}, seed, [data])


def _init_pair(x1, x2, init, lambda1, delta):
    if init is not None:
        pair, certs = io.pair_from_dict(io.load_json(init))
        return pair, certs
    fits = [orsgbn.fit(x, _or_config(lambda1, None, delta, len(x))) for x in (x1, x2)]
    return ClassPairModel(fits[0].params, fits[1].params), (fits[0].certificate,
                                                            fits[1].certificate)


def _pair_inputs(data1, data2):
    d1, d2 = io.read_dataset(data1), io.read_dataset(data2)
    if d1.m != d2.m:
        raise InputError("the two datasets have different columns")
    # pooled standardisation keeps between-class differences in location and scale
    pooled = standardize(Dataset(np.vstack([d1.values, d2.values]), None, d1.names))
    return pooled.values[:d1.n], pooled.values[d1.n:]


_pair_options = [
    click.argument("data1", type=click.Path(exists=True, dir_okay=False)),
    click.argument("data2", type=click.Path(exists=True, dir_okay=False)),
    click.option("--init", type=click.Path(exists=True, dir_okay=False), default=None,
                 help="Initial pair JSON (default: single-class fits)."),
    click.option("--lambda1", type=float, default=None),
    click.option("--budget-slack", type=float, default=0.01, show_default=True),
    click.option("--k-edges", type=int, default=None),
    click.option("--delta", type=float, default=1.0, show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("-o", "--out", required=True, type=click.Path(dir_okay=False)),
]


def pair_options(f):
    for opt in reversed(_pair_options):
        f = opt(f)
    return f


@cli.command("fit-kl")
@pair_options
@click.option("--c", "c", type=float, default=klsgbn.DEFAULT_C, show_default=True)
def cmd_fit_kl(data1, data2, init, lambda1, budget_slack, k_edges, delta, seed, out, c):
    """Fisher-kernel discriminative refinement of a class pair."""
    x1, x2 = _pair_inputs(data1, data2)
    pair, certs = _init_pair(x1, x2, init, lambda1, delta)
    cfg = klsgbn.KlConfig(c=c, budget_slack=budget_slack, k_edges=k_edges, delta=delta)
    res = klsgbn.learn(x1, x2, pair, cfg, certs)
    d = io.pair_to_dict(res.pair, res.certificates)
    d.update({"selected": [[c_, k + 1, i + 1] for c_, k, i in res.selected],
              "j_trace": list(res.j_trace), "report": res.report.to_dict()})
    io.dump_json(out, d)
    write_manifest(out, "fit-kl", {"c": c, "budget_slack": budget_slack, "k_edges": k_edges,
                                   "delta": delta, "lambda1": lambda1},
                   seed, [p for p in (data1, data2, init) if p])


@cli.command("fit-mm")
@pair_options
@click.option("--lam", type=float, default=None, help="Slack weight (default 5/n).")
def cmd_fit_mm(data1, data2, init, lambda1, budget_slack, k_edges, delta, seed, out, lam):
    """Max-margin discriminative refinement of a class pair."""
    x1, x2 = _pair_inputs(data1, data2)
    pair, certs = _init_pair(x1, x2, init, lambda1, delta)
    cfg = mmsgbn.MmConfig(lam=lam, budget_slack=budget_slack, k_edges=k_edges, delta=delta)
    res = mmsgbn.learn(x1, x2, pair, cfg, certs)
    d = io.pair_to_dict(res.pair, res.certificates)
    d.update({"selected": [[c_, k + 1, i + 1] for c_, k, i in res.selected],
              "margin": {"r": res.state.r, "xi": res.state.xi.tolist()},
              "trace": list(res.trace), "report": res.report.to_dict()})
    io.dump_json(out, d)
    write_manifest(out, "fit-mm", {"lam": cfg.lam_for(len(x1) + len(x2)),
                                   "budget_slack": budget_slack, "k_edges": k_edges,
                                   "delta": delta, "lambda1": lambda1},
                   seed, [p for p in (data1, data2, init) if p])


@cli.command("classify")
@click.argument("pair_json", type=click.Path(exists=True, dir_okay=False))
@click.argument("data", type=click.Path(exists=True, dir_okay=False))
@click.option("--classifier", type=click.Choice(["sgbn", "svm"]), default="sgbn",
              show_default=True)
@click.option("--train", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Labelled training CSV (required for --classifier svm).")
@click.option("--c", "c", type=float, default=klsgbn.DEFAULT_C, show_default=True)
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
def cmd_classify(pair_json, data, classifier, train, c, out):
    """Predict class 1/2 for every row of DATA."""
    pair, _ = io.pair_from_dict(io.load_json(pair_json))
    d = io.read_dataset(data)
    if d.m != pair.m:
        raise InputError("dataset and model sizes differ")
    if classifier == "sgbn":
        pred = sgbn_predict(d.values, pair)
    else:
        if train is None:
            raise click.UsageError("--classifier svm needs --train")
        t = io.read_dataset(train)
        if t.labels is None:
            raise InputError("training CSV needs a label column")
        phi = fisher_matrix(t.values, pair.theta1, pair.theta2, pair.sigma1, pair.sigma2)
        pred = svm_predict(d.values, svm_train(phi, t.labels, SvmConfig(c)), pair)
    header = ["row", "predicted"] + (["label"] if d.labels is not None else [])
    rows = [[i + 1, int(p)] + ([int(d.labels[i])] if d.labels is not None else [])
            for i, p in enumerate(pred)]
    io.write_table(out, header, rows)
    summary = {"classifier": classifier, "n": int(d.n)}
    if d.labels is not None:
        summary["accuracy"] = accuracy(pred, d.labels)
    io.dump_json(str(out) + ".summary.json", summary)
    write_manifest(out, "classify", {"classifier": classifier, "c": c}, None,
                   [p for p in (pair_json, data, train) if p])


@cli.command("fisher-export")
@click.argument("pair_json", type=click.Path(exists=True, dir_okay=False))
@click.argument("data", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
def cmd_fisher_export(pair_json, data, out):
    """Per-sample Fisher vectors as CSV."""
    pair, _ = io.pair_from_dict(io.load_json(pair_json))
    d = io.read_dataset(data)
    if d.m != pair.m:
        raise InputError("dataset and model sizes differ")
    phi = fisher_matrix(d.values, pair.theta1, pair.theta2, pair.sigma1, pair.sigma2)
    io.write_table(out, component_names(pair.m), phi.tolist())
    write_manifest(out, "fisher-export", {}, None, [pair_json, data])


def _network(structure, chain):
    if structure is not None:
        return bench.load_structure(structure)
    return bench.builtin_chain(chain)


@cli.command("sample")
@click.option("--structure", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--chain", type=int, default=7, show_default=True,
              help="Chain length when no structure file is given.")
@click.option("--n", "n", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
def cmd_sample(structure, chain, n, seed, out):
    """Draw a standardised linear-Gaussian dataset from a network."""
    net = _network(structure, chain)
    io.write_dataset(out, bench.sample_data(net, n, seed))
    write_manifest(out, "sample", {"network": net.name, "n": n}, seed,
                   [structure] if structure else [])


def _seed_list(seed, count):
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


@cli.command("eval-recovery")
@click.option("--structure", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--chain", type=int, default=7, show_default=True)
@click.option("--n", "n", type=int, default=1000, show_default=True)
@click.option("--sims", type=int, default=50, show_default=True)
@click.option("--lambda1", type=float, default=None)
@click.option("--tau", type=float, default=0.01, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
def cmd_eval_recovery(structure, chain, n, sims, lambda1, tau, seed, out):
    """Mean false/missing/total/P-DAG errors over simulated datasets."""
    if sims < 1:
        raise InputError("--sims must be at least 1")
    net = _network(structure, chain)

    def one(s):
        x = bench.sample_data(net, n, s)
        res = orsgbn.fit(x, _or_config(lambda1, None, 1.0, x.n))
        return bench.recovery_metrics(structure_of(res.params, tau), net)

    seeds = _seed_list(seed, sims)
    with ThreadPoolExecutor(workers()) as ex:
        metrics = list(ex.map(one, seeds))
    row = [net.name, "OR-SGBN", sims,
           float(np.mean([r.false_edges for r in metrics])),
           float(np.mean([r.missing_edges for r in metrics])),
           float(np.mean([r.total_errors for r in metrics])),
           float(np.mean([r.pdag_errors for r in metrics]))]
    io.write_table(out, ["network", "method", "sims", "false_edges", "missing_edges",
                         "total_errors", "pdag_errors"], [row])
    write_manifest(out, "eval-recovery", {"network": net.name, "n": n, "sims": sims,
                                          "lambda1": lambda1, "tau": tau}, seed,
                   [structure] if structure else [])


@cli.command("eval-permutation")
@click.argument("data", type=click.Path(exists=True, dir_okay=False))
@click.option("--trials", type=int, default=20, show_default=True)
@click.option("--lambda1", type=float, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
def cmd_eval_permutation(data, trials, lambda1, seed, out):
    """Distance and correlation between fits under column permutations."""
    x = _load_std(data)
    cfg = _or_config(lambda1, None, 1.0, x.n)
    dist, cor = bench.permutation_invariance_test(x, cfg, trials, seed)
    io.write_table(out, ["method", "trials", "mean_distance", "mean_correlation"],
                   [["OR-SGBN", trials, dist, cor]])
    write_manifest(out, "eval-permutation", {"trials": trials, "lambda1": cfg.lambda1},
                   seed, [data])


def main(argv=None):
    """Console entry point; returns the exit status."""
    try:
        cli.main(args=argv, prog_name="sgbn-lab", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 2
    except InputError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except AlgorithmError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
