"""Command-line interface: one subcommand per pipeline stage plus full runs.

Stage commands read and write the same files a full ``run`` leaves in each
seed directory, so any stage can be rerun in isolation.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import anova, ard, data, evaluation, lasso, network, nomogram, pipeline
from .mlp import load_mlp, save_mlp
from .scg import ScgConfig

EXIT_DATA = 2
EXIT_STAGE = 3


def _seeds(text):
    out = []
    for part in text.split(","):
        if "-" in part:
            a, b = part.split("-")
            out += list(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    return out


def _lam(text):
    return text if text == "max" else float(text)


def _csv_list(text):
    return [s.strip() for s in text.split(",") if s.strip()]


def _data_args(p):
    p.add_argument("--manifest", required=True, help="manifest file or bundled dataset name")
    p.add_argument("--split-seed", type=int, default=None)
    p.add_argument("--features", type=_csv_list, default=(),
                   help="comma-separated columns to keep")


def _prepared(args):
    return data.prepare(args.manifest, args.split_seed, args.features)


def _out(path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return path


def _load_model(path):
    text = Path(path).read_text()
    return network.loads_prn(text) if "kind = prn" in text else load_mlp(path)


def _emit(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path:
        Path(_out(path)).write_text(text + "\n")
    print(text)


# -- stage commands -----------------------------------------------------------

def cmd_train(args):
    prep = _prepared(args)
    scg = ScgConfig(max_iterations=args.iterations)
    cfg = ard.ArdConfig(alpha_init=args.alpha_init, max_cycles=args.cycles)
    model, state = ard.train_ard(prep.train.features, prep.train.targets, args.hidden, args.seed,
                                 scg, cfg)
    save_mlp(model, _out(args.out), seed=args.seed)
    if args.ard_report:
        state.to_csv(_out(args.ard_report), ard.group_names(prep.train.feature_names))
    print(f"trained MLP ({state.cycle} evidence cycles) -> {args.out}")


def cmd_decompose(args):
    prep = _prepared(args)
    model = load_mlp(args.mlp)
    basis = anova.build_design_matrix(model, prep.train.features, args.pairs, None, args.top_m,
                                      prep.train.feature_names)
    anova.save_basis(basis, _out(args.out))
    if args.export:
        anova.export_partial_responses(model, basis, args.export, prep.norm)
    print(f"{len(basis.terms)} partial-response columns -> {args.out}")


def cmd_select(args):
    prep = _prepared(args)
    basis = anova.load_basis(args.basis)
    t = prep.train.targets
    lam = lasso.lambda_max(basis.design_matrix, t) if args.lam == "max" else args.lam
    path, model = lasso.path_and_select(basis.design_matrix, t, args.folds, args.seed, lam=lam)
    lasso.save_lasso(model, _out(args.out), basis.labels())
    if args.path_report:
        path.to_csv(_out(args.path_report))
    print("selected: " + (", ".join(basis.labels()[k] for k in model.selected) or "(none)"))


def cmd_build(args):
    model = load_mlp(args.mlp)
    basis = anova.load_basis(args.basis)
    sel = lasso.load_lasso(args.lasso)
    prn = network.build_prn(model, basis, sel)
    network.save_prn(prn, _out(args.out))
    print(f"PRN with {len(prn.subnetworks)} subnetworks -> {args.out}")


def cmd_retrain(args):
    prep = _prepared(args)
    prn = network.load_prn(args.prn)
    out = network.retrain_prn(prn, prep.train.features, prep.train.targets, args.decay,
                              ScgConfig(max_iterations=args.iterations))
    network.save_prn(network.recenter(out), _out(args.out))
    print(f"retrained PRN -> {args.out}")


def cmd_relasso(args):
    prep = _prepared(args)
    prn = network.load_prn(args.prn)
    out, _, _ = network.relasso(prn, prep.train.features, prep.train.targets, args.folds,
                                args.seed, args.lam)
    network.save_prn(out, _out(args.out))
    print("kept: " + (", ".join(out.labels()) or "(none)"))


def cmd_eval(args):
    prep = _prepared(args)
    X, t = prep.test.features, prep.test.targets
    model = _load_model(args.model)
    scores = model.predict_proba(X)
    report = {"model": args.model, **evaluation.evaluate(scores, t, args.cutpoint).to_dict()}
    if args.compare:
        other = _load_model(args.compare).predict_proba(X)
        mc = evaluation.mcnemar(scores >= args.cutpoint, other >= args.cutpoint, t)
        report["mcnemar"] = {"against": args.compare, **mc.__dict__}
    _emit(report, args.out)


def cmd_export(args):
    prep = _prepared(args)
    prn = network.load_prn(args.prn)
    if args.explain:
        record = np.array([float(v) for v in args.explain.split(",")])
        _emit(nomogram.explain_record(prn, prep.norm, record), args.out)
        return
    index = nomogram.export_nomogram(prn, prep.norm, prep.raw_train.features, args.out)
    print(f"nomogram -> {index}")


def _pipeline_config(args):
    return pipeline.PipelineConfig(
        manifest=args.manifest, outdir=args.out, seeds=tuple(args.seeds), hidden=args.hidden,
        ard=ard.ArdConfig(alpha_init=args.alpha_init, max_cycles=args.cycles),
        scg=ScgConfig(max_iterations=args.iterations), pair_policy=args.pairs, top_m=args.top_m,
        folds=args.folds, lam=args.lam, decay=args.decay, retrain_iterations=args.retrain_iterations,
        relasso=not args.no_relasso, features=tuple(args.features), split_seed=args.split_seed,
        cutpoint=args.cutpoint, workers=args.workers)


def cmd_run(args):
    results, summary = pipeline.run_pipeline(_pipeline_config(args))
    _print_summary(summary)
    return EXIT_STAGE if summary["failed"] else 0


def cmd_bench(args):
    cfg = _pipeline_config(args)
    _, summary = pipeline.run_pipeline(replace(cfg, export=False))
    _print_summary(summary)
    return EXIT_STAGE if summary["failed"] else 0


def _print_summary(summary):
    for v, s in summary["auroc"].items():
        print(f"{v:10s} AUROC {100 * s['mean']:.1f} (SD {100 * s['sd']:.1f}) "
              f"over {len(s['values'])} seeds")
    for key, freq in summary["selection_frequency"].items():
        print(f"{key} terms: " + ", ".join(f"{k} {v}" for k, v in freq.items()))
    for f in summary["failed"]:
        print(f"seed {f['seed']} failed: {f['error']}", file=sys.stderr)


# -- parser -------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="prn", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, helptext):
        p = sub.add_parser(name, help=helptext)
        p.set_defaults(func=func)
        return p

    p = add("train", cmd_train, "fit an MLP with per-group evidence-based weight decay")
    _data_args(p)
    p.add_argument("--hidden", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int, default=100, help="SCG iterations per cycle")
    p.add_argument("--alpha-init", type=float, default=0.01)
    p.add_argument("--cycles", type=int, default=12)
    p.add_argument("--ard-report", help="CSV of alpha/gamma per cycle")
    p.add_argument("--out", required=True)

    p = add("decompose", cmd_decompose, "univariate and pairwise partial responses of an MLP")
    _data_args(p)
    p.add_argument("--mlp", required=True)
    p.add_argument("--pairs", default="auto", choices=["auto", "all", "none"])
    p.add_argument("--top-m", type=int, default=15)
    p.add_argument("--export", help="directory for per-term grid CSVs")
    p.add_argument("--out", required=True)

    p = add("select", cmd_select, "logistic Lasso over the partial responses")
    _data_args(p)
    p.add_argument("--basis", required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lam", type=_lam, default=None, help="fixed lambda, or 'max'")
    p.add_argument("--path-report")
    p.add_argument("--out", required=True)

    p = add("build", cmd_build, "replicate the Lasso model as a structured network")
    p.add_argument("--mlp", required=True)
    p.add_argument("--basis", required=True)
    p.add_argument("--lasso", required=True)
    p.add_argument("--out", required=True)

    p = add("retrain", cmd_retrain, "continue training a PRN with weight decay")
    _data_args(p)
    p.add_argument("--prn", required=True)
    p.add_argument("--decay", type=float, default=1e-3)
    p.add_argument("--iterations", type=int, default=network.RETRAIN_ITERATIONS)
    p.add_argument("--out", required=True)

    p = add("relasso", cmd_relasso, "second Lasso over the subnetwork outputs")
    _data_args(p)
    p.add_argument("--prn", required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--out", required=True)

    p = add("eval", cmd_eval, "test-set AUROC, confusion counts and McNemar comparison")
    _data_args(p)
    p.add_argument("--model", required=True, help="MLP or PRN model file")
    p.add_argument("--compare", help="second model for the McNemar test")
    p.add_argument("--cutpoint", type=float, default=0.5)
    p.add_argument("--out")

    p = add("export", cmd_export, "nomogram CSV/SVG files, or explain one record")
    _data_args(p)
    p.add_argument("--prn", required=True)
    p.add_argument("--explain", help="comma-separated record in original units")
    p.add_argument("--out", help="output directory (or JSON file with --explain)")

    for name, func, helptext in (("run", cmd_run, "full pipeline over seeds with all artifacts"),
                                 ("bench", cmd_bench, "multi-seed aggregate only")):
        p = add(name, func, helptext)
        _data_args(p)
        p.add_argument("--seeds", type=_seeds, default=list(range(10)),
                       help="e.g. 0-9 or 0,3,5")
        p.add_argument("--hidden", type=int, default=8)
        p.add_argument("--iterations", type=int, default=100)
        p.add_argument("--alpha-init", type=float, default=0.01)
        p.add_argument("--cycles", type=int, default=12)
        p.add_argument("--pairs", default="auto", choices=["auto", "all", "top", "none"])
        p.add_argument("--top-m", type=int, default=15)
        p.add_argument("--folds", type=int, default=5)
        p.add_argument("--lam", type=_lam, default=None)
        p.add_argument("--decay", type=float, default=1e-3)
        p.add_argument("--retrain-iterations", type=int,
                       default=network.RETRAIN_ITERATIONS)
        p.add_argument("--no-relasso", action="store_true")
        p.add_argument("--cutpoint", type=float, default=0.5)
        p.add_argument("--workers", type=int, default=0)
        p.add_argument("--out", default="runs")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "command", None) == "export" and not (args.out or args.explain):
        print("export needs --out unless --explain is given", file=sys.stderr)
        return EXIT_DATA
    try:
        return args.func(args) or 0
    except data.DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
