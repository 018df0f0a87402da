"""End-to-end runs: ARD-trained MLP, partial responses, Lasso, PRN, retraining.

Each seed writes into its own directory under the output root; the
aggregate report summarizes test AUROC and term-selection frequencies over
the seeds that completed.
"""

import csv
import json
import logging
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import anova, data, evaluation, lasso, network, nomogram
from . import ard as ard_mod
from .ard import ArdConfig
from .mlp import save_mlp
from .scg import ScgConfig

logger = logging.getLogger(__name__)

VARIANTS = ("mlp", "prn", "prn_lasso")


@dataclass
class PipelineConfig:
    manifest: str
    outdir: str = "runs"
    seeds: tuple = tuple(range(10))
    hidden: int = 8
    ard: ArdConfig = field(default_factory=ArdConfig)
    scg: ScgConfig = field(default_factory=ScgConfig)
    pair_policy: str = "auto"
    top_m: int = 15
    folds: int = 5
    lam: object = None          # float, "max", or None for cross-validation
    decay: float = 1e-3
    retrain_iterations: int = network.RETRAIN_ITERATIONS
    relasso: bool = True
    features: tuple = ()        # restrict the model to these columns
    split_seed: int = None
    cutpoint: float = 0.5
    export: bool = True
    workers: int = 0            # 0 means one per available core

    def __post_init__(self):
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise ValueError("at least one seed is required")
        self.features = tuple(self.features or ())


def _dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _resolve_lambda(lam, Phi, t):
    if lam == "max":
        return lasso.lambda_max(Phi, t)
    return None if lam is None else float(lam)


def _eval(scores, t, cutpoint):
    return evaluation.evaluate(scores, t, cutpoint).to_dict()


def run_seed(config, seed, prepared=None):
    """Run every stage for one weight-initialization seed; returns a summary dict."""
    prepared = prepared or data.prepare(config.manifest, config.split_seed, config.features)
    tr, te = prepared.train, prepared.test
    out = Path(config.outdir) / f"seed_{seed:03d}"
    out.mkdir(parents=True, exist_ok=True)
    names = tr.feature_names

    model, state = ard_mod.train_ard(tr.features, tr.targets, config.hidden, seed, config.scg,
                                 config.ard)
    save_mlp(model, out / "mlp.txt")
    state.to_csv(out / "ard.csv", ard_mod.group_names(names))

    basis = anova.build_design_matrix(model, tr.features, config.pair_policy,
                                      ard_mod.input_relevance(model, state), config.top_m, names)
    if config.export:
        anova.export_partial_responses(model, basis, out / "partial_responses", prepared.norm)
    lam = _resolve_lambda(config.lam, basis.design_matrix, tr.targets)
    path, sel = lasso.path_and_select(basis.design_matrix, tr.targets, config.folds, seed, lam=lam)
    path.to_csv(out / "lasso_path.csv")
    lasso.save_lasso(sel, out / "lasso.json", basis.labels())
    if not sel.selected:
        logger.warning("seed %d: lasso selected no terms; the PRN is intercept-only", seed)

    prn0 = network.build_prn(model, basis, sel, {"seed": seed})
    network.save_prn(prn0, out / "prn_initial.txt")
    scg = replace(config.scg, max_iterations=config.retrain_iterations)
    prn = network.recenter(network.retrain_prn(prn0, tr.features, tr.targets, config.decay, scg))
    network.save_prn(prn, out / "prn.txt")

    scores = {"mlp": model.predict_proba(te.features), "prn": prn.predict_proba(te.features)}
    terms = {"lasso": [basis.labels()[k] for k in sel.selected], "prn": prn.labels()}
    inputs = {"lasso": sorted({names[i] for k in sel.selected for i in basis.terms[k].inputs},
                              key=names.index)}
    final = prn
    if config.relasso and prn.subnetworks:
        prn_l, _, path2 = network.relasso(prn, tr.features, tr.targets, config.folds, seed)
        network.save_prn(prn_l, out / "prn_lasso.txt")
        path2.to_csv(out / "relasso_path.csv")
        scores["prn_lasso"] = prn_l.predict_proba(te.features)
        terms["prn_lasso"] = prn_l.labels()
        inputs["prn_lasso"] = [names[i] for i in prn_l.inputs_used()]
        final = prn_l
    if config.export:
        nomogram.export_nomogram(final, prepared.norm, prepared.raw_train.features, out / "nomogram")

    reports = {k: _eval(s, te.targets, config.cutpoint) for k, s in scores.items()}
    mc = evaluation.mcnemar(scores["prn"] >= config.cutpoint, scores["mlp"] >= config.cutpoint,
                            te.targets)
    result = {"seed": seed, "dataset": tr.name, "reports": reports, "terms": terms,
              "inputs": inputs,
              "mcnemar_prn_vs_mlp": asdict(mc), "ard_cycles": state.cycle,
              "lasso_lambda": sel.lam}
    _dump_json(result, out / "eval.json")
    with open(out / "scores.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["target"] + list(scores))
        for row in zip(te.targets, *scores.values()):
            w.writerow([int(row[0])] + [repr(float(v)) for v in row[1:]])
    return result


def _run_one(args):
    config, seed = args
    t0 = time.perf_counter()
    try:
        res = run_seed(config, seed)
        res["ok"] = True
    except Exception as exc:  # per-seed failure is recorded, not fatal
        logger.error("seed %d failed: %s", seed, exc)
        res = {"seed": seed, "ok": False, "error": f"{type(exc).__name__}: {exc}",
               "traceback": traceback.format_exc()}
    res["seconds"] = time.perf_counter() - t0
    return res


def aggregate(results):
    """Mean and sample standard deviation of AUROC per variant, plus term frequencies."""
    ok = [r for r in results if r.get("ok")]
    summary = {"n_seeds": len(results), "n_ok": len(ok),
               "failed": [{"seed": r["seed"], "error": r["error"]} for r in results
                          if not r.get("ok")],
               "auroc": {}, "selection_frequency": {}, "input_frequency": {}}
    for v in VARIANTS:
        vals = [r["reports"][v]["auroc"] for r in ok if v in r["reports"]]
        if vals:
            summary["auroc"][v] = {"mean": float(np.mean(vals)),
                                   "sd": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
                                   "values": vals}
    for key in ("lasso", "prn", "prn_lasso"):
        counts = {}
        for r in ok:
            for term in r["terms"].get(key, []):
                counts[term] = counts.get(term, 0) + 1
        if counts:
            summary["selection_frequency"][key] = dict(sorted(counts.items(),
                                                              key=lambda kv: (-kv[1], kv[0])))
    for key in ("lasso", "prn_lasso"):
        counts = {}
        for r in ok:
            for name in r["inputs"].get(key, []):
                counts[name] = counts.get(name, 0) + 1
        if counts:
            summary["input_frequency"][key] = dict(sorted(counts.items(),
                                                          key=lambda kv: (-kv[1], kv[0])))
    return summary


def _write_seed_table(results, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset", "seed", "variant", "auroc", "ci_low", "ci_high", "terms"])
        for r in results:
            if not r.get("ok"):
                continue
            for v, rep in r["reports"].items():
                lo, hi = rep["auroc_ci"]
                w.writerow([r["dataset"], r["seed"], v, repr(rep["auroc"]), repr(lo), repr(hi),
                            ";".join(r["terms"].get(v, []))])


def run_pipeline(config):
    """Run all seeds (in parallel worker processes when more than one core is available)."""
    root = Path(config.outdir)
    root.mkdir(parents=True, exist_ok=True)
    data.prepare(config.manifest, config.split_seed, config.features)  # fail fast on bad input
    workers = config.workers or os.cpu_count() or 1
    jobs = [(config, s) for s in config.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    results.sort(key=lambda r: r["seed"])
    summary = aggregate(results)
    _dump_json(summary, root / "aggregate.json")
    _write_seed_table(results, root / "per_seed.csv")
    _dump_json({str(r["seed"]): r["seconds"] for r in results}, root / "timings.json")
    return results, summary


def bench(config):
    """Multi-seed run reporting only the aggregate (no per-term exports)."""
    return run_pipeline(replace(config, export=False))[1]
