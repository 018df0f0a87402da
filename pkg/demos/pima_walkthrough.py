"""Walk through every stage on the Pima diabetes data for a single seed.

    python3 demos/pima_walkthrough.py [outdir]

Prints what each stage produced: the relevance weights the evidence loop
settled on, the terms the Lasso kept, and how test AUROC moves from the
MLP to the structured network.
"""

import sys
from pathlib import Path

from prn import anova, ard, data, evaluation, lasso, network, nomogram

outdir = Path(sys.argv[1] if len(sys.argv) > 1 else "pima_demo")
prep = data.prepare("pima")
tr, te = prep.train, prep.test
names = tr.feature_names
print(f"{tr.name}: {len(tr.targets)} train / {len(te.targets)} test rows, inputs {names}")

# 1. MLP with one weight-decay hyperparameter per input
mlp, state = ard.train_ard(tr.features, tr.targets, h=8, seed=0)
print(f"\nevidence loop ran {state.cycle} cycles; input decay hyperparameters:")
for name, alpha in zip(names, state.alphas):
    print(f"  {name:16s} {alpha:10.3g}")

# 2. univariate and pairwise partial responses, anchored at the median
basis = anova.build_design_matrix(mlp, tr.features, "auto",
                                  ard.input_relevance(mlp, state), feature_names=names)
print(f"\n{len(basis.terms)} candidate terms")

# 3. Lasso over those terms, lambda by 5-fold CV with the one-SE rule
path, sel = lasso.path_and_select(basis.design_matrix, tr.targets)
print("lasso kept: " + ", ".join(basis.labels()[k] for k in sel.selected))

# 4. the structured network reproduces the Lasso logit exactly before retraining
prn0 = network.build_prn(mlp, basis, sel)
gap = abs(prn0.logit(tr.features) - sel.decision_function(basis.design_matrix)).max()
print(f"construction gap on training rows: {gap:.1e}")

prn = network.recenter(network.retrain_prn(prn0, tr.features, tr.targets))
prn_l, _, _ = network.relasso(prn, tr.features, tr.targets)

print("\ntest AUROC")
for label, model in (("MLP", mlp), ("PRN before retraining", prn0), ("PRN", prn),
                     ("PRN-Lasso", prn_l)):
    rep = evaluation.evaluate(model.predict_proba(te.features), te.targets)
    lo, hi = rep.auroc_ci
    print(f"  {label:22s} {rep.auroc:.3f}  [{lo:.3f}, {hi:.3f}]")

# 5. nomogram files for the final model
index = nomogram.export_nomogram(prn_l, prep.norm, prep.raw_train.features, outdir / "nomogram")
print(f"\nnomogram written to {index.parent}")
record = data.denormalize(te.features[:1], prep.norm)[0]
expl = nomogram.explain_record(prn_l, prep.norm, record)
print(f"first test record: p = {expl['probability']:.3f}")
for c in expl["contributions"]:
    print(f"  {c['term']:24s} {c['value']:+.3f}")
