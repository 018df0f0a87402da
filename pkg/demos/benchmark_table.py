"""Ten-seed AUROC table over the bundled datasets.

    python3 demos/benchmark_table.py [dataset ...]

German Credit is the slow one (several minutes on a single core).
"""

import sys
import time

from prn import data
from prn.pipeline import PipelineConfig, run_pipeline

names = sys.argv[1:] or ["pima", "german", "ionosphere", "wbc_original", "wbc_diagnostic"]
print(f"{'dataset':16s} {'MLP':>12s} {'PRN':>12s} {'PRN-Lasso':>12s} {'seconds':>8s}")
for name in names:
    try:
        data.prepare(name)
    except data.DataError as exc:
        print(f"{name:16s} skipped: {exc}")
        continue
    t0 = time.perf_counter()
    _, summary = run_pipeline(PipelineConfig(name, outdir=f"runs/{name}", export=False))
    cells = [f"{100 * summary['auroc'][v]['mean']:.1f} ({100 * summary['auroc'][v]['sd']:.1f})"
             if v in summary["auroc"] else "-" for v in ("mlp", "prn", "prn_lasso")]
    print(f"{name:16s} " + " ".join(f"{c:>12s}" for c in cells)
          + f" {time.perf_counter() - t0:8.0f}")
    top = list(summary["selection_frequency"].get("prn", {}).items())[:6]
    print("    most frequent terms: " + ", ".join(f"{k} {v}/10" for k, v in top))
