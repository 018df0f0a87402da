"""Small models on hand-picked inputs, and what the nomogram curves look like.

    python3 demos/reduced_models.py [outdir]

Restricting German Credit to its first three attributes and the original
Wisconsin data to three cytology scores costs little AUROC, and the
resulting curves can be read directly from the SVG files.
"""

import sys
from pathlib import Path

from prn.pipeline import PipelineConfig, run_pipeline

outdir = Path(sys.argv[1] if len(sys.argv) > 1 else "reduced_demo")
cases = {"german": ("attr_1", "attr_2", "attr_3"),
         "wbc_original": ("clump_thickness", "marginal_adhesion", "bare_nuclei")}
for name, features in cases.items():
    results, summary = run_pipeline(PipelineConfig(name, outdir=str(outdir / name),
                                                   seeds=(0, 1, 2), features=features))
    prn = summary["auroc"]["prn"]
    print(f"{name} on {', '.join(features)}: PRN AUROC {prn['mean']:.3f} over 3 seeds")
    print("  terms: " + ", ".join(f"{k} {v}/3" for k, v in
                                 summary["selection_frequency"]["prn"].items()))
    print(f"  curves: {outdir / name / 'seed_000' / 'nomogram'}")
