import csv
import json

import numpy as np
import pytest

from prn import cli, evaluation, pipeline
from prn.ard import ArdConfig


@pytest.fixture
def manifest(tmp_path):
    r = np.random.default_rng(0)
    X = r.normal(size=(160, 3))
    t = (r.random(160) < 1 / (1 + np.exp(-(2 * X[:, 0] - X[:, 1])))).astype(int)
    with open(tmp_path / "syn.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v", "w", "y"])
        for row, ti in zip(X, t):
            w.writerow([f"{x:.6f}" for x in row] + [ti])
    path = tmp_path / "syn.txt"
    path.write_text("name = syn\npath = syn.csv\ntarget = y\ntrain_size = 110\ntest_size = 50\n")
    return path


def small_config(manifest, outdir, **kw):
    base = dict(outdir=str(outdir), seeds=(0, 1), hidden=3, ard=ArdConfig(max_cycles=3),
                workers=1)
    base.update(kw)
    return pipeline.PipelineConfig(str(manifest), **base)


def test_run_writes_all_artifacts(manifest, tmp_path):
    results, summary = pipeline.run_pipeline(small_config(manifest, tmp_path / "run"))
    assert summary["n_ok"] == 2
    seed_dir = tmp_path / "run" / "seed_000"
    for name in ("mlp.txt", "ard.csv", "lasso_path.csv", "lasso.json", "prn_initial.txt",
                 "prn.txt", "eval.json", "scores.csv", "partial_responses/index.json",
                 "nomogram/index.json"):
        assert (seed_dir / name).exists(), name
    ev = json.loads((seed_dir / "eval.json").read_text())
    assert 0 <= ev["mcnemar_prn_vs_mlp"]["p_value"] <= 1
    assert "u" in summary["input_frequency"]["lasso"]


def test_aggregate_matches_raw_scores(manifest, tmp_path):
    results, summary = pipeline.run_pipeline(small_config(manifest, tmp_path / "run"))
    for variant, agg in summary["auroc"].items():
        vals = []
        for seed in (0, 1):
            with open(tmp_path / "run" / f"seed_{seed:03d}" / "scores.csv") as fh:
                rows = list(csv.DictReader(fh))
            t = np.array([float(r["target"]) for r in rows])
            s = np.array([float(r[variant]) for r in rows])
            vals.append(evaluation.auroc(s, t))
        assert agg["mean"] == pytest.approx(np.mean(vals), abs=1e-12)
        assert agg["sd"] == pytest.approx(np.std(vals, ddof=1), abs=1e-12)


def test_rerun_is_byte_identical(manifest, tmp_path):
    pipeline.run_pipeline(small_config(manifest, tmp_path / "a", seeds=(3,)))
    pipeline.run_pipeline(small_config(manifest, tmp_path / "b", seeds=(3,)))
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*")
                   if p.is_file() and p.name != "timings.json")
    assert files
    for rel in files:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes(), rel


def test_lambda_max_override_gives_intercept_only(manifest, tmp_path, caplog):
    results, summary = pipeline.run_pipeline(
        small_config(manifest, tmp_path / "run", seeds=(0,), lam="max"))
    assert results[0]["ok"]
    assert results[0]["terms"]["prn"] == []
    assert "intercept-only" in caplog.text
    assert summary["auroc"]["prn"]["values"] == [0.5]


def test_failed_seed_is_recorded(manifest, tmp_path, monkeypatch):
    real = pipeline.ard_mod.train_ard

    def flaky(X, t, h, seed, *a, **k):
        if seed == 1:
            raise RuntimeError("boom")
        return real(X, t, h, seed, *a, **k)

    monkeypatch.setattr(pipeline.ard_mod, "train_ard", flaky)
    results, summary = pipeline.run_pipeline(small_config(manifest, tmp_path / "run"))
    assert summary["n_ok"] == 1
    assert summary["failed"][0]["seed"] == 1 and "boom" in summary["failed"][0]["error"]
    assert (tmp_path / "run" / "aggregate.json").exists()


def test_config_requires_seeds(manifest):
    with pytest.raises(ValueError):
        pipeline.PipelineConfig(str(manifest), seeds=())


def test_cli_stage_by_stage(manifest, tmp_path, capsys):
    d = tmp_path / "cli"
    m = ["--manifest", str(manifest)]
    assert cli.main(["train", *m, "--hidden", "3", "--cycles", "3", "--out", str(d / "mlp.txt"),
                     "--ard-report", str(d / "ard.csv")]) == 0
    assert cli.main(["decompose", *m, "--mlp", str(d / "mlp.txt"), "--out",
                     str(d / "basis.csv"), "--export", str(d / "pr")]) == 0
    assert cli.main(["select", *m, "--basis", str(d / "basis.csv"), "--out",
                     str(d / "lasso.json"), "--path-report", str(d / "path.csv")]) == 0
    assert cli.main(["build", "--mlp", str(d / "mlp.txt"), "--basis", str(d / "basis.csv"),
                     "--lasso", str(d / "lasso.json"), "--out", str(d / "prn0.txt")]) == 0
    assert cli.main(["retrain", *m, "--prn", str(d / "prn0.txt"), "--out",
                     str(d / "prn.txt")]) == 0
    assert cli.main(["relasso", *m, "--prn", str(d / "prn.txt"), "--out",
                     str(d / "prnl.txt")]) == 0
    capsys.readouterr()
    assert cli.main(["eval", *m, "--model", str(d / "prn.txt"), "--compare",
                     str(d / "mlp.txt"), "--out", str(d / "eval.json")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report["mcnemar"]) >= {"b", "c", "statistic", "p_value"}
    assert cli.main(["export", *m, "--prn", str(d / "prn.txt"), "--out", str(d / "nomo")]) == 0
    assert (d / "nomo" / "index.json").exists()
    capsys.readouterr()
    assert cli.main(["export", *m, "--prn", str(d / "prn.txt"), "--explain", "0.1,0.2,0.3"]) == 0
    explained = json.loads(capsys.readouterr().out)
    assert 0 < explained["probability"] < 1


def test_cli_run_and_bench(manifest, tmp_path, capsys):
    args = ["--manifest", str(manifest), "--seeds", "0-1", "--hidden", "3", "--cycles", "2",
            "--workers", "1"]
    assert cli.main(["run", *args, "--out", str(tmp_path / "r")]) == 0
    assert "prn" in capsys.readouterr().out
    assert cli.main(["bench", *args, "--out", str(tmp_path / "b")]) == 0
    assert not (tmp_path / "b" / "seed_000" / "nomogram").exists()


def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main(["train", "--manifest", str(tmp_path / "none.txt"), "--out",
                     str(tmp_path / "m.txt")]) == cli.EXIT_DATA
    assert "data error" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code != 0


def test_seed_list_parsing():
    assert cli._seeds("0-3,7") == [0, 1, 2, 3, 7]
