"""Tabular data ingestion, median-anchored normalization and train/test splits.

All downstream modules assume features have been normalized so that the
training median of every column sits at zero: that point is the anchor of
the functional ANOVA decomposition.
"""

import csv
import logging
import os
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

NORMALIZATION_MODES = ("zscore-median", "range[-1,1]", "range[0,1]")


class DataError(ValueError):
    """Raised for malformed or unusable input tables."""


@dataclass(frozen=True)
class Dataset:
    name: str
    features: np.ndarray
    targets: np.ndarray
    feature_names: tuple

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        t = np.asarray(self.targets, dtype=float)
        if X.ndim != 2 or X.shape[1] < 1:
            raise DataError("features must be a 2-d array with at least one column")
        if t.shape != (X.shape[0],):
            raise DataError("targets must have one entry per row")
        if not np.all(np.isfinite(X)):
            raise DataError("non-finite feature values")
        if not np.all((t == 0) | (t == 1)):
            raise DataError("targets must be 0 or 1")
        if len(self.feature_names) != X.shape[1]:
            raise DataError("feature_names length does not match feature columns")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", t)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    def subset(self, rows):
        return replace(self, features=self.features[rows], targets=self.targets[rows])

    def select_features(self, names):
        idx = [self.feature_names.index(n) for n in names]
        return replace(self, features=self.features[:, idx], feature_names=tuple(names))


@dataclass(frozen=True)
class NormalizationSpec:
    """Affine map ``x_norm = (x - center) / scale`` per feature.

    ``center`` is the training median in original units, so the normalized
    training median is zero whatever the mode.
    """

    mode: str
    center: np.ndarray
    scale: np.ndarray
    feature_names: tuple = ()

    def apply(self, X):
        return (np.asarray(X, dtype=float) - self.center) / self.scale

    def invert(self, Z):
        return np.asarray(Z, dtype=float) * self.scale + self.center

    def to_dict(self):
        return {"mode": self.mode, "center": self.center.tolist(),
                "scale": self.scale.tolist(), "feature_names": list(self.feature_names)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["mode"], np.asarray(d["center"], float), np.asarray(d["scale"], float),
                   tuple(d.get("feature_names", ())))


@dataclass(frozen=True)
class SplitSpec:
    train_size: int
    test_size: int
    strategy: str = "first-k"
    seed: int = 0


@dataclass
class Manifest:
    """Parsed dataset manifest (``key = value`` lines, ``#`` comments)."""

    name: str
    path: Path
    target: str
    normalization: str = "zscore-median"
    split: SplitSpec = None
    drop_columns: list = field(default_factory=list)
    positive: list = None


def _parse_kv(text):
    out = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"manifest line is not key = value: {raw!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _split_list(value):
    return [v.strip() for v in value.split(",") if v.strip()] if value else []


def bundled_manifest_path(name):
    """Path of a manifest shipped with the package (``pima``, ``german``, ...)."""
    return Path(str(resources.files("prn").joinpath(f"datasets/{name}.txt")))


def bundled_datasets():
    root = Path(str(resources.files("prn").joinpath("datasets")))
    return sorted(p.stem for p in root.glob("*.txt"))


def read_manifest(path_or_name):
    """Read a manifest file, or a bundled one when given a bare dataset name."""
    path = Path(path_or_name)
    if not path.exists() and not path.suffix:
        path = bundled_manifest_path(str(path_or_name))
    if not path.exists():
        raise DataError(f"manifest not found: {path_or_name}")
    kv = _parse_kv(path.read_text())
    for key in ("name", "path", "target"):
        if key not in kv:
            raise DataError(f"manifest {path} lacks '{key}'")
    data_path = Path(kv["path"])
    if not data_path.is_absolute():
        candidates = [path.parent / data_path]
        if os.environ.get("PRN_DATA_DIR"):
            candidates.append(Path(os.environ["PRN_DATA_DIR"]) / data_path)
        data_path = next((c for c in candidates if c.exists()), candidates[0])
    split = None
    if "train_size" in kv:
        split = SplitSpec(int(kv["train_size"]), int(kv.get("test_size", 0)),
                          kv.get("split", "first-k"), int(kv.get("seed", 0)))
    mode = kv.get("normalization", "zscore-median")
    if mode not in NORMALIZATION_MODES:
        raise DataError(f"unknown normalization mode {mode!r}")
    return Manifest(kv["name"], data_path, kv["target"], mode, split,
                    _split_list(kv.get("drop_columns")),
                    _split_list(kv.get("positive")) or None)


def _coerce_targets(raw, positive):
    if any(v == "" for v in raw):
        raise DataError("missing target values")
    if positive is not None:
        pos = {float(p) for p in positive}
        return np.array([float(v) in pos for v in raw], dtype=float)
    values = sorted({float(v) for v in raw})
    if len(values) != 2:
        raise DataError("target not binary")
    return np.array([float(v) == values[1] for v in raw], dtype=float)


def load_csv(path, target_column, drop_columns=(), positive=None, name=None):
    """Load a comma-delimited numeric table with a header row.

    Rows with a missing (empty) cell in any retained feature column are
    dropped, as are constant columns. With ``positive`` given, the target is
    1 where the target cell equals one of those values; otherwise the target
    column must hold exactly two distinct values, the larger mapping to 1.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DataError(f"empty file: {path}")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if isinstance(target_column, int):
        t_idx = target_column
    elif target_column in header:
        t_idx = header.index(target_column)
    else:
        raise DataError(f"target column {target_column!r} missing")
    unknown = set(drop_columns) - set(header)
    if unknown:
        raise DataError(f"drop_columns not in header: {sorted(unknown)}")
    keep = [j for j, h in enumerate(header) if j != t_idx and h not in drop_columns]
    try:
        cells = [[r[j].strip() for j in keep] for r in body]
        tcol = [r[t_idx].strip() for r in body]
        complete = [all(c != "" for c in row) for row in cells]
        X = np.array([[float(c) for c in row] for row, ok in zip(cells, complete) if ok],
                     dtype=float).reshape(-1, len(keep))
    except (IndexError, ValueError) as exc:
        raise DataError(f"cannot parse {path}: {exc}") from exc
    n_dropped = len(body) - X.shape[0]
    if n_dropped:
        logger.info("%s: dropped %d rows with missing values", path.name, n_dropped)
    t = _coerce_targets([v for v, ok in zip(tcol, complete) if ok], positive)
    if X.shape[0] < 2:
        raise DataError("fewer than 2 rows survive")
    if t.min() == t.max():
        raise DataError("target not binary")
    names = [header[j] for j in keep]
    constant = np.ptp(X, axis=0) == 0
    if constant.any():
        logger.warning("%s: dropping constant columns %s", path.name,
                       [n for n, c in zip(names, constant) if c])
        X = X[:, ~constant]
        names = [n for n, c in zip(names, constant) if not c]
    return Dataset(name or path.stem, X, t, tuple(names))


def load_manifest_dataset(manifest):
    if not isinstance(manifest, Manifest):
        manifest = read_manifest(manifest)
    return load_csv(manifest.path, manifest.target, manifest.drop_columns,
                    manifest.positive, manifest.name)


def fit_normalization(X, mode="zscore-median", feature_names=()):
    X = np.asarray(X, dtype=float)
    if mode == "zscore-median":
        scale = X.std(axis=0, ddof=1)
    else:
        m = re.fullmatch(r"range\[(-?\d+(?:\.\d*)?),(-?\d+(?:\.\d*)?)\]", mode)
        if m is None:
            raise DataError(f"unknown normalization mode {mode!r}")
        lo, hi = float(m.group(1)), float(m.group(2))
        scale = np.ptp(X, axis=0) / (hi - lo)
    if np.any(~(scale > 0)):
        raise DataError("zero-variance feature encountered; drop it before normalizing")
    return NormalizationSpec(mode, np.median(X, axis=0), scale, tuple(feature_names))


def normalize(dataset, mode="zscore-median"):
    """Normalize with statistics of ``dataset`` (pass the training rows).

    Range modes map each feature affinely onto the target interval and then
    shift the median to zero; the result equals ``(x - median) / scale``.
    """
    spec = fit_normalization(dataset.features, mode, dataset.feature_names)
    return replace(dataset, features=spec.apply(dataset.features)), spec


def apply_normalization(dataset, spec):
    return replace(dataset, features=spec.apply(dataset.features))


def denormalize(X, spec):
    return spec.invert(X)


def split_indices(n, spec):
    if spec.train_size < 1 or spec.test_size < 0 or spec.train_size + spec.test_size > n:
        raise DataError(f"infeasible split {spec.train_size}/{spec.test_size} of {n} rows")
    if spec.strategy == "first-k":
        order = np.arange(n)
    elif spec.strategy == "seeded-random":
        order = np.random.default_rng(spec.seed).permutation(n)
    else:
        raise DataError(f"unknown split strategy {spec.strategy!r}")
    return order[:spec.train_size], order[spec.train_size:spec.train_size + spec.test_size]


def split(dataset, spec):
    train_idx, test_idx = split_indices(dataset.n, spec)
    return dataset.subset(train_idx), dataset.subset(test_idx)


@dataclass
class PreparedData:
    """Normalized train/test pair plus the transform back to original units."""

    train: Dataset
    test: Dataset
    norm: NormalizationSpec
    raw_train: Dataset


def prepare(manifest, split_seed=None, features=None):
    """Load, split and normalize the dataset a manifest describes.

    ``split_seed`` overrides the manifest seed for seeded-random splits;
    ``features`` restricts the columns before normalization.
    """
    if not isinstance(manifest, Manifest):
        manifest = read_manifest(manifest)
    ds = load_manifest_dataset(manifest)
    if features:
        ds = ds.select_features(list(features))
    spec = manifest.split or SplitSpec(ds.n, 0)
    if split_seed is not None:
        spec = replace(spec, seed=split_seed)
    raw_train, raw_test = split(ds, spec)
    train, norm = normalize(raw_train, manifest.normalization)
    return PreparedData(train, apply_normalization(raw_test, norm), norm, raw_train)


def convert_shuttle(trn_path, tst_path, out_path):
    """Write the UCI Statlog shuttle files as one CSV (training rows first)."""
    rows = []
    for p in (trn_path, tst_path):
        rows += [line.split() for line in Path(p).read_text().splitlines() if line.strip()]
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{k}" for k in range(1, 10)] + ["class"])
        w.writerows(rows)
    return Path(out_path)
