"""Functional ANOVA components of a model's logit, anchored at the origin.

Any object with a ``logit(X)`` method accepting an (N, d) array and a ``d``
attribute can be decomposed; in practice that is the fitted MLP.
"""

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

GENERAL_MAX_D = 6


@dataclass(frozen=True)
class AnovaTerm:
    inputs: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.inputs)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("term indices must be strictly increasing")
        object.__setattr__(self, "inputs", idx)

    @property
    def kind(self):
        return {0: "constant", 1: "univariate", 2: "bivariate"}.get(len(self.inputs), "general")

    def label(self, names=None):
        if not self.inputs:
            return "constant"
        return "*".join(names[i] if names else f"x{i}" for i in self.inputs)


def _embed(d, idx, values):
    """Rows that are zero except in the columns ``idx``."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None] if len(idx) == 1 else values[None, :]
    Z = np.zeros((values.shape[0], d))
    Z[:, list(idx)] = values
    return Z


def _check_index(model, *idx):
    for i in idx:
        if not 0 <= i < model.d:
            raise IndexError(f"input index {i} out of range for d={model.d}")


def phi0(model):
    return float(np.asarray(model.logit(np.zeros((1, model.d))))[0])


def phi_univariate(model, i, values):
    """Logit with only input ``i`` set, minus the constant term."""
    _check_index(model, i)
    values = np.asarray(values, dtype=float)
    out = model.logit(_embed(model.d, (i,), values.reshape(-1))) - phi0(model)
    return out.reshape(values.shape) if values.ndim else float(out[0])


def phi_bivariate(model, i, j, xi, xj):
    if i == j:
        raise ValueError("bivariate term needs two distinct inputs")
    _check_index(model, i, j)
    xi, xj = np.broadcast_arrays(np.asarray(xi, float), np.asarray(xj, float))
    shape = xi.shape
    xi, xj = xi.reshape(-1), xj.reshape(-1)
    out = (model.logit(_embed(model.d, (i, j), np.column_stack([xi, xj])))
           - phi_univariate(model, i, xi) - phi_univariate(model, j, xj) - phi0(model))
    return out.reshape(shape) if shape else float(out[0])


def phi_general(model, inputs, values):
    """Component for an arbitrary index set by recursion over its subsets.

    ``values`` has one column per index (or is a single point). Exponential
    in the set size; guarded to ``d <= 6``.
    """
    inputs = AnovaTerm(tuple(inputs)).inputs
    if not inputs:
        raise ValueError("index set must be non-empty")
    if model.d > GENERAL_MAX_D:
        raise ValueError(f"phi_general is limited to d <= {GENERAL_MAX_D}")
    _check_index(model, *inputs)
    values = np.asarray(values, dtype=float)
    single = values.ndim == 1
    V = np.atleast_2d(values)
    if V.shape[1] != len(inputs):
        raise ValueError("one value column per index required")
    cache = {}

    def comp(sub):
        if sub not in cache:
            cols = [inputs.index(s) for s in sub]
            total = model.logit(_embed(model.d, sub, V[:, cols])) - phi0(model)
            for r in range(1, len(sub)):
                for proper in itertools.combinations(sub, r):
                    total = total - comp(proper)
            cache[sub] = total
        return cache[sub]

    out = comp(inputs)
    return float(out[0]) if single else out


def all_components(model, X):
    """Every one of the 2^d components at the rows of ``X`` (dict by index set)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    comps = {(): np.full(X.shape[0], phi0(model))}
    for r in range(1, model.d + 1):
        for s in itertools.combinations(range(model.d), r):
            comps[s] = phi_general(model, s, X[:, list(s)])
    return comps


@dataclass
class PartialResponseBasis:
    phi0: float
    terms: list
    design_matrix: np.ndarray
    feature_names: tuple = ()
    ranges: np.ndarray = field(default=None)

    def labels(self):
        return [t.label(self.feature_names or None) for t in self.terms]

    def column_index(self, inputs):
        return self.terms.index(AnovaTerm(tuple(inputs)))

    def restrict(self, inputs):
        """Keep only terms whose inputs all lie in ``inputs``."""
        keep = [k for k, t in enumerate(self.terms) if set(t.inputs) <= set(inputs)]
        return PartialResponseBasis(self.phi0, [self.terms[k] for k in keep],
                                    self.design_matrix[:, keep], self.feature_names, self.ranges)


def select_pairs(d, policy="auto", relevance=None, top_m=15, max_all=40):
    """Bivariate pairs to materialize.

    ``policy`` is ``"all"``, ``"none"``, ``"top"`` (pairs among the ``top_m``
    most relevant inputs), ``"auto"`` (all pairs up to ``max_all`` inputs,
    else top) or an explicit list of pairs.
    """
    if not isinstance(policy, str):
        return sorted(tuple(sorted(p)) for p in policy)
    if policy == "auto":
        policy = "all" if d <= max_all else "top"
    if policy == "none":
        return []
    if policy == "all":
        return list(itertools.combinations(range(d), 2))
    if policy == "top":
        if relevance is None:
            raise ValueError("pair policy 'top' needs input relevances")
        top = sorted(np.argsort(-np.asarray(relevance))[:top_m])
        return list(itertools.combinations(top, 2))
    raise ValueError(f"unknown pair policy {policy!r}")


def build_design_matrix(model, X, pair_policy="auto", relevance=None, top_m=15,
                        feature_names=(), chunk_rows=20000):
    """Partial responses of every univariate and admitted bivariate term.

    Columns are ordered univariates by index, then pairs lexicographically.
    Rows are processed in chunks to bound memory on large tables.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d = model.d
    pairs = select_pairs(d, pair_policy, relevance, top_m)
    terms = [AnovaTerm((i,)) for i in range(d)] + [AnovaTerm(p) for p in pairs]
    c0 = phi0(model)
    Phi = np.empty((X.shape[0], len(terms)))
    for start in range(0, X.shape[0], chunk_rows):
        Xc = X[start:start + chunk_rows]
        n = Xc.shape[0]
        # one stacked evaluation per chunk: univariate rows, then pair rows
        Z = np.zeros(((d + len(pairs)) * n, d))
        for i in range(d):
            Z[i * n:(i + 1) * n, i] = Xc[:, i]
        for k, (i, j) in enumerate(pairs):
            blk = slice((d + k) * n, (d + k + 1) * n)
            Z[blk, i] = Xc[:, i]
            Z[blk, j] = Xc[:, j]
        L = (model.logit(Z) - c0).reshape(d + len(pairs), n).T
        uni = L[:, :d]
        Phi[start:start + n, :d] = uni
        for k, (i, j) in enumerate(pairs):
            Phi[start:start + n, d + k] = L[:, d + k] - uni[:, i] - uni[:, j]
    ranges = np.column_stack([X.min(axis=0), X.max(axis=0)]) if X.shape[0] else None
    return PartialResponseBasis(c0, terms, Phi, tuple(feature_names), ranges)


def export_partial_responses(model, basis, outdir, norm=None, n_grid=101, n_grid2=41):
    """Write each basis term on a grid (CSV) plus an ``index.json``.

    Grid values are in normalized units, and also in original units when a
    :class:`~prn.data.NormalizationSpec` is given.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    names = basis.feature_names or tuple(f"x{i}" for i in range(model.d))
    index = {"phi0": basis.phi0, "terms": []}
    for t in basis.terms:
        lo_hi = [basis.ranges[i].tolist() for i in t.inputs]
        fname = f"term_{'_'.join(str(i) for i in t.inputs)}.csv"
        if t.kind == "univariate":
            i = t.inputs[0]
            g = np.linspace(*lo_hi[0], n_grid)
            cols = {f"{names[i]}_norm": g, "phi": phi_univariate(model, i, g)}
        else:
            i, j = t.inputs
            gi, gj = np.meshgrid(np.linspace(*lo_hi[0], n_grid2), np.linspace(*lo_hi[1], n_grid2),
                                 indexing="ij")
            gi, gj = gi.ravel(), gj.ravel()
            cols = {f"{names[i]}_norm": gi, f"{names[j]}_norm": gj,
                    "phi": phi_bivariate(model, i, j, gi, gj)}
        if norm is not None:
            for k in t.inputs:
                cols[names[k]] = cols[f"{names[k]}_norm"] * norm.scale[k] + norm.center[k]
        header = list(cols)
        data = np.column_stack([cols[h] for h in header])
        np.savetxt(outdir / fname, data, delimiter=",", header=",".join(header), comments="",
                   fmt="%.17g")
        index["terms"].append({"label": t.label(names), "inputs": list(t.inputs),
                               "kind": t.kind, "range": lo_hi, "file": fname})
    (outdir / "index.json").write_text(json.dumps(index, indent=2))
    return outdir / "index.json"


def save_basis(basis, path):
    """Design matrix as CSV; header cells are term inputs joined by ``:``."""
    header = [":".join(str(i) for i in t.inputs) for t in basis.terms]
    meta = {"phi0": basis.phi0, "feature_names": list(basis.feature_names),
            "ranges": None if basis.ranges is None else basis.ranges.tolist()}
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(meta) + "\n")
        np.savetxt(fh, basis.design_matrix, delimiter=",", header=",".join(header),
                   comments="", fmt="%.17g")


def load_basis(path):
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError(f"{path} is not a saved basis")
        meta = json.loads(first[2:])
        header = fh.readline().strip()
        Phi = np.loadtxt(fh, delimiter=",", ndmin=2)
    cols = header.split(",") if header else []
    terms = [AnovaTerm(tuple(int(i) for i in c.split(":"))) for c in cols]
    Phi = Phi.reshape(-1, len(terms))
    ranges = None if meta["ranges"] is None else np.asarray(meta["ranges"], float)
    return PartialResponseBasis(float(meta["phi0"]), terms, Phi, tuple(meta["feature_names"]),
                                ranges)
