"""Structured additive network replicating a Lasso over MLP partial responses.

Each selected univariate or bivariate term becomes a small tanh subnetwork
whose hidden layer is copied from the source MLP and whose output layer is
rescaled by the term's Lasso coefficient. The sum of subnetwork outputs plus
the Lasso intercept reproduces the Lasso's logit exactly, and the network can
then be trained further.
"""

import hashlib
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import lasso as lasso_mod
from .anova import phi0 as anova_phi0
from .mlp import FORMAT_VERSION, _read_blocks, _write_block, cross_entropy, sigmoid
from .scg import ScgConfig, minimize

logger = logging.getLogger(__name__)

# a short fine-tune: longer runs at light decay drift away from the Lasso fit
RETRAIN_ITERATIONS = 20


@dataclass
class SubNetwork:
    inputs: tuple
    W: np.ndarray        # (h, len(inputs))
    b: np.ndarray        # (h,)
    v: np.ndarray        # (h,)
    c: float             # output bias

    def __post_init__(self):
        self.inputs = tuple(int(i) for i in self.inputs)
        if any(b <= a for a, b in zip(self.inputs, self.inputs[1:])):
            raise ValueError("subnetwork inputs must be strictly increasing")
        self.W = np.asarray(self.W, dtype=float).reshape(-1, len(self.inputs))
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.v = np.asarray(self.v, dtype=float).reshape(-1)
        self.c = float(self.c)

    def output(self, X):
        """Logit contribution for full-width input rows ``X``."""
        return np.tanh(X[:, list(self.inputs)] @ self.W.T + self.b) @ self.v + self.c

    def at_anchor(self):
        return float(np.tanh(self.b) @ self.v + self.c)

    def scaled(self, factor):
        return SubNetwork(self.inputs, self.W.copy(), self.b.copy(), factor * self.v, factor * self.c)

    @property
    def n_params(self):
        return self.W.size + 2 * self.b.size


@dataclass
class PrnModel:
    subnetworks: list
    global_bias: float
    d: int
    feature_names: tuple = ()
    source: dict = field(default_factory=dict)

    def contributions(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise ValueError(f"expected {self.d} inputs, got {X.shape[1]}")
        if not self.subnetworks:
            return np.zeros((X.shape[0], 0))
        return np.column_stack([s.output(X) for s in self.subnetworks])

    def logit(self, X):
        return self.global_bias + self.contributions(X).sum(axis=1)

    def predict_proba(self, X):
        return sigmoid(self.logit(X))

    def labels(self):
        names = self.feature_names or tuple(f"x{i}" for i in range(self.d))
        return ["*".join(names[i] for i in s.inputs) for s in self.subnetworks]

    def inputs_used(self):
        return sorted({i for s in self.subnetworks for i in s.inputs})


def prn_forward(prn, x):
    """Probability and per-subnetwork logit contributions for ``x``.

    A single vector gives a scalar probability and a 1-d contribution array.
    """
    x = np.asarray(x, dtype=float)
    contrib = prn.contributions(x)
    p = sigmoid(prn.global_bias + contrib.sum(axis=1))
    if x.ndim == 1:
        return float(p[0]), contrib[0]
    return p, contrib


def build_prn(mlp, basis, lasso, provenance=None):
    """Replicate the Lasso over ``basis`` columns as a structured network.

    For univariate term ``i`` with coefficient ``beta_i`` the subnetwork copies
    the MLP's input-``i`` weights and all hidden biases, with output weights
    ``beta_i * v`` and output bias ``beta_i * (v0 - phi0)``. A pair ``(k, l)``
    adds a two-input subnetwork scaled by ``beta_kl`` and subtracts
    ``beta_kl`` from the univariate scale of both ``k`` and ``l``. Univariate
    scales for the same input are summed into one subnetwork.
    """
    coef = np.asarray(lasso.coef, dtype=float)
    if coef.shape != (len(basis.terms),):
        raise ValueError("lasso coefficients do not match basis columns")
    c0 = anova_phi0(mlp)
    uni_scale, pair_scale = {}, {}
    for term, beta in zip(basis.terms, coef):
        if beta == 0:
            continue
        if any(i >= mlp.d for i in term.inputs):
            raise ValueError(f"term {term.inputs} references an input the MLP lacks")
        if len(term.inputs) == 1:
            uni_scale[term.inputs[0]] = uni_scale.get(term.inputs[0], 0.0) + beta
        elif len(term.inputs) == 2:
            pair_scale[term.inputs] = beta
            for i in term.inputs:
                uni_scale[i] = uni_scale.get(i, 0.0) - beta
        else:
            raise ValueError("only univariate and bivariate terms can be replicated")

    def replicate(inputs, scale):
        return SubNetwork(inputs, mlp.W[:, list(inputs)].copy(), mlp.b.copy(),
                          scale * mlp.v, scale * (mlp.v0 - c0))

    subs = [replicate((i,), uni_scale[i]) for i in sorted(uni_scale)]
    subs += [replicate(p, pair_scale[p]) for p in sorted(pair_scale)]
    source = {"mlp": mlp.digest(), "lambda": float(lasso.lam)}
    source.update(provenance or {})
    return PrnModel(subs, float(lasso.intercept), mlp.d, tuple(basis.feature_names), source)


# -- retraining ---------------------------------------------------------------

def _pack(prn):
    parts = [np.concatenate([s.W.ravel(), s.b, s.v]) for s in prn.subnetworks]
    return np.concatenate(parts + [[prn.global_bias]])


def _unpack(prn, w):
    subs, pos = [], 0
    for s in prn.subnetworks:
        h, k = s.W.shape
        W = w[pos:pos + h * k].reshape(h, k)
        pos += h * k
        b, v = w[pos:pos + h], w[pos + h:pos + 2 * h]
        pos += 2 * h
        subs.append(SubNetwork(s.inputs, W, b, v, s.c))
    return replace(prn, subnetworks=subs, global_bias=float(w[pos]))


def training_objective(prn, X, t, decay):
    """Cross-entropy plus ``decay/2`` times the squared subnetwork weights."""
    w = _pack(prn)[:-1]
    return cross_entropy(prn.predict_proba(X), t) + 0.5 * decay * float(w @ w)


def _objective_functions(prn, X, t, decay):
    Xs = [X[:, list(s.inputs)] for s in prn.subnetworks]

    def f(w):
        return training_objective(_unpack(prn, w), X, t, decay)

    def g(w):
        model = _unpack(prn, w)
        Hs = [np.tanh(x @ s.W.T + s.b) for x, s in zip(Xs, model.subnetworks)]
        a = model.global_bias + sum(H @ s.v + s.c for H, s in zip(Hs, model.subnetworks))
        r = sigmoid(a) - t
        grads = []
        for x, H, s in zip(Xs, Hs, model.subnetworks):
            delta = np.outer(r, s.v) * (1.0 - H * H)
            grads.append(np.concatenate([(delta.T @ x).ravel(), delta.sum(axis=0), H.T @ r]))
        grad = np.concatenate(grads + [[r.sum()]])
        grad[:-1] += decay * w[:-1]
        return grad

    return f, g


def retrain_prn(prn, X, t, decay=1e-3, scg=ScgConfig(max_iterations=RETRAIN_ITERATIONS)):
    """Continue training every subnetwork's weights and the global bias.

    Hidden weights, hidden biases and output weights carry weight decay; the
    global bias is unpenalized and absorbs intercept changes, so subnetwork
    output biases stay fixed.
    """
    if decay < 0:
        raise ValueError("decay must be non-negative")
    X = np.asarray(X, dtype=float)
    t = np.asarray(t, dtype=float)
    if not prn.subnetworks or scg.max_iterations == 0:
        if not prn.subnetworks:
            return _refit_intercept(prn, t)
        return prn
    f, g = _objective_functions(prn, X, t, decay)
    w, trace = minimize(f, g, _pack(prn), scg)
    out = _unpack(prn, w)
    out.source = dict(prn.source, retrain_decay=decay, retrain_iterations=len(trace.objective) - 1)
    return out


def _refit_intercept(prn, t):
    tbar = np.clip(np.mean(t), 1e-12, 1 - 1e-12)
    return replace(prn, global_bias=float(np.log(tbar / (1 - tbar))))


def recenter(prn):
    """Move each subnetwork's value at the anchor into the global bias."""
    subs, shift = [], 0.0
    for s in prn.subnetworks:
        a = s.at_anchor()
        subs.append(SubNetwork(s.inputs, s.W.copy(), s.b.copy(), s.v.copy(), s.c - a))
        shift += a
    return replace(prn, subnetworks=subs, global_bias=prn.global_bias + shift)


def reweight(prn, intercept, coef):
    """Scale subnetwork ``k`` by ``coef[k]``; drop those with zero coefficient.

    Assumes a recentered network, so scaling keeps every subnetwork at zero
    on the anchor.
    """
    coef = np.asarray(coef, dtype=float)
    subs = [s.scaled(c) for s, c in zip(prn.subnetworks, coef) if c != 0]
    return replace(prn, subnetworks=subs, global_bias=float(intercept))


def relasso(prn, X, t, n_folds=5, seed=0, lam=None):
    """Second Lasso pass over the subnetwork outputs of a trained network."""
    prn = recenter(prn)
    design = prn.contributions(X)
    path, model = lasso_mod.path_and_select(design, t, n_folds=n_folds, seed=seed, lam=lam)
    if not model.selected:
        logger.warning("second lasso dropped every term; intercept-only model returned")
    out = reweight(prn, model.intercept, model.coef)
    out.source = dict(prn.source, relasso_lambda=float(model.lam))
    return out, model, path


# -- serialization ------------------------------------------------------------

def dumps_prn(prn):
    lines = ["# prn partial response network", "kind = prn", f"version = {FORMAT_VERSION}",
             f"inputs = {prn.d}", f"global_bias = {prn.global_bias!r}",
             f"subnetworks = {len(prn.subnetworks)}"]
    if prn.feature_names:
        lines.append("feature_names = " + ",".join(prn.feature_names))
    lines += [f"source.{k} = {v}" for k, v in sorted(prn.source.items())]
    for k, s in enumerate(prn.subnetworks):
        lines.append(f"sub{k}.inputs = " + ",".join(str(i) for i in s.inputs))
        lines.append(f"sub{k}.c = {s.c!r}")
        _write_block(lines, f"sub{k}.W", s.W)
        _write_block(lines, f"sub{k}.b", s.b)
        _write_block(lines, f"sub{k}.v", s.v)
    return "\n".join(lines) + "\n"


def loads_prn(text):
    header, blocks = _read_blocks(text.splitlines())
    if header.get("kind") != "prn":
        raise ValueError("not a PRN model file")
    if int(header.get("version", -1)) != FORMAT_VERSION:
        raise ValueError(f"unsupported model version {header.get('version')}")
    subs = []
    for k in range(int(header["subnetworks"])):
        inputs = tuple(int(i) for i in header[f"sub{k}.inputs"].split(","))
        subs.append(SubNetwork(inputs, blocks[f"sub{k}.W"], blocks[f"sub{k}.b"].ravel(),
                               blocks[f"sub{k}.v"].ravel(), float(header[f"sub{k}.c"])))
    names = tuple(header["feature_names"].split(",")) if "feature_names" in header else ()
    source = {k[len("source."):]: v for k, v in header.items() if k.startswith("source.")}
    return PrnModel(subs, float(header["global_bias"]), int(header["inputs"]), names, source)


def save_prn(prn, path):
    with open(path, "w") as fh:
        fh.write(dumps_prn(prn))


def load_prn(path):
    with open(path) as fh:
        return loads_prn(fh.read())


def digest(prn):
    return hashlib.sha256(dumps_prn(prn).encode()).hexdigest()[:16]
