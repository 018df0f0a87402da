"""One-hidden-layer tanh MLP with a sigmoid output and grouped weight decay.

Parameters are flattened in a fixed order so that optimizers and the
evidence-framework Hessian can index them:

    first-layer weights (h x d, row-major), hidden biases (h),
    output weights (h), output bias (1)

ARD groups: one per input (that input's fan-out weights), then the hidden
biases, the output weights and the output bias, giving ``d + 3`` groups.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

PROB_EPS = 1e-12
FORMAT_VERSION = 1


def sigmoid(a):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(a, dtype=float)))


def logit(p):
    p = np.asarray(p, dtype=float)
    return np.log(p) - np.log1p(-p)


@dataclass
class MlpModel:
    W: np.ndarray   # (h, d) first-layer weights
    b: np.ndarray   # (h,) hidden biases
    v: np.ndarray   # (h,) output weights
    v0: float       # output bias

    def __post_init__(self):
        self.W = np.atleast_2d(np.asarray(self.W, dtype=float))
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.v = np.asarray(self.v, dtype=float).reshape(-1)
        self.v0 = float(self.v0)
        h = self.W.shape[0]
        if self.b.shape != (h,) or self.v.shape != (h,):
            raise ValueError("inconsistent hidden layer sizes")

    @property
    def h(self):
        return self.W.shape[0]

    @property
    def d(self):
        return self.W.shape[1]

    @property
    def n_params(self):
        return self.h * self.d + 2 * self.h + 1

    def to_vector(self):
        return np.concatenate([self.W.ravel(), self.b, self.v, [self.v0]])

    @classmethod
    def from_vector(cls, w, h, d):
        w = np.asarray(w, dtype=float)
        if w.shape != (h * d + 2 * h + 1,):
            raise ValueError("parameter vector has the wrong length")
        hd = h * d
        return cls(w[:hd].reshape(h, d), w[hd:hd + h], w[hd + h:hd + 2 * h], w[-1])

    def with_vector(self, w):
        return MlpModel.from_vector(w, self.h, self.d)

    def logit(self, X):
        return logit_output(self, X)

    def predict_proba(self, X):
        return forward(self, X)

    def digest(self):
        return hashlib.sha256(np.ascontiguousarray(self.to_vector()).tobytes()).hexdigest()[:16]


def init_mlp(d, h=8, seed=0):
    """Gaussian weights with standard deviation 1/sqrt(fan-in)."""
    rng = np.random.default_rng(seed)
    return MlpModel(rng.normal(0.0, 1.0 / np.sqrt(d + 1), (h, d)),
                    rng.normal(0.0, 1.0 / np.sqrt(d + 1), h),
                    rng.normal(0.0, 1.0 / np.sqrt(h + 1), h),
                    rng.normal(0.0, 1.0 / np.sqrt(h + 1)))


def group_index(h, d):
    """ARD group of every parameter in canonical order."""
    return np.concatenate([np.tile(np.arange(d), h), np.full(h, d), np.full(h, d + 1), [d + 2]])


def n_groups(d):
    return d + 3


def _as_rows(model, X):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.d:
        raise ValueError(f"expected {model.d} inputs, got {X.shape[1]}")
    return X, single


def logit_output(model, X):
    """Pre-sigmoid output for one input vector or a matrix of rows."""
    X, single = _as_rows(model, X)
    a = np.tanh(X @ model.W.T + model.b) @ model.v + model.v0
    return a[0] if single else a


def forward(model, X):
    return sigmoid(logit_output(model, X))


@dataclass(frozen=True)
class ObjectiveValue:
    cross_entropy: float
    penalty: float

    @property
    def total(self):
        return self.cross_entropy + self.penalty


def cross_entropy(y, t):
    y = np.clip(y, PROB_EPS, 1.0 - PROB_EPS)
    return float(-np.sum(t * np.log(y) + (1.0 - t) * np.log1p(-y)))


def penalty_weights(model, alphas):
    """Per-parameter decay coefficient for a vector of group alphas."""
    alphas = np.asarray(alphas, dtype=float)
    if alphas.shape != (n_groups(model.d),):
        raise ValueError(f"expected {n_groups(model.d)} alphas")
    return alphas[group_index(model.h, model.d)]


def objective(model, X, t, alphas):
    X, _ = _as_rows(model, X)
    w = model.to_vector()
    pen = 0.5 * float(np.sum(penalty_weights(model, alphas) * w * w))
    return ObjectiveValue(cross_entropy(forward(model, X), np.asarray(t, float)), pen)


def logit_jacobian(model, X):
    """d logit / d parameters for every row: an (N, P) matrix."""
    X, _ = _as_rows(model, X)
    H = np.tanh(X @ model.W.T + model.b)
    D = (1.0 - H * H) * model.v                      # d a / d z_j
    n, h, d = X.shape[0], model.h, model.d
    J = np.empty((n, model.n_params))
    J[:, :h * d] = (D[:, :, None] * X[:, None, :]).reshape(n, h * d)
    J[:, h * d:h * d + h] = D
    J[:, h * d + h:h * d + 2 * h] = H
    J[:, -1] = 1.0
    return J


def gradient(model, X, t, alphas):
    """Gradient of cross-entropy plus grouped decay, in canonical order."""
    X, _ = _as_rows(model, X)
    t = np.asarray(t, dtype=float)
    H = np.tanh(X @ model.W.T + model.b)
    r = sigmoid(H @ model.v + model.v0) - t
    delta = np.outer(r, model.v) * (1.0 - H * H)
    g = np.concatenate([(delta.T @ X).ravel(), delta.sum(axis=0), H.T @ r, [r.sum()]])
    return g + penalty_weights(model, alphas) * model.to_vector()


def objective_functions(model, X, t, alphas):
    """(f, grad) closures over a flat parameter vector, for the optimizer."""
    h, d = model.h, model.d

    def f(w):
        return objective(MlpModel.from_vector(w, h, d), X, t, alphas).total

    def g(w):
        return gradient(MlpModel.from_vector(w, h, d), X, t, alphas)

    return f, g


def _write_block(lines, name, arr):
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    lines.append(f"[{name}] {arr.shape[0]} {arr.shape[1]}")
    lines.extend(" ".join(repr(float(x)) for x in row) for row in arr)


def _read_blocks(lines):
    header, blocks, i = {}, {}, 0
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            name, r, c = line[1:].split("]")[0], *line.split("]")[1].split()
            r, c = int(r), int(c)
            blocks[name] = np.array([[float(x) for x in lines[i + k].split()] for k in range(r)],
                                    dtype=float).reshape(r, c)
            i += r
        else:
            k, v = line.split("=", 1)
            header[k.strip()] = v.strip()
    return header, blocks


def dumps_mlp(model, **extra):
    lines = ["# prn MLP model", "kind = mlp", f"version = {FORMAT_VERSION}",
             f"hidden = {model.h}", f"inputs = {model.d}"]
    lines += [f"{k} = {v}" for k, v in extra.items()]
    _write_block(lines, "W", model.W)
    _write_block(lines, "b", model.b)
    _write_block(lines, "v", model.v)
    _write_block(lines, "v0", [model.v0])
    return "\n".join(lines) + "\n"


def loads_mlp(text):
    header, blocks = _read_blocks(text.splitlines())
    if header.get("kind") != "mlp":
        raise ValueError("not an MLP model file")
    if int(header.get("version", -1)) != FORMAT_VERSION:
        raise ValueError(f"unsupported model version {header.get('version')}")
    model = MlpModel(blocks["W"], blocks["b"].ravel(), blocks["v"].ravel(), blocks["v0"][0, 0])
    if model.h != int(header["hidden"]) or model.d != int(header["inputs"]):
        raise ValueError("model header does not match weight blocks")
    return model


def save_mlp(model, path, **extra):
    with open(path, "w") as fh:
        fh.write(dumps_mlp(model, **extra))


def load_mlp(path):
    with open(path) as fh:
        return loads_mlp(fh.read())
