"""Evidence-framework ARD for the MLP: Hessian, alpha re-estimation, training loop."""

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from . import mlp as mlp_mod
from .mlp import group_index, init_mlp, n_groups, penalty_weights
from .scg import ScgConfig, minimize

logger = logging.getLogger(__name__)

EIGEN_FLOOR = 1e-8


@dataclass(frozen=True)
class ArdConfig:
    alpha_init: float = 0.01
    alpha_min: float = 1e-6
    alpha_max: float = 1e6
    max_cycles: int = 12
    cycle_tolerance: float = 1e-3
    hessian: str = "gauss-newton"
    inner_iterations: int = 0


@dataclass
class ArdState:
    alphas: np.ndarray
    gammas: np.ndarray
    group_sizes: np.ndarray
    cycle: int = 0
    history: list = field(default_factory=list)

    @classmethod
    def initial(cls, h, d, alpha=0.01):
        sizes = np.bincount(group_index(h, d), minlength=n_groups(d))
        return cls(np.full(n_groups(d), float(alpha)), sizes.astype(float), sizes)

    def to_csv(self, path, group_names=None):
        """One row per (cycle, group): alpha, gamma, sum of squared weights."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cycle", "group", "name", "n_weights", "alpha", "gamma", "sum_sq_weights"])
            for rec in self.history:
                for k in range(len(rec["alphas"])):
                    name = group_names[k] if group_names else str(k)
                    w.writerow([rec["cycle"], k, name, int(self.group_sizes[k]),
                                repr(rec["alphas"][k]), repr(rec["gammas"][k]),
                                repr(rec["sum_sq"][k])])


@dataclass
class HessianInfo:
    matrix: np.ndarray
    eigenvalue_floor: float
    inverse_traces: np.ndarray
    data_term: np.ndarray = None
    groups: np.ndarray = None

    def with_alphas(self, alphas):
        """Same data term, penalty diagonal rebuilt from ``alphas``."""
        A = self.data_term.copy()
        A[np.diag_indices_from(A)] += np.asarray(alphas)[self.groups]
        return HessianInfo(A, self.eigenvalue_floor,
                           group_inverse_traces(A, self.groups, len(alphas), self.eigenvalue_floor),
                           self.data_term, self.groups)


def group_names(feature_names):
    return list(feature_names) + ["hidden_bias", "output_weights", "output_bias"]


def _exact_logit_curvature(model, X, r):
    """sum_m r_m * (second derivatives of the logit at row m)."""
    h, d = model.h, model.d
    Xt = np.hstack([X, np.ones((X.shape[0], 1))])         # extended input (x, 1)
    H = np.tanh(Xt[:, :d] @ model.W.T + model.b)
    d1 = 1.0 - H * H
    d2 = -2.0 * H * d1
    P = model.n_params
    C = np.zeros((P, P))
    hd = h * d
    for j in range(h):
        wi = np.r_[np.arange(j * d, (j + 1) * d), hd + j]  # W_j. then b_j
        vi = hd + h + j
        C[np.ix_(wi, wi)] = model.v[j] * (Xt * (r * d2[:, j])[:, None]).T @ Xt
        cross = Xt.T @ (r * d1[:, j])
        C[wi, vi] = cross
        C[vi, wi] = cross
    return C


def hessian(model, X, t, alphas, method="gauss-newton"):
    """Hessian of cross-entropy plus grouped decay at the current weights.

    ``gauss-newton`` keeps only the outer-product data term
    ``sum_m y_m (1 - y_m) g_m g_m^T`` (positive semidefinite); ``exact``
    adds the residual-weighted second derivatives of the logit.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    t = np.asarray(t, dtype=float)
    J = mlp_mod.logit_jacobian(model, X)
    y = mlp_mod.forward(model, X)
    A = (J * (y * (1.0 - y))[:, None]).T @ J
    if method == "exact":
        A = A + _exact_logit_curvature(model, X, y - t)
    elif method != "gauss-newton":
        raise ValueError(f"unknown Hessian method {method!r}")
    D = 0.5 * (A + A.T)
    A = D.copy()
    A[np.diag_indices_from(A)] += penalty_weights(model, alphas)
    groups = group_index(model.h, model.d)
    return HessianInfo(A, EIGEN_FLOOR, group_inverse_traces(A, groups, n_groups(model.d)),
                       D, groups)


def group_inverse_traces(A, groups, k, floor=EIGEN_FLOOR):
    try:
        lam, Q = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"Hessian eigendecomposition failed: {exc}") from exc
    lam = np.maximum(lam, floor)
    diag_inv = (Q * Q) @ (1.0 / lam)
    return np.bincount(groups, weights=diag_inv, minlength=k)


def update_hyperparameters(state, model, hess, config=ArdConfig()):
    """Re-estimate every group's alpha from the Hessian's inverse traces.

    With the weights held at their current values, ``config.inner_iterations``
    rounds of ``alpha_k = gamma_k / sum w_k^2``, ``gamma_k = N_k - alpha_k
    Tr_k(A^-1)`` are run, rebuilding the penalty part of ``A`` each round.
    The final round uses ``1/alpha_k = (sum w_k^2 + Tr_k(A^-1)) / N_k`` and
    reports ``gamma_k`` with that alpha, so ``sum w^2 / gamma`` and
    ``(sum w^2 + Tr) / N`` agree exactly.
    """
    w = model.to_vector()
    groups = group_index(model.h, model.d)
    sizes = state.group_sizes.astype(float)
    sum_sq = np.bincount(groups, weights=w * w, minlength=len(sizes))
    alphas = state.alphas
    for _ in range(config.inner_iterations):
        if hess.data_term is None:
            break
        gammas = np.clip(sizes - alphas * hess.inverse_traces, 0.0, sizes)
        with np.errstate(divide="ignore"):
            alphas = np.clip(np.where(sum_sq > 0, gammas / np.maximum(sum_sq, 1e-300),
                                      config.alpha_max),
                             config.alpha_min, config.alpha_max)
        hess = hess.with_alphas(alphas)
    tr = hess.inverse_traces
    alphas = np.clip(sizes / (sum_sq + tr), config.alpha_min, config.alpha_max)
    gammas = np.clip(sizes - alphas * tr, 0.0, sizes)
    cycle = state.cycle + 1
    history = state.history + [{"cycle": cycle, "alphas": alphas.tolist(),
                                "gammas": gammas.tolist(), "sum_sq": sum_sq.tolist(),
                                "traces": tr.tolist()}]
    return ArdState(alphas, gammas, state.group_sizes, cycle, history)


def train_ard(X, t, h=8, seed=0, scg=ScgConfig(), config=ArdConfig()):
    """Alternate SCG training and alpha re-estimation until alphas settle."""
    X = np.asarray(X, dtype=float)
    t = np.asarray(t, dtype=float)
    model = init_mlp(X.shape[1], h, seed)
    state = ArdState.initial(h, X.shape[1], config.alpha_init)
    for _ in range(config.max_cycles):
        f, g = mlp_mod.objective_functions(model, X, t, state.alphas)
        w, _ = minimize(f, g, model.to_vector(), scg)
        model = model.with_vector(w)
        old = state.alphas
        state = update_hyperparameters(state, model,
                                       hessian(model, X, t, old, config.hessian), config)
        change = np.max(np.abs(state.alphas - old) / old)
        logger.debug("ARD cycle %d: max relative alpha change %.3g", state.cycle, change)
        if change < config.cycle_tolerance:
            break
    # final pass so the weights are optimal for the last alphas
    f, g = mlp_mod.objective_functions(model, X, t, state.alphas)
    w, _ = minimize(f, g, model.to_vector(), scg)
    return model.with_vector(w), state


def input_relevance(model, state):
    """Per-input relevance: fan-out sum of squares scaled by 1/alpha."""
    sum_sq = np.sum(model.W ** 2, axis=0)
    return sum_sq / state.alphas[:model.d]
