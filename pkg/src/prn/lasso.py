"""L1-penalized logistic regression by coordinate descent, with CV over a path.

The objective is the summed negative log-likelihood plus ``lam * |beta|_1``
(intercept unpenalized); columns are used as given, without standardization.
"""

import csv
import json
import logging
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from sklearn.model_selection import StratifiedKFold

logger = logging.getLogger(__name__)

KKT_TOL = 1e-6


class LassoConvergenceError(RuntimeError):
    pass


@dataclass
class LassoModel:
    intercept: float
    coef: np.ndarray
    lam: float
    kkt_violation: float = 0.0

    @property
    def selected(self):
        return [int(k) for k in np.flatnonzero(self.coef)]

    def decision_function(self, Phi):
        return self.intercept + np.asarray(Phi, float) @ self.coef

    def predict_proba(self, Phi):
        return _sigmoid(self.decision_function(Phi))

    def to_dict(self, labels=None):
        d = {"intercept": self.intercept, "lambda": self.lam, "coef": self.coef.tolist(),
             "selected": self.selected, "kkt_violation": self.kkt_violation}
        if labels is not None:
            d["terms"] = list(labels)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["intercept"]), np.asarray(d["coef"], float), float(d["lambda"]),
                   float(d.get("kkt_violation", 0.0)))


@dataclass
class LassoPath:
    lambdas: np.ndarray
    models: list
    cv_mean: np.ndarray = None
    cv_se: np.ndarray = None
    chosen: int = None
    extra: dict = field(default_factory=dict)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda", "n_active", "cv_deviance_mean", "cv_deviance_se", "chosen"])
            for k, (lam, m) in enumerate(zip(self.lambdas, self.models)):
                mean = "" if self.cv_mean is None else repr(float(self.cv_mean[k]))
                se = "" if self.cv_se is None else repr(float(self.cv_se[k]))
                w.writerow([repr(float(lam)), len(m.selected), mean, se, int(k == self.chosen)])


def _sigmoid(a):
    return 0.5 * (1.0 + np.tanh(0.5 * a))


def penalized_objective(Phi, t, intercept, coef, lam):
    eta = intercept + Phi @ coef
    nll = np.sum(np.logaddexp(0.0, eta) - t * eta)
    return float(nll + lam * np.sum(np.abs(coef)))


def scores(Phi, t, intercept, coef):
    """Gradient of the negative log-likelihood for intercept and coefficients."""
    r = _sigmoid(intercept + Phi @ coef) - t
    return float(r.sum()), Phi.T @ r


def kkt_violation(Phi, t, intercept, coef, lam):
    g0, g = scores(Phi, t, intercept, coef)
    viol = np.where(coef != 0, np.abs(g + lam * np.sign(coef)), np.maximum(np.abs(g) - lam, 0.0))
    return float(max(abs(g0), viol.max() if viol.size else 0.0))


def lambda_max(Phi, t):
    return float(np.max(np.abs(Phi.T @ (t - t.mean())))) if Phi.shape[1] else 0.0


@njit(cache=True)
def _cd_gram(G, c, beta, lam, penalized, max_sweeps, tol):
    """Covariance-form coordinate descent on a weighted least-squares lasso.

    ``G`` is the weighted Gram matrix of the design (intercept column
    included), ``c`` the weighted correlation of the working response with
    each column at ``beta``; ``c`` is kept current as coordinates move.
    """
    p = G.shape[0]
    for sweep in range(max_sweeps):
        dmax = 0.0
        for k in range(p):
            if G[k, k] <= 0.0:
                continue
            old = beta[k]
            rho = c[k] + G[k, k] * old
            if not penalized[k]:
                new = rho / G[k, k]
            elif rho > lam:
                new = (rho - lam) / G[k, k]
            elif rho < -lam:
                new = (rho + lam) / G[k, k]
            else:
                new = 0.0
            if new != old:
                diff = new - old
                for j in range(p):
                    c[j] -= diff * G[j, k]
                beta[k] = new
                dmax = max(dmax, abs(diff) * np.sqrt(G[k, k]))
        if dmax < tol:
            break


def fit_lasso(Phi, t, lam, start=None, max_outer=1000, tol=1e-8, kkt_tol=KKT_TOL * 0.1):
    """Penalized logistic fit at a single ``lam``.

    Iteratively reweighted least squares with an active-set coordinate
    descent inner solver and step halving on the penalized objective.
    Raises :class:`LassoConvergenceError` if the KKT residual is still above
    ``KKT_TOL`` after ``max_outer`` outer iterations.
    """
    Phi = np.ascontiguousarray(Phi, dtype=float)
    t = np.asarray(t, dtype=float)
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    n, p = Phi.shape
    if lam >= lambda_max(Phi, t):
        start = None
        lam_null = True
    else:
        lam_null = False
    if start is None:
        tbar = np.clip(t.mean(), 1e-12, 1 - 1e-12)
        b0, beta = float(np.log(tbar / (1 - tbar))), np.zeros(p)
    else:
        b0, beta = float(start.intercept), start.coef.astype(float).copy()
    if lam_null:
        # the intercept-only model is the exact solution
        return LassoModel(b0, beta, float(lam), kkt_violation(Phi, t, b0, beta, lam))
    obj = penalized_objective(Phi, t, b0, beta, lam)
    viol = kkt_violation(Phi, t, b0, beta, lam)
    for _ in range(max_outer):
        if viol <= kkt_tol:
            break
        eta = b0 + Phi @ beta
        mu = _sigmoid(eta)
        w = np.maximum(mu * (1 - mu), 1e-10)
        z = eta + (t - mu) / w
        # active set: current nonzeros plus coordinates that violate KKT
        _, g = scores(Phi, t, b0, beta)
        idx = np.flatnonzero((beta != 0) | (np.abs(g) > lam))
        Xa = np.column_stack([np.ones(n), Phi[:, idx]])
        Xw = Xa * w[:, None]
        G = Xw.T @ Xa
        coef = np.r_[b0, beta[idx]]
        c = Xw.T @ (z - Xa @ coef)
        penalized = np.ones(len(coef), dtype=np.bool_)
        penalized[0] = False
        _cd_gram(G, c, coef, lam, penalized, 10000, tol)
        nb0, nb = coef[0], np.zeros(p)
        nb[idx] = coef[1:]
        # step halving keeps the penalized objective monotone
        step = 1.0
        while True:
            cb0, cb = b0 + step * (nb0 - b0), beta + step * (nb - beta)
            cobj = penalized_objective(Phi, t, cb0, cb, lam)
            if cobj <= obj + 1e-12 * abs(obj) or step < 1e-10:
                break
            step *= 0.5
        b0, beta, obj = cb0, cb, cobj
        viol = kkt_violation(Phi, t, b0, beta, lam)
    if viol > KKT_TOL:
        raise LassoConvergenceError(f"lasso did not converge at lambda={lam:.4g}; "
                                    f"KKT violation {viol:.3g}")
    return LassoModel(b0, beta, float(lam), viol)


def lambda_grid(Phi, t, n_lambda=100, ratio=1e-4):
    lmax = lambda_max(Phi, t)
    return lmax * np.geomspace(1.0, ratio, n_lambda)


def fit_path(Phi, t, lambdas, max_deviance_ratio=0.999):
    """Warm-started fits along a decreasing lambda grid.

    The path stops early once the model explains ``max_deviance_ratio`` of the
    null deviance (near separation, where smaller lambdas do not converge).
    """
    models = []
    tbar = np.clip(t.mean(), 1e-12, 1 - 1e-12)
    null_dev = penalized_objective(Phi, t, np.log(tbar / (1 - tbar)), np.zeros(Phi.shape[1]), 0.0)
    start = None
    for lam in lambdas:
        try:
            m = fit_lasso(Phi, t, lam, start)
        except LassoConvergenceError as exc:
            logger.info("path truncated: %s", exc)
            break
        models.append(m)
        start = m
        dev = penalized_objective(Phi, t, m.intercept, m.coef, 0.0)
        if null_dev > 0 and 1.0 - dev / null_dev >= max_deviance_ratio:
            break
    return models


def _folds(t, n_folds, seed):
    skf = StratifiedKFold(n_splits=n_folds, shuffle=True, random_state=seed)
    return list(skf.split(np.zeros(len(t)), t))


def mean_deviance(Phi, t, model):
    eta = model.decision_function(Phi)
    return float(2.0 * np.mean(np.logaddexp(0.0, eta) - t * eta))


def path_and_select(Phi, t, n_folds=5, seed=0, n_lambda=100, ratio=1e-4, lam=None):
    """Regularization path, k-fold CV deviance and one-standard-error choice.

    With ``lam`` given, CV is skipped and the model at that lambda is returned.
    """
    Phi = np.ascontiguousarray(Phi, dtype=float)
    t = np.asarray(t, dtype=float)
    if lam is not None:
        m = fit_lasso(Phi, t, lam)
        return LassoPath(np.array([lam]), [m], chosen=0), m
    if n_folds < 2:
        raise ValueError("need at least two folds")
    lambdas = lambda_grid(Phi, t, n_lambda, ratio)
    models = fit_path(Phi, t, lambdas)
    lambdas = lambdas[:len(models)]
    cv = np.full((n_folds, len(lambdas)), np.nan)
    for f, (tr, va) in enumerate(_folds(t, n_folds, seed)):
        fold_models = fit_path(Phi[tr], t[tr], lambdas)
        for k, m in enumerate(fold_models):
            cv[f, k] = mean_deviance(Phi[va], t[va], m)
    usable = ~np.isnan(cv).any(axis=0)
    if not usable.any():
        usable[0] = True
        cv[:, 0] = np.nan_to_num(cv[:, 0], nan=np.inf)
    mean = np.where(usable, cv.mean(axis=0), np.inf)
    se = np.where(usable, cv.std(axis=0, ddof=1) / np.sqrt(n_folds), np.inf)
    best = int(np.argmin(mean))
    threshold = mean[best] + se[best]
    # largest lambda (first on the path) within one SE of the minimum
    chosen = int(np.flatnonzero(mean <= threshold)[0])
    path = LassoPath(lambdas, models, mean, se, chosen)
    return path, models[chosen]


def save_lasso(model, path, labels=None):
    with open(path, "w") as fh:
        json.dump(model.to_dict(labels), fh, indent=2)


def load_lasso(path):
    with open(path) as fh:
        return LassoModel.from_dict(json.load(fh))
