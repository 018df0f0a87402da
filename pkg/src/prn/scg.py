"""Scaled conjugate gradient minimization (Moller 1993, Netlab variant)."""

import csv
from dataclasses import dataclass

import numpy as np

SIGMA0 = 1e-4
BETA_MIN, BETA_MAX = 1e-15, 1e100


class OptimizerError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScgConfig:
    max_iterations: int = 100
    objective_tolerance: float = 1e-8
    gradient_tolerance: float = 1e-6
    initial_scale: float = 1e-4

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")
        if self.objective_tolerance <= 0 or self.gradient_tolerance <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class ScgTrace:
    objective: list
    accepted: list
    reason: str = ""

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "objective", "accepted"])
            for i, (f, a) in enumerate(zip(self.objective, self.accepted)):
                w.writerow([i, repr(f), int(a)])


def _check(value, what, x):
    if not np.all(np.isfinite(value)):
        raise OptimizerError(f"non-finite {what} at |x|={np.linalg.norm(x):.3g}")
    return value


def minimize(f, grad, x0, config=ScgConfig()):
    """Minimize ``f`` from ``x0``; returns ``(x, trace)``.

    Stops after ``max_iterations``, when the gradient norm falls below
    ``gradient_tolerance``, or when two successive accepted steps each change
    the objective by less than ``objective_tolerance`` relative to its value.
    The returned point never has a larger objective than ``x0``.
    """
    x = np.array(x0, dtype=float, copy=True)
    n = x.size
    fold = fnow = float(_check(f(x), "objective", x))
    gnew = _check(grad(x), "gradient", x)
    trace = ScgTrace([fnow], [True])
    if np.linalg.norm(gnew) < config.gradient_tolerance:
        trace.reason = "gradient"
        return x, trace

    d = -gnew
    success, nsuccess, nsmall = True, 0, 0
    beta = config.initial_scale
    mu = kappa = theta = 0.0
    for _ in range(config.max_iterations):
        if success:
            mu = d @ gnew
            if mu >= 0:
                d = -gnew
                mu = d @ gnew
            kappa = d @ d
            if kappa < np.finfo(float).eps:
                trace.reason = "step"
                break
            sigma = SIGMA0 / np.sqrt(kappa)
            gplus = _check(grad(x + sigma * d), "gradient", x)
            theta = d @ (gplus - gnew) / sigma

        delta = theta + beta * kappa
        if delta <= 0:
            delta = beta * kappa
            beta = beta - theta / kappa
        alpha = -mu / delta
        xnew = x + alpha * d
        fnew = float(f(xnew))
        comparison = 2.0 * (fnew - fold) / (alpha * mu) if np.isfinite(fnew) else -1.0
        success = comparison >= 0 and fnew <= fold
        if success:
            nsuccess += 1
            x, fnow = xnew, fnew
        trace.objective.append(fnow)
        trace.accepted.append(success)

        if success:
            nsmall = nsmall + 1 if abs(fnew - fold) <= config.objective_tolerance * abs(fold) else 0
            gold, fold = gnew, fnew
            gnew = _check(grad(x), "gradient", x)
            if nsmall >= 2:
                trace.reason = "objective"
                break
            if np.linalg.norm(gnew) < config.gradient_tolerance:
                trace.reason = "gradient"
                break

        if comparison < 0.25:
            beta = min(4.0 * beta, BETA_MAX)
        if comparison > 0.75:
            beta = max(0.5 * beta, BETA_MIN)

        if nsuccess == n:
            d = -gnew
            nsuccess = 0
        elif success:
            gamma = (gold - gnew) @ gnew / mu
            d = gamma * d - gnew
    else:
        trace.reason = "max_iterations"
    return x, trace
