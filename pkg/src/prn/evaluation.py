"""Ranking and paired-comparison statistics for binary classifiers."""

from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class EvalReport:
    auroc: float
    auroc_ci: tuple
    cutpoint: float
    confusion: tuple  # (tp, fp, tn, fn)
    n_test: int

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class McNemarResult:
    b: int
    c: int
    statistic: float
    p_value: float
    exact: bool
    note: str = ""


def _check_binary(scores, targets):
    s = np.asarray(scores, dtype=float).ravel()
    t = np.asarray(targets, dtype=float).ravel()
    if s.shape != t.shape:
        raise ValueError("scores and targets differ in length")
    n_pos = int(np.sum(t == 1))
    if n_pos == 0 or n_pos == t.size:
        raise ValueError("AUROC needs both classes present")
    return s, t


def auroc(scores, targets):
    """Mann-Whitney AUROC; tied positive/negative pairs count one half."""
    s, t = _check_binary(scores, targets)
    ranks = stats.rankdata(s)
    n1 = np.sum(t == 1)
    n0 = t.size - n1
    return float((ranks[t == 1].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def hanley_mcneil_ci(auc, n_pos, n_neg, level=0.95):
    q1 = auc / (2.0 - auc)
    q2 = 2.0 * auc * auc / (1.0 + auc)
    var = (auc * (1 - auc) + (n_pos - 1) * (q1 - auc ** 2)
           + (n_neg - 1) * (q2 - auc ** 2)) / (n_pos * n_neg)
    half = stats.norm.ppf(0.5 + level / 2.0) * np.sqrt(max(var, 0.0))
    return max(0.0, auc - half), min(1.0, auc + half)


def confusion_at(scores, targets, cutpoint=0.5):
    """(tp, fp, tn, fn) with a positive call wherever ``score >= cutpoint``."""
    s = np.asarray(scores, dtype=float).ravel()
    t = np.asarray(targets, dtype=float).ravel()
    pred = s >= cutpoint
    pos = t == 1
    return (int(np.sum(pred & pos)), int(np.sum(pred & ~pos)),
            int(np.sum(~pred & ~pos)), int(np.sum(~pred & pos)))


def evaluate(scores, targets, cutpoint=0.5):
    s, t = _check_binary(scores, targets)
    auc = auroc(s, t)
    n1 = int(np.sum(t == 1))
    return EvalReport(auc, hanley_mcneil_ci(auc, n1, t.size - n1), float(cutpoint),
                      confusion_at(s, t, cutpoint), int(t.size))


def mcnemar(pred_a, pred_b, targets, exact_below=25):
    """McNemar test on the discordant correct/incorrect pairs of two classifiers.

    The continuity-corrected chi-square statistic is always reported; the
    p-value is an exact two-sided binomial when ``b + c < exact_below``.
    """
    a = np.asarray(pred_a).ravel().astype(bool)
    bb = np.asarray(pred_b).ravel().astype(bool)
    t = np.asarray(targets).ravel().astype(bool)
    if not (a.shape == bb.shape == t.shape):
        raise ValueError("predictions and targets differ in length")
    ok_a, ok_b = a == t, bb == t
    b = int(np.sum(ok_a & ~ok_b))
    c = int(np.sum(~ok_a & ok_b))
    n = b + c
    if n == 0:
        return McNemarResult(0, 0, 0.0, 1.0, True, "no discordant pairs")
    statistic = (abs(b - c) - 1.0) ** 2 / n
    if n < exact_below:
        p = min(1.0, 2.0 * stats.binom.cdf(min(b, c), n, 0.5))
        return McNemarResult(b, c, statistic, float(p), True)
    return McNemarResult(b, c, statistic, float(stats.chi2.sf(statistic, 1)), False)
