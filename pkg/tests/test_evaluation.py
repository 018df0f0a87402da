import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from prn import evaluation


def pair_count_auroc(s, t):
    pos, neg = s[t == 1], s[t == 0]
    total = 0.0
    for a in pos:
        for b in neg:
            total += 1.0 if a > b else 0.5 if a == b else 0.0
    return total / (len(pos) * len(neg))


def test_perfect_ranking():
    assert evaluation.auroc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0


def test_all_ties():
    assert evaluation.auroc(np.full(6, 0.3), [0, 1, 0, 1, 1, 0]) == 0.5


def test_single_class_rejected():
    with pytest.raises(ValueError):
        evaluation.auroc([0.1, 0.2], [1, 1])


def test_matches_pair_counting_oracle_50_instances():
    r = np.random.default_rng(0)
    for k in range(50):
        n = r.integers(4, 40)
        t = np.r_[0, 1, (r.random(n - 2) < 0.4)].astype(float)
        s = np.round(r.random(n), 1) if k % 2 else r.normal(size=n)  # half with ties
        assert evaluation.auroc(s, t) == pytest.approx(pair_count_auroc(s, t), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_symmetry_and_monotone_invariance(seed):
    r = np.random.default_rng(seed)
    n = 30
    t = np.r_[0, 1, (r.random(n - 2) < 0.5)].astype(float)
    s = np.round(r.normal(size=n), 1)
    a = evaluation.auroc(s, t)
    assert a + evaluation.auroc(-s, t) == pytest.approx(1.0, abs=1e-12)
    assert evaluation.auroc(np.exp(3 * s) + 1, t) == pytest.approx(a, abs=1e-12)


def test_report_invariants():
    r = np.random.default_rng(1)
    t = (r.random(100) < 0.4).astype(float)
    s = np.clip(0.3 * t + r.random(100) * 0.7, 0, 1)
    rep = evaluation.evaluate(s, t)
    lo, hi = rep.auroc_ci
    assert 0 <= lo <= rep.auroc <= hi <= 1
    assert sum(rep.confusion) == rep.n_test == 100


def test_hanley_mcneil_by_hand():
    auc, n1, n0 = 0.8, 40, 60
    q1, q2 = auc / (2 - auc), 2 * auc ** 2 / (1 + auc)
    se = np.sqrt((auc * (1 - auc) + (n1 - 1) * (q1 - auc ** 2) + (n0 - 1) * (q2 - auc ** 2))
                 / (n1 * n0))
    lo, hi = evaluation.hanley_mcneil_ci(auc, n1, n0)
    assert lo == pytest.approx(auc - 1.959963984540054 * se, abs=1e-12)
    assert hi == pytest.approx(auc + 1.959963984540054 * se, abs=1e-12)


def test_confusion_extremes():
    r = np.random.default_rng(2)
    s = r.random(25)
    t = (r.random(25) < 0.5).astype(float)
    tp, fp, tn, fn = evaluation.confusion_at(s, t, 0.0)
    assert tp + fp == 25
    tp, fp, tn, fn = evaluation.confusion_at(s, t, 1.0 + 1e-9)
    assert tn + fn == 25


def test_confusion_matches_enumeration():
    r = np.random.default_rng(3)
    s = np.round(r.random(60), 2)
    t = (r.random(60) < 0.5).astype(int)
    counts = [0, 0, 0, 0]
    for si, ti in zip(s, t):
        pred = si >= 0.5
        counts[{(1, 1): 0, (1, 0): 1, (0, 0): 2, (0, 1): 3}[(int(pred), ti)]] += 1
    assert list(evaluation.confusion_at(s, t, 0.5)) == counts


def test_mcnemar_identical_predictions():
    res = evaluation.mcnemar([1, 0, 1], [1, 0, 1], [1, 1, 0])
    assert res.p_value == 1.0 and res.note


def test_mcnemar_hand_computed_statistic():
    # ten cases where only A is right, none where only B is right
    t = np.ones(30, dtype=int)
    a = np.ones(30, dtype=int)
    b = np.r_[np.zeros(10), np.ones(20)].astype(int)
    res = evaluation.mcnemar(a, b, t)
    assert (res.b, res.c) == (10, 0)
    assert res.statistic == pytest.approx(8.1)
    assert res.exact and res.p_value == pytest.approx(2 * 0.5 ** 10)


def test_mcnemar_chi_square_branch_and_symmetry():
    r = np.random.default_rng(4)
    t = (r.random(300) < 0.5).astype(int)
    a = np.where(r.random(300) < 0.8, t, 1 - t)
    b = np.where(r.random(300) < 0.7, t, 1 - t)
    ab, ba = evaluation.mcnemar(a, b, t), evaluation.mcnemar(b, a, t)
    assert ab.statistic == ba.statistic and ab.p_value == ba.p_value
    assert not ab.exact
    assert ab.p_value == pytest.approx(stats.chi2.sf(ab.statistic, 1))


def test_mcnemar_balanced_discordance():
    t = np.array([1, 1, 0, 0])
    res = evaluation.mcnemar([1, 0, 0, 1], [0, 1, 1, 0], t)
    assert res.b == res.c == 2
    assert res.statistic <= 1 / 4 and res.p_value > 0.5


def test_length_mismatch():
    with pytest.raises(ValueError):
        evaluation.mcnemar([1, 0], [1], [1, 0])
