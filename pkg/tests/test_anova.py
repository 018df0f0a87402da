import itertools

import numpy as np
import pytest

from prn import anova, mlp
from prn.anova import AnovaTerm
from prn.mlp import MlpModel

from conftest import random_mlp


def additive_mlp(rng, d, units_per_input=2):
    """Each hidden unit sees exactly one input, so the logit is additive."""
    h = d * units_per_input
    W = np.zeros((h, d))
    for j in range(h):
        W[j, j // units_per_input] = rng.normal()
    return MlpModel(W, rng.normal(size=h), rng.normal(size=h), rng.normal())


def test_phi0_zero_model():
    m = MlpModel(np.zeros((2, 3)), np.zeros(2), np.zeros(2), 0.0)
    assert anova.phi0(m) == 0.0


def test_phi0_is_logit_at_origin_and_inverse_link(rng):
    for _ in range(10):
        m = random_mlp(rng, 3)
        assert anova.phi0(m) == mlp.logit_output(m, np.zeros(3))
        assert anova.phi0(m) == pytest.approx(float(mlp.logit(mlp.forward(m, np.zeros(3)))),
                                              abs=1e-12)


def test_univariate_vanishes_at_anchor(rng):
    m = random_mlp(rng, 4)
    for i in range(4):
        assert anova.phi_univariate(m, i, 0.0) == 0.0


def test_univariate_reproduces_additive_branch(rng):
    m = additive_mlp(rng, 3)
    x = np.linspace(-2, 2, 9)
    for i in range(3):
        rows = slice(2 * i, 2 * i + 2)
        branch = np.tanh(np.outer(x, m.W[rows, i]) + m.b[rows]) @ m.v[rows]
        expected = branch - np.tanh(m.b[rows]) @ m.v[rows]
        np.testing.assert_allclose(anova.phi_univariate(m, i, x), expected, atol=1e-12)


def test_single_input_identity(rng):
    m = random_mlp(rng, 1)
    x = rng.normal(size=20)
    np.testing.assert_allclose(anova.phi_univariate(m, 0, x) + anova.phi0(m),
                               m.logit(x[:, None]), atol=1e-12)


def test_index_errors(rng):
    m = random_mlp(rng, 3)
    with pytest.raises(IndexError):
        anova.phi_univariate(m, 3, 1.0)
    with pytest.raises(ValueError):
        anova.phi_bivariate(m, 1, 1, 0.5, 0.5)
    with pytest.raises(ValueError):
        AnovaTerm((2, 1))


def test_bivariate_vanishes_on_axes(rng):
    m = random_mlp(rng, 3)
    v = rng.normal(size=10)
    np.testing.assert_allclose(anova.phi_bivariate(m, 0, 2, v, 0.0), 0, atol=1e-12)
    np.testing.assert_allclose(anova.phi_bivariate(m, 0, 2, 0.0, v), 0, atol=1e-12)


def test_additive_model_has_no_interactions(rng):
    m = additive_mlp(rng, 3)
    g = np.linspace(-3, 3, 50)
    A, B = np.meshgrid(g, g)
    for i, j in itertools.combinations(range(3), 2):
        np.testing.assert_allclose(anova.phi_bivariate(m, i, j, A, B), 0, atol=1e-10)


def test_three_input_full_recursion(rng):
    m = random_mlp(rng, 3, 5)
    X = rng.normal(size=(40, 3))
    total = np.full(40, anova.phi0(m))
    for i in range(3):
        total += anova.phi_univariate(m, i, X[:, i])
    for i, j in itertools.combinations(range(3), 2):
        total += anova.phi_bivariate(m, i, j, X[:, i], X[:, j])
    total += anova.phi_general(m, (0, 1, 2), X)
    np.testing.assert_allclose(total, m.logit(X), atol=1e-10)


def test_general_base_cases(rng):
    m = random_mlp(rng, 2)
    x = rng.normal(size=(15, 2))
    np.testing.assert_allclose(anova.phi_general(m, (1,), x[:, [1]]),
                               anova.phi_univariate(m, 1, x[:, 1]), atol=1e-14)
    np.testing.assert_allclose(anova.phi_general(m, (0, 1), x),
                               anova.phi_bivariate(m, 0, 1, x[:, 0], x[:, 1]), atol=1e-12)


def test_general_guard():
    m = random_mlp(np.random.default_rng(0), 7)
    with pytest.raises(ValueError):
        anova.phi_general(m, (0,), np.zeros((1, 1)))


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_all_components_sum_to_logit(d):
    r = np.random.default_rng(100 + d)
    m = random_mlp(r, d, 6, 1.5)
    X = r.normal(size=(200, d)) * 2
    comps = anova.all_components(m, X)
    assert len(comps) == 2 ** d
    np.testing.assert_allclose(sum(comps.values()), m.logit(X), atol=1e-9)


def test_design_matrix_layout_and_values(rng):
    m = random_mlp(rng, 3)
    X = rng.normal(size=(25, 3))
    X[0] = 0.0
    basis = anova.build_design_matrix(m, X, "all", feature_names=("a", "b", "c"))
    assert basis.labels() == ["a", "b", "c", "a*b", "a*c", "b*c"]
    Phi = basis.design_matrix
    assert Phi.shape == (25, 6)
    np.testing.assert_allclose(Phi[0], 0, atol=1e-12)
    for i in range(3):
        np.testing.assert_allclose(Phi[:, i], anova.phi_univariate(m, i, X[:, i]), atol=1e-12)
    for k, (i, j) in enumerate(itertools.combinations(range(3), 2)):
        np.testing.assert_allclose(Phi[:, 3 + k],
                                   anova.phi_bivariate(m, i, j, X[:, i], X[:, j]), atol=1e-12)


def test_design_matrix_anchoring(rng):
    m = random_mlp(rng, 4)
    X = rng.normal(size=(60, 4))
    X[rng.random((60, 4)) < 0.3] = 0.0
    basis = anova.build_design_matrix(m, X, "all")
    for k, term in enumerate(basis.terms):
        zero = np.any(X[:, list(term.inputs)] == 0, axis=1)
        np.testing.assert_allclose(basis.design_matrix[zero, k], 0, atol=1e-10)


def test_chunked_evaluation_matches_single_pass(rng):
    m = random_mlp(rng, 3)
    X = rng.normal(size=(50, 3))
    a = anova.build_design_matrix(m, X, "all").design_matrix
    b = anova.build_design_matrix(m, X, "all", chunk_rows=7).design_matrix
    np.testing.assert_array_equal(a, b)


def test_pair_policies():
    assert len(anova.select_pairs(3, "all")) == 3
    assert anova.select_pairs(3, "none") == []
    assert len(anova.select_pairs(40, "auto")) == 780
    rel = np.arange(50.0)
    top = anova.select_pairs(50, "auto", rel, top_m=4)
    assert top == list(itertools.combinations([46, 47, 48, 49], 2))
    assert anova.select_pairs(5, [(3, 1)]) == [(1, 3)]
    with pytest.raises(ValueError):
        anova.select_pairs(50, "top")


def test_restrict_basis(rng):
    m = random_mlp(rng, 3)
    basis = anova.build_design_matrix(m, rng.normal(size=(10, 3)), "all")
    sub = basis.restrict([0, 2])
    assert [t.inputs for t in sub.terms] == [(0,), (2,), (0, 2)]


def test_basis_save_load_round_trip(rng, tmp_path):
    m = random_mlp(rng, 3)
    basis = anova.build_design_matrix(m, rng.normal(size=(10, 3)), "all", feature_names="abc")
    anova.save_basis(basis, tmp_path / "b.csv")
    back = anova.load_basis(tmp_path / "b.csv")
    np.testing.assert_array_equal(back.design_matrix, basis.design_matrix)
    assert back.terms == basis.terms and back.phi0 == basis.phi0


def test_export_partial_responses(rng, tmp_path):
    from prn import data
    m = random_mlp(rng, 2)
    X = rng.normal(size=(30, 2))
    spec = data.fit_normalization(X * 3 + 1)
    basis = anova.build_design_matrix(m, spec.apply(X * 3 + 1), "all", feature_names=("p", "q"))
    index = anova.export_partial_responses(m, basis, tmp_path, spec)
    import json
    idx = json.loads(index.read_text())
    assert [t["label"] for t in idx["terms"]] == ["p", "q", "p*q"]
    uni = np.loadtxt(tmp_path / idx["terms"][0]["file"], delimiter=",", skiprows=1)
    assert uni.shape == (101, 3)
    pair = np.loadtxt(tmp_path / idx["terms"][2]["file"], delimiter=",", skiprows=1)
    assert pair.shape == (41 * 41, 5)
