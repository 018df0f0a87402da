import numpy as np
import pytest

from prn.scg import OptimizerError, ScgConfig, minimize


def rosenbrock(x):
    return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2


def rosenbrock_grad(x):
    return np.array([-2 * (1 - x[0]) - 400 * x[0] * (x[1] - x[0] ** 2),
                     200 * (x[1] - x[0] ** 2)])


def test_quadratic_converges_to_origin():
    x, trace = minimize(lambda x: x @ x, lambda x: 2 * x, np.array([3.0, 4.0]),
                        ScgConfig(max_iterations=50))
    assert np.max(np.abs(x)) < 1e-8
    assert len(trace.objective) - 1 <= 50


def test_rosenbrock():
    x, _ = minimize(rosenbrock, rosenbrock_grad, np.array([-1.2, 1.0]),
                    ScgConfig(max_iterations=2000, objective_tolerance=1e-14,
                              gradient_tolerance=1e-10))
    assert rosenbrock(x) < 1e-6
    np.testing.assert_allclose(x, [1, 1], atol=1e-3)


def test_stationary_start_is_returned_unchanged():
    x0 = np.array([1.0, 1.0])
    x, trace = minimize(rosenbrock, rosenbrock_grad, x0)
    np.testing.assert_array_equal(x, x0)
    assert trace.reason


def test_trace_non_increasing_and_deterministic():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(6, 6))
    A = A @ A.T + np.eye(6)
    b = rng.normal(size=6)
    f = lambda x: 0.5 * x @ A @ x - b @ x + 0.1 * np.sum(x ** 4)
    g = lambda x: A @ x - b + 0.4 * x ** 3
    x1, t1 = minimize(f, g, np.ones(6))
    x2, t2 = minimize(f, g, np.ones(6))
    np.testing.assert_array_equal(x1, x2)
    obj = np.array(t1.objective)
    assert np.all(np.diff(obj) <= 1e-12)
    assert f(x1) <= f(np.ones(6))


def test_non_finite_objective_aborts():
    with pytest.raises(OptimizerError):
        minimize(lambda x: np.nan, lambda x: np.ones_like(x), np.zeros(2))


def test_trace_csv(tmp_path):
    _, trace = minimize(lambda x: x @ x, lambda x: 2 * x, np.array([1.0, 2.0]))
    trace.to_csv(tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().startswith("iteration")
