import numpy as np
import pytest

from prn.mlp import MlpModel


def random_mlp(rng, d, h=4, scale=1.0):
    return MlpModel(scale * rng.normal(size=(h, d)), scale * rng.normal(size=h),
                    scale * rng.normal(size=h), scale * rng.normal())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy_classification():
    """Two informative inputs and one pure-noise input, 300 rows."""
    r = np.random.default_rng(7)
    X = r.normal(size=(300, 3))
    logit = 2.0 * X[:, 0] - 1.5 * np.tanh(2 * X[:, 1])
    t = (r.random(300) < 1 / (1 + np.exp(-logit))).astype(float)
    return X, t
