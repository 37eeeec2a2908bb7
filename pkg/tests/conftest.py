import numpy as np
import pytest

import rankbench as rb


def make_dataset(X, y, names=None):
    X = np.asarray(X, dtype=float)
    if names is None:
        names = tuple(f"x{j + 1}" for j in range(X.shape[1]))
    return rb.Dataset(X, np.asarray(y), tuple(names))


class LinearModel:
    """Identity-output linear predictor for analytic oracles."""

    def __init__(self, beta, intercept=0.0):
        self.beta = np.asarray(beta, dtype=float)
        self.intercept = intercept

    def predict(self, X):
        return np.asarray(X) @ self.beta + self.intercept


class SigmoidModel:
    def __init__(self, beta, intercept=0.0):
        self.beta = np.asarray(beta, dtype=float)
        self.intercept = intercept

    def predict(self, X):
        z = np.asarray(X) @ self.beta + self.intercept
        return 1.0 / (1.0 + np.exp(-z))


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


@pytest.fixture(scope="session")
def pareto_data():
    """12-feature dataset with halving planted weights (8 signal, 4 noise)."""
    spec = rb.SyntheticSpec(
        n_features=12,
        n_samples=1500,
        signal_weights=rb.pareto_weights(8, first=4.0, ratio=0.5),
        noise_features=4,
        bias=-0.3,
        seed=11,
    )
    return spec, rb.generate(spec)


@pytest.fixture(scope="session")
def small_logreg():
    """Six-feature synthetic data with a fitted logistic model."""
    spec = rb.SyntheticSpec(
        n_features=6,
        n_samples=900,
        signal_weights=rb.pareto_weights(4),
        noise_features=2,
        bias=-0.4,
        seed=5,
    )
    data = rb.generate(spec)
    model = rb.fit_logreg(data, rb.LogRegConfig(C=20.0, l1_ratio=0.01, tol=1e-7))
    return spec, data, model
