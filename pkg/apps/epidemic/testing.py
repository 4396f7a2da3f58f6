"""Shared fixtures for the test suites of every app."""
import numpy as np

from .covid import ModelParams

REFERENCE_RATES = {
    'beta_s': 0.4,
    'beta_a': 0.3,
    'beta_h': 0.1,
    'sigma': 0.2,
    'r': 0.5,
    'gamma_s': 0.1,
    'gamma_a': 0.15,
    'gamma_h': 0.12,
    'phi_s': 0.05,
    'delta_s': 0.01,
    'delta_h': 0.02,
}

# N = 1000
REFERENCE_STATE = np.array([900.0, 50.0, 20.0, 20.0, 5.0, 5.0])
# everyone recovered: only the constant rows of the connection survive
RECOVERED_STATE = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 100.0])
DISEASE_FREE_STATE = np.array([990.0, 0.0, 0.0, 0.0, 0.0, 10.0])


def reference_params(**overrides) -> ModelParams:
    return ModelParams(**{**REFERENCE_RATES, **overrides})


def random_params(rng: np.random.Generator) -> ModelParams:
    rates = {name: float(rng.uniform(0.0, 1.0)) for name in REFERENCE_RATES}
    rates['r'] = float(rng.uniform(0.05, 1.0))
    return ModelParams(**rates)


def random_states(rng: np.random.Generator, count: int) -> np.ndarray:
    return rng.uniform(1.0, 1e5, size=(count, 6))
