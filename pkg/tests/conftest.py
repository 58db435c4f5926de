from __future__ import annotations

import numpy as np
import pytest

from src.config import DEFAULT_CORPUS, SAMPLE_CORPUS
from src.markov import TransitionModel, Vocabulary
from src.synthetic import write_synthetic_corpus


def random_substochastic(rng: np.random.Generator, n: int, density: float = 0.5, eos_mass=(0.05, 0.5)):
    """Random ``(B, b)`` with at least one positive entry per row of B."""
    B = rng.random((n, n)) * (rng.random((n, n)) < density)
    for i in range(n):
        if not B[i].any():
            B[i, rng.integers(n)] = 1.0
    B /= B.sum(axis=1, keepdims=True)
    keep = 1.0 - rng.uniform(*eos_mass, size=n)
    B *= keep[:, None]
    b = 1.0 - B.sum(axis=1)
    return B, b


def make_model(B, b, tokens=None) -> TransitionModel:
    n = len(b)
    tokens = tokens or tuple(f"w{i}" for i in range(n))
    return TransitionModel.from_arrays(Vocabulary(tuple(tokens)), B, b)


@pytest.fixture
def two_state() -> TransitionModel:
    return make_model(np.array([[0.0, 0.5], [0.5, 0.0]]), np.array([0.5, 0.5]), ("x", "y"))


@pytest.fixture
def substochastic():
    return random_substochastic


@pytest.fixture
def model_factory():
    return make_model


@pytest.fixture
def corpus_path():
    return SAMPLE_CORPUS


@pytest.fixture(scope="session")
def bundled_corpus_path():
    return write_synthetic_corpus(DEFAULT_CORPUS)


@pytest.fixture
def tiny_corpus():
    return [
        ["the", "cat", "sat"],
        ["the", "dog", "sat"],
        ["a", "cat", "ran"],
        ["the", "cat", "ran", "home"],
    ]
