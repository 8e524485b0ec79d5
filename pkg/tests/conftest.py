import numpy as np
import pytest

from htomo import build_pattern_table

BASE_SEED = 20260809


@pytest.fixture(scope="session")
def table64():
    """One big table shared across the suite (covers every N <= 65 used)."""
    return build_pattern_table(64)


@pytest.fixture(scope="session")
def table8():
    return build_pattern_table(8)


def random_density(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Random full-rank density matrix via a Ginibre factor."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = g @ g.conj().T
    return m / np.trace(m).real
