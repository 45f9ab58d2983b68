import numpy as np
import pytest

from pole_swap.pencil import gen_random_alternating, gen_random_palindromic


@pytest.fixture
def env_vars(monkeypatch):
    monkeypatch.setenv("POLE_SWAP_MAX_REFINES", "4")
    monkeypatch.setenv("POLE_SWAP_MAX_ITERATIONS", "50")
    monkeypatch.setenv("POLE_SWAP_SHIFT_GUARD_GAP", "0.01")
    monkeypatch.setenv("POLE_SWAP_DEFLATION_FACTOR", "20")
    monkeypatch.setenv("POLE_SWAP_SHIFT_STRATEGY", "rayleigh")
    monkeypatch.setenv("POLE_SWAP_WORKERS", "2")


@pytest.fixture
def palindromic_7():
    return gen_random_palindromic(7, seed=0)


@pytest.fixture
def palindromic_8():
    return gen_random_palindromic(8, seed=0)


@pytest.fixture
def alternating_9():
    return gen_random_alternating(9, seed=3)


@pytest.fixture
def worked_2x2():
    """Middle block with lower left pole 0.5 and upper right pole 2."""
    return np.array([[0.0, 2.0], [1.0, 1.0]], dtype=np.complex128)
