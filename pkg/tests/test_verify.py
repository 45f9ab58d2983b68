from types import SimpleNamespace

import numpy as np
import pytest
import scipy.linalg

from pole_swap.exception import (
    DimensionError,
    ShapeError,
    SingularShiftError,
    SizeMismatch,
)
from pole_swap.pencil import (
    HomogeneousValue,
    gen_random_alternating,
    gen_random_palindromic,
)
from pole_swap.verify import (
    backward_error,
    match_eigensets,
    oracle_eigenvalues,
    subspace_check,
)


def _sorted(values):
    finite = (v.to_complex() for v in values if not v.is_infinite)
    return sorted(finite, key=lambda z: (z.real, z.imag))


@pytest.mark.parametrize("method", ["qz", "determinant"])
@pytest.mark.parametrize(
    "A, B, expected",
    [
        ([[0, 2], [3, 0]], [[0, 1], [1, 0]], [2, 3]),
        ([[1, 0], [0, 2]], np.eye(2), [1, 2]),
    ],
)
def test_oracle_small_pencils(method, A, B, expected):
    values = oracle_eigenvalues(A, B, method=method)

    assert len(values) == 2
    assert np.allclose(sorted(_sorted(values), key=abs), expected, atol=1e-12)


@pytest.mark.parametrize("method", ["qz", "determinant"])
def test_oracle_infinite_eigenvalue(method):
    values = oracle_eigenvalues(np.eye(2), np.diag([1.0, 0.0]), method=method)

    assert sum(v.is_infinite for v in values) == 1
    assert np.allclose(_sorted(values), [1.0], atol=1e-12)


def _methods_mismatch(n, generate, seed):
    pencil = generate(n, seed)
    qz = oracle_eigenvalues(pencil.A, pencil.B)
    determinant = oracle_eigenvalues(pencil.A, pencil.B, method="determinant")

    return match_eigensets(qz, determinant).max_chordal_mismatch


@pytest.mark.parametrize("generate", [gen_random_palindromic, gen_random_alternating])
@pytest.mark.parametrize("n", [2, 3, 5, 6, 8])
@pytest.mark.parametrize("seed", range(4))
def test_oracle_methods_agree(n, generate, seed):
    assert _methods_mismatch(n, generate, seed) <= 1e-9


@pytest.mark.slow
@pytest.mark.parametrize("generate", [gen_random_palindromic, gen_random_alternating])
@pytest.mark.parametrize("n", range(2, 9))
def test_oracle_methods_agree_all_seeds(n, generate):
    mismatches = [_methods_mismatch(n, generate, seed) for seed in range(100)]

    assert max(mismatches) <= 1e-9


def test_oracle_agrees_with_lapack():
    rng = np.random.default_rng(11)
    A = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
    B = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
    reference = [HomogeneousValue(z) for z in scipy.linalg.eigvals(A, B)]

    report = match_eigensets(oracle_eigenvalues(A, B), reference)
    assert report.max_chordal_mismatch <= 1e-7


@pytest.mark.parametrize("n, method", [(65, "qz"), (9, "determinant")])
def test_oracle_rejects_large_input(n, method):
    with pytest.raises(DimensionError):
        oracle_eigenvalues(np.eye(n), np.eye(n), method=method)


def test_oracle_rejects_mismatched_shapes():
    with pytest.raises(ShapeError):
        oracle_eigenvalues(np.eye(2), np.eye(3))


def test_backward_error():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((4, 4)) + 0j

    assert backward_error(A, np.eye(4), A) == 0.0
    assert backward_error(A, np.eye(4), np.zeros((4, 4))) == pytest.approx(1.0)
    with pytest.raises(ShapeError):
        backward_error(A, np.eye(3), A)


def test_match_eigensets_finds_permutation():
    u = [HomogeneousValue(z) for z in (1.0, 2j, -3.0)]
    v = [u[2], u[0], u[1]]

    report = match_eigensets(u, v)
    assert report.max_chordal_mismatch == 0.0
    assert report.matching == [1, 2, 0]
    assert report.unmatched_count == 0


def test_match_eigensets_pairs_nearest():
    u = [HomogeneousValue(0.0), HomogeneousValue(1.0)]
    v = [HomogeneousValue(0.1), HomogeneousValue(0.5)]

    report = match_eigensets(u, v)
    assert report.matching == [0, 1]


def test_match_eigensets_counts_unmatched():
    u = [HomogeneousValue(1.0), HomogeneousValue(2.0)]
    v = [HomogeneousValue(1.0), HomogeneousValue(-2.0)]

    assert match_eigensets(u, v, tol=1e-3).unmatched_count == 1


def test_match_eigensets_size_mismatch():
    with pytest.raises(SizeMismatch):
        match_eigensets([HomogeneousValue(1.0)], [])


def test_subspace_check_identity_shift():
    pencil = gen_random_palindromic(5, seed=1)
    rho = HomogeneousValue(0.3 + 0.2j)
    pair = SimpleNamespace(rho=rho, rho_tilde=rho)

    assert subspace_check(pencil.A, pencil.B, pair, np.eye(5)) == pytest.approx(
        0.0, abs=1e-12
    )


def test_subspace_check_singular_shift():
    pair = SimpleNamespace(rho=HomogeneousValue(2.0), rho_tilde=HomogeneousValue(1.0))

    with pytest.raises(SingularShiftError):
        subspace_check(np.eye(3), np.eye(3), pair, np.eye(3))
