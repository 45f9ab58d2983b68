import dataclasses
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
import numpy.polynomial.polynomial as poly
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from pole_swap import config
from pole_swap.exception import (
    DimensionError,
    OracleFailure,
    ShapeError,
    SingularShiftError,
    SizeMismatch,
)
from pole_swap.logging_config import get_library_logger
from pole_swap.pencil import HomogeneousValue, chordal_distance

logger = get_library_logger()

ORACLE_METHOD = Literal["qz", "determinant"]


@dataclasses.dataclass(kw_only=True)
class MatchReport:
    """
    Outcome of :func:`match_eigensets`. ``matching[i]`` is the index in the
    second list paired with entry i of the first.
    """

    max_chordal_mismatch: float
    matching: List[int]
    unmatched_count: int = 0


def _square_pair(A, B) -> Tuple[np.ndarray, np.ndarray]:
    A = np.array(A, dtype=np.complex128)
    B = np.array(B, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or B.shape != A.shape:
        raise ShapeError(
            f"Expected two square matrices of equal size, got {A.shape} and {B.shape}"
        )
    return A, B


def _left(x: complex, y: complex) -> np.ndarray:
    """2x2 unitary G with ``G [x, y]^T = [r, 0]^T``."""
    r = np.hypot(abs(x), abs(y))
    if r == 0:
        return np.eye(2, dtype=np.complex128)
    return np.array([[np.conj(x), np.conj(y)], [-y, x]]) / r


def _right(x: complex, y: complex) -> np.ndarray:
    """2x2 unitary Z with ``[x, y] Z = [0, r]``."""
    r = np.hypot(abs(x), abs(y))
    if r == 0:
        return np.eye(2, dtype=np.complex128)
    return np.array([[y, np.conj(x)], [-x, np.conj(y)]]) / r


def _rotate_rows(G: np.ndarray, i: int, *matrices: np.ndarray):
    for M in matrices:
        M[i : i + 2, :] = G @ M[i : i + 2, :]


def _rotate_columns(Z: np.ndarray, j: int, *matrices: np.ndarray):
    for M in matrices:
        M[:, j : j + 2] = M[:, j : j + 2] @ Z


def _hessenberg_triangular(A: np.ndarray, B: np.ndarray):
    """Reduces (A, B) in place to upper Hessenberg / upper triangular form."""
    n = A.shape[0]
    Q, R = np.linalg.qr(B)
    A[:] = Q.conj().T @ A
    B[:] = R
    for j in range(n - 2):
        for i in range(n - 1, j + 1, -1):
            _rotate_rows(_left(A[i - 1, j], A[i, j]), i - 1, A, B)
            A[i, j] = 0.0
            _rotate_columns(_right(B[i, i - 1], B[i, i]), i - 1, A, B)
            B[i, i - 1] = 0.0


def _bottom_shift(H: np.ndarray, T: np.ndarray, hi: int) -> Optional[complex]:
    """Eigenvalue of the trailing 2x2 subpencil closer to ``h_hh / t_hh``."""
    block = slice(hi - 1, hi + 1)
    H2, T2 = H[block, block], T[block, block]
    coefficients = [
        T2[0, 0] * T2[1, 1] - T2[0, 1] * T2[1, 0],
        -(H2[0, 0] * T2[1, 1] + H2[1, 1] * T2[0, 0])
        + H2[0, 1] * T2[1, 0]
        + H2[1, 0] * T2[0, 1],
        H2[0, 0] * H2[1, 1] - H2[0, 1] * H2[1, 0],
    ]
    roots = np.roots(coefficients)
    if roots.size == 0:
        return None
    corner = H[hi, hi] / T[hi, hi]
    return complex(roots[np.argmin(np.abs(roots - corner))])


def _qz_sweep(H: np.ndarray, T: np.ndarray, lo: int, hi: int, shift: complex):
    _rotate_rows(_left(H[lo, lo] - shift * T[lo, lo], H[lo + 1, lo]), lo, H, T)
    for k in range(lo, hi):
        _rotate_columns(_right(T[k + 1, k], T[k + 1, k + 1]), k, H, T)
        T[k + 1, k] = 0.0
        if k + 2 <= hi:
            _rotate_rows(_left(H[k + 1, k], H[k + 2, k]), k + 1, H, T)
            H[k + 2, k] = 0.0


def _push_infinite_to_top(H: np.ndarray, T: np.ndarray, lo: int, hi: int, k: int):
    """
    Moves a zero diagonal entry of T from position k to lo, then decouples row
    lo of H so that an infinite eigenvalue splits off at the top.
    """
    T[k, k] = 0.0
    for i in range(k, lo, -1):
        _rotate_columns(_right(T[i - 1, i - 1], T[i - 1, i]), i - 1, H, T)
        T[i - 1, i - 1] = 0.0
        T[i, i - 1] = 0.0
        if i + 1 <= hi:
            _rotate_rows(_left(H[i, i - 1], H[i + 1, i - 1]), i, H, T)
            H[i + 1, i - 1] = 0.0
    _rotate_rows(_left(H[lo, lo], H[lo + 1, lo]), lo, H, T)
    H[lo + 1, lo] = 0.0
    T[lo + 1, lo] = 0.0


def _qz_eigenvalues(A: np.ndarray, B: np.ndarray) -> List[HomogeneousValue]:
    n = A.shape[0]
    H, T = A.copy(), B.copy()
    _hessenberg_triangular(H, T)
    norm_H = max(float(np.linalg.norm(H)), np.finfo(float).tiny)
    norm_T = max(float(np.linalg.norm(T)), np.finfo(float).tiny)
    max_sweeps = config.ORACLE_SWEEPS_PER_DIMENSION * n
    rng = np.random.default_rng(n)

    found = []
    blocks = [(0, n - 1)]
    sweeps = 0
    while blocks:
        lo, hi = blocks.pop()
        stalled = 0
        while lo < hi:
            split = None
            for k in range(hi, lo, -1):
                tiny = config.EPS * (abs(H[k, k]) + abs(H[k - 1, k - 1]))
                if abs(H[k, k - 1]) <= (tiny or config.EPS * norm_H):
                    H[k, k - 1] = 0.0
                    split = k
                    break
            if split is not None:
                blocks.append((split, hi))
                hi = split - 1
                stalled = 0
                continue

            diagonal = np.abs(np.diag(T)[lo : hi + 1])
            zero = int(np.argmin(diagonal))
            if diagonal[zero] <= config.EPS * norm_T:
                _push_infinite_to_top(H, T, lo, hi, lo + zero)
                continue

            sweeps += 1
            stalled += 1
            if sweeps > max_sweeps:
                raise OracleFailure(f"QZ iteration exceeded {max_sweeps} sweeps")
            shift = _bottom_shift(H, T, hi)
            if shift is None or stalled % config.ORACLE_EXCEPTIONAL_SHIFT_PERIOD == 0:
                shift = complex(*rng.standard_normal(2)) * norm_H / norm_T
            _qz_sweep(H, T, lo, hi, shift)

        if H[lo, lo] == 0 and T[lo, lo] == 0:
            raise OracleFailure("Pencil is singular")
        found.append(HomogeneousValue(H[lo, lo], T[lo, lo]))
    return found


def _is_zero_polynomial(p: np.ndarray, scale: float) -> bool:
    return float(np.max(np.abs(p))) <= config.EPS * scale


def _determinant_eigenvalues(A: np.ndarray, B: np.ndarray) -> List[HomogeneousValue]:
    """
    Roots of ``det(A - lambda B)``, the determinant expanded by fraction-free
    (Bareiss) elimination on polynomial entries. A degree deficit of d means d
    infinite eigenvalues.
    """
    n = A.shape[0]
    scale = max(float(np.abs(A).max()), float(np.abs(B).max()), 1.0)
    M = [[np.array([A[i, j], -B[i, j]]) for j in range(n)] for i in range(n)]
    sign = 1.0
    previous = np.array([1.0 + 0j])
    for k in range(n - 1):
        pivot = max(range(k, n), key=lambda i: float(np.max(np.abs(M[i][k]))))
        if _is_zero_polynomial(M[pivot][k], scale ** (k + 1)):
            raise OracleFailure("Pencil is singular")
        if pivot != k:
            M[k], M[pivot] = M[pivot], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                numerator = poly.polysub(
                    poly.polymul(M[i][j], M[k][k]), poly.polymul(M[i][k], M[k][j])
                )
                M[i][j] = poly.polydiv(numerator, previous)[0]
        previous = M[k][k]
    # exact zero leading coefficients are trimmed by numpy, so pad to degree n
    determinant = np.zeros(n + 1, dtype=np.complex128)
    last = sign * np.asarray(M[n - 1][n - 1])[: n + 1]
    determinant[: last.size] = last
    magnitude = float(np.max(np.abs(determinant)))
    if magnitude == 0:
        raise OracleFailure("Pencil is singular")
    degree = n
    while degree > 0 and abs(determinant[degree]) <= 1e-13 * magnitude:
        degree -= 1
    roots = poly.polyroots(determinant[: degree + 1]) if degree else []
    values = [HomogeneousValue(complex(root)) for root in roots]
    values.extend(HomogeneousValue(1.0, 0.0) for _ in range(n - degree))
    return values


def oracle_eigenvalues(
    A, B, *, method: ORACLE_METHOD = "qz"
) -> List[HomogeneousValue]:
    """
    Eigenvalues of an arbitrary regular pencil A - lambda B, computed without
    any use of structure.

    ``qz`` reduces to Hessenberg-triangular form by Givens rotations and runs
    complex single-shift QZ with deflation and zero chasing for infinite
    eigenvalues. ``determinant`` (n <= 8) finds the roots of the characteristic
    polynomial.

    :param A: n x n complex matrix.
    :param B: n x n complex matrix.
    :param method: ``qz`` or ``determinant``.
    :return: The n eigenvalues in no particular order.
    :rtype: list
    :raises DimensionError: If n exceeds the oracle limits.
    :raises OracleFailure: If the iteration stalls or the pencil is singular.
    """
    A, B = _square_pair(A, B)
    n = A.shape[0]
    if n > config.ORACLE_MAX_DIMENSION:
        raise DimensionError(
            f"Oracle handles n <= {config.ORACLE_MAX_DIMENSION}, got {n}"
        )
    if method == "determinant":
        if n > config.ORACLE_DETERMINANT_MAX_DIMENSION:
            raise DimensionError(
                f"Determinant oracle handles n <= "
                f"{config.ORACLE_DETERMINANT_MAX_DIMENSION}, got {n}"
            )
        return _determinant_eigenvalues(A, B)
    if method != "qz":
        raise ValueError(f"Unknown oracle method '{method}'")
    if n == 1:
        if A[0, 0] == 0 and B[0, 0] == 0:
            raise OracleFailure("Pencil is singular")
        return [HomogeneousValue(A[0, 0], B[0, 0])]
    return _qz_eigenvalues(A, B)


def backward_error(A_in, Q, S) -> float:
    """
    ``||Q* A_in Q - S||_F / ||A_in||_F``; the absolute value when A_in is
    zero.
    """
    A_in, Q, S = (np.asarray(M, dtype=np.complex128) for M in (A_in, Q, S))
    if not A_in.shape == Q.shape == S.shape:
        raise ShapeError(
            f"Shapes {A_in.shape}, {Q.shape} and {S.shape} do not agree"
        )
    error = float(np.linalg.norm(Q.conj().T @ A_in @ Q - S))
    norm = float(np.linalg.norm(A_in))
    return error / norm if norm > 0 else error


def _distance_matrix(
    u: Sequence[HomogeneousValue], v: Sequence[HomogeneousValue]
) -> np.ndarray:
    return np.array([[chordal_distance(x, y) for y in v] for x in u])


def _greedy_bound(distances: np.ndarray) -> float:
    remaining = distances.copy()
    worst = 0.0
    for _ in range(len(distances)):
        i, j = np.unravel_index(np.argmin(remaining), remaining.shape)
        worst = max(worst, float(distances[i, j]))
        remaining[i, :] = np.inf
        remaining[:, j] = np.inf
    return worst


def _perfect_under(distances: np.ndarray, threshold: float) -> bool:
    cost = (distances > threshold).astype(float)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum()) == 0.0


def match_eigensets(
    u: Sequence[HomogeneousValue],
    v: Sequence[HomogeneousValue],
    *,
    tol: Optional[float] = None,
) -> MatchReport:
    """
    Pairs two eigenvalue lists so that the largest chordal distance between
    partners is minimal. A greedy matching bounds the optimum from above; a
    binary search over the distinct distances below the bound finds the
    smallest threshold admitting a perfect matching, and among those the one
    with the least total distance is reported.

    :param tol: When given, pairs farther apart than tol are counted as
        unmatched.
    :raises SizeMismatch: If the lists differ in length.
    """
    if len(u) != len(v):
        raise SizeMismatch(f"Cannot match {len(u)} against {len(v)} eigenvalues")
    if not u:
        return MatchReport(max_chordal_mismatch=0.0, matching=[])

    distances = _distance_matrix(u, v)
    bound = _greedy_bound(distances)
    candidates = np.unique(distances[distances <= bound])
    low, high = 0, len(candidates) - 1
    while low < high:
        middle = (low + high) // 2
        if _perfect_under(distances, candidates[middle]):
            high = middle
        else:
            low = middle + 1
    threshold = candidates[low]

    cost = np.where(distances <= threshold, distances, len(u) + 1.0)
    rows, cols = linear_sum_assignment(cost)
    matching = [int(c) for _, c in sorted(zip(rows, cols))]
    matched = distances[np.arange(len(u)), matching]
    unmatched = int(np.count_nonzero(matched > tol)) if tol is not None else 0
    return MatchReport(
        max_chordal_mismatch=float(matched.max()),
        matching=matching,
        unmatched_count=unmatched,
    )


def subspace_check(A, B, rho_pair, Q) -> float:
    """
    Largest principal angle, over k = 1..n-1, between span(Q[:, :k]) and
    ``(A - rho_tilde B)^{-1} (A - rho B) E_k``, for Q accumulated over one
    shifted sweep started from (A, B).

    :param rho_pair: Any object with ``rho`` and ``rho_tilde`` homogeneous
        values, normally a solver ShiftPair.
    :return: The angle in radians.
    :raises SingularShiftError: If ``A - rho_tilde B`` is numerically singular.
    """
    A, B = _square_pair(A, B)
    Q = np.asarray(Q, dtype=np.complex128)
    n = A.shape[0]
    rho, rho_tilde = rho_pair.rho, rho_pair.rho_tilde
    left = rho_tilde.beta * A - rho_tilde.alpha * B
    right = rho.beta * A - rho.alpha * B
    if np.linalg.cond(left) > 1.0 / (n * config.EPS):
        raise SingularShiftError("A - rho_tilde B is numerically singular")
    M = scipy.linalg.solve(left, right)

    worst = 0.0
    for k in range(1, n):
        V, _ = scipy.linalg.qr(M[:, :k], mode="economic")
        U = Q[:, :k]
        residual = V - U @ (U.conj().T @ V)
        sine = float(scipy.linalg.svdvals(residual).max())
        worst = max(worst, float(np.arcsin(min(1.0, sine))))
    logger.debug("Subspace check finished", extra={"n": n, "angle": worst})
    return worst
