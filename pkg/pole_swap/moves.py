import collections
import dataclasses
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from pole_swap import config
from pole_swap.exception import (
    CoincidentPolesError,
    DegenerateShiftError,
    DimensionError,
    RangeError,
    RefinementLimitError,
    ZeroVectorError,
)
from pole_swap.logging_config import get_library_logger
from pole_swap.pencil import (
    ActiveWindow,
    HomogeneousValue,
    StructuredPencil,
    StructureKind,
)

logger = get_library_logger()

MOVE_I = "I"
MOVE_II = "II"
MOVE_IIO = "IIo"
MOVE_IIE = "IIe"
MOVE_TYPES = (MOVE_I, MOVE_II, MOVE_IIO, MOVE_IIE)


@dataclasses.dataclass(frozen=True, kw_only=True)
class CoreTransformation:
    """
    Unitary acting on rows/columns ``j - 1`` and ``j`` (0-based), i.e. the
    core usually written Q_j. The active block is ``[[c, -conj(s)], [s, conj(c)]]``.

    :ivar j: 1-based core index, 1 <= j <= n - 1.
    :type j: int
    :ivar c: Complex cosine.
    :type c: complex
    :ivar s: Complex sine.
    :type s: complex
    """

    j: int
    c: complex
    s: complex

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.c, -np.conj(self.s)], [self.s, np.conj(self.c)]],
            dtype=np.complex128,
        )

    def conj_transpose(self) -> "CoreTransformation":
        return CoreTransformation(j=self.j, c=np.conj(self.c), s=-self.s)

    def unitarity_defect(self) -> float:
        return abs(abs(self.c) ** 2 + abs(self.s) ** 2 - 1.0)

    @property
    def is_identity(self) -> bool:
        return self.c == 1 and self.s == 0


@dataclasses.dataclass(kw_only=True)
class SwapResidual:
    """
    Entries of A (``eps``) and B (``eta``) that a middle swap should have
    annihilated, together with the Frobenius norm ``||M||_F`` of the local
    block the swap acted on (the larger of the A and B blocks).

    The swap is acceptable when every one of these entries is at most
    ``tol_factor * eps * ||M||_F``.
    """

    eps: Tuple[complex, ...]
    eta: Tuple[complex, ...]
    block_norm: float

    @property
    def residual(self) -> float:
        return max(abs(e) for e in (*self.eps, *self.eta))

    @property
    def relative(self) -> float:
        return self.residual / self.block_norm if self.block_norm > 0 else 0.0

    def acceptable(self, tol_factor: float = config.MOVE_TOLERANCE_FACTOR) -> bool:
        return self.residual <= tol_factor * config.EPS * self.block_norm


@dataclasses.dataclass(kw_only=True)
class MoveStats:
    move_count_by_type: collections.Counter = dataclasses.field(
        default_factory=collections.Counter
    )
    refinement_count: int = 0
    max_residual_seen: float = 0.0
    # relative residual of the most recent middle move when it was accepted
    final_residual: float = 0.0

    @property
    def move_count(self) -> int:
        return sum(self.move_count_by_type.values())

    def record_move(self, move_type: str):
        self.move_count_by_type[move_type] += 1

    def record_residual(self, residual: SwapResidual):
        self.max_residual_seen = max(self.max_residual_seen, residual.relative)
        self.final_residual = residual.relative

    def merge(self, other: "MoveStats") -> "MoveStats":
        self.move_count_by_type.update(other.move_count_by_type)
        self.refinement_count += other.refinement_count
        self.max_residual_seen = max(self.max_residual_seen, other.max_residual_seen)
        if other.move_count_by_type[MOVE_IIO] or other.move_count_by_type[MOVE_IIE]:
            self.final_residual = other.final_residual
        return self

    __iadd__ = merge


def rotation_from_vector(v: Sequence[complex], j: int = 1) -> CoreTransformation:
    """
    Core whose first column is proportional to ``v``:
    ``r = ||v||_2, c = v1 / r, s = v2 / r``.

    :param v: Complex 2-vector.
    :param j: Core index the rotation will act on.
    :raises ZeroVectorError: If v is the zero vector.
    """
    v1, v2 = complex(v[0]), complex(v[1])
    r = math.hypot(abs(v1), abs(v2))
    if r == 0:
        raise ZeroVectorError("Cannot build a rotation from the zero vector")
    return CoreTransformation(j=j, c=v1 / r, s=v2 / r)


def _annihilator(v1: complex, v2: complex, j: int) -> CoreTransformation:
    # nothing to zero: identity rather than a phase
    if v2 == 0:
        return CoreTransformation(j=j, c=1.0 + 0j, s=0j)
    return rotation_from_vector((v1, v2), j)


def restore_structure(pencil: StructuredPencil, indices: Sequence[int]):
    """
    Re-imposes the structure relation on the given rows and columns: B is
    overwritten with A* for palindromic pencils; for alternating pencils A
    and B are replaced by their Hermitian and skew-Hermitian parts there.
    """
    A, B = pencil.A, pencil.B
    for r in indices:
        if pencil.kind is StructureKind.PALINDROMIC:
            B[r, :] = A[:, r].conj()
            B[:, r] = A[r, :].conj()
            continue
        row = (A[r, :] + A[:, r].conj()) / 2
        A[r, :] = row
        A[:, r] = row.conj()
        row = (B[r, :] - B[:, r].conj()) / 2
        B[r, :] = row
        B[:, r] = -row.conj()


def apply_congruence(
    pencil: StructuredPencil,
    core: CoreTransformation,
    *,
    Q: Optional[np.ndarray] = None,
):
    """
    Replaces (A, B) by (Q_j* A Q_j, Q_j* B Q_j) in place as rank-2 row and
    column updates spanning the full matrices, so the accumulated product
    stays an exact similarity record. The two touched rows and columns are
    then put back onto the structure (:func:`restore_structure`), which keeps
    B the exact conjugate transpose of A in the palindromic case. When ``Q``
    is given it is updated as ``Q <- Q Q_j``.

    :raises IndexError: If the core index is outside 1..n-1.
    """
    if not 1 <= core.j <= pencil.n - 1:
        raise IndexError(f"Core index {core.j} outside 1..{pencil.n - 1}")
    if core.is_identity:
        return
    i0, i1 = core.j - 1, core.j
    c, s = complex(core.c), complex(core.s)
    cc, sc = c.conjugate(), s.conjugate()
    for M in (pencil.A, pencil.B):
        top = M[i0, :].copy()
        bottom = M[i1, :].copy()
        M[i0, :] = cc * top + sc * bottom
        M[i1, :] = -s * top + c * bottom
        left = M[:, i0].copy()
        right = M[:, i1].copy()
        M[:, i0] = c * left + s * right
        M[:, i1] = -sc * left + cc * right
    restore_structure(pencil, (i0, i1))
    if Q is not None:
        left = Q[:, i0].copy()
        right = Q[:, i1].copy()
        Q[:, i0] = c * left + s * right
        Q[:, i1] = -sc * left + cc * right


def _rotate_pair(core: CoreTransformation, u: complex, v: complex):
    """Applies core* to the vector (u, v)."""
    c, s = complex(core.c), complex(core.s)
    return c.conjugate() * u + s.conjugate() * v, -s * u + c * v


def _solve_numerators(a1, a2, b1, b2, r1, r2) -> Tuple[complex, complex, complex]:
    """
    Cramer numerators and determinant of ``[[a1, a2], [b1, b2]] [u; w] = [r1; r2]``
    after scaling each row to unit infinity norm.

    :raises CoincidentPolesError: If the scaled determinant is negligible.
    """
    s1 = max(abs(a1), abs(a2))
    s2 = max(abs(b1), abs(b2))
    if s1 == 0 or s2 == 0:
        raise CoincidentPolesError("Cross system has a zero row")
    a1, a2, r1 = a1 / s1, a2 / s1, r1 / s1
    b1, b2, r2 = b1 / s2, b2 / s2, r2 / s2
    det = a1 * b2 - b1 * a2
    if abs(det) <= config.COINCIDENT_POLE_TOLERANCE:
        raise CoincidentPolesError(
            f"Poles {a1}/{b1} and {a2}/{b2} are too close to swap"
        )
    return r1 * b2 - a2 * r2, a1 * r2 - b1 * r1, det


def _solve(a1, a2, b1, b2, r1, r2) -> Tuple[complex, complex]:
    num_u, num_w, det = _solve_numerators(a1, a2, b1, b2, r1, r2)
    return num_u / det, num_w / det


def cross_solve_2x2(
    a1: complex, a2: complex, b1: complex, b2: complex, rhs: Sequence[complex]
) -> Tuple[complex, complex]:
    """
    Solves ``[[a1, a2], [b1, b2]] [y; -x] = rhs`` by Cramer's rule with row
    scaling and returns ``(y, x)``.

    :raises CoincidentPolesError: If ``a1 b2 - b1 a2`` is negligible, i.e. the
        two poles coincide.
    """
    y, minus_x = _solve(a1, a2, b1, b2, complex(rhs[0]), complex(rhs[1]))
    return y, -minus_x


def move_I(
    pencil: StructuredPencil,
    rho: HomogeneousValue,
    *,
    window: Optional[ActiveWindow] = None,
    Q: Optional[np.ndarray] = None,
) -> CoreTransformation:
    """
    Replaces pole 1 of the window by ``rho``; by symmetry the last pole becomes
    the structural companion of ``rho``.

    The first window column of ``beta A - alpha B`` is nonzero only in its
    last two entries (w1, w2); the core built from ``(conj(w2), -conj(w1))``
    zeroes w1 and is applied as a congruence.

    :raises DimensionError: If the window is smaller than 3.
    :raises DegenerateShiftError: If w vanishes (rho is an eigenvalue with
        eigenvector e1).
    """
    window = window or ActiveWindow.full(pencil.n)
    if window.size < 3:
        raise DimensionError("Type I moves need a window of size >= 3")
    row, col = window.stop - 2, window.lo
    A, B = pencil.A, pencil.B
    w1 = rho.beta * A[row, col] - rho.alpha * B[row, col]
    w2 = rho.beta * A[row + 1, col] - rho.alpha * B[row + 1, col]
    if w1 == 0 and w2 == 0:
        raise DegenerateShiftError("Shift annihilates the first column of the pencil")
    core = rotation_from_vector(
        (np.conj(w2), -np.conj(w1)), window.core_index(window.size - 1)
    )
    apply_congruence(pencil, core, Q=Q)
    return core


def move_II(
    pencil: StructuredPencil,
    k: int,
    *,
    window: Optional[ActiveWindow] = None,
    Q: Optional[np.ndarray] = None,
) -> Tuple[CoreTransformation, CoreTransformation]:
    """
    Swaps poles k-1 and k of the window together with their mirrored partners.

    Only valid away from the middle, ``k < m/2`` or ``k > m/2 + 1`` for a
    window of size m, where the right core Z_{k-1} and the left core
    Q_{m-k} act on disjoint indices and can be combined into one congruence.

    :return: The cores ``(Z_{k-1}, Q_{m-k})`` in global numbering.
    :raises RangeError: If k is outside the permitted range.
    :raises CoincidentPolesError: If the two poles coincide.
    """
    window = window or ActiveWindow.full(pencil.n)
    m = window.size
    if not (2 <= k <= m - 1 and (2 * k < m or 2 * k > m + 2)):
        raise RangeError(
            f"Pole swap index {k} is not allowed for a window of size {m}"
        )
    A, B = pencil.A, pencil.B
    r0 = window.lo + m - k - 1
    c0 = window.lo + k - 2
    num_y, num_minus_x, det = _solve_numerators(
        A[r0, c0 + 1],
        A[r0 + 1, c0],
        B[r0, c0 + 1],
        B[r0 + 1, c0],
        A[r0 + 1, c0 + 1],
        B[r0 + 1, c0 + 1],
    )
    right = rotation_from_vector((-num_minus_x, det), c0 + 1)
    left = rotation_from_vector((-np.conj(num_y), np.conj(det)), r0 + 1)
    apply_congruence(pencil, right, Q=Q)
    apply_congruence(pencil, left, Q=Q)
    for i, j in ((r0, c0), (c0, r0)):
        A[i, j] = 0.0
        B[i, j] = 0.0
    return right, left


def _middle_block_start(pencil: StructuredPencil, size: int) -> int:
    n = pencil.n
    if size == 2:
        if n % 2 == 0:
            raise DimensionError("The 2x2 middle swap needs an odd dimension")
        return (n - 3) // 2
    if n % 2 == 1:
        raise DimensionError("The 3x3 middle swap needs an even dimension")
    return n // 2 - 2


def _check_block(pencil: StructuredPencil, at: int, size: int):
    if at < 0 or at + size > pencil.n:
        raise IndexError(
            f"Block of size {size} at {at} does not fit a pencil of size {pencil.n}"
        )


def _block_norm(pencil: StructuredPencil, at: int, size: int) -> float:
    block = slice(at, at + size)
    return float(
        max(
            np.linalg.norm(pencil.A[block, block]),
            np.linalg.norm(pencil.B[block, block]),
        )
    )


def _equation_block(pencil: StructuredPencil, at: int, size: int) -> np.ndarray:
    """
    The local block of A (palindromic) or A + B (alternating). Its entries
    carry every condition a structured congruence has to meet: B follows from
    A in the first case, and in the second the Hermitian and skew-Hermitian
    parts of A + B are the A and B blocks.
    """
    block = slice(at, at + size)
    if pencil.kind is StructureKind.PALINDROMIC:
        return pencil.A[block, block].copy()
    return pencil.A[block, block] + pencil.B[block, block]


def _conjugate_linear_solve(p: complex, q: complex, c: complex) -> complex:
    """
    Solves ``c + p x + q conj(x) = 0`` for x by pairing the equation with
    its conjugate, ``[[p, q], [conj(q), conj(p)]] [x; conj(x)] = -[c; conj(c)]``.

    :raises CoincidentPolesError: If ``|p|`` and ``|q|`` agree to rounding.
    """
    p, q, c = complex(p), complex(q), complex(c)
    x, _ = _solve(p, q, q.conjugate(), p.conjugate(), -c, -c.conjugate())
    return x


def _residual(
    pencil: StructuredPencil, at: int, size: int, offsets: Sequence[Tuple[int, int]]
) -> SwapResidual:
    return SwapResidual(
        eps=tuple(complex(pencil.A[at + i, at + j]) for i, j in offsets),
        eta=tuple(complex(pencil.B[at + i, at + j]) for i, j in offsets),
        block_norm=_block_norm(pencil, at, size),
    )


_IIO_ZEROS = ((0, 0),)
_IIE_ZEROS = ((0, 0), (0, 1), (1, 0))


def _accept_middle_swap(
    pencil: StructuredPencil,
    move_type: str,
    at: int,
    refine: Callable[..., SwapResidual],
    offsets: Sequence[Tuple[int, int]],
    size: int,
    max_refines: int,
    tol_factor: float,
    Q: Optional[np.ndarray],
) -> MoveStats:
    stats = MoveStats()
    stats.record_move(move_type)
    residual = _residual(pencil, at, size, offsets)
    stats.record_residual(residual)
    while not residual.acceptable(tol_factor):
        if stats.refinement_count >= max_refines:
            logger.warning(
                "Refinement limit reached",
                extra={
                    "move": move_type,
                    "refinements": stats.refinement_count,
                    "residual": residual.relative,
                },
            )
            raise RefinementLimitError(
                f"Move {move_type} residual {residual.relative:.3e} still above "
                f"tolerance after {stats.refinement_count} refinements",
                refinements=stats.refinement_count,
                residual=residual.relative,
            )
        residual = refine(pencil, at=at, Q=Q)
        stats.refinement_count += 1
        stats.record_residual(residual)
    for i, j in offsets:
        pencil.A[at + i, at + j] = 0.0
        pencil.B[at + i, at + j] = 0.0
    if stats.refinement_count:
        logger.debug(
            "Middle swap refined",
            extra={"move": move_type, "refinements": stats.refinement_count},
        )
    return stats


def refine_IIo(
    pencil: StructuredPencil,
    *,
    at: Optional[int] = None,
    Q: Optional[np.ndarray] = None,
) -> SwapResidual:
    """
    One correction step after a 2x2 middle swap. The block now reads
    ``[[eps, a2], [a1, a12]]`` (and likewise for B with eta). Dropping the
    quadratic terms of the congruence with ``[[1, y], [x, 1]]`` leaves
    ``eps + a1 y + a2 x = 0`` and ``eta + b1 y + b2 x = 0``; a congruence
    needs y = conj(x), and by the structure the two equations collapse into
    ``C[0, 0] + C[0, 1] x + C[1, 0] conj(x) = 0`` on the block C of
    :func:`_equation_block`. The QR factor of ``[[1, 0], [x, 1]]`` is applied
    as a congruence close to the identity.

    :return: The residual after the correction.
    :raises CoincidentPolesError: If the two poles coincide.
    """
    at = _middle_block_start(pencil, 2) if at is None else at
    _check_block(pencil, at, 2)
    C = _equation_block(pencil, at, 2)
    x = _conjugate_linear_solve(C[0, 1], C[1, 0], C[0, 0])
    apply_congruence(pencil, _annihilator(1.0, x, at + 1), Q=Q)
    return _residual(pencil, at, 2, _IIO_ZEROS)


def move_IIo(
    pencil: StructuredPencil,
    max_refines: int = config.DEFAULT_MAX_REFINES,
    *,
    at: Optional[int] = None,
    tol_factor: float = config.MOVE_TOLERANCE_FACTOR,
    Q: Optional[np.ndarray] = None,
) -> MoveStats:
    """
    Swaps the two middle poles of an odd-dimensional pencil with a single
    core acting on the 2x2 block ``[[0, a1], [a2, a21]]`` that starts at
    ``at`` (0-based, default: the middle of the pencil).

    The core's first column is proportional to
    ``v = (b1 a21 - a1 b21, a1 b2 - b1 a2)``, the undivided form of ``(x, 1)``
    where x solves the cross system. If the entry that should vanish exceeds
    ``tol_factor * eps * ||M||_F`` the swap is refined up to ``max_refines``
    times; the accepted residual is then overwritten with zero.

    :return: Statistics of this move.
    :rtype: MoveStats
    :raises CoincidentPolesError: If the middle poles coincide.
    :raises RefinementLimitError: If refinement does not reach the tolerance.
    """
    at = _middle_block_start(pencil, 2) if at is None else at
    _check_block(pencil, at, 2)
    A, B = pencil.A, pencil.B
    _, num_minus_x, det = _solve_numerators(
        A[at, at + 1],
        A[at + 1, at],
        B[at, at + 1],
        B[at + 1, at],
        A[at + 1, at + 1],
        B[at + 1, at + 1],
    )
    apply_congruence(pencil, rotation_from_vector((-num_minus_x, det), at + 1), Q=Q)
    return _accept_middle_swap(
        pencil, MOVE_IIO, at, refine_IIo, _IIO_ZEROS, 2, max_refines, tol_factor, Q
    )


def _triangular_qr_cores(
    first: Sequence[complex], second: Sequence[complex], at: int
) -> List[CoreTransformation]:
    """
    Three cores whose product Q satisfies ``Q* [first second] = R`` upper
    triangular: (at+2) clears entry 3 of the first column, (at+1) entry 2,
    then (at+2) entry 3 of the second column.
    """
    u = [complex(value) for value in first]
    v = [complex(value) for value in second]
    cores = []

    core = _annihilator(u[1], u[2], at + 2)
    u[1], u[2] = _rotate_pair(core, u[1], u[2])
    v[1], v[2] = _rotate_pair(core, v[1], v[2])
    cores.append(core)

    core = _annihilator(u[0], u[1], at + 1)
    u[0], u[1] = _rotate_pair(core, u[0], u[1])
    v[0], v[1] = _rotate_pair(core, v[0], v[1])
    cores.append(core)

    cores.append(_annihilator(v[1], v[2], at + 2))
    return cores


def refine_IIe(
    pencil: StructuredPencil,
    *,
    at: Optional[int] = None,
    Q: Optional[np.ndarray] = None,
) -> SwapResidual:
    """
    One correction step after a 3x3 middle swap. With the block

        [[E11, E12, A13],
         [E21, A22, A23],
         [A31, A32, A33]]

    the linearised equations for a unit lower triangular X and its adjoint
    Y = X* are written on the block C of :func:`_equation_block`, where they
    cover the A and the B equations at once. E11 involves x31 alone and is
    solved first; substituting it, E12 and the conjugate of E21 form a 2x2
    system in ``(x32, conj(x21))``. The QR factor of X is applied as a
    congruence.

    :return: The residual after the correction.
    :raises CoincidentPolesError: If two of the three poles coincide.
    """
    at = _middle_block_start(pencil, 3) if at is None else at
    _check_block(pencil, at, 3)
    C = _equation_block(pencil, at, 3)

    x31 = _conjugate_linear_solve(C[0, 2], C[2, 0], C[0, 0])
    x32, y12 = _solve(
        C[0, 2],
        C[1, 1],
        np.conj(C[2, 0]),
        np.conj(C[1, 1]),
        -C[0, 1] - np.conj(x31) * C[2, 1],
        -np.conj(C[1, 0] + C[1, 2] * x31),
    )
    x21 = np.conj(y12)
    for core in _triangular_qr_cores((1.0, x21, x31), (0.0, 1.0, x32), at):
        apply_congruence(pencil, core, Q=Q)
    return _residual(pencil, at, 3, _IIE_ZEROS)


def move_IIe(
    pencil: StructuredPencil,
    max_refines: int = config.DEFAULT_MAX_REFINES,
    *,
    at: Optional[int] = None,
    tol_factor: float = config.MOVE_TOLERANCE_FACTOR,
    Q: Optional[np.ndarray] = None,
) -> MoveStats:
    """
    Swaps the outer two of the three middle poles of an even-dimensional
    pencil while the unpaired center pole stays in place. The 3x3 block
    starting at ``at`` reads

        [[0,   0,   a1 ],
         [0,   a2,  a21],
         [a3,  a32, a31]]

    and three cross systems give the unit lower triangular X; the QR
    factorisation of the row-flipped X, taken as three cores, is applied as
    a congruence. Refinement and acceptance follow :func:`move_IIo`.

    :return: Statistics of this move.
    :rtype: MoveStats
    :raises CoincidentPolesError: If two of the three poles coincide.
    :raises RefinementLimitError: If refinement does not reach the tolerance.
    """
    at = _middle_block_start(pencil, 3) if at is None else at
    _check_block(pencil, at, 3)
    block = slice(at, at + 3)
    M, N = pencil.A[block, block], pencil.B[block, block]

    _, minus_x21 = _solve(M[0, 2], M[1, 1], N[0, 2], N[1, 1], M[1, 2], N[1, 2])
    _, minus_x32 = _solve(M[1, 1], M[2, 0], N[1, 1], N[2, 0], M[2, 1], N[2, 1])
    x21, x32 = -minus_x21, -minus_x32
    _, minus_x31 = _solve(
        M[0, 2],
        M[2, 0],
        N[0, 2],
        N[2, 0],
        M[2, 2] + M[2, 1] * x21,
        N[2, 2] + N[2, 1] * x21,
    )
    x31 = -minus_x31
    for core in _triangular_qr_cores((x31, x21, 1.0), (x32, 1.0, 0.0), at):
        apply_congruence(pencil, core, Q=Q)
    return _accept_middle_swap(
        pencil, MOVE_IIE, at, refine_IIe, _IIE_ZEROS, 3, max_refines, tol_factor, Q
    )
