import cmath
import dataclasses
import enum
import math
from typing import List, Optional, Tuple, Union

import numpy as np

from pole_swap import config
from pole_swap.exception import (
    DimensionError,
    DomainError,
    ShapeError,
    SingularPoleError,
    StructureError,
)
from pole_swap.logging_config import get_library_logger

logger = get_library_logger()


class StructureKind(str, enum.Enum):
    PALINDROMIC = config.STRUCTURE_PALINDROMIC
    ALTERNATING = config.STRUCTURE_ALTERNATING

    @classmethod
    def parse(cls, value: Union[str, "StructureKind"]) -> "StructureKind":
        """
        Converts a user supplied name (case-insensitive) to a StructureKind.

        :raises StructureError: If the name is not a known structure.
        """
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError as e:
            raise StructureError(f"Unknown pencil structure '{value}'") from e


@dataclasses.dataclass(frozen=True, eq=False)
class HomogeneousValue:
    """
    A point of the complex projective line stored as a pair (alpha, beta)
    standing for alpha / beta. Infinity is (alpha, 0); no division happens
    unless a caller asks for :meth:`to_complex`.

    Equality is projective: two values are equal when
    ``alpha * other.beta - other.alpha * beta`` is exactly zero. Instances are
    therefore not hashable.
    """

    alpha: complex
    beta: complex = 1.0

    def __post_init__(self):
        alpha, beta = complex(self.alpha), complex(self.beta)
        if not (cmath.isfinite(alpha) and cmath.isfinite(beta)):
            raise DomainError("Homogeneous components must be finite")
        if alpha == 0 and beta == 0:
            raise DomainError("Homogeneous value needs a nonzero component")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    __hash__ = None

    def __eq__(self, other):
        if not isinstance(other, HomogeneousValue):
            return NotImplemented
        return self.alpha * other.beta - other.alpha * self.beta == 0

    def __repr__(self):
        return f"HomogeneousValue(alpha={self.alpha!r}, beta={self.beta!r})"

    @classmethod
    def from_complex(cls, value: complex) -> "HomogeneousValue":
        if cmath.isinf(complex(value)):
            return cls(1.0, 0.0)
        return cls(value, 1.0)

    @property
    def is_infinite(self) -> bool:
        return self.beta == 0

    def norm(self) -> float:
        return math.hypot(abs(self.alpha), abs(self.beta))

    def to_complex(self) -> complex:
        if self.is_infinite:
            return complex(math.inf, 0.0)
        return self.alpha / self.beta

    def normalized(self) -> "HomogeneousValue":
        """
        Scales to unit 2-norm with beta real and nonnegative (alpha real
        positive for infinity), which makes representatives comparable.
        """
        anchor = self.beta if self.beta != 0 else self.alpha
        phase = anchor / abs(anchor)
        scale = self.norm() * phase
        return HomogeneousValue(self.alpha / scale, self.beta / scale)

    def companion(self, kind: "StructureKind") -> "HomogeneousValue":
        """
        The mirror value imposed by the pencil structure, computed without
        division: 1/conj(z) for palindromic, -conj(z) for alternating pencils.
        """
        if StructureKind.parse(kind) is StructureKind.PALINDROMIC:
            return HomogeneousValue(self.beta.conjugate(), self.alpha.conjugate())
        return HomogeneousValue(-self.alpha.conjugate(), self.beta.conjugate())


INFINITY = HomogeneousValue(1.0, 0.0)


def chordal_distance(x: HomogeneousValue, y: HomogeneousValue) -> float:
    """
    Chordal distance between two points of the projective line. Zero iff the
    values are projectively equal; 0 and infinity are at distance 1.
    """
    cross = abs(x.alpha * y.beta - y.alpha * x.beta)
    return min(1.0, cross / (x.norm() * y.norm()))


def anti_hessenberg_mask(n: int) -> np.ndarray:
    """
    Boolean mask of the entries an n x n anti-Hessenberg matrix may hold:
    everything on or below the first superanti-diagonal, i.e. ``i + j >= n - 2``
    with 0-based indices.
    """
    index = np.arange(n)
    return np.add.outer(index, index) >= n - 2


@dataclasses.dataclass(frozen=True)
class ActiveWindow:
    """
    Principal subpencil rows/columns ``lo .. lo + size - 1`` of a larger
    pencil. A window of a deflated structured pencil is again a structured
    anti-Hessenberg pencil, so poles and cores are numbered locally.
    """

    lo: int
    size: int

    @classmethod
    def full(cls, n: int) -> "ActiveWindow":
        return cls(lo=0, size=n)

    @property
    def stop(self) -> int:
        return self.lo + self.size

    @property
    def span(self) -> slice:
        return slice(self.lo, self.stop)

    def pole_position(self, k: int) -> Tuple[int, int]:
        """
        Global 0-based position of local pole k (1-based), the entry
        ``(size - k, k)`` of the window in 1-based notation.
        """
        if not 1 <= k <= self.size - 1:
            raise IndexError(f"Pole index {k} outside 1..{self.size - 1}")
        return self.lo + self.size - k - 1, self.lo + k - 1

    def core_index(self, j: int) -> int:
        """Global 1-based index of the local core j."""
        if not 1 <= j <= self.size - 1:
            raise IndexError(f"Core index {j} outside 1..{self.size - 1}")
        return self.lo + j

    @property
    def lower_left(self) -> Tuple[int, int]:
        return self.stop - 1, self.lo

    @property
    def upper_right(self) -> Tuple[int, int]:
        return self.lo, self.stop - 1

    def shrink(self) -> "ActiveWindow":
        return ActiveWindow(lo=self.lo + 1, size=self.size - 2)


@dataclasses.dataclass(kw_only=True, eq=False)
class StructuredPencil:
    """
    A dense complex pair (A, B) in anti-Hessenberg form carrying its
    structure tag. Both matrices are kept concrete, also for palindromic
    pencils where B is the exact conjugate transpose of A. Moves rotate both
    and then restore the structure on the rows and columns they touched, so
    :func:`validate` only sees drift from direct edits.

    :ivar A: The n x n complex matrix A.
    :type A: numpy.ndarray
    :ivar B: The n x n complex matrix B.
    :type B: numpy.ndarray
    :ivar kind: Palindromic (A* = B) or alternating (A* = A, B* = -B).
    :type kind: StructureKind
    """

    A: np.ndarray
    B: np.ndarray
    kind: StructureKind

    def __post_init__(self):
        self.A = np.array(self.A, dtype=np.complex128)
        self.B = np.array(self.B, dtype=np.complex128)
        self.kind = StructureKind.parse(self.kind)
        if self.A.ndim != 2 or self.A.shape[0] != self.A.shape[1]:
            raise ShapeError(f"A must be a square matrix, got shape {self.A.shape}")
        if self.B.shape != self.A.shape:
            raise ShapeError(
                f"A and B must have the same shape, got {self.A.shape} "
                f"and {self.B.shape}"
            )
        if self.A.shape[0] == 0:
            raise DimensionError("A pencil needs at least one row")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def copy(self) -> "StructuredPencil":
        return StructuredPencil(A=self.A.copy(), B=self.B.copy(), kind=self.kind)

    def norms(self) -> Tuple[float, float]:
        return float(np.linalg.norm(self.A)), float(np.linalg.norm(self.B))

    def structure_tolerance(self) -> float:
        return config.STRUCTURE_TOLERANCE_FACTOR * config.EPS * max(self.norms())


@dataclasses.dataclass(kw_only=True)
class PencilReport:
    max_shape_violation: float
    max_structure_violation: float
    pole_symmetry_violation: float
    middle_pole_violation: float

    def is_valid(self, tolerance: float, pole_tolerance: float = 1e-12) -> bool:
        return (
            self.max_shape_violation <= tolerance
            and self.max_structure_violation <= tolerance
            and self.pole_symmetry_violation <= pole_tolerance
            and self.middle_pole_violation <= pole_tolerance
        )


def _shape_violation(pencil: StructuredPencil) -> float:
    outside = ~anti_hessenberg_mask(pencil.n)
    if not outside.any():
        return 0.0
    return float(max(np.abs(pencil.A[outside]).max(), np.abs(pencil.B[outside]).max()))


def _structure_violation(pencil: StructuredPencil) -> float:
    A, B = pencil.A, pencil.B
    if pencil.kind is StructureKind.PALINDROMIC:
        return float(np.abs(A - B.conj().T).max())
    return float(max(np.abs(A - A.conj().T).max(), np.abs(B + B.conj().T).max()))


def entry_value(pencil: StructuredPencil, i: int, j: int) -> HomogeneousValue:
    """
    The pair ``(A[i, j], B[i, j])`` (0-based) as a homogeneous value.

    :raises SingularPoleError: If both entries are exactly zero.
    """
    a, b = pencil.A[i, j], pencil.B[i, j]
    if a == 0 and b == 0:
        raise SingularPoleError(f"Entries at ({i}, {j}) of A and B both vanish")
    return HomogeneousValue(a, b)


def pole_at(
    pencil: StructuredPencil, k: int, window: Optional[ActiveWindow] = None
) -> HomogeneousValue:
    """
    Returns pole k as the pair ``(a_{n-k,k}, b_{n-k,k})`` (1-based position),
    measured inside ``window`` when given.

    :raises IndexError: If k is outside 1..n-1.
    :raises SingularPoleError: If ``|a| + |b|`` is within the structural
        tolerance of the pencil, i.e. the pencil splits at this pole.
    """
    window = window or ActiveWindow.full(pencil.n)
    i, j = window.pole_position(k)
    a, b = pencil.A[i, j], pencil.B[i, j]
    if abs(a) + abs(b) <= pencil.structure_tolerance():
        raise SingularPoleError(
            f"Pole {k} at ({i}, {j}) is negligible: |a| + |b| = {abs(a) + abs(b):.3e}"
        )
    return HomogeneousValue(a, b)


def anti_diagonal(
    pencil: StructuredPencil, window: Optional[ActiveWindow] = None
) -> List[HomogeneousValue]:
    """
    Ratios of the anti-diagonal entries ordered by column. For an
    anti-triangular pencil these are its eigenvalues; for the stress blocks
    they are the poles being swapped.
    """
    window = window or ActiveWindow.full(pencil.n)
    return [
        entry_value(pencil, window.stop - 1 - c, window.lo + c)
        for c in range(window.size)
    ]


def _check_shape(pencil: StructuredPencil):
    if (violation := _shape_violation(pencil)) > 0:
        raise ShapeError(
            f"Pencil is not anti-Hessenberg: entry of size {violation:.3e} "
            "above the first superanti-diagonal"
        )


def new_structured_pair(
    A, B, kind: Union[str, StructureKind] = StructureKind.ALTERNATING
) -> StructuredPencil:
    """
    Builds a structured pencil from both matrices, checking the anti-Hessenberg
    shape and the structure relation of ``kind`` within the structural
    tolerance.

    :raises ShapeError: If either matrix has nonzeros above the
        superanti-diagonal.
    :raises StructureError: If the structure relation does not hold.
    """
    pencil = StructuredPencil(A=A, B=B, kind=kind)
    _check_shape(pencil)
    violation = _structure_violation(pencil)
    if violation > pencil.structure_tolerance():
        raise StructureError(
            f"Pair is not {pencil.kind.value}: structure violation {violation:.3e}"
        )
    return pencil


def new_structured(
    A, kind: Union[str, StructureKind] = StructureKind.PALINDROMIC, B=None
) -> StructuredPencil:
    """
    Builds a structured pencil. For palindromic pencils B is the exact
    conjugate transpose of A and need not be supplied; alternating pencils
    need both matrices.

    :param A: Square complex anti-Hessenberg matrix.
    :param kind: Structure of the pencil.
    :param B: The second matrix, required for alternating pencils.
    :return: The validated pencil.
    :rtype: StructuredPencil
    :raises ShapeError: If A is not anti-Hessenberg.
    :raises StructureError: If an alternating pencil lacks B or the pair is
        not structured.
    """
    kind = StructureKind.parse(kind)
    if B is not None:
        return new_structured_pair(A, B, kind)
    if kind is StructureKind.ALTERNATING:
        raise StructureError("Alternating pencils need both A and B")
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2:
        raise ShapeError(f"A must be a square matrix, got shape {A.shape}")
    pencil = StructuredPencil(A=A, B=A.conj().T, kind=kind)
    _check_shape(pencil)
    return pencil


def validate(pencil: StructuredPencil) -> PencilReport:
    """
    Measures how far a pencil is from the structured anti-Hessenberg
    contract. Nothing is modified.

    Pole symmetry is the largest chordal distance between pole k and the
    companion of pole n-k; a pole with both entries zero counts as the maximal
    violation 1. The middle pole check only applies to even n.
    """
    n = pencil.n
    symmetry = 0.0
    poles = {}
    for k in range(1, n):
        i, j = ActiveWindow.full(n).pole_position(k)
        a, b = pencil.A[i, j], pencil.B[i, j]
        poles[k] = None if a == 0 and b == 0 else HomogeneousValue(a, b)
    for k in range(1, n):
        pole, mirror = poles[k], poles[n - k]
        if pole is None or mirror is None:
            symmetry = 1.0
            break
        symmetry = max(
            symmetry, chordal_distance(pole, mirror.companion(pencil.kind))
        )

    middle = 0.0
    if n % 2 == 0 and (pole := poles.get(n // 2)) is not None:
        if pencil.kind is StructureKind.PALINDROMIC:
            middle = abs(abs(pole.alpha) - abs(pole.beta)) / pole.norm()
        else:
            middle = abs((pole.alpha * pole.beta.conjugate()).real) / pole.norm() ** 2

    return PencilReport(
        max_shape_violation=_shape_violation(pencil),
        max_structure_violation=_structure_violation(pencil),
        pole_symmetry_violation=symmetry,
        middle_pole_violation=middle,
    )


def cayley(pencil: StructuredPencil) -> StructuredPencil:
    """
    Maps a palindromic pair (A, B) to the alternating pair (A + B, A - B).
    Eigenvalues move by mu -> (mu + 1) / (mu - 1).

    :raises StructureError: If the input is not a palindromic pencil.
    """
    if pencil.kind is not StructureKind.PALINDROMIC:
        raise StructureError("Cayley transform expects a palindromic pencil")
    violation = _structure_violation(pencil)
    if violation > pencil.structure_tolerance():
        raise StructureError(
            f"Pair is not palindromic: structure violation {violation:.3e}"
        )
    return StructuredPencil(
        A=pencil.A + pencil.B,
        B=pencil.A - pencil.B,
        kind=StructureKind.ALTERNATING,
    )


def gen_random_palindromic(n: int, seed: int) -> StructuredPencil:
    """
    Random palindromic anti-Hessenberg pencil A - lambda A*. Every structurally
    nonzero entry is ``2a + bi`` with a, b standard normal. The generator draws
    the real parts of a full n x n grid first, then the imaginary parts, and
    discards the entries above the superanti-diagonal.

    :raises DimensionError: If n < 2.
    """
    if n < 2:
        raise DimensionError(f"Random pencils need n >= 2, got {n}")
    rng = np.random.default_rng(seed)
    real = rng.standard_normal((n, n))
    imag = rng.standard_normal((n, n))
    A = np.where(anti_hessenberg_mask(n), 2.0 * real + 1j * imag, 0.0)
    return new_structured(A, StructureKind.PALINDROMIC)


def gen_random_alternating(n: int, seed: int) -> StructuredPencil:
    return cayley(gen_random_palindromic(n, seed))


def _stress_entries(rng: np.random.Generator, count: int) -> List[complex]:
    # per entry: two exponents, then two sign bits
    low, high = config.STRESS_EXPONENT_RANGE
    entries = []
    for _ in range(count):
        t1, t2 = rng.uniform(low, high, size=2)
        s1, s2 = rng.choice((-1.0, 1.0), size=2)
        entries.append(complex(s1 * 10.0**t1, s2 * 10.0**t2))
    return entries


def _check_gap(g: float):
    if not (math.isfinite(g) and g > 0):
        raise DomainError(f"Gap parameter must be a positive real, got {g}")


def stress_2x2_pencil(a: complex, c: complex, g: float) -> StructuredPencil:
    _check_gap(g)
    A = np.array([[0.0, a], [a * (1.0 + g), c]], dtype=np.complex128)
    return new_structured(A, StructureKind.PALINDROMIC)


def stress_3x3_pencil(
    a: complex, b: complex, c: complex, d: complex, e: complex, g: float
) -> StructuredPencil:
    _check_gap(g)
    A = np.array(
        [[0.0, 0.0, a], [0.0, b, c], [a * (1.0 + g), d, e]], dtype=np.complex128
    )
    return new_structured(A, StructureKind.PALINDROMIC)


def gen_stress_2x2(g: float, seed: int) -> StructuredPencil:
    """
    Palindromic block ``[[0, a], [a(1 + g), c]]`` whose anti-diagonal poles
    have relative gap controlled by g. Entries are ``s1 10^t1 + s2 i 10^t2``
    with t uniform on [-15, 0] and random signs.

    :raises DomainError: If g is not a positive real.
    """
    _check_gap(g)
    a, c = _stress_entries(np.random.default_rng(seed), 2)
    return stress_2x2_pencil(a, c, g)


def gen_stress_3x3(g: float, seed: int) -> StructuredPencil:
    """
    Palindromic block ``[[0, 0, a], [0, b, c], [a(1 + g), d, e]]``; the middle
    anti-diagonal ratio b / conj(b) is unimodular by construction.

    :raises DomainError: If g is not a positive real.
    """
    _check_gap(g)
    a, b, c, d, e = _stress_entries(np.random.default_rng(seed), 5)
    return stress_3x3_pencil(a, b, c, d, e, g)
