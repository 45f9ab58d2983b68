import cmath
import dataclasses
import math
from typing import Iterator, List, Optional, Tuple

import numpy as np
import scipy.linalg

from pole_swap import config
from pole_swap.exception import (
    CoincidentPolesError,
    ConvergenceError,
    DegeneratePencilError,
    DegenerateShiftError,
    DimensionError,
    DomainError,
    GuardError,
    SingularPoleError,
)
from pole_swap.logging_config import get_library_logger
from pole_swap.moves import (
    MOVE_I,
    MOVE_II,
    MoveStats,
    apply_congruence,
    move_I,
    move_II,
    move_IIe,
    move_IIo,
    rotation_from_vector,
)
from pole_swap.pencil import (
    ActiveWindow,
    HomogeneousValue,
    StructuredPencil,
    StructureKind,
    chordal_distance,
    entry_value,
    pole_at,
)
from pole_swap.verify import backward_error

logger = get_library_logger()


@dataclasses.dataclass(frozen=True, kw_only=True)
class ShiftPair:
    """
    A shift and its structural companion, which the sweep introduces at the
    opposite edge of the pencil.
    """

    rho: HomogeneousValue
    rho_tilde: HomogeneousValue
    kind: StructureKind

    @classmethod
    def from_shift(cls, rho: HomogeneousValue, kind) -> "ShiftPair":
        kind = StructureKind.parse(kind)
        return cls(rho=rho, rho_tilde=rho.companion(kind), kind=kind)


@dataclasses.dataclass(kw_only=True)
class SolverOptions:
    deflation_tolerance_factor: float = config.DEFAULT_DEFLATION_TOLERANCE_FACTOR
    max_iterations_per_deflation: int = config.DEFAULT_MAX_ITERATIONS_PER_DEFLATION
    shift_guard_gap: float = config.DEFAULT_SHIFT_GUARD_GAP
    accumulate_Q: bool = False
    max_refines: int = config.DEFAULT_MAX_REFINES
    shift_strategy: config.SHIFT_STRATEGY_TYPE = config.DEFAULT_SHIFT_STRATEGY
    tol_factor: float = config.MOVE_TOLERANCE_FACTOR
    seed: int = 0

    def __post_init__(self):
        if self.deflation_tolerance_factor <= 0 or self.tol_factor <= 0:
            raise DomainError("Tolerance factors must be positive")
        if self.max_iterations_per_deflation < 1:
            raise DomainError("max_iterations_per_deflation must be at least 1")
        if self.max_refines < 0:
            raise DomainError("max_refines must be nonnegative")
        if not 0 < self.shift_guard_gap < 1:
            raise DomainError(
                f"shift_guard_gap must lie in (0, 1), got {self.shift_guard_gap}"
            )
        if self.shift_strategy not in (
            config.SHIFT_STRATEGY_WILKINSON,
            config.SHIFT_STRATEGY_RAYLEIGH,
        ):
            raise DomainError(f"Unknown shift strategy '{self.shift_strategy}'")

    @classmethod
    def from_config(cls, **overrides) -> "SolverOptions":
        """
        Options from :func:`pole_swap.config.get_solver_config`, i.e. the
        defaults with environment overrides applied, then ``overrides``.
        """
        values = config.get_solver_config()
        values.update(overrides)
        return cls(**values)


@dataclasses.dataclass(frozen=True, kw_only=True)
class Deflation:
    eigenvalue: HomogeneousValue
    companion: HomogeneousValue
    columns: Tuple[int, int]
    window: ActiveWindow


@dataclasses.dataclass(kw_only=True)
class SolveReport:
    """
    Result of :func:`solve`.

    :ivar eigenvalues: All n eigenvalues, entry c belonging to anti-diagonal
        column c of the final pencil.
    :ivar pair_ids: Shared id of the two columns of a companion pair; a
        self-paired eigenvalue has an id of its own.
    :ivar companion_index: Column of each eigenvalue's companion (itself when
        self-paired).
    :ivar S_A: Final matrix Q* A Q.
    :ivar S_B: Final matrix Q* B Q.
    :ivar Q: Accumulated unitary, when requested.
    :ivar backward_error: ``||Q* A Q - S||_F / ||A||_F``, the larger of the A
        and B values; only set when Q was accumulated.
    """

    eigenvalues: List[HomogeneousValue]
    pair_ids: List[int]
    companion_index: List[int]
    S_A: np.ndarray
    S_B: np.ndarray
    Q: Optional[np.ndarray] = None
    stats: MoveStats = dataclasses.field(default_factory=MoveStats)
    iterations: int = 0
    deflations: List[Deflation] = dataclasses.field(default_factory=list)
    backward_error: Optional[float] = None

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def pairs(self) -> Iterator[Tuple[HomogeneousValue, HomogeneousValue]]:
        seen = set()
        for column, value in enumerate(self.eigenvalues):
            if self.pair_ids[column] in seen:
                continue
            seen.add(self.pair_ids[column])
            yield value, self.eigenvalues[self.companion_index[column]]


def _window(pencil: StructuredPencil, window: Optional[ActiveWindow]):
    return window or ActiveWindow.full(pencil.n)


def _lexicographic_key(value: HomogeneousValue) -> Tuple[float, float]:
    z = value.to_complex()
    return (math.inf, 0.0) if value.is_infinite else (z.real, z.imag)


def _quadratic_roots(
    c2: complex, c1: complex, c0: complex
) -> Tuple[HomogeneousValue, HomogeneousValue]:
    """
    Roots of ``c2 alpha^2 + c1 alpha beta + c0 beta^2`` in homogeneous form.
    The larger of ``c1 +- sqrt(disc)`` is formed first and the second root
    follows from the product of the roots, so nothing cancels.
    """
    if c2 == 0 and c1 == 0 and c0 == 0:
        raise DegeneratePencilError("Determinant of the 2x2 subpencil vanishes")
    root = cmath.sqrt(c1 * c1 - 4 * c2 * c0)
    sign = 1.0 if (c1.conjugate() * root).real >= 0 else -1.0
    q = -(c1 + sign * root) / 2
    if q == 0:
        # c1 = 0 and c2 c0 = 0: a double root at 0 or at infinity
        double = HomogeneousValue(0.0, 1.0) if c0 == 0 else HomogeneousValue(1.0, 0.0)
        return double, double
    return HomogeneousValue(q, c2), HomogeneousValue(c0, q)


def _block_roots(
    A2: np.ndarray, B2: np.ndarray
) -> Tuple[HomogeneousValue, HomogeneousValue]:
    """Both roots of ``det(beta A2 - alpha B2) = 0``."""
    a11, a12, a21, a22 = (complex(value) for value in A2.ravel())
    b11, b12, b21, b22 = (complex(value) for value in B2.ravel())
    c2 = b11 * b22 - b12 * b21
    c1 = -(a11 * b22 + a22 * b11 - a12 * b21 - a21 * b12)
    c0 = a11 * a22 - a12 * a21
    return _quadratic_roots(c2, c1, c0)


def rayleigh_shift(
    pencil: StructuredPencil, window: Optional[ActiveWindow] = None
) -> HomogeneousValue:
    """
    The upper right corner ``(a_{1,n}, b_{1,n})`` of the window.

    :raises SingularPoleError: If both corner entries are exactly zero.
    """
    window = _window(pencil, window)
    return entry_value(pencil, *window.upper_right)


def wilkinson_shift(
    pencil: StructuredPencil, window: Optional[ActiveWindow] = None
) -> HomogeneousValue:
    """
    The eigenvalue of the upper right 2x2 corner subpencil (window rows 1-2,
    columns n-1 and n) closer in chordal distance to the Rayleigh shift. Equal
    distances are broken by the smaller (Re, Im).

    :raises DimensionError: If the window is smaller than 2.
    :raises DegeneratePencilError: If the corner determinant vanishes
        identically.
    """
    window = _window(pencil, window)
    if window.size < 2:
        raise DimensionError("Wilkinson shifts need a window of size >= 2")
    rows = slice(window.lo, window.lo + 2)
    cols = slice(window.stop - 2, window.stop)
    first, second = _block_roots(pencil.A[rows, cols], pencil.B[rows, cols])
    target = rayleigh_shift(pencil, window)
    d1, d2 = chordal_distance(first, target), chordal_distance(second, target)
    if d1 < d2:
        return first
    if d2 < d1:
        return second
    return min(first, second, key=_lexicographic_key)


def select_shift(
    pencil: StructuredPencil,
    options: SolverOptions,
    window: Optional[ActiveWindow] = None,
) -> HomogeneousValue:
    if options.shift_strategy == config.SHIFT_STRATEGY_RAYLEIGH:
        return rayleigh_shift(pencil, window)
    try:
        return wilkinson_shift(pencil, window)
    except DegeneratePencilError:
        logger.warning(
            "Falling back to Rayleigh shift",
            extra={"window": _window(pencil, window).size},
        )
        return rayleigh_shift(pencil, window)


def guard_shift(
    pair: ShiftPair, gap: float = config.DEFAULT_SHIFT_GUARD_GAP
) -> ShiftPair:
    """
    Moves a shift off the set of its own companions. Palindromic shifts with
    ``| |rho| - 1 | < gap`` get modulus ``1 + gap`` (or ``1 - gap`` when
    inside the circle) with the argument kept; alternating shifts with
    ``|Re rho| < gap |rho|`` get real part ``+-gap |rho|``, positive when the
    real part is zero.

    :raises GuardError: If an alternating shift is 0 or infinity, which no
        real part adjustment can separate from its companion.
    """
    rho = pair.rho
    if pair.kind is StructureKind.PALINDROMIC:
        if rho.alpha == 0 or rho.beta == 0:
            return pair
        modulus = abs(rho.alpha) / abs(rho.beta)
        if abs(modulus - 1.0) >= gap:
            return pair
        # rounding of a point on the circle counts as on the circle: push out
        inside = modulus < 1.0 - 4 * config.EPS
        target = 1.0 - gap if inside else 1.0 + gap
        direction = rho.alpha / abs(rho.alpha) * rho.beta.conjugate() / abs(rho.beta)
        guarded = HomogeneousValue(target * direction, 1.0)
    else:
        if rho.alpha == 0 or rho.beta == 0:
            raise GuardError(f"Shift {rho!r} is its own companion on every side")
        z = rho.to_complex()
        if abs(z.real) >= gap * abs(z):
            return pair
        guarded = HomogeneousValue(complex(math.copysign(gap * abs(z), z.real), z.imag))
    logger.debug(
        "Shift guarded",
        extra={"kind": pair.kind.value, "gap": gap},
    )
    return ShiftPair.from_shift(guarded, pair.kind)


def _random_shift(options: SolverOptions, iterations: int) -> HomogeneousValue:
    rng = np.random.default_rng([options.seed, iterations])
    real, imag = rng.standard_normal(2)
    return HomogeneousValue(complex(real, imag))


def iterate_once(
    pencil: StructuredPencil,
    pair: ShiftPair,
    options: Optional[SolverOptions] = None,
    *,
    window: Optional[ActiveWindow] = None,
    Q: Optional[np.ndarray] = None,
    stats: Optional[MoveStats] = None,
) -> MoveStats:
    """
    One shifted sweep on the window. ``rho`` is inserted as pole 1 by a type I
    move (which puts ``rho_tilde`` at the last pole), both are chased to the
    middle by type II moves, exchanged by the middle move (IIo for odd, IIe
    for even window size, which leaves the center pole in place), chased back
    out and removed by a type I move that reinserts the original pole 1.

    For a window of size m this is ``m - 3`` (odd) or ``m - 4`` (even) type II
    moves, one middle move and two type I moves.

    :param stats: Counters to record the moves in as they happen, so a sweep
        that raises halfway still accounts for the moves it made.
    :return: The statistics, ``stats`` when given.
    :rtype: MoveStats
    :raises DimensionError: If the window is smaller than 3.
    :raises CoincidentPolesError: If rho coincides with its companion or with
        a pole it passes.
    :raises RefinementLimitError: If the middle move cannot be refined to
        tolerance.
    """
    options = options or SolverOptions()
    window = _window(pencil, window)
    m = window.size
    if m < 3:
        raise DimensionError(f"A sweep needs a window of size >= 3, got {m}")
    if chordal_distance(pair.rho, pair.rho_tilde) <= config.COINCIDENT_POLE_TOLERANCE:
        raise CoincidentPolesError("Shift coincides with its companion")

    sigma = pole_at(pencil, 1, window)
    stats = MoveStats() if stats is None else stats
    start = stats.move_count
    move_I(pencil, pair.rho, window=window, Q=Q)
    stats.record_move(MOVE_I)

    half = m // 2
    inward = range(2, half + 1) if m % 2 else range(2, half)
    for k in inward:
        move_II(pencil, k, window=window, Q=Q)
        stats.record_move(MOVE_II)

    if m % 2:
        middle, at = move_IIo, window.lo + (m - 3) // 2
    else:
        middle, at = move_IIe, window.lo + half - 2
    stats += middle(
        pencil, options.max_refines, at=at, tol_factor=options.tol_factor, Q=Q
    )

    for k in range(half + 2, m):
        move_II(pencil, k, window=window, Q=Q)
        stats.record_move(MOVE_II)
    move_I(pencil, sigma, window=window, Q=Q)
    stats.record_move(MOVE_I)

    logger.debug(
        "Sweep finished",
        extra={"window": m, "lo": window.lo, "moves": stats.move_count - start},
    )
    return stats


def try_deflate(
    pencil: StructuredPencil,
    options: Optional[SolverOptions] = None,
    *,
    window: Optional[ActiveWindow] = None,
    scale: Optional[Tuple[float, float]] = None,
) -> Optional[Deflation]:
    """
    Splits off the eigenvalue pair at the window corners when the lower left
    pole entries are negligible: ``|a| <= f eps ||A||_F`` and
    ``|b| <= f eps ||B||_F``. The four coupling entries are set to zero, the
    eigenvalue is read from the lower left corner and its companion is
    constructed from it, so the pair relation holds exactly.

    :param scale: Norms ``(||A||_F, ||B||_F)`` to measure against, normally
        those of the input pencil; the current norms when omitted.
    :return: The deflated pair with the shrunk window, or None.
    """
    options = options or SolverOptions()
    window = _window(pencil, window)
    if window.size < 3:
        return None
    norm_A, norm_B = scale or pencil.norms()
    tolerance = options.deflation_tolerance_factor * config.EPS
    i, j = window.pole_position(1)
    A, B = pencil.A, pencil.B
    if abs(A[i, j]) > tolerance * norm_A or abs(B[i, j]) > tolerance * norm_B:
        return None
    for r, c in ((i, j), (j, i)):
        A[r, c] = 0.0
        B[r, c] = 0.0
    eigenvalue = entry_value(pencil, *window.lower_left)
    logger.info(
        "Eigenvalue pair deflated", extra={"lo": window.lo, "window": window.size}
    )
    return Deflation(
        eigenvalue=eigenvalue,
        companion=eigenvalue.companion(pencil.kind),
        columns=(window.lo, window.stop - 1),
        window=window.shrink(),
    )


def _project_self_companion(value: HomogeneousValue, kind: StructureKind):
    """Nearest point of the unit circle (palindromic) or imaginary axis."""
    alpha, beta = value.alpha, value.beta
    if kind is StructureKind.PALINDROMIC:
        if alpha == 0 or beta == 0:
            raise SingularPoleError(f"{value!r} has no projection onto the unit circle")
        return HomogeneousValue(alpha / abs(alpha), beta / abs(beta))
    if beta == 0:
        return HomogeneousValue(1.0, 0.0)
    return HomogeneousValue(1j * (alpha * beta.conjugate()).imag, abs(beta) ** 2)


def _self_companion_distance(value: HomogeneousValue, kind: StructureKind) -> float:
    return chordal_distance(value, value.companion(kind))


def _terminal_1x1(pencil: StructuredPencil, lo: int) -> HomogeneousValue:
    a, b = complex(pencil.A[lo, lo]), complex(pencil.B[lo, lo])
    if a == 0 and b == 0:
        raise SingularPoleError(f"Entries at ({lo}, {lo}) of A and B both vanish")
    if pencil.kind is StructureKind.PALINDROMIC:
        return HomogeneousValue(a, a.conjugate())
    if a.real == 0 and b.imag == 0:
        raise SingularPoleError(f"Entries at ({lo}, {lo}) of A and B both vanish")
    return HomogeneousValue(a.real, 1j * b.imag)


def _null_vector(M: np.ndarray) -> Tuple[complex, complex]:
    first = (-M[0, 1], M[0, 0])
    second = (M[1, 1], -M[1, 0])
    if math.hypot(*map(abs, second)) > math.hypot(*map(abs, first)):
        first = second
    if first[0] == 0 and first[1] == 0:
        return 1.0, 0.0
    return first


def _terminal_2x2(
    pencil: StructuredPencil, lo: int, Q: Optional[np.ndarray]
) -> Tuple[HomogeneousValue, HomogeneousValue, bool]:
    """
    Last 2x2 window. A companion pair is split by one congruence whose first
    column is the eigenvector of the root kept at the lower left (inside the
    unit circle, resp. left half plane); two self-companion roots are
    projected onto the circle (axis) and the block is left as it is.

    :return: Lower left value, upper right value and whether they form a
        companion pair.
    """
    block = slice(lo, lo + 2)
    first, second = _block_roots(pencil.A[block, block], pencil.B[block, block])
    kind = pencil.kind
    pair_gap = chordal_distance(second, first.companion(kind))
    self_gap = max(
        _self_companion_distance(first, kind), _self_companion_distance(second, kind)
    )
    if self_gap <= pair_gap:
        first, second = sorted(
            (
                _project_self_companion(first, kind),
                _project_self_companion(second, kind),
            ),
            key=_lexicographic_key,
        )
        return first, second, False

    def inner(value: HomogeneousValue) -> bool:
        if kind is StructureKind.PALINDROMIC:
            return abs(value.alpha) < abs(value.beta)
        return (value.alpha * value.beta.conjugate()).real < 0

    root = first if inner(first) or not inner(second) else second
    M = root.beta * pencil.A[block, block] - root.alpha * pencil.B[block, block]
    apply_congruence(pencil, rotation_from_vector(_null_vector(M), lo + 1), Q=Q)
    pencil.A[lo, lo] = 0.0
    pencil.B[lo, lo] = 0.0
    eigenvalue = entry_value(pencil, lo + 1, lo)
    return eigenvalue, eigenvalue.companion(kind), True


def _window_spectrum(
    pencil: StructuredPencil, window: ActiveWindow
) -> Optional[List[HomogeneousValue]]:
    """Eigenvalues of the window subpencil; None if it looks singular."""
    block = window.span
    alpha, beta = scipy.linalg.eigvals(
        pencil.A[block, block], pencil.B[block, block], homogeneous_eigvals=True
    )
    if any(a == 0 and b == 0 for a, b in zip(alpha, beta)):
        return None
    return [HomogeneousValue(a, b) for a, b in zip(alpha, beta)]


def _self_companion_cluster(
    spectrum: List[HomogeneousValue], kind: StructureKind
) -> Optional[List[HomogeneousValue]]:
    """
    The spectrum of a stalled window projected onto the unit circle
    (imaginary axis) when all of it lies there; None otherwise.
    """
    if any(
        _self_companion_distance(value, kind) > config.SELF_COMPANION_TOLERANCE
        for value in spectrum
    ):
        return None
    return sorted(
        (_project_self_companion(value, kind) for value in spectrum),
        key=_lexicographic_key,
    )


def _exceptional_pair(
    spectrum: Optional[List[HomogeneousValue]],
    options: SolverOptions,
    iterations: int,
    kind: StructureKind,
    spectral: bool,
) -> Tuple[ShiftPair, str]:
    """
    Shift for a stalled window: the window eigenvalue farthest from its own
    companion, guarded only against coinciding with it, or a random shift
    seeded from ``(seed, iterations)``.
    """
    if spectral and spectrum:
        value = max(spectrum, key=lambda v: _self_companion_distance(v, kind))
        gap = min(options.shift_guard_gap, config.EXCEPTIONAL_SHIFT_GUARD_GAP)
        try:
            return guard_shift(ShiftPair.from_shift(value, kind), gap), "spectrum"
        except GuardError:
            pass
    shift = _random_shift(options, iterations)
    pair = guard_shift(ShiftPair.from_shift(shift, kind), options.shift_guard_gap)
    return pair, "random"


class _Spectrum:
    """Column-indexed eigenvalue bookkeeping while solving."""

    def __init__(self, n: int):
        self.eigenvalues: List[Optional[HomogeneousValue]] = [None] * n
        self.pair_ids: List[int] = [0] * n
        self.companion_index: List[int] = list(range(n))
        self._next_id = 0

    def add_pair(self, left: int, value, right: int, companion):
        self.eigenvalues[left], self.eigenvalues[right] = value, companion
        self.pair_ids[left] = self.pair_ids[right] = self._next_id
        self.companion_index[left], self.companion_index[right] = right, left
        self._next_id += 1

    def add_single(self, column: int, value):
        self.eigenvalues[column] = value
        self.pair_ids[column] = self._next_id
        self.companion_index[column] = column
        self._next_id += 1


def solve(
    pencil: StructuredPencil, options: Optional[SolverOptions] = None
) -> SolveReport:
    """
    Computes all eigenvalues of a structured anti-Hessenberg pencil by
    repeated shifted sweeps with deflation at the window corners.

    The input pencil is not modified. Each window is swept until its lower
    left pole entries become negligible; eigenvalues on the unit circle
    (imaginary axis) cannot be split off at the corners and are reported from
    the final 1x1 or 2x2 window, or as a projected cluster when a window of
    only such eigenvalues stalls.

    Every ``EXCEPTIONAL_SHIFT_PERIOD`` sweeps without a deflation the window
    spectrum is inspected and the next sweep uses an exceptional shift,
    alternately the window eigenvalue farthest from its companion and a
    seeded random value. A sweep aborted by coinciding poles or a degenerate
    shift is followed by a random shift.

    :param pencil: Valid structured pencil, assumed regular.
    :param options: Solver options; defaults when omitted.
    :return: Eigenvalues with pair links, the final pencil and counters.
    :rtype: SolveReport
    :raises ConvergenceError: If a window does not deflate within twice
        ``max_iterations_per_deflation`` sweeps.
    :raises RefinementLimitError: If a middle move cannot be refined.
    :raises SingularPoleError: If a pole of the active window vanishes.
    """
    options = options or SolverOptions()
    work = pencil.copy()
    n = work.n
    kind = work.kind
    Q = np.eye(n, dtype=np.complex128) if options.accumulate_Q else None
    scale = work.norms()
    spectrum = _Spectrum(n)
    stats = MoveStats()
    deflations: List[Deflation] = []
    iterations = 0

    window = ActiveWindow.full(n)
    period = min(config.EXCEPTIONAL_SHIFT_PERIOD, options.max_iterations_per_deflation)
    limit = 2 * options.max_iterations_per_deflation
    stalled = 0
    aborted = False
    while window.size >= 3:
        if deflation := try_deflate(work, options, window=window, scale=scale):
            spectrum.add_pair(
                deflation.columns[0],
                deflation.eigenvalue,
                deflation.columns[1],
                deflation.companion,
            )
            deflations.append(deflation)
            window = deflation.window
            stalled = 0
            continue

        pair = None
        if stalled and stalled % period == 0:
            values = _window_spectrum(work, window)
            if values and (cluster := _self_companion_cluster(values, kind)):
                logger.warning(
                    "Self-companion cluster left unreduced",
                    extra={"lo": window.lo, "window": window.size},
                )
                for column, value in zip(range(window.lo, window.stop), cluster):
                    spectrum.add_single(column, value)
                window = ActiveWindow(lo=window.lo, size=0)
                break
            if stalled >= limit:
                raise ConvergenceError(
                    f"Window of size {window.size} at {window.lo} did not deflate "
                    f"after {stalled} sweeps",
                    iterations=iterations,
                    window=window,
                )
            spectral = (stalled // period) % 2 == 1
            pair, source = _exceptional_pair(
                values, options, iterations, kind, spectral
            )
            logger.warning(
                "Exceptional shift",
                extra={
                    "lo": window.lo,
                    "window": window.size,
                    "iterations": iterations,
                    "source": source,
                },
            )
        elif aborted:
            pair, _ = _exceptional_pair(None, options, iterations, kind, False)

        try:
            if pair is None:
                shift = select_shift(work, options, window)
                pair = guard_shift(
                    ShiftPair.from_shift(shift, kind), options.shift_guard_gap
                )
            aborted = False
            iterate_once(work, pair, options, window=window, Q=Q, stats=stats)
        except (CoincidentPolesError, DegenerateShiftError, GuardError) as e:
            logger.warning(
                "Sweep aborted",
                extra={"lo": window.lo, "window": window.size, "error": str(e)},
            )
            aborted = True
        iterations += 1
        stalled += 1

    if window.size == 2:
        value, companion, paired = _terminal_2x2(work, window.lo, Q)
        if paired:
            spectrum.add_pair(window.lo, value, window.lo + 1, companion)
        else:
            spectrum.add_single(window.lo, value)
            spectrum.add_single(window.lo + 1, companion)
    elif window.size == 1:
        spectrum.add_single(window.lo, _terminal_1x1(work, window.lo))

    report = SolveReport(
        eigenvalues=spectrum.eigenvalues,
        pair_ids=spectrum.pair_ids,
        companion_index=spectrum.companion_index,
        S_A=work.A,
        S_B=work.B,
        Q=Q,
        stats=stats,
        iterations=iterations,
        deflations=deflations,
    )
    if Q is not None:
        report.backward_error = max(
            backward_error(pencil.A, Q, work.A), backward_error(pencil.B, Q, work.B)
        )
    logger.info(
        "Solve finished",
        extra={"n": n, "iterations": iterations, "moves": stats.move_count},
    )
    return report
