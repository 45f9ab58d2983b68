import cmath
import logging
from unittest.mock import patch

import numpy as np
import pytest

from pole_swap import config as cfg
from pole_swap.exception import (
    CoincidentPolesError,
    ConvergenceError,
    DimensionError,
    DomainError,
    GuardError,
    SingularPoleError,
)
from pole_swap.moves import MOVE_I, MOVE_II, MOVE_IIE, MOVE_IIO, MoveStats, move_IIo
from pole_swap.pencil import (
    ActiveWindow,
    HomogeneousValue,
    StructureKind,
    StructuredPencil,
    chordal_distance,
    gen_random_alternating,
    gen_random_palindromic,
    new_structured,
    validate,
)
from pole_swap.solver import (
    ShiftPair,
    SolverOptions,
    guard_shift,
    iterate_once,
    rayleigh_shift,
    select_shift,
    solve,
    try_deflate,
    wilkinson_shift,
)
from pole_swap.verify import match_eigensets, oracle_eigenvalues, subspace_check


def _corner_pencil():
    # rows 1-2, columns 2-3: upper triangular A block over B, roots 2 and 5
    A = np.zeros((3, 3), dtype=np.complex128)
    B = np.zeros((3, 3), dtype=np.complex128)
    A[0, 1], A[0, 2], A[1, 1], A[1, 2] = 2.0, 2.1, 0.0, 5.0
    B[0, 1], B[0, 2], B[1, 1], B[1, 2] = 1.0, 1.0, 0.0, 1.0
    return StructuredPencil(A=A, B=B, kind=StructureKind.PALINDROMIC)


def test_shift_pair_companion():
    pair = ShiftPair.from_shift(HomogeneousValue(2.0), "palindromic")

    assert pair.rho_tilde == HomogeneousValue(0.5)
    assert pair.kind is StructureKind.PALINDROMIC


@pytest.mark.parametrize(
    "overrides",
    [
        {"deflation_tolerance_factor": 0.0},
        {"max_iterations_per_deflation": 0},
        {"shift_guard_gap": 1.0},
        {"max_refines": -1},
        {"shift_strategy": "francis"},
    ],
)
def test_solver_options_validation(overrides):
    with pytest.raises(DomainError):
        SolverOptions(**overrides)


@pytest.mark.usefixtures("env_vars")
def test_solver_options_from_config():
    options = SolverOptions.from_config(accumulate_Q=True)

    assert options.max_refines == 4
    assert options.shift_strategy == cfg.SHIFT_STRATEGY_RAYLEIGH
    assert options.accumulate_Q


def test_rayleigh_shift():
    pencil = _corner_pencil()
    assert rayleigh_shift(pencil) == HomogeneousValue(2.1)

    pencil.B[0, 2] = 0.0
    assert rayleigh_shift(pencil).is_infinite


def test_wilkinson_shift_picks_root_closest_to_rayleigh():
    assert wilkinson_shift(_corner_pencil()) == HomogeneousValue(2.0)


def test_wilkinson_shift_tie_break_is_lexicographic():
    pencil = _corner_pencil()
    pencil.A[0, 1], pencil.A[1, 2], pencil.A[0, 2] = 1.0, -1.0, 0.0
    pencil.B[0, 2] = 1.0

    assert wilkinson_shift(pencil) == HomogeneousValue(-1.0)


def test_select_shift_falls_back_to_rayleigh(caplog):
    pencil = _corner_pencil()
    pencil.A[:2, 1:] = 0.0
    pencil.B[:2, 1:] = 0.0
    pencil.A[0, 2] = 3.0
    pencil.B[0, 2] = 1.0

    with caplog.at_level(logging.WARNING, logger="pole_swap"):
        shift = select_shift(pencil, SolverOptions())

    assert shift == HomogeneousValue(3.0)
    assert any(
        r.getMessage() == "Falling back to Rayleigh shift" for r in caplog.records
    )


def test_guard_shift_leaves_distant_shift():
    pair = ShiftPair.from_shift(HomogeneousValue(2.0), StructureKind.PALINDROMIC)

    assert guard_shift(pair) is pair


@pytest.mark.parametrize("theta", [0.0, 0.7, -2.5])
def test_guard_shift_pushes_off_unit_circle(theta):
    rho = HomogeneousValue(cmath.exp(1j * theta))
    guarded = guard_shift(ShiftPair.from_shift(rho, StructureKind.PALINDROMIC))

    z = guarded.rho.to_complex()
    assert abs(z) == pytest.approx(1.0 + 1e-3)
    assert cmath.phase(z) == pytest.approx(theta)
    assert chordal_distance(guarded.rho, guarded.rho_tilde) > 1e-4


def test_guard_shift_keeps_inside_shift_inside():
    rho = HomogeneousValue(0.9999)
    guarded = guard_shift(ShiftPair.from_shift(rho, StructureKind.PALINDROMIC))

    assert guarded.rho.to_complex() == pytest.approx(1.0 - 1e-3)


def test_guard_shift_alternating_imaginary_axis():
    pair = ShiftPair.from_shift(HomogeneousValue(1j), StructureKind.ALTERNATING)

    assert guard_shift(pair).rho.to_complex() == pytest.approx(1e-3 + 1j)


@pytest.mark.parametrize("rho", [HomogeneousValue(0.0), HomogeneousValue(1.0, 0.0)])
def test_guard_shift_alternating_fixed_points(rho):
    with pytest.raises(GuardError):
        guard_shift(ShiftPair.from_shift(rho, StructureKind.ALTERNATING))


@pytest.mark.parametrize(
    "n, middle, type_II",
    [(9, MOVE_IIO, 6), (7, MOVE_IIO, 4), (8, MOVE_IIE, 4), (10, MOVE_IIE, 6)],
)
def test_iterate_once_move_counts(n, middle, type_II):
    pencil = gen_random_palindromic(n, seed=5)
    pair = ShiftPair.from_shift(HomogeneousValue(1.5 + 0.5j), pencil.kind)

    stats = iterate_once(pencil, pair)

    assert stats.move_count_by_type[MOVE_I] == 2
    assert stats.move_count_by_type[MOVE_II] == type_II
    assert stats.move_count_by_type[middle] == 1
    assert stats.move_count == type_II + 3


def test_iterate_once_keeps_structure_and_poles(palindromic_8):
    pencil = palindromic_8.copy()
    pair = ShiftPair.from_shift(HomogeneousValue(-0.3 + 2j), pencil.kind)

    iterate_once(pencil, pair)

    report = validate(pencil)
    assert report.max_shape_violation == 0.0
    assert report.max_structure_violation <= 10 * cfg.EPS * np.linalg.norm(pencil.A)
    assert report.pole_symmetry_violation <= 1e-10
    assert report.middle_pole_violation <= 1e-12


def test_iterate_once_rejects_self_companion_shift(palindromic_7):
    pair = ShiftPair.from_shift(HomogeneousValue(1j), StructureKind.PALINDROMIC)

    with pytest.raises(CoincidentPolesError):
        iterate_once(palindromic_7, pair)


def test_iterate_once_needs_three_rows():
    pencil = new_structured(np.array([[0, 1], [2, 1]], dtype=np.complex128))
    pair = ShiftPair.from_shift(HomogeneousValue(2.0), pencil.kind)

    with pytest.raises(DimensionError):
        iterate_once(pencil, pair)


@pytest.mark.parametrize(
    "pencil",
    [
        gen_random_palindromic(9, seed=2),
        gen_random_palindromic(10, seed=2),
        gen_random_alternating(9, seed=2),
        gen_random_alternating(10, seed=2),
    ],
)
def test_iterate_once_performs_subspace_iteration(pencil):
    original = pencil.copy()
    pair = guard_shift(ShiftPair.from_shift(HomogeneousValue(0.4 + 0.8j), pencil.kind))
    Q = np.eye(pencil.n, dtype=np.complex128)

    iterate_once(pencil, pair, Q=Q)

    assert subspace_check(original.A, original.B, pair, Q) <= 1e-8


def test_try_deflate_splits_exact_pair(palindromic_7):
    pencil = palindromic_7.copy()
    n = pencil.n
    for i, j in ((n - 2, 0), (0, n - 2)):
        pencil.A[i, j] = pencil.B[i, j] = 0.0

    deflation = try_deflate(pencil)

    assert deflation.window == ActiveWindow(lo=1, size=n - 2)
    assert deflation.columns == (0, n - 1)
    A, B = pencil.A, pencil.B
    assert deflation.eigenvalue == HomogeneousValue(A[n - 1, 0], B[n - 1, 0])
    assert deflation.companion == HomogeneousValue(A[0, n - 1], B[0, n - 1])


def test_try_deflate_waits_for_small_entries(palindromic_7):
    assert try_deflate(palindromic_7) is None


def test_solve_one_by_one():
    report = solve(new_structured(np.array([[3 + 4j]])))

    assert report.n == 1
    assert abs(report.eigenvalues[0].to_complex()) == pytest.approx(1.0)
    assert report.companion_index == [0]


def test_solve_does_not_modify_input(palindromic_7):
    original = palindromic_7.copy()
    solve(palindromic_7)

    np.testing.assert_array_equal(palindromic_7.A, original.A)


@pytest.mark.parametrize(
    "pencil",
    [
        gen_random_palindromic(2, seed=8),
        gen_random_palindromic(7, seed=1),
        gen_random_palindromic(12, seed=0),
        gen_random_palindromic(13, seed=3),
        gen_random_alternating(9, seed=4),
        gen_random_alternating(12, seed=6),
    ],
)
def test_solve_matches_oracle(pencil):
    report = solve(pencil, SolverOptions(accumulate_Q=True))

    oracle = oracle_eigenvalues(pencil.A, pencil.B)
    assert match_eigensets(report.eigenvalues, oracle).max_chordal_mismatch <= 1e-8
    assert report.backward_error <= 1e-12
    defect = np.linalg.norm(report.Q.conj().T @ report.Q - np.eye(pencil.n))
    assert defect <= 50 * pencil.n * cfg.EPS


def _oracle_mismatch(pencil) -> float:
    report = solve(pencil)
    oracle = oracle_eigenvalues(pencil.A, pencil.B)
    return match_eigensets(report.eigenvalues, oracle).max_chordal_mismatch


@pytest.mark.parametrize("n", [4, 6, 8, 12, 16, 20])
@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("generate", [gen_random_palindromic, gen_random_alternating])
def test_solve_agrees_with_oracle(generate, seed, n):
    assert _oracle_mismatch(generate(n, seed=seed)) <= 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("n", [4, 6, 8, 12, 16, 20])
@pytest.mark.parametrize("seed", range(3, 20))
@pytest.mark.parametrize("generate", [gen_random_palindromic, gen_random_alternating])
def test_solve_agrees_with_oracle_all_seeds(generate, seed, n):
    assert _oracle_mismatch(generate(n, seed=seed)) <= 1e-8


def _off_symmetry(value: HomogeneousValue, kind: StructureKind) -> float:
    value = value.normalized()
    if kind is StructureKind.PALINDROMIC:
        return abs(abs(value.alpha) - abs(value.beta))
    return abs((value.alpha * value.beta.conjugate()).real)


@pytest.mark.parametrize("n", [4, 5, 6, 8, 9, 10])
@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("generate", [gen_random_palindromic, gen_random_alternating])
def test_solve_eigenvalue_symmetry(generate, seed, n):
    pencil = generate(n, seed=seed)

    report = solve(pencil)

    for column, value in enumerate(report.eigenvalues):
        partner = report.companion_index[column]
        if partner == column:
            assert _off_symmetry(value, pencil.kind) <= 1e-12
        else:
            assert report.eigenvalues[partner] == value.companion(pencil.kind)
    if n % 2:
        assert report.companion_index[n // 2] == n // 2


def test_solve_links_companion_pairs(alternating_9):
    report = solve(alternating_9)

    for column, value in enumerate(report.eigenvalues):
        partner = report.eigenvalues[report.companion_index[column]]
        if report.companion_index[column] != column:
            assert partner == value.companion(StructureKind.ALTERNATING)
            partner_id = report.pair_ids[report.companion_index[column]]
            assert report.pair_ids[column] == partner_id
    assert sum(1 for _ in report.pairs()) == len(set(report.pair_ids))


def test_solve_deflations_shrink_window(palindromic_8):
    report = solve(palindromic_8)

    sizes = [deflation.window.size for deflation in report.deflations]
    assert sizes == sorted(sizes, reverse=True)
    assert all(a - b == 2 for a, b in zip([8] + sizes, sizes))


def test_solve_structure_drift(palindromic_8):
    report = solve(palindromic_8)

    final = StructuredPencil(A=report.S_A, B=report.S_B, kind=palindromic_8.kind)
    tolerance = 100 * 8 * cfg.EPS * np.linalg.norm(palindromic_8.A)
    assert validate(final).max_structure_violation <= tolerance


def test_solve_reports_unimodular_cluster(caplog):
    # A = J (M + iI) with M symmetric tridiagonal: every eigenvalue (mu + i) / (mu - i)
    off = [0.5, 0.7, 0.7, 0.5]
    M = np.diag([1.0, 2.0, 3.0, 2.0, 1.0]) + np.diag(off, 1) + np.diag(off, -1)
    pencil = new_structured(np.flipud(M + 1j * np.eye(5)))

    with caplog.at_level(logging.WARNING, logger="pole_swap"):
        report = solve(pencil)

    oracle = oracle_eigenvalues(pencil.A, pencil.B)
    assert match_eigensets(report.eigenvalues, oracle).max_chordal_mismatch <= 1e-8
    for value in report.eigenvalues:
        assert abs(value.to_complex()) == pytest.approx(1.0)
    assert report.companion_index == list(range(5))
    assert any(
        r.getMessage() == "Self-companion cluster left unreduced"
        for r in caplog.records
    )


def test_solve_raises_convergence_error_on_stall(palindromic_7):
    options = SolverOptions(max_iterations_per_deflation=1)
    with patch("pole_swap.solver.try_deflate", return_value=None):
        with patch("pole_swap.solver._self_companion_cluster", return_value=None):
            with pytest.raises(ConvergenceError) as error:
                solve(palindromic_7, options)

    assert error.value.iterations == 2
    assert error.value.window == ActiveWindow.full(7)


def test_solve_logs_exceptional_shift(palindromic_7, caplog):
    options = SolverOptions(max_iterations_per_deflation=1)
    with caplog.at_level(logging.WARNING, logger="pole_swap"):
        with patch("pole_swap.solver.try_deflate", return_value=None):
            with patch("pole_swap.solver._self_companion_cluster", return_value=None):
                with pytest.raises(ConvergenceError):
                    solve(palindromic_7, options)

    assert any(
        r.getMessage() == "Exceptional shift"
        and getattr(r, "window", None) == 7
        and getattr(r, "source", None) == "spectrum"
        for r in caplog.records
    )


def test_solve_takes_exceptional_shifts_on_a_cadence(palindromic_7, caplog):
    with caplog.at_level(logging.WARNING, logger="pole_swap"):
        with patch("pole_swap.solver.try_deflate", return_value=None), patch(
            "pole_swap.solver._self_companion_cluster", return_value=None
        ):
            with patch("pole_swap.solver.iterate_once") as sweep:
                with pytest.raises(ConvergenceError) as error:
                    solve(palindromic_7)

    limit = 2 * cfg.DEFAULT_MAX_ITERATIONS_PER_DEFLATION
    assert error.value.iterations == limit
    assert sweep.call_count == limit
    shifts = [r for r in caplog.records if r.getMessage() == "Exceptional shift"]
    assert [getattr(r, "iterations", None) for r in shifts] == list(
        range(cfg.EXCEPTIONAL_SHIFT_PERIOD, limit, cfg.EXCEPTIONAL_SHIFT_PERIOD)
    )
    assert [getattr(r, "source", None) for r in shifts[:2]] == ["spectrum", "random"]


def test_exceptional_spectral_shift_is_an_eigenvalue(palindromic_7):
    captured = []

    def record(pencil, pair, *args, **kwargs):
        captured.append(pair.rho)

    options = SolverOptions(max_iterations_per_deflation=1)
    with patch("pole_swap.solver.try_deflate", return_value=None), patch(
        "pole_swap.solver._self_companion_cluster", return_value=None
    ):
        with patch("pole_swap.solver.iterate_once", side_effect=record):
            with pytest.raises(ConvergenceError):
                solve(palindromic_7, options)

    oracle = oracle_eigenvalues(palindromic_7.A, palindromic_7.B)
    distances = [chordal_distance(captured[1], value) for value in oracle]
    assert min(distances) <= 1e-8


def test_solve_propagates_singular_pole(palindromic_7):
    error = SingularPoleError("Pole 1 at (5, 0) is negligible")
    with patch("pole_swap.solver.pole_at", side_effect=error):
        with pytest.raises(SingularPoleError):
            solve(palindromic_7)


def test_iterate_once_counts_moves_of_aborted_sweep(palindromic_7):
    pencil = palindromic_7.copy()
    pair = ShiftPair.from_shift(HomogeneousValue(1.5 + 0.5j), pencil.kind)
    stats = MoveStats()

    with patch(
        "pole_swap.solver.move_IIo", side_effect=CoincidentPolesError("close poles")
    ):
        with pytest.raises(CoincidentPolesError):
            iterate_once(pencil, pair, stats=stats)

    assert stats.move_count_by_type[MOVE_I] == 1
    assert stats.move_count_by_type[MOVE_II] == 2
    assert stats.move_count == 3


def test_solve_counts_moves_of_aborted_sweeps(palindromic_7):
    calls = []

    def abort_once(pencil, *args, **kwargs):
        calls.append(1)
        if len(calls) == 1:
            raise CoincidentPolesError("close poles")
        return move_IIo(pencil, *args, **kwargs)

    with patch("pole_swap.solver.move_IIo", side_effect=abort_once):
        report = solve(palindromic_7)

    # the aborted sweep made its first type I move and never reached the second
    assert report.stats.move_count_by_type[MOVE_IIO] == len(calls) - 1
    assert report.stats.move_count_by_type[MOVE_I] == 2 * report.iterations - 1


@pytest.mark.parametrize("n", [7, 8, 12, 13, 20, 21])
@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("generate", [gen_random_palindromic, gen_random_alternating])
def test_solve_random_pencils(generate, seed, n):
    pencil = generate(n, seed=seed)

    report = solve(pencil, SolverOptions(accumulate_Q=True))

    assert report.backward_error <= 1e-12
    assert all(value is not None for value in report.eigenvalues)
    assert report.stats.refinement_count <= report.iterations


@pytest.mark.slow
@pytest.mark.parametrize("n", [100, 200])
def test_solve_random_bench_scale(n):
    pencil = gen_random_palindromic(n, seed=1)
    report = solve(pencil, SolverOptions(accumulate_Q=True))

    assert report.backward_error <= 1e-13
    assert report.stats.move_count <= 4 * n * n


@pytest.mark.slow
@pytest.mark.parametrize("n", [50, 100, 200])
@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("generate", [gen_random_palindromic, gen_random_alternating])
def test_solve_random_bench_all_seeds(generate, seed, n):
    report = solve(generate(n, seed=seed), SolverOptions(accumulate_Q=True))

    assert report.backward_error <= 1e-13
    assert report.stats.move_count <= 4 * n * n


@pytest.mark.slow
def test_solve_matches_oracle_at_oracle_limit():
    pencil = gen_random_palindromic(64, seed=2)
    report = solve(pencil)

    oracle = oracle_eigenvalues(pencil.A, pencil.B)
    assert match_eigensets(report.eigenvalues, oracle).max_chordal_mismatch <= 1e-8


@pytest.mark.slow
def test_move_count_grows_quadratically():
    ratios = {}
    for n in (50, 200):
        moves = [
            solve(gen_random_palindromic(n, seed=seed)).stats.move_count
            for seed in range(3)
        ]
        assert max(moves) <= 4 * n * n
        ratios[n] = sum(moves) / (len(moves) * n * n)

    assert 0.5 < ratios[200] / ratios[50] < 2.0
