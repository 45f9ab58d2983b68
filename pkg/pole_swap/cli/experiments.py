#!/usr/bin/env python3
import argparse
import dataclasses
import sys
import threading
from queue import Queue
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from pole_swap import config
from pole_swap.cli.logger import logger, set_verbosity
from pole_swap.exception import (
    ConvergenceError,
    DomainError,
    ParseError,
    RefinementLimitError,
    ShapeError,
    StructureError,
)
from pole_swap.matrix_io import read_matrix, write_csv
from pole_swap.moves import MOVE_IIE, MOVE_IIO, move_IIe, move_IIo
from pole_swap.pencil import (
    StructureKind,
    gen_random_alternating,
    gen_random_palindromic,
    gen_stress_2x2,
    gen_stress_3x3,
    new_structured,
)
from pole_swap.solver import SolverOptions, solve

SOLVE_HEADER = ("index", "re", "im", "pair_id", "finite")
SOLVE_SUMMARY_HEADER = ("n", "iterations", "move_count", "refine_count")
BENCH_HEADER = (
    "n",
    "seed",
    "backward_error",
    "move_count",
    "refine_count",
    "iterations",
    "error",
)
STRESS_HEADER = ("kind", "g", "seed", "refinements", "capped", "residual", "error")
STRESS_SUMMARY_HEADER = (
    "interval_lo",
    "interval_hi",
    "IIe_avg",
    "IIe_max",
    "IIo_avg",
    "IIo_max",
    "capped",
)
STRESS_KINDS = (MOVE_IIO, MOVE_IIE)

_EXIT_CODES = (
    (ParseError, config.EXIT_PARSE_ERROR),
    ((ShapeError, StructureError), config.EXIT_SHAPE_ERROR),
    ((ConvergenceError, RefinementLimitError), config.EXIT_CONVERGENCE_ERROR),
)


@dataclasses.dataclass(kw_only=True)
class ExperimentConfig:
    """
    Settings shared by the batch commands.

    :ivar sizes: Pencil dimensions for ``random-bench``.
    :ivar seeds: Number of seeds per size, counted up from ``base_seed``.
    :ivar intervals: Stress intervals (lo, hi) for g; each is sampled
        logarithmically with ``samples`` points.
    """

    out: str
    structure: StructureKind = StructureKind.PALINDROMIC
    tol_factor: float = config.MOVE_TOLERANCE_FACTOR
    sizes: List[int] = dataclasses.field(
        default_factory=lambda: list(config.DEFAULT_BENCH_SIZES)
    )
    seeds: int = config.DEFAULT_BENCH_SEEDS
    base_seed: int = 0
    intervals: List[Tuple[float, float]] = dataclasses.field(
        default_factory=lambda: list(config.STRESS_INTERVALS)
    )
    samples: int = config.DEFAULT_STRESS_SAMPLES
    stress_kinds: Tuple[str, ...] = STRESS_KINDS
    shift_strategy: config.SHIFT_STRATEGY_TYPE = config.DEFAULT_SHIFT_STRATEGY
    workers: int = config.DEFAULT_WORKERS

    def __post_init__(self):
        self.structure = StructureKind.parse(self.structure)
        if any(n < 2 for n in self.sizes):
            raise DomainError(f"Sizes must be at least 2, got {self.sizes}")
        for lo, hi in self.intervals:
            if not 0 < lo < hi:
                raise DomainError(f"Invalid g-interval [{lo}, {hi}]")
        if self.seeds < 1 or self.samples < 1 or self.workers < 1:
            raise DomainError("Seed, sample and worker counts must be at least 1")
        if self.tol_factor <= 0:
            raise DomainError("Tolerance factor must be positive")

    def solver_options(self, **overrides) -> SolverOptions:
        return SolverOptions.from_config(
            tol_factor=self.tol_factor,
            shift_strategy=self.shift_strategy,
            **overrides,
        )


def run_ordered(
    function: Callable, tasks: Sequence, workers: int = config.DEFAULT_WORKERS
) -> List:
    """
    Runs ``function`` over ``tasks`` on a pool of threads. Result i belongs to
    task i whatever the completion order; a task that raises leaves its
    exception in its slot.
    """
    results: List = [None] * len(tasks)
    queue = Queue()
    for index, task in enumerate(tasks):
        queue.put((index, task))

    def work():
        while True:
            item = queue.get()
            if item is None:
                return
            index, task = item
            try:
                results[index] = function(task)
            except Exception as e:
                results[index] = e

    threads = [
        threading.Thread(target=work, daemon=True)
        for _ in range(max(1, min(workers, len(tasks))))
    ]
    for _ in threads:
        queue.put(None)
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    return results


def _format_float(value: float) -> str:
    return f"{value:.17g}"


def _eigenvalue_rows(report) -> List[list]:
    rows = []
    for index, value in enumerate(report.eigenvalues):
        if value.is_infinite:
            re, im, finite = "inf", "0", 0
        else:
            z = value.to_complex()
            re, im, finite = _format_float(z.real), _format_float(z.imag), 1
        rows.append([index, re, im, report.pair_ids[index], finite])
    return rows


def cmd_solve(args: argparse.Namespace) -> int:
    """
    Solves the pencil stored in ``--in`` (and ``--in-b`` for alternating
    pencils) and writes the eigenvalue report.
    """
    A = read_matrix(args.input)
    B = read_matrix(args.input_b) if args.input_b else None
    pencil = new_structured(A, args.structure, B=B)
    options = SolverOptions.from_config(
        accumulate_Q=args.accumulate_q,
        tol_factor=args.tol_factor,
        shift_strategy=args.shift,
        seed=args.seed,
    )
    logger.info(
        "Solving pencil", extra={"n": pencil.n, "structure": pencil.kind.value}
    )
    report = solve(pencil, options)

    summary_header = list(SOLVE_SUMMARY_HEADER)
    summary = [
        report.n,
        report.iterations,
        report.stats.move_count,
        report.stats.refinement_count,
    ]
    if args.accumulate_q:
        summary_header.append("backward_error")
        summary.append(_format_float(report.backward_error))
    write_csv(
        args.out,
        "solve",
        SOLVE_HEADER,
        _eigenvalue_rows(report),
        summary_header=summary_header,
        summary_rows=[summary],
    )
    return config.EXIT_OK


def _bench_row(task: Tuple[int, int, ExperimentConfig]) -> list:
    n, seed, experiment = task
    try:
        if experiment.structure is StructureKind.PALINDROMIC:
            pencil = gen_random_palindromic(n, seed)
        else:
            pencil = gen_random_alternating(n, seed)
        report = solve(pencil, experiment.solver_options(accumulate_Q=True))
    except Exception as e:
        logger.warning(
            "Benchmark instance failed",
            extra={"n": n, "seed": seed, "error": type(e).__name__},
        )
        return [n, seed, "", "", "", "", type(e).__name__]
    return [
        n,
        seed,
        _format_float(report.backward_error),
        report.stats.move_count,
        report.stats.refinement_count,
        report.iterations,
        "",
    ]


def cmd_random_bench(experiment: ExperimentConfig) -> int:
    """
    Solves random structured pencils for every (size, seed) and records the
    backward error and work counters per instance.
    """
    tasks = [
        (n, experiment.base_seed + offset, experiment)
        for n in experiment.sizes
        for offset in range(experiment.seeds)
    ]
    logger.info("Running random benchmark", extra={"instances": len(tasks)})
    rows = run_ordered(_bench_row, tasks, experiment.workers)
    write_csv(experiment.out, "random-bench", BENCH_HEADER, rows)
    return config.EXIT_OK


def _stress_row(task: Tuple[str, float, int, ExperimentConfig]) -> list:
    kind, g, seed, experiment = task
    try:
        if kind == MOVE_IIO:
            stats = move_IIo(
                gen_stress_2x2(g, seed), at=0, tol_factor=experiment.tol_factor
            )
        else:
            stats = move_IIe(
                gen_stress_3x3(g, seed), at=0, tol_factor=experiment.tol_factor
            )
    except RefinementLimitError as e:
        residual = _format_float(e.residual) if e.residual is not None else ""
        return [kind, _format_float(g), seed, e.refinements, 1, residual, ""]
    except Exception as e:
        return [kind, _format_float(g), seed, "", 0, "", type(e).__name__]
    return [
        kind,
        _format_float(g),
        seed,
        stats.refinement_count,
        0,
        _format_float(stats.final_residual),
        "",
    ]


def _stress_tasks(experiment: ExperimentConfig) -> List[Tuple]:
    tasks = []
    for lo, hi in experiment.intervals:
        for kind in experiment.stress_kinds:
            for offset, g in enumerate(np.geomspace(lo, hi, experiment.samples)):
                seed = experiment.base_seed + offset
                tasks.append((kind, float(g), seed, experiment))
    return tasks


def _interval_summary(
    interval: Tuple[float, float], rows: Sequence[list], kinds: Sequence[str]
) -> list:
    lo, hi = interval
    summary = [_format_float(lo), _format_float(hi)]
    capped = 0
    for kind in (MOVE_IIE, MOVE_IIO):
        counts = [row[3] for row in rows if row[0] == kind and row[3] != ""]
        capped += sum(1 for row in rows if row[0] == kind and row[4])
        if kind in kinds and counts:
            summary += [f"{sum(counts) / len(counts):.5g}", max(counts)]
        else:
            summary += ["", ""]
    return summary + [capped]


def cmd_stress(experiment: ExperimentConfig) -> int:
    """
    Performs isolated middle swaps on stress blocks with g log-spaced over each
    interval and records the refinement steps needed, summarised per interval
    as average and maximum per move type. Swaps that hit the refinement cap
    are flagged in the ``capped`` column.
    """
    tasks = _stress_tasks(experiment)
    logger.info("Running stress test", extra={"instances": len(tasks)})
    rows = run_ordered(_stress_row, tasks, experiment.workers)
    per_interval = len(experiment.stress_kinds) * experiment.samples
    summary = [
        _interval_summary(
            interval,
            rows[index * per_interval : (index + 1) * per_interval],
            experiment.stress_kinds,
        )
        for index, interval in enumerate(experiment.intervals)
    ]
    write_csv(
        experiment.out,
        "stress",
        STRESS_HEADER,
        rows,
        summary_header=STRESS_SUMMARY_HEADER,
        summary_rows=summary,
    )
    return config.EXIT_OK


def _parse_sizes(sizes: str) -> List[int]:
    return [int(size) for size in sizes.split(",") if size.strip()]


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    defaults = config.get_command_config(args.command)
    intervals = defaults.get("intervals", list(config.STRESS_INTERVALS))
    g_lo, g_hi = getattr(args, "g_lo", None), getattr(args, "g_hi", None)
    if g_lo is not None or g_hi is not None:
        lo = intervals[0][0] if g_lo is None else g_lo
        hi = intervals[-1][1] if g_hi is None else g_hi
        intervals = [(lo, hi)]
    kind = getattr(args, "kind", "both")
    return ExperimentConfig(
        out=args.out,
        structure=getattr(args, "structure", StructureKind.PALINDROMIC),
        tol_factor=args.tol_factor or defaults["tol_factor"],
        sizes=getattr(args, "sizes", None) or defaults.get("sizes", []),
        seeds=getattr(args, "seeds", None) or defaults.get("seeds", 1),
        base_seed=args.seed,
        intervals=[tuple(interval) for interval in intervals],
        samples=getattr(args, "samples", None) or defaults.get("samples", 1),
        stress_kinds=STRESS_KINDS if kind == "both" else (kind,),
        shift_strategy=getattr(args, "shift", config.DEFAULT_SHIFT_STRATEGY),
        workers=args.workers or defaults.get("workers", config.DEFAULT_WORKERS),
    )


def _add_common_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--out", required=True, help="Output CSV path or URL")
    parser.add_argument(
        "--tol-factor",
        type=float,
        default=None,
        help="Middle move tolerance in units of eps * ||M||_F (default: 10)",
    )


def _add_solver_arguments(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--structure",
        default=config.STRUCTURE_PALINDROMIC,
        choices=[config.STRUCTURE_PALINDROMIC, config.STRUCTURE_ALTERNATING],
        help="Pencil structure (default: %(default)s)",
    )
    parser.add_argument(
        "--shift",
        default=config.get_solver_config()["shift_strategy"],
        choices=[config.SHIFT_STRATEGY_WILKINSON, config.SHIFT_STRATEGY_RAYLEIGH],
        help="Shift strategy (default: %(default)s)",
    )


def build_arg_parser() -> argparse.ArgumentParser:
    """
    Builds the argument parser with the ``solve``, ``random-bench`` and
    ``stress`` sub-commands.
    """
    parser = argparse.ArgumentParser(
        description=(
            "Structure-preserving pole-swapping eigensolvers for palindromic "
            "and alternating pencils"
        )
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="Log every sweep and move"
    )
    parser.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Worker threads for batch commands (default: %(default)s from env)",
    )
    parser.add_argument(
        "--seed", type=int, default=0, help="Base seed (default: %(default)s)"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    solve_parser = commands.add_parser("solve", help="Solve a pencil from files")
    solve_parser.add_argument(
        "--in", dest="input", required=True, help="Matrix Market file with A"
    )
    solve_parser.add_argument(
        "--in-b",
        dest="input_b",
        default=None,
        help="Matrix Market file with B (alternating pencils)",
    )
    solve_parser.add_argument(
        "--accumulate-q",
        action="store_true",
        help="Accumulate Q and report the backward error",
    )
    _add_solver_arguments(solve_parser)
    _add_common_arguments(solve_parser)

    bench_parser = commands.add_parser(
        "random-bench", help="Backward error and move counts on random pencils"
    )
    bench_parser.add_argument(
        "--sizes",
        type=_parse_sizes,
        default=None,
        help="Comma-separated pencil sizes (default: 50,100,200)",
    )
    bench_parser.add_argument(
        "--seeds", type=int, default=None, help="Seeds per size (default: 10)"
    )
    _add_solver_arguments(bench_parser)
    _add_common_arguments(bench_parser)

    stress_parser = commands.add_parser(
        "stress", help="Refinement counts of middle swaps on stress blocks"
    )
    stress_parser.add_argument(
        "--g-lo", type=float, default=None, help="Lower end of a single g-interval"
    )
    stress_parser.add_argument(
        "--g-hi", type=float, default=None, help="Upper end of a single g-interval"
    )
    stress_parser.add_argument(
        "--samples",
        type=int,
        default=None,
        help="Samples per interval and kind (default: 10000)",
    )
    stress_parser.add_argument(
        "--kind",
        default="both",
        choices=[MOVE_IIO, MOVE_IIE, "both"],
        help="Middle move to stress (default: %(default)s)",
    )
    _add_common_arguments(stress_parser)
    return parser


def _exit_code(error: Exception) -> int:
    for error_types, code in _EXIT_CODES:
        if isinstance(error, error_types):
            return code
    return config.EXIT_FAILURE


def main(argv: Optional[list] = None) -> int:
    """
    Entry point for the experiment CLI. Parses arguments, runs the selected
    command and maps failures to exit codes: 1 unparsable input, 2 shape or
    structure violations, 3 convergence or refinement failures, 4 anything
    else.
    """
    argv = sys.argv[1:] if argv is None else argv
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    set_verbosity(args.verbose)

    try:
        if args.command == "solve":
            if args.tol_factor is None:
                args.tol_factor = config.get_command_config("solve")["tol_factor"]
            code = cmd_solve(args)
        elif args.command == "random-bench":
            code = cmd_random_bench(_experiment_config(args))
        else:
            code = cmd_stress(_experiment_config(args))
        logger.info("Command completed", extra={"command": args.command})
        return code
    except Exception as e:
        logger.exception(
            "Command failed: %s",
            type(e).__name__,
            extra={"command": args.command, "error": str(e)},
        )
        return _exit_code(e)


if __name__ == "__main__":
    sys.exit(main())
