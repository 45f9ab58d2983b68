import os
from typing import Literal

import numpy as np

from pole_swap.logging_config import get_library_logger

logger = get_library_logger()

EPS = float(np.finfo(np.float64).eps)

STRUCTURE_PALINDROMIC = "palindromic"
STRUCTURE_ALTERNATING = "alternating"
STRUCTURE_TYPE = Literal["palindromic", "alternating"]

SHIFT_STRATEGY_WILKINSON = "wilkinson"
SHIFT_STRATEGY_RAYLEIGH = "rayleigh"
SHIFT_STRATEGY_TYPE = Literal["wilkinson", "rayleigh"]

# structural exactness and move acceptance, both in units of EPS * ||M||_F
STRUCTURE_TOLERANCE_FACTOR = 10.0
MOVE_TOLERANCE_FACTOR = 10.0
# determinant of a row-scaled 2x2 cross system below this means equal poles
COINCIDENT_POLE_TOLERANCE = 4 * EPS
# chordal distance from an eigenvalue to its own companion below which it
# counts as lying on the unit circle (imaginary axis)
SELF_COMPANION_TOLERANCE = 1e-6
# a window without deflation takes an exceptional shift every this many sweeps
EXCEPTIONAL_SHIFT_PERIOD = 10
# guard gap for exceptional shifts taken from the window spectrum
EXCEPTIONAL_SHIFT_GUARD_GAP = 1e-6

DEFAULT_MAX_REFINES = 10
DEFAULT_DEFLATION_TOLERANCE_FACTOR = 10.0
DEFAULT_MAX_ITERATIONS_PER_DEFLATION = 30
DEFAULT_SHIFT_GUARD_GAP = 1e-3
DEFAULT_SHIFT_STRATEGY = SHIFT_STRATEGY_WILKINSON

ORACLE_MAX_DIMENSION = 64
ORACLE_DETERMINANT_MAX_DIMENSION = 8
ORACLE_SWEEPS_PER_DIMENSION = 100
ORACLE_EXCEPTIONAL_SHIFT_PERIOD = 10

STRESS_EXPONENT_RANGE = (-15.0, 0.0)
DEFAULT_STRESS_SAMPLES = 10_000
STRESS_INTERVALS = ((1e-15, 1e-12), (1e-12, 1e-9), (1e-9, 1.0), (1.0, 1e15))

DEFAULT_BENCH_SIZES = (50, 100, 200)
DEFAULT_BENCH_SEEDS = 10
DEFAULT_WORKERS = 4

CSV_SCHEMA_VERSION = 1

MATRIX_MARKET_HEADER = "%%MatrixMarket matrix array complex general"
MATRIX_MARKET_PRECISION = 17

EXIT_OK = 0
EXIT_PARSE_ERROR = 1
EXIT_SHAPE_ERROR = 2
EXIT_CONVERGENCE_ERROR = 3
EXIT_FAILURE = 4


def _env_number(name, default, cast):
    if (raw := os.getenv(name)) is None:
        return default
    try:
        return cast(raw)
    except ValueError:
        logger.warning(
            "Ignoring malformed environment override",
            extra={"variable": name, "value": raw},
        )
        return default


def get_solver_config():
    strategy = os.getenv("POLE_SWAP_SHIFT_STRATEGY", DEFAULT_SHIFT_STRATEGY)
    if strategy not in (SHIFT_STRATEGY_WILKINSON, SHIFT_STRATEGY_RAYLEIGH):
        logger.warning(
            "Unknown shift strategy requested", extra={"strategy": strategy}
        )
        strategy = DEFAULT_SHIFT_STRATEGY
    return {
        "deflation_tolerance_factor": _env_number(
            "POLE_SWAP_DEFLATION_FACTOR", DEFAULT_DEFLATION_TOLERANCE_FACTOR, float
        ),
        "max_iterations_per_deflation": _env_number(
            "POLE_SWAP_MAX_ITERATIONS", DEFAULT_MAX_ITERATIONS_PER_DEFLATION, int
        ),
        "shift_guard_gap": _env_number(
            "POLE_SWAP_SHIFT_GUARD_GAP", DEFAULT_SHIFT_GUARD_GAP, float
        ),
        "max_refines": _env_number("POLE_SWAP_MAX_REFINES", DEFAULT_MAX_REFINES, int),
        "shift_strategy": strategy,
    }


def get_solve_command_config():
    return {
        "structure": STRUCTURE_PALINDROMIC,
        "tol_factor": MOVE_TOLERANCE_FACTOR,
    }


def get_bench_command_config():
    return {
        "sizes": list(DEFAULT_BENCH_SIZES),
        "seeds": DEFAULT_BENCH_SEEDS,
        "workers": _env_number("POLE_SWAP_WORKERS", DEFAULT_WORKERS, int),
        "tol_factor": MOVE_TOLERANCE_FACTOR,
    }


def get_stress_command_config():
    return {
        "samples": DEFAULT_STRESS_SAMPLES,
        "intervals": [list(interval) for interval in STRESS_INTERVALS],
        "workers": _env_number("POLE_SWAP_WORKERS", DEFAULT_WORKERS, int),
        "tol_factor": MOVE_TOLERANCE_FACTOR,
    }


def get_command_config(command):
    config_getters = {
        "solve": get_solve_command_config,
        "random-bench": get_bench_command_config,
        "stress": get_stress_command_config,
    }

    if getter := config_getters.get(command):
        return getter()
    logger.warning("Unknown command requested", extra={"command": command})
    return {}
