import logging

import pytest

from pole_swap import config as cfg


def test_constants():
    assert cfg.STRUCTURE_PALINDROMIC == "palindromic"
    assert cfg.STRUCTURE_ALTERNATING == "alternating"
    assert cfg.DEFAULT_SHIFT_STRATEGY == cfg.SHIFT_STRATEGY_WILKINSON

    assert cfg.COINCIDENT_POLE_TOLERANCE == 4 * cfg.EPS
    assert cfg.DEFAULT_MAX_REFINES == 10
    assert cfg.DEFAULT_MAX_ITERATIONS_PER_DEFLATION == 30
    assert cfg.DEFAULT_SHIFT_GUARD_GAP == 1e-3
    assert len(cfg.STRESS_INTERVALS) == 4
    assert [cfg.EXIT_OK, cfg.EXIT_PARSE_ERROR, cfg.EXIT_FAILURE] == [0, 1, 4]


def test_get_solver_config_defaults(monkeypatch):
    for name in (
        "POLE_SWAP_MAX_REFINES",
        "POLE_SWAP_MAX_ITERATIONS",
        "POLE_SWAP_SHIFT_GUARD_GAP",
        "POLE_SWAP_DEFLATION_FACTOR",
        "POLE_SWAP_SHIFT_STRATEGY",
    ):
        monkeypatch.delenv(name, raising=False)

    assert cfg.get_solver_config() == {
        "deflation_tolerance_factor": 10.0,
        "max_iterations_per_deflation": 30,
        "shift_guard_gap": 1e-3,
        "max_refines": 10,
        "shift_strategy": "wilkinson",
    }


@pytest.mark.usefixtures("env_vars")
def test_get_solver_config_reads_env():
    assert cfg.get_solver_config() == {
        "deflation_tolerance_factor": 20.0,
        "max_iterations_per_deflation": 50,
        "shift_guard_gap": 0.01,
        "max_refines": 4,
        "shift_strategy": "rayleigh",
    }


def test_malformed_env_override_logs_warning(monkeypatch, caplog):
    monkeypatch.setenv("POLE_SWAP_MAX_REFINES", "many")
    with caplog.at_level(logging.WARNING, logger="pole_swap"):
        result = cfg.get_solver_config()

    assert result["max_refines"] == cfg.DEFAULT_MAX_REFINES
    assert any(
        r.getMessage() == "Ignoring malformed environment override"
        and getattr(r, "variable", None) == "POLE_SWAP_MAX_REFINES"
        for r in caplog.records
    )


def test_unknown_shift_strategy_falls_back(monkeypatch, caplog):
    monkeypatch.setenv("POLE_SWAP_SHIFT_STRATEGY", "francis")
    with caplog.at_level(logging.WARNING, logger="pole_swap"):
        result = cfg.get_solver_config()

    assert result["shift_strategy"] == cfg.DEFAULT_SHIFT_STRATEGY
    assert any(
        r.getMessage() == "Unknown shift strategy requested"
        and getattr(r, "strategy", None) == "francis"
        for r in caplog.records
    )


@pytest.mark.parametrize(
    "command, expected",
    [
        ("solve", {"structure": "palindromic", "tol_factor": 10.0}),
        (
            "random-bench",
            {"sizes": [50, 100, 200], "seeds": 10, "workers": 2, "tol_factor": 10.0},
        ),
        (
            "stress",
            {
                "samples": 10_000,
                "intervals": [
                    [1e-15, 1e-12],
                    [1e-12, 1e-9],
                    [1e-9, 1.0],
                    [1.0, 1e15],
                ],
                "workers": 2,
                "tol_factor": 10.0,
            },
        ),
    ],
)
@pytest.mark.usefixtures("env_vars")
def test_get_command_config_dispatch(command, expected):
    assert cfg.get_command_config(command) == expected


def test_get_command_config_unknown_command_logs_warning(caplog):
    with caplog.at_level(logging.WARNING, logger="pole_swap"):
        result = cfg.get_command_config("plot")

    assert result == {}
    records = [r for r in caplog.records if r.levelno == logging.WARNING]
    assert any(
        r.getMessage() == "Unknown command requested"
        and getattr(r, "command", None) == "plot"
        for r in records
    )
