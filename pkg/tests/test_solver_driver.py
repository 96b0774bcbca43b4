"""Tests for MaxSAT solver driver."""

import subprocess
from unittest.mock import Mock, patch

import pytest

from chordnet.errors import EncodingBugSuspected, SolverError
from chordnet.solver_driver import (
    OPTIMUM,
    MaxSATDriver,
    SolverCommand,
    parse_solver_output,
)


def _completed(stdout="", returncode=30, stderr=""):
    return Mock(stdout=stdout, stderr=stderr, returncode=returncode)


def test_command_requires_placeholder():
    """Test that a template without {} is rejected."""
    with pytest.raises(ValueError, match="must contain"):
        SolverCommand("open-wbo")


def test_command_argv_substitutes_path():
    """Test placeholder substitution in the argument vector."""
    cmd = SolverCommand("open-wbo -cpu-lim=60 {}")

    assert cmd.argv("/tmp/x.wcnf") == ["open-wbo", "-cpu-lim=60", "/tmp/x.wcnf"]


def test_parse_signed_literals():
    """Test parsing status, cost and a signed-literal model."""
    out = parse_solver_output("c comment\no 12\ns OPTIMUM FOUND\nv 1 -2 3 0\n")

    assert out.status == OPTIMUM
    assert out.cost == 12
    assert out.literals == [1, -2, 3]


def test_parse_bitstring_model():
    """Test the one-character-per-variable model dialect."""
    out = parse_solver_output("s OPTIMUM FOUND\nv 101\n", n_vars=3)

    assert out.literals == [1, -2, 3]


def test_parse_rejects_garbage_model():
    """Test that a non-integer model token raises SolverError."""
    with pytest.raises(SolverError, match="line 2"):
        parse_solver_output("s OPTIMUM FOUND\nv 1 x 0\n")


@patch("chordnet.solver_driver.subprocess.run")
def test_run_returns_model(mock_run, mock_logger):
    """Test a successful solver run."""
    mock_run.return_value = _completed("s OPTIMUM FOUND\no 0\nv 1 -2 3 0\n")
    driver = MaxSATDriver(mock_logger)

    literals, output = driver.run(SolverCommand("solver {}"), "inst.wcnf", 3)

    assert literals == [1, -2, 3]
    assert output.cost == 0
    assert mock_run.call_args[0][0] == ["solver", "inst.wcnf"]
    mock_logger.audit.assert_called_once()
    assert mock_logger.audit.call_args[1]["action"] == "maxsat_solve_completed"


@patch("chordnet.solver_driver.subprocess.run")
def test_run_nonzero_exit_without_status(mock_run, mock_logger):
    """Test that a crash is reported as solver failure."""
    mock_run.return_value = _completed("", returncode=1, stderr="segfault")
    driver = MaxSATDriver(mock_logger)

    with pytest.raises(SolverError, match="solver failure"):
        driver.run(SolverCommand("solver {}"), "inst.wcnf", 3)


@patch("chordnet.solver_driver.subprocess.run")
def test_run_unsatisfiable_points_at_encoding(mock_run, mock_logger):
    """Test that UNSAT is flagged as a suspected encoding bug."""
    mock_run.return_value = _completed("s UNSATISFIABLE\n", returncode=20)
    driver = MaxSATDriver(mock_logger)

    with pytest.raises(EncodingBugSuspected, match="encoding bug suspected"):
        driver.run(SolverCommand("solver {}"), "inst.wcnf", 3)


@patch("chordnet.solver_driver.subprocess.run")
def test_run_unknown_status(mock_run, mock_logger):
    """Test that UNKNOWN is a solver error, not a result."""
    mock_run.return_value = _completed("s UNKNOWN\n", returncode=0)
    driver = MaxSATDriver(mock_logger)

    with pytest.raises(SolverError, match="UNKNOWN"):
        driver.run(SolverCommand("solver {}"), "inst.wcnf", 3)


@patch("chordnet.solver_driver.subprocess.run")
def test_run_satisfiable_is_not_optimal(mock_run, mock_logger):
    """Test that a merely satisfying model is rejected."""
    mock_run.return_value = _completed("s SATISFIABLE\nv 1 0\n", returncode=10)
    driver = MaxSATDriver(mock_logger)

    with pytest.raises(SolverError, match="optimality"):
        driver.run(SolverCommand("solver {}"), "inst.wcnf", 1)


@patch("chordnet.solver_driver.subprocess.run")
def test_run_timeout(mock_run, mock_logger):
    """Test solver timeout handling."""
    mock_run.side_effect = subprocess.TimeoutExpired(cmd="solver", timeout=5)
    driver = MaxSATDriver(mock_logger)

    with pytest.raises(SolverError, match="timed out"):
        driver.run(SolverCommand("solver {}", timeout=5), "inst.wcnf", 3)

    mock_logger.error.assert_called()


def test_run_missing_binary(mocker, mock_logger):
    """Test that an unstartable solver is a solver failure."""
    mocker.patch(
        "chordnet.solver_driver.subprocess.run", side_effect=FileNotFoundError("no such file")
    )
    driver = MaxSATDriver(mock_logger)

    with pytest.raises(SolverError, match="solver failure"):
        driver.run(SolverCommand("missing-solver {}"), "inst.wcnf", 3)


@patch("chordnet.solver_driver.subprocess.run")
def test_run_optimum_without_model(mock_run, mock_logger):
    """Test an optimum claim with no v line."""
    mock_run.return_value = _completed("s OPTIMUM FOUND\n")
    driver = MaxSATDriver(mock_logger)

    with pytest.raises(SolverError, match="no model"):
        driver.run(SolverCommand("solver {}"), "inst.wcnf", 3)
