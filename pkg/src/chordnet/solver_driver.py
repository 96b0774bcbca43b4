"""External MaxSAT solver integration for chordnet."""

import shlex
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

from .errors import EncodingBugSuspected, SolverError
from .logger import ChordNetLogger

PLACEHOLDER = "{}"

OPTIMUM = "OPTIMUM FOUND"
UNSATISFIABLE = "UNSATISFIABLE"
UNKNOWN = "UNKNOWN"
SATISFIABLE = "SATISFIABLE"

# 0 plus the MaxSAT evaluation codes for SAT, UNSAT and OPTIMUM
ACCEPTED_EXIT_CODES = frozenset({0, 10, 20, 30})


@dataclass(frozen=True)
class SolverCommand:
    """Command template; ``{}`` is replaced by the instance path."""

    template: str
    timeout: float = 3600.0

    def __post_init__(self) -> None:
        if PLACEHOLDER not in self.template:
            raise ValueError(f"solver command must contain {PLACEHOLDER!r}: {self.template!r}")
        if self.timeout <= 0:
            raise ValueError("solver timeout must be positive")

    def argv(self, instance_path: Union[str, Path]) -> List[str]:
        path = str(instance_path)
        return [token.replace(PLACEHOLDER, path) for token in shlex.split(self.template)]


@dataclass
class SolverOutput:
    """Parsed ``s``/``v``/``o`` lines of a solver run."""

    status: Optional[str] = None
    literals: List[int] = field(default_factory=list)
    cost: Optional[int] = None


def _parse_model_tokens(tokens: List[str], n_vars: Optional[int]) -> List[int]:
    if len(tokens) == 1 and set(tokens[0]) <= {"0", "1"} and (
        len(tokens[0]) > 1 or n_vars == 1
    ):
        # 2022 dialect: one character per variable
        return [i if bit == "1" else -i for i, bit in enumerate(tokens[0], start=1)]
    literals = []
    for token in tokens:
        lit = int(token)
        if lit != 0:
            literals.append(lit)
    return literals


def parse_solver_output(stdout: str, n_vars: Optional[int] = None) -> SolverOutput:
    """Parse MaxSAT-competition output.

    Raises:
        SolverError on unparseable model or cost lines
    """
    out = SolverOutput()
    for lineno, line in enumerate(stdout.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        kind, rest = tokens[0], tokens[1:]
        try:
            if kind == "s":
                out.status = " ".join(rest).upper()
            elif kind == "v":
                out.literals.extend(_parse_model_tokens(rest, n_vars))
            elif kind == "o" and rest:
                out.cost = int(rest[0])
        except ValueError:
            raise SolverError(f"unparseable solver output on line {lineno}: {line!r}")
    return out


class MaxSATDriver:
    """Runs a configured MaxSAT solver on a WCNF instance file."""

    def __init__(self, logger: ChordNetLogger):
        """Initialize driver.

        Args:
            logger: chordnet logger instance
        """
        self.logger = logger

    def run(
        self, command: SolverCommand, instance_path: Union[str, Path], n_vars: int
    ) -> Tuple[List[int], SolverOutput]:
        """Run the solver and return the model literals.

        Args:
            command: solver command template and timeout
            instance_path: WCNF file on disk
            n_vars: number of encoding variables

        Returns:
            (model literals, parsed output)

        Raises:
            SolverError: failure, timeout, UNKNOWN or no optimum
            EncodingBugSuspected: solver reported UNSAT
        """
        argv = command.argv(instance_path)
        self.logger.info(f"Starting MaxSAT solver on {instance_path}", extra={
            "argv": argv,
            "timeout": command.timeout,
        })

        started = time.monotonic()
        try:
            result = subprocess.run(
                argv,
                capture_output=True,
                text=True,
                timeout=command.timeout,
            )
        except subprocess.TimeoutExpired:
            self.logger.error(f"MaxSAT solver timed out after {command.timeout} seconds")
            raise SolverError(f"solver timed out after {command.timeout} seconds")
        except OSError as e:
            self.logger.error(f"MaxSAT solver could not be started: {e}")
            raise SolverError(f"solver failure: {e}")
        elapsed = time.monotonic() - started

        output = parse_solver_output(result.stdout, n_vars)
        self.logger.debug("MaxSAT solver finished", extra={
            "returncode": result.returncode,
            "status": output.status,
            "seconds": round(elapsed, 3),
        })

        if output.status is None or result.returncode not in ACCEPTED_EXIT_CODES:
            stderr_tail = result.stderr.strip().splitlines()[-5:]
            self.logger.error("MaxSAT solver failed", extra={
                "returncode": result.returncode,
                "stderr": stderr_tail,
            })
            raise SolverError(
                f"solver failure (exit code {result.returncode}, status {output.status})"
            )
        if output.status == UNSATISFIABLE:
            raise EncodingBugSuspected(
                "solver reported UNSATISFIABLE; encoding bug suspected "
                "(the disconnected network is always feasible)"
            )
        if output.status == UNKNOWN:
            raise SolverError("solver returned UNKNOWN (no optimum within its limits)")
        if output.status != OPTIMUM:
            raise SolverError(f"solver did not prove optimality (status {output.status})")
        if not output.literals:
            raise SolverError("solver reported an optimum but printed no model")

        self.logger.audit(
            action="maxsat_solve_completed",
            resource=str(instance_path),
            outcome="success",
            details={"seconds": round(elapsed, 3), "cost": output.cost},
        )
        return output.literals, output
