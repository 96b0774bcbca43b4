"""Exception hierarchy for chordnet.

Each family maps onto one CLI exit code (see ``cli.exit_code_for``).
"""

from typing import Optional


class ChordNetError(Exception):
    """Base class for all chordnet errors."""


class InputError(ChordNetError, ValueError):
    """Invalid user-supplied input: dataset, score file, report or table."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DatasetError(InputError):
    """Malformed CSV dataset."""


class ScoreFileError(InputError):
    """Malformed score file."""


class MissingScoreError(InputError, KeyError):
    """A clique or separator has no entry in the score table."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class EncodingError(ChordNetError):
    """Encoding could not be built, or an assignment violates it.

    ``family`` names the violated clause family when the error comes from
    hard-clause checking (e.g. ``"antichain"``, ``"chordality"``).
    """

    def __init__(self, message: str, family: Optional[str] = None):
        self.family = family
        super().__init__(message)


class VerificationError(EncodingError):
    """A decoded network failed independent verification."""


class SolverError(ChordNetError, RuntimeError):
    """External solver failed, timed out or returned no usable answer."""


class EncodingBugSuspected(SolverError):
    """Solver reported UNSAT although the empty network is always feasible."""
