"""Configuration management for chordnet."""

import os
from dataclasses import dataclass, field, replace
from typing import Any, Optional


@dataclass
class ScoringConfig:
    """Score-table construction settings."""

    prior: float = 0.5
    max_clique: Optional[int] = None


@dataclass
class EncodingConfig:
    """MaxSAT encoding settings."""

    scale: int = 1000
    max_vars: int = 10


@dataclass
class SolverConfig:
    """External MaxSAT solver settings."""

    command: Optional[str] = None
    timeout: float = 3600.0


@dataclass
class OracleConfig:
    """Exhaustive oracle settings."""

    allow_large: bool = False


@dataclass
class ChordNetConfig:
    """Main chordnet configuration."""

    scoring: ScoringConfig = field(default_factory=ScoringConfig)
    encoding: EncodingConfig = field(default_factory=EncodingConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    workers: int = 1
    seed: int = 0
    log_level: str = "INFO"
    audit_log: Optional[str] = None


def default_workers() -> int:
    """Available parallelism, at least 1."""
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def _env_int(name: str, default: Optional[int]) -> Optional[int]:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}")


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{name} must be a number, got {raw!r}")


def load_config() -> ChordNetConfig:
    """Load chordnet configuration from environment variables.

    Returns:
        ChordNetConfig instance; unset variables keep their defaults
    """
    scoring = ScoringConfig(
        prior=_env_float('CHORDNET_PRIOR', 0.5),
        max_clique=_env_int('CHORDNET_MAX_CLIQUE', None),
    )

    encoding = EncodingConfig(
        scale=_env_int('CHORDNET_SCALE', 1000) or 0,
        max_vars=_env_int('CHORDNET_MAX_ENCODE_VARS', 10) or 0,
    )

    solver = SolverConfig(
        command=os.getenv('CHORDNET_SOLVER') or None,
        timeout=_env_float('CHORDNET_SOLVER_TIMEOUT', 3600.0),
    )

    oracle = OracleConfig(
        allow_large=os.getenv('CHORDNET_ALLOW_LARGE', 'false').lower() == 'true'
    )

    workers = _env_int('CHORDNET_WORKERS', None)
    if workers is None:
        workers = default_workers()

    return ChordNetConfig(
        scoring=scoring,
        encoding=encoding,
        solver=solver,
        oracle=oracle,
        workers=workers,
        seed=_env_int('CHORDNET_SEED', 0) or 0,
        log_level=os.getenv('CHORDNET_LOG_LEVEL', 'INFO').upper(),
        audit_log=os.getenv('CHORDNET_AUDIT_LOG') or None,
    )


def apply_overrides(config: ChordNetConfig, **overrides: Any) -> ChordNetConfig:
    """Return a copy of ``config`` with non-None command-line overrides applied.

    Recognised keys: prior, max_clique, scale, solver, timeout, allow_large,
    workers, seed, log_level, audit_log.
    """
    scoring = config.scoring
    encoding = config.encoding
    solver = config.solver
    oracle = config.oracle
    top: dict = {}

    for key, value in overrides.items():
        if value is None:
            continue
        if key == 'prior':
            scoring = replace(scoring, prior=value)
        elif key == 'max_clique':
            scoring = replace(scoring, max_clique=value)
        elif key == 'scale':
            encoding = replace(encoding, scale=value)
        elif key == 'solver':
            solver = replace(solver, command=value)
        elif key == 'timeout':
            solver = replace(solver, timeout=value)
        elif key == 'allow_large':
            oracle = replace(oracle, allow_large=value)
        elif key in ('workers', 'seed', 'log_level', 'audit_log'):
            top[key] = value
        else:
            raise ValueError(f"Unknown configuration override: {key}")

    return replace(
        config, scoring=scoring, encoding=encoding, solver=solver, oracle=oracle, **top
    )


def validate_config(config: ChordNetConfig) -> bool:
    """Validate configuration values.

    Args:
        config: ChordNetConfig to validate

    Returns:
        True if valid

    Raises:
        ValueError if configuration is invalid
    """
    if not config.scoring.prior > 0:
        raise ValueError("Prior pseudocount must be positive")

    if config.scoring.max_clique is not None and config.scoring.max_clique < 1:
        raise ValueError("Maximum clique size must be at least 1")

    if config.encoding.scale < 1:
        raise ValueError("Scale factor must be at least 1")

    if config.encoding.max_vars < 1:
        raise ValueError("Encoding variable limit must be at least 1")

    if config.solver.command is not None and '{}' not in config.solver.command:
        raise ValueError("Solver command template must contain the '{}' instance placeholder")

    if config.solver.timeout <= 0:
        raise ValueError("Solver timeout must be positive")

    if config.workers < 1:
        raise ValueError("Worker count must be at least 1")

    if config.log_level not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
        raise ValueError(f"Unknown log level: {config.log_level}")

    return True
