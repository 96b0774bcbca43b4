"""Batch orchestration of the score → encode → solve → certify workflow."""

import time
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from .chordal import count_chordal, random_chordal
from .config import ChordNetConfig, load_config, validate_config
from .dataset import dataset_to_csv, load_dataset_file, sample_dataset
from .encoder import Encoding, build_encoding
from .errors import InputError
from .logger import create_logger, generate_correlation_id
from .reports import network_from_report, parse_network_report
from .scoring import (
    PriorSpec,
    ScoreTable,
    build_score_table,
    integer_scale,
    load_score_file,
    write_score_file,
)
from .solve import (
    DEFAULT_ORACLE_LIMIT,
    LARGE_ORACLE_LIMIT,
    Certificate,
    SolveResult,
    certify,
    exhaustive_optimum,
    integer_objective,
    solve_maxsat,
    write_instance,
)
from .solver_driver import SolverCommand

PathLike = Union[str, Path]


class ChordNetPipeline:
    """Runs chordnet steps with shared configuration, logging and audit records."""

    def __init__(
        self, config: Optional[ChordNetConfig] = None, correlation_id: Optional[str] = None
    ):
        """Initialize pipeline.

        Args:
            config: chordnet configuration (loads from env if not provided)
            correlation_id: Correlation ID for this run
        """
        if config is None:
            config = load_config()

        validate_config(config)
        self.config = config
        self.correlation_id = correlation_id or generate_correlation_id()
        self.logger = create_logger(
            name="chordnet.pipeline",
            config={"log_level": config.log_level, "audit_path": config.audit_log},
            correlation_id=self.correlation_id,
        )

    def score(
        self, csv_path: PathLike, arities: Optional[Mapping[str, int]] = None
    ) -> ScoreTable:
        """Load a dataset and compute its score table."""
        started = time.monotonic()
        dataset = load_dataset_file(csv_path, arities)
        prior = PriorSpec(self.config.scoring.prior)
        table = build_score_table(
            dataset, prior, self.config.scoring.max_clique, workers=self.config.workers
        )
        self.logger.audit(
            action="score_table_built",
            resource=str(csv_path),
            outcome="success",
            details={
                "variables": dataset.n_vars,
                "rows": dataset.row_count,
                "entries": len(table),
                "seconds": round(time.monotonic() - started, 3),
            },
        )
        return table

    def write_scores(self, table: ScoreTable, out_path: PathLike) -> None:
        Path(out_path).write_text(write_score_file(table), encoding="utf-8")

    def load_scores(self, score_path: PathLike) -> ScoreTable:
        return load_score_file(score_path)

    def encode(
        self, table: ScoreTable, out_path: PathLike
    ) -> Tuple[Encoding, Dict[str, Any]]:
        """Write the WCNF instance and sidecar for ``table``; return the encoding and stats."""
        started = time.monotonic()
        int_table = integer_scale(table, self.config.encoding.scale)
        enc = build_encoding(int_table, table.n_vars, self.config.encoding.max_vars)
        wcnf_path, vars_path = write_instance(enc, out_path)
        stats: Dict[str, Any] = {
            "variables": enc.n_vars,
            "hard_clauses": len(enc.hard),
            "soft_clauses": len(enc.soft),
            "top": enc.top,
            "offset": enc.offset,
            "bytes": wcnf_path.stat().st_size,
            "families": enc.family_counts(),
            "vars_file": str(vars_path),
            "seconds": round(time.monotonic() - started, 3),
        }
        self.logger.audit(
            action="wcnf_emitted",
            resource=str(wcnf_path),
            outcome="success",
            details={k: v for k, v in stats.items() if k != "families"},
        )
        return enc, stats

    def solve_oracle(self, table: ScoreTable) -> SolveResult:
        """Exhaustive optimum plus its integer objective under the configured scale."""
        result = exhaustive_optimum(
            table,
            table.n_vars,
            workers=self.config.workers,
            allow_large=self.config.oracle.allow_large,
            logger=self.logger,
        )
        result.objective_int = integer_objective(
            result.network, table, self.config.encoding.scale
        )
        self._audit_result(result)
        return result

    def solve_maxsat(
        self, table: ScoreTable, instance_path: Optional[PathLike] = None, use_rc2: bool = False
    ) -> SolveResult:
        """Solve through the configured external solver, or in-process RC2."""
        command = None
        if not use_rc2:
            if not self.config.solver.command:
                raise InputError("no solver configured (use --solver or CHORDNET_SOLVER)")
            command = SolverCommand(self.config.solver.command, self.config.solver.timeout)
            if instance_path is None:
                raise InputError("an instance path is required for external solvers")
        result = solve_maxsat(
            table,
            self.config.encoding.scale,
            self.logger,
            command=command,
            instance_path=instance_path,
            max_vars=self.config.encoding.max_vars,
        )
        self._audit_result(result)
        return result

    def certify_report(self, report_text: str, table: ScoreTable) -> Certificate:
        """Certify a network read back from a JSON report."""
        report = parse_network_report(report_text)
        if report.n_vars != table.n_vars:
            raise InputError(
                f"report has {report.n_vars} variables, score table has {table.n_vars}"
            )
        cert = certify(network_from_report(report), table)
        self.logger.audit(
            action="network_certified",
            resource="report",
            outcome="success" if cert.passed else "failure",
            details={"failures": cert.failures},
        )
        return cert

    def generate(
        self, n: int, rows: int, density: float = 0.5, arity: int = 2
    ) -> str:
        """Synthetic CSV sampled along a random chordal graph."""
        seed = self.config.seed
        graph = random_chordal(n, density=density, seed=seed)
        dataset = sample_dataset(graph, rows, seed=seed, arity=arity)
        self.logger.info("Generated synthetic dataset", extra={
            "variables": n,
            "rows": rows,
            "edges": [list(e) for e in graph.sorted_edges()],
            "seed": seed,
        })
        return dataset_to_csv(dataset)

    def enumerate(self, n: int) -> Dict[str, int]:
        """Graph and chordal-graph counts on n labeled nodes."""
        limit = LARGE_ORACLE_LIMIT if self.config.oracle.allow_large else DEFAULT_ORACLE_LIMIT
        if not 1 <= n <= limit:
            raise InputError(f"enumeration supports 1..{limit} nodes, got {n}")
        return {"nodes": n, "graphs": 1 << (n * (n - 1) // 2), "chordal_graphs": count_chordal(n)}

    def _audit_result(self, result: SolveResult) -> None:
        self.logger.audit(
            action="network_solved",
            resource=result.method,
            outcome="success" if result.certificate.passed else "failure",
            details={
                "objective_real": result.objective_real,
                "objective_int": result.objective_int,
                "cliques": [list(c) for c in result.network.sorted_cliques()],
                "failures": result.certificate.failures,
            },
        )
