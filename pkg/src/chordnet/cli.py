"""Command-line entry point: score, encode, solve, certify, generate, enumerate."""

import argparse
import json
import sys
import tempfile
from pathlib import Path
from typing import Dict, List, NoReturn, Optional, Sequence

from dotenv import load_dotenv

from .config import ChordNetConfig, apply_overrides, load_config, validate_config
from .errors import (
    ChordNetError,
    EncodingError,
    InputError,
    SolverError,
    VerificationError,
)
from .nodeset import format_nodeset
from .pipeline import ChordNetPipeline
from .reports import certificate_report, solve_report, to_json
from .scoring import candidate_counts, write_score_file

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_CERTIFICATION = 4


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit code 1."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _echo(message: str) -> None:
    print(message, file=sys.stderr)


def _write_output(text: str, path: Optional[str]) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _parse_arities(pairs: Sequence[str]) -> Dict[str, int]:
    arities = {}
    for pair in pairs:
        name, sep, value = pair.rpartition("=")
        if not sep or not name:
            raise InputError(f"--arity expects name=k, got {pair!r}")
        try:
            arities[name] = int(value)
        except ValueError:
            raise InputError(f"--arity expects an integer arity, got {pair!r}")
    return arities


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--workers", type=int, help="parallel workers (default: available CPUs)")
    common.add_argument("--seed", type=int, help="random seed (default 0)")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])
    common.add_argument("--audit-log", help="append JSON-lines audit records to this file")

    scoring = _Parser(add_help=False)
    scoring.add_argument("--prior", type=float, help="per-cell Dirichlet pseudocount (0.5)")
    scoring.add_argument("--max-clique", type=int, help="largest subset to score")

    scaling = _Parser(add_help=False)
    scaling.add_argument("--scale", type=int, help="integer scale factor for weights (1000)")

    parser = _Parser(
        prog="chordnet",
        description="Optimal chordal Markov network structure learning via weighted MaxSAT.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", parents=[common, scoring], help="CSV dataset → score file")
    p.add_argument("csv", help="dataset with a header row of variable names")
    p.add_argument("--arity", action="append", default=[], metavar="NAME=K")
    p.add_argument("-o", "--output", help="score file path (default: stdout)")

    p = sub.add_parser("encode", parents=[common, scaling], help="score file → WCNF + .vars")
    p.add_argument("scores", help="score file")
    p.add_argument("-o", "--output", required=True, help="WCNF instance path")

    p = sub.add_parser(
        "solve", parents=[common, scaling], help="optimal network for a score file"
    )
    p.add_argument("scores", help="score file")
    method = p.add_mutually_exclusive_group(required=True)
    method.add_argument("--oracle", action="store_true", help="exhaustive graph enumeration")
    method.add_argument(
        "--solver",
        nargs="?",
        const="",
        metavar="CMD",
        help="external MaxSAT command, {} = instance (bare flag: CHORDNET_SOLVER)",
    )
    method.add_argument("--rc2", action="store_true", help="in-process RC2 (python-sat)")
    p.add_argument("--allow-large", action="store_true", help="permit 7-8 variable oracle runs")
    p.add_argument("--timeout", type=float, help="solver timeout in seconds")
    p.add_argument("--instance", help="keep the WCNF instance at this path")
    p.add_argument("-o", "--output", help="JSON report path (default: stdout)")

    p = sub.add_parser("certify", parents=[common], help="verify a network report")
    p.add_argument("report", help="JSON network or solve report")
    p.add_argument("scores", help="score file")
    p.add_argument("-o", "--output", help="JSON certificate path (default: stdout)")

    p = sub.add_parser("generate", parents=[common], help="synthetic CSV along a chordal graph")
    p.add_argument("n", type=int, help="number of variables")
    p.add_argument("--rows", type=int, default=200)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--arity", type=int, default=2)
    p.add_argument("-o", "--output", help="CSV path (default: stdout)")

    p = sub.add_parser("enumerate", parents=[common], help="count graphs and chordal graphs")
    p.add_argument("n", type=int, help="number of nodes")
    p.add_argument("--allow-large", action="store_true", help="permit 7-8 nodes")

    return parser


def _config_from_args(args: argparse.Namespace) -> ChordNetConfig:
    config = apply_overrides(
        load_config(),
        prior=getattr(args, "prior", None),
        max_clique=getattr(args, "max_clique", None),
        scale=getattr(args, "scale", None),
        solver=getattr(args, "solver", None) or None,
        timeout=getattr(args, "timeout", None),
        allow_large=getattr(args, "allow_large", None) or None,
        workers=args.workers,
        seed=args.seed,
        log_level=args.log_level,
        audit_log=args.audit_log,
    )
    validate_config(config)
    return config


def cmd_score(pipeline: ChordNetPipeline, args: argparse.Namespace) -> int:
    table = pipeline.score(args.csv, _parse_arities(args.arity))
    if args.output:
        pipeline.write_scores(table, args.output)
    else:
        sys.stdout.write(write_score_file(table))

    counts = candidate_counts(table.n_vars, pipeline.config.scoring.max_clique)
    _echo(f"{len(table)} score entries for {table.n_vars} variables")
    _echo(
        f"note: {counts['scored']} nonempty subsets are scored; "
        f"{counts['all_subsets']} counts the empty set as well"
    )
    cap = pipeline.config.scoring.max_clique
    if cap is not None and cap < table.n_vars:
        _echo(
            f"warning: cliques capped at {cap} variables; "
            "optima are restricted to networks within the cap"
        )
    return EXIT_OK


def cmd_encode(pipeline: ChordNetPipeline, args: argparse.Namespace) -> int:
    table = pipeline.load_scores(args.scores)
    _, stats = pipeline.encode(table, args.output)
    _echo(
        f"{stats['variables']} variables, {stats['hard_clauses']} hard clauses, "
        f"{stats['soft_clauses']} soft clauses, {stats['bytes']} bytes"
    )
    for family, count in stats["families"].items():
        _echo(f"  {family}: {count} clauses")
    _echo(f"sidecar written to {stats['vars_file']}")
    return EXIT_OK


def cmd_solve(pipeline: ChordNetPipeline, args: argparse.Namespace) -> int:
    table = pipeline.load_scores(args.scores)
    if args.oracle:
        result = pipeline.solve_oracle(table)
    elif args.rc2:
        result = pipeline.solve_maxsat(table, use_rc2=True)
    elif args.instance:
        result = pipeline.solve_maxsat(table, args.instance)
    else:
        with tempfile.TemporaryDirectory(prefix="chordnet-") as workdir:
            result = pipeline.solve_maxsat(table, Path(workdir) / "instance.wcnf")

    report = solve_report(result, table.n_vars, pipeline.config.encoding.scale)
    _write_output(to_json(report), args.output)

    cliques = " ".join(format_nodeset(c) for c in result.network.sorted_cliques())
    _echo(f"{result.method}: score {result.objective_real:.6f} cliques {cliques}")
    if "graphs_visited" in result.stats:
        summary = (
            f"visited {result.stats['graphs_visited']} graphs, "
            f"{result.stats['chordal_graphs']} chordal"
        )
        if result.stats.get("capped_out"):
            summary += f", {result.stats['capped_out']} over the clique cap"
        _echo(summary)
    if not result.certificate.passed:
        _echo(f"certificate FAILED: {json.dumps(result.certificate.failures)}")
        return EXIT_CERTIFICATION
    return EXIT_OK


def cmd_certify(pipeline: ChordNetPipeline, args: argparse.Namespace) -> int:
    table = pipeline.load_scores(args.scores)
    try:
        text = Path(args.report).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read report {args.report}: {e}")
    cert = pipeline.certify_report(text, table)
    _write_output(to_json(certificate_report(cert)), args.output)
    for name, ok in cert.checks.items():
        _echo(f"  {name}: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if cert.passed else EXIT_CERTIFICATION


def cmd_generate(pipeline: ChordNetPipeline, args: argparse.Namespace) -> int:
    if args.rows < 0:
        raise InputError("--rows must be non-negative")
    _write_output(pipeline.generate(args.n, args.rows, args.density, args.arity), args.output)
    return EXIT_OK


def cmd_enumerate(pipeline: ChordNetPipeline, args: argparse.Namespace) -> int:
    sys.stdout.write(json.dumps(pipeline.enumerate(args.n)) + "\n")
    return EXIT_OK


COMMANDS = {
    "score": cmd_score,
    "encode": cmd_encode,
    "solve": cmd_solve,
    "certify": cmd_certify,
    "generate": cmd_generate,
    "enumerate": cmd_enumerate,
}


def exit_code_for(error: ChordNetError) -> int:
    if isinstance(error, VerificationError):
        return EXIT_CERTIFICATION
    if isinstance(error, EncodingError):
        # violated hard clauses in a solver model point at the encoder
        return EXIT_CERTIFICATION if error.family else EXIT_INPUT
    if isinstance(error, SolverError):
        return EXIT_SOLVER
    if isinstance(error, InputError):
        return EXIT_INPUT
    return EXIT_USAGE


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = _config_from_args(args)
    except ValueError as e:
        _echo(f"chordnet: configuration error: {e}")
        return EXIT_USAGE

    pipeline = ChordNetPipeline(config)
    try:
        return COMMANDS[args.command](pipeline, args)
    except ChordNetError as e:
        pipeline.logger.error(f"{args.command} failed: {e}", extra={"error": type(e).__name__})
        _echo(f"chordnet: {e}")
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
