"""Optimal networks: exhaustive oracle, MaxSAT back ends and certification."""

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from .chordal import (
    ChordalNetwork,
    Edge,
    Graph,
    build_network,
    check_running_intersection,
    graph_from_cliques,
    graph_from_index,
    is_acyclic,
    is_balanced,
    is_chordal,
    maximal_cliques,
    network_from_graph,
    pair_list,
    separators_of,
    sorted_forest_pairs,
)
from .encoder import (
    DEFAULT_MAX_VARS,
    Assignment,
    Encoding,
    build_encoding,
    decode_model,
    emit_wcnf,
    write_vars_sidecar,
)
from .errors import EncodingBugSuspected, InputError, SolverError, VerificationError
from .logger import ChordNetLogger
from .nodeset import is_strict_subset
from .scoring import AnyScoreTable, IntScoreTable, ScoreTable, integer_scale, network_score
from .solver_driver import MaxSATDriver, SolverCommand

DEFAULT_ORACLE_LIMIT = 6
LARGE_ORACLE_LIMIT = 8
SCORE_TOLERANCE = 1e-9
_PARALLEL_THRESHOLD = 4096

CHECKS = ("coverage", "maximality", "chordality", "balancing", "running_intersection", "score")


@dataclass
class Certificate:
    """Independent verification outcome; one entry per check."""

    checks: Dict[str, bool] = field(default_factory=dict)
    failures: Dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(self.checks.values())

    def record(self, name: str, ok: bool, reason: str = "") -> None:
        self.checks[name] = ok
        if not ok:
            self.failures[name] = reason or f"{name} check failed"

    def to_dict(self) -> Dict[str, Any]:
        return {"passed": self.passed, "checks": dict(self.checks), "failures": dict(self.failures)}


@dataclass
class SolveResult:
    network: ChordalNetwork
    objective_real: float
    objective_int: Optional[int]
    method: str
    certificate: Certificate
    stats: Dict[str, Any] = field(default_factory=dict)


def certify(net: ChordalNetwork, table: AnyScoreTable) -> Certificate:
    """Run every structural check and recompute the score; never raises."""
    cert = Certificate()
    n = table.n_vars
    cliques = list(net.cliques)

    def edge_union() -> Graph:
        return graph_from_cliques(n, cliques)

    def guarded(name: str, check: Any) -> None:
        try:
            ok, reason = check()
        except Exception as e:  # a broken network must still yield a report
            ok, reason = False, f"{type(e).__name__}: {e}"
        cert.record(name, ok, reason)

    def coverage() -> Tuple[bool, str]:
        covered = {node for c in cliques for node in c}
        stray = sorted(covered - set(range(n)))
        missing = sorted(set(range(n)) - covered)
        if stray:
            return False, f"nodes {stray} outside 0..{n - 1}"
        return not missing, f"nodes {missing} in no clique"

    def maximality() -> Tuple[bool, str]:
        for a in cliques:
            for b in cliques:
                if is_strict_subset(a, b):
                    return False, f"clique {list(a)} is contained in {list(b)}"
        if maximal_cliques(edge_union()) != frozenset(cliques):
            return False, "cliques differ from the maximal cliques of their edge union"
        return True, ""

    def chordality() -> Tuple[bool, str]:
        return is_chordal(edge_union())[0], "edge union has a chordless cycle"

    def balancing() -> Tuple[bool, str]:
        if set(net.forest.nodes) != set(cliques):
            return False, "forest nodes differ from the cliques"
        if not is_acyclic(net.forest):
            return False, "separator edges contain a cycle"
        if list(net.separators) != list(separators_of(net.forest)):
            return False, "separators do not match the forest edge labels"
        return is_balanced(cliques, net.forest), "balancing condition violated"

    def running_intersection() -> Tuple[bool, str]:
        return check_running_intersection(net.forest, cliques), "running intersection violated"

    def score() -> Tuple[bool, str]:
        recomputed = network_score(table, cliques, separators_of(net.forest))
        diff = abs(recomputed - net.score)
        return diff <= SCORE_TOLERANCE, f"stored score {net.score} != recomputed {recomputed}"

    guarded("coverage", coverage)
    guarded("maximality", maximality)
    guarded("chordality", chordality)
    guarded("balancing", balancing)
    guarded("running_intersection", running_intersection)
    guarded("score", score)
    return cert


def _is_better(
    score: Union[float, int], edges: Tuple[Edge, ...], best: Optional[Tuple[Any, Tuple[Edge, ...]]]
) -> bool:
    if best is None:
        return True
    return score > best[0] or (score == best[0] and edges < best[1])


def _scan_range(
    table: AnyScoreTable, n: int, start: int, stop: int
) -> Tuple[Optional[Tuple[Any, Tuple[Edge, ...]]], int, int, int]:
    """Best (score, edges) over graph indices [start, stop) plus counters.

    Chordal graphs with a maximal clique above the table's cap lie outside
    the hypothesis space; they are counted as capped out and not scored.
    """
    pairs = pair_list(n)
    cap = table.max_subset_size
    best: Optional[Tuple[Any, Tuple[Edge, ...]]] = None
    chordal = capped_out = 0
    for index in range(start, stop):
        g = graph_from_index(n, index, pairs)
        if not is_chordal(g)[0]:
            continue
        chordal += 1
        if cap < n and any(len(c) > cap for c in maximal_cliques(g)):
            capped_out += 1
            continue
        score = network_from_graph(g, table).score
        edges = g.sorted_edges()
        if _is_better(score, edges, best):
            best = (score, edges)
    return best, stop - start, chordal, capped_out


def _chunks(total: int, workers: int) -> List[Tuple[int, int]]:
    size = max(1024, math.ceil(total / (workers * 8)))
    return [(lo, min(lo + size, total)) for lo in range(0, total, size)]


def exhaustive_optimum(
    table: AnyScoreTable,
    n: int,
    workers: int = 1,
    allow_large: bool = False,
    logger: Optional[ChordNetLogger] = None,
) -> SolveResult:
    """Optimal network by enumerating every graph on n nodes.

    Ties go to the lexicographically smallest sorted edge list.

    Raises:
        InputError when n is outside 1..6 (1..8 with ``allow_large``)
    """
    limit = LARGE_ORACLE_LIMIT if allow_large else DEFAULT_ORACLE_LIMIT
    if n < 1:
        raise InputError("oracle needs at least one variable")
    if n > limit:
        hint = "" if allow_large or n > LARGE_ORACLE_LIMIT else " (pass --allow-large for 7-8)"
        raise InputError(f"oracle limited to {limit} variables, got {n}{hint}")
    if n != table.n_vars:
        raise InputError(f"table has {table.n_vars} variables, oracle asked for {n}")

    total = 1 << (n * (n - 1) // 2)
    chunks = _chunks(total, workers)
    started = time.monotonic()
    results = []

    def progress(done: int) -> None:
        if logger and len(chunks) > 1:
            logger.info(f"Oracle progress {done}/{len(chunks)} chunks", extra={
                "chunks_done": done,
                "chunks_total": len(chunks),
                "graphs_visited": sum(r[1] for r in results),
                "elapsed_seconds": round(time.monotonic() - started, 1),
            })

    if workers > 1 and total >= _PARALLEL_THRESHOLD:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_scan_range, table, n, lo, hi) for lo, hi in chunks]
            for done, future in enumerate(futures, start=1):
                results.append(future.result())
                progress(done)
    else:
        for done, (lo, hi) in enumerate(chunks, start=1):
            results.append(_scan_range(table, n, lo, hi))
            progress(done)

    best = None
    visited = chordal = capped_out = 0
    for chunk_best, chunk_visited, chunk_chordal, chunk_capped in results:
        visited += chunk_visited
        chordal += chunk_chordal
        capped_out += chunk_capped
        if chunk_best is not None and _is_better(chunk_best[0], chunk_best[1], best):
            best = chunk_best
    assert best is not None  # the empty graph is always chordal and within any cap

    net = network_from_graph(Graph(n, frozenset(best[1])), table)
    seconds = time.monotonic() - started
    if isinstance(table, IntScoreTable):
        objective_int: Optional[int] = int(net.score)
        objective_real = net.score / table.scale_factor
    else:
        objective_int, objective_real = None, float(net.score)

    if logger:
        logger.info("Oracle enumeration finished", extra={
            "graphs_visited": visited,
            "chordal_graphs": chordal,
            "capped_out": capped_out,
            "seconds": round(seconds, 3),
        })
    return SolveResult(
        network=net,
        objective_real=objective_real,
        objective_int=objective_int,
        method="oracle",
        certificate=certify(net, table),
        stats={
            "graphs_visited": visited,
            "chordal_graphs": chordal,
            "capped_out": capped_out,
            "seconds": seconds,
        },
    )


def run_external(
    enc: Encoding,
    cmd: SolverCommand,
    instance_path: Union[str, Path],
    logger: ChordNetLogger,
) -> Assignment:
    """Run an external solver on an emitted instance; unmentioned variables are false.

    Raises:
        SolverError / EncodingBugSuspected from the driver
    """
    literals, _ = MaxSATDriver(logger).run(cmd, instance_path, enc.n_vars)
    try:
        return Assignment.from_literals(enc.n_vars, literals)
    except ValueError as e:
        raise SolverError(f"solver model is not an assignment of this encoding: {e}")


def run_rc2(enc: Encoding) -> Assignment:
    """Solve in-process with python-sat's RC2.

    Raises:
        SolverError when python-sat is not installed
        EncodingBugSuspected when the hard clauses are unsatisfiable
    """
    try:
        from pysat.examples.rc2 import RC2
        from pysat.formula import WCNF
    except ImportError:
        raise SolverError("the rc2 backend needs python-sat (pip install python-sat)")

    wcnf = WCNF()
    for clause in enc.hard:
        wcnf.append(list(clause))
    for clause, weight in enc.soft:
        wcnf.append(list(clause), weight=weight)
    with RC2(wcnf) as rc2:
        model = rc2.compute()
    if model is None:
        raise EncodingBugSuspected("rc2 found the hard clauses unsatisfiable; encoding bug suspected")
    return Assignment.from_literals(enc.n_vars, [l for l in model if abs(l) <= enc.n_vars])


def write_instance(enc: Encoding, instance_path: Union[str, Path]) -> Tuple[Path, Path]:
    """Write the WCNF instance and its ``.vars`` sidecar."""
    wcnf_path = Path(instance_path)
    vars_path = wcnf_path.with_suffix(".vars")
    wcnf_path.write_text(emit_wcnf(enc), encoding="utf-8")
    vars_path.write_text(write_vars_sidecar(enc), encoding="utf-8")
    return wcnf_path, vars_path


def solve_maxsat(
    table: ScoreTable,
    scale: int,
    logger: ChordNetLogger,
    command: Optional[SolverCommand] = None,
    instance_path: Optional[Union[str, Path]] = None,
    max_vars: int = DEFAULT_MAX_VARS,
) -> SolveResult:
    """Scale, encode, solve (external command or RC2), decode and certify.

    Raises:
        EncodingError / VerificationError on encoding or decoding failures
        SolverError when the back end fails
    """
    started = time.monotonic()
    int_table = integer_scale(table, scale)
    enc = build_encoding(int_table, table.n_vars, max_vars)

    if command is not None:
        if instance_path is None:
            raise InputError("an instance path is required for external solvers")
        write_instance(enc, instance_path)
        assignment = run_external(enc, command, instance_path, logger)
        method = "external"
    else:
        assignment = run_rc2(enc)
        method = "rc2"

    net_int = decode_model(enc, assignment, int_table)
    objective = enc.objective(assignment)
    if objective != net_int.score:
        raise VerificationError(
            f"objective {objective} differs from decoded network score {net_int.score}",
            family="score",
        )
    net = build_network(net_int.cliques, sorted_forest_pairs(net_int.forest), table)
    return SolveResult(
        network=net,
        objective_real=float(net.score),
        objective_int=objective,
        method=method,
        certificate=certify(net, table),
        stats={
            "variables": enc.n_vars,
            "hard_clauses": len(enc.hard),
            "soft_clauses": len(enc.soft),
            "seconds": time.monotonic() - started,
        },
    )


def integer_objective(net: ChordalNetwork, table: ScoreTable, scale: int) -> int:
    """Integer score of ``net`` under the scaled table."""
    return int(network_score(integer_scale(table, scale), net.cliques, net.separators))
