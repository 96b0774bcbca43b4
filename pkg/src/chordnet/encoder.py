"""Weighted MaxSAT encoding of optimal chordal Markov network structure.

Boolean variables:
    x_c        clique candidate c is chosen
    e_{n,m}    edge {n,m} lies in some chosen clique (n < m)
    s_{c,c'}   the junction forest joins c and c' (label c∩c' is a separator)
    leaf_{c,l} candidate c is a level-l leaf of the forest
plus counter auxiliaries for the cardinality circuits.

Hard clause families are emitted in a fixed order (see ``FAMILIES``); soft
clauses carry the integer scores. For any assignment,
``objective = offset - cost of falsified soft clauses`` equals the integer
network score of the decoded network.
"""

import bisect
from dataclasses import dataclass, field
from functools import cached_property
from itertools import chain, combinations, permutations
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .chordal import (
    ChordalNetwork,
    build_network,
    check_running_intersection,
    graph_from_cliques,
    is_acyclic,
    is_balanced,
    is_chordal,
    maximal_cliques,
)
from .errors import EncodingError, InputError, VerificationError
from .nodeset import NodeSet, all_subsets, from_mask, to_mask
from .scoring import INT_LIMIT, IntScoreTable

Clause = Tuple[int, ...]
Term = Tuple[int, ...]
Edge = Tuple[int, int]

DEFAULT_MAX_VARS = 10

FAMILIES = (
    "coverage",
    "antichain",
    "edges",
    "non_extendability",
    "chordality",
    "separator_support",
    "balancing",
    "acyclicity",
)


@dataclass(frozen=True)
class CounterDefinition:
    """Sequential-counter outputs over conjunctive terms.

    ``outputs[i][j-1]`` is the variable meaning "at least j of terms[:i+1]
    hold"; 0 marks a position that reuses an input literal.
    """

    terms: Tuple[Term, ...]
    outputs: Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True)
class ThresholdDefinition:
    """``var`` means "at least ``threshold`` terms hold", negated if requested."""

    var: int
    terms: Tuple[Term, ...]
    threshold: int
    negated: bool = False


AuxDefinition = Union[CounterDefinition, ThresholdDefinition]


class VarMap:
    """Numbering of every encoding variable, contiguous from 1."""

    def __init__(self, start: int = 0):
        self.size = start
        self.candidates: Tuple[NodeSet, ...] = ()
        self.x: Dict[NodeSet, int] = {}
        self.e: Dict[Edge, int] = {}
        self.s: Dict[Tuple[int, int], int] = {}
        self.leaf: Dict[Tuple[int, int], int] = {}
        self.definitions: List[AuxDefinition] = []

    def new_var(self) -> int:
        self.size += 1
        return self.size

    def edge(self, a: int, b: int) -> int:
        return self.e[(a, b) if a < b else (b, a)]


@dataclass(frozen=True)
class Assignment:
    """Total truth assignment; ``values[v]`` for v in 1..size (index 0 unused)."""

    values: np.ndarray

    @classmethod
    def from_literals(cls, size: int, literals: Sequence[int]) -> "Assignment":
        """Variables not mentioned default to false."""
        values = np.zeros(size + 1, dtype=bool)
        for lit in literals:
            var = abs(lit)
            if lit == 0 or var > size:
                raise ValueError(f"literal {lit} outside 1..{size}")
            values[var] = lit > 0
        values.flags.writeable = False
        return cls(values)

    @property
    def size(self) -> int:
        return int(self.values.shape[0]) - 1

    def value(self, lit: int) -> bool:
        return bool(self.values[lit]) if lit > 0 else not bool(self.values[-lit])

    def true_vars(self) -> List[int]:
        return [int(v) for v in np.nonzero(self.values)[0]]


@dataclass(frozen=True, eq=False)
class Encoding:
    varmap: VarMap
    hard: Tuple[Clause, ...]
    soft: Tuple[Tuple[Clause, int], ...]
    offset: int
    n_nodes: int
    cap: int
    scale_factor: int
    families: Tuple[Tuple[str, int, int], ...] = field(default=())

    @property
    def n_vars(self) -> int:
        return self.varmap.size

    @property
    def top(self) -> int:
        return sum(w for _, w in self.soft) + 1

    def family_counts(self) -> Dict[str, int]:
        return {name: end - start for name, start, end in self.families}

    def family_of(self, index: int) -> str:
        starts = [start for _, start, _ in self.families]
        pos = bisect.bisect_right(starts, index) - 1
        return self.families[pos][0]

    @cached_property
    def _flat(self) -> Tuple[np.ndarray, np.ndarray]:
        lengths = np.fromiter((len(c) for c in self.hard), dtype=np.int64, count=len(self.hard))
        literals = np.fromiter(
            chain.from_iterable(self.hard), dtype=np.int64, count=int(lengths.sum())
        )
        starts = np.zeros(len(self.hard), dtype=np.int64)
        if len(self.hard) > 1:
            starts[1:] = np.cumsum(lengths)[:-1]
        return literals, starts

    def violated_hard_clauses(self, assignment: Assignment) -> np.ndarray:
        """Indices of hard clauses falsified by ``assignment``."""
        if assignment.size != self.n_vars:
            raise EncodingError(
                f"assignment covers {assignment.size} variables, encoding has {self.n_vars}"
            )
        if not self.hard:
            return np.zeros(0, dtype=np.int64)
        literals, starts = self._flat
        satisfied = assignment.values[np.abs(literals)] == (literals > 0)
        clause_ok = np.logical_or.reduceat(satisfied, starts)
        return np.nonzero(~clause_ok)[0]

    def falsified_soft_cost(self, assignment: Assignment) -> int:
        return sum(
            w for clause, w in self.soft if not any(assignment.value(l) for l in clause)
        )

    def objective(self, assignment: Assignment) -> int:
        return self.offset - self.falsified_soft_cost(assignment)


def _sequential_counter(
    terms: Sequence[Term], bound: int, varmap: VarMap, clauses: List[Clause]
) -> List[int]:
    """Full (two-directional) sequential counter over single-literal terms.

    Returns the outputs "at least j of all terms" for j = 1..min(bound, len).
    """
    lits = [t[0] for t in terms]
    rows: List[Tuple[int, ...]] = []
    prev: List[int] = []
    for i, x in enumerate(lits, start=1):
        width = min(i, bound)
        cur: List[int] = []
        row: List[int] = []
        for j in range(1, width + 1):
            if i == 1:
                cur.append(x)
                row.append(0)
                continue
            r = varmap.new_var()
            has_prev = j <= len(prev)
            # upward: R[i-1][j] -> R[i][j];  x_i & R[i-1][j-1] -> R[i][j]
            if has_prev:
                clauses.append((-prev[j - 1], r))
            if j == 1:
                clauses.append((-x, r))
            else:
                clauses.append((-x, -prev[j - 2], r))
            # downward
            if has_prev:
                clauses.append((-r, prev[j - 1], x))
                if j > 1:
                    clauses.append((-r, prev[j - 1], prev[j - 2]))
            else:
                clauses.append((-r, x))
                if j > 1:
                    clauses.append((-r, prev[j - 2]))
            cur.append(r)
            row.append(r)
        rows.append(tuple(row))
        prev = cur
    if lits and bound > 0:
        varmap.definitions.append(CounterDefinition(tuple(terms), tuple(rows)))
    return prev


_TRUE = True
_FALSE = False
_Output = Union[int, bool]


def _counter_output(outputs: Sequence[int], bound: int, total: int, t: int) -> _Output:
    if t <= 0:
        return _TRUE
    if t <= len(outputs):
        return outputs[t - 1]
    if bound >= total:
        return _FALSE
    raise AssertionError("counter output requested beyond its bound")


def _equivalence(a: _Output, b: _Output) -> List[Clause]:
    if isinstance(a, bool) and isinstance(b, bool):
        return [] if a == b else [()]
    if isinstance(a, bool):
        a, b = b, a
    assert isinstance(a, int)
    if b is _TRUE:
        return [(a,)]
    if b is _FALSE:
        return [(-a,)]
    if a == b:
        return []
    return [(-a, b), (a, -b)]


def encode_cardinality(
    lits_left: Sequence[int],
    lits_right: Sequence[int],
    constant: int,
    varmap: Optional[VarMap] = None,
) -> List[Clause]:
    """Clauses asserting count(lits_left) = constant + count(lits_right).

    Both sides go through a sequential counter bounded by what the other side
    can reach. Impossible constants yield the empty clause.
    """
    if varmap is None:
        varmap = VarMap(start=max((abs(l) for l in chain(lits_left, lits_right)), default=0))

    left, right = list(lits_left), list(lits_right)
    bound_left = max(0, min(len(left), constant + len(right) + 1))
    bound_right = max(0, min(len(right), len(left) - constant + 1))

    clauses: List[Clause] = []
    out_left = _sequential_counter([(l,) for l in left], bound_left, varmap, clauses)
    out_right = _sequential_counter([(l,) for l in right], bound_right, varmap, clauses)

    low = min(1, 1 + constant)
    high = max(bound_left, constant + bound_right)
    for t in range(low, high + 1):
        a = _counter_output(out_left, bound_left, len(left), t)
        b = _counter_output(out_right, bound_right, len(right), t - constant)
        clauses.extend(_equivalence(a, b))
    return clauses


def _guarded_at_most_one(
    terms: Sequence[Term], guard: int, varmap: VarMap, clauses: List[Clause]
) -> None:
    """guard -> at most one term holds (upward sequential counter, bound 1)."""
    if len(terms) < 2:
        return
    outputs: List[Tuple[int, ...]] = []
    prev = 0
    for i, term in enumerate(terms):
        negated = tuple(-l for l in term)
        if prev:
            clauses.append((-guard,) + negated + (-prev,))
        if i < len(terms) - 1:
            r = varmap.new_var()
            clauses.append(negated + (r,))
            if prev:
                clauses.append((-prev, r))
            outputs.append((r,))
            prev = r
    outputs.append(())
    varmap.definitions.append(CounterDefinition(tuple(terms), tuple(outputs)))


def symmetric_cycles(nodes: Sequence[int]) -> Iterator[Tuple[int, ...]]:
    """Each undirected Hamiltonian cycle on ``nodes`` exactly once.

    The first node is fixed as start and the second node must have a lower
    index than the last one.
    """
    first, rest = nodes[0], tuple(nodes[1:])
    for perm in permutations(rest):
        if perm[0] < perm[-1]:
            yield (first,) + perm


def _chordality_clause(cycle: Tuple[int, ...], varmap: VarMap) -> Clause:
    k = len(cycle)
    consecutive = {tuple(sorted((cycle[i], cycle[(i + 1) % k]))) for i in range(k)}
    ring = tuple(-varmap.edge(a, b) for a, b in sorted(consecutive))
    chords = tuple(
        varmap.edge(a, b) for a, b in combinations(sorted(cycle), 2) if (a, b) not in consecutive
    )
    return ring + chords


def build_encoding(
    table: IntScoreTable, n_vars: int, max_vars: int = DEFAULT_MAX_VARS
) -> Encoding:
    """Translate an integer score table into hard and weighted soft clauses.

    Raises:
        EncodingError when n_vars exceeds ``max_vars`` or the table is incomplete
    """
    if n_vars != table.n_vars:
        raise EncodingError(f"table has {table.n_vars} variables, expected {n_vars}")
    if n_vars > max_vars:
        raise EncodingError(
            f"{n_vars} variables exceed the encoding limit of {max_vars} "
            "(chordality constraints grow exponentially)"
        )
    n = n_vars
    cap = min(table.max_subset_size, n)
    candidates = tuple(all_subsets(n, cap))
    for c in candidates:
        if c not in table:
            raise EncodingError(f"score table has no entry for subset {list(c)}")

    masks = [to_mask(c) for c in candidates]
    varmap = VarMap()
    varmap.candidates = candidates
    for c in candidates:
        varmap.x[c] = varmap.new_var()
    for pair in combinations(range(n), 2):
        varmap.e[pair] = varmap.new_var()
    for i, j in combinations(range(len(candidates)), 2):
        if masks[i] & masks[j]:
            varmap.s[(i, j)] = varmap.new_var()
    levels = len(candidates) // 2
    for i in range(len(candidates)):
        for level in range(levels + 1):
            varmap.leaf[(i, level)] = varmap.new_var()

    x = [varmap.x[c] for c in candidates]
    hard: List[Clause] = []
    families: List[Tuple[str, int, int]] = []

    def close_family(name: str, start: int) -> None:
        families.append((name, start, len(hard)))

    # (a) every node lies in a chosen clique
    start = len(hard)
    for node in range(n):
        hard.append(tuple(x[i] for i, m in enumerate(masks) if m >> node & 1))
    close_family("coverage", start)

    # (b) chosen cliques form an antichain
    start = len(hard)
    for j, big in enumerate(masks):
        for i in range(j):
            small = masks[i]
            if small != big and small & big == small:
                hard.append((-x[i], -x[j]))
    close_family("antichain", start)

    # (c) e_{n,m} <-> OR of x_c over candidates containing {n, m}
    start = len(hard)
    for (a, b), e in varmap.e.items():
        pair_mask = (1 << a) | (1 << b)
        containing = [x[i] for i, m in enumerate(masks) if m & pair_mask == pair_mask]
        hard.append((-e,) + tuple(containing))
        hard.extend((-xc, e) for xc in containing)
    close_family("edges", start)

    # (d) a chosen clique cannot be extended by an outside node
    start = len(hard)
    for i, c in enumerate(candidates):
        for node in range(n):
            if masks[i] >> node & 1:
                continue
            hard.append((-x[i],) + tuple(-varmap.edge(member, node) for member in c))
    close_family("non_extendability", start)

    # (e) every cycle of length >= 4 has a chord
    start = len(hard)
    for k in range(4, n + 1):
        for subset in combinations(range(n), k):
            for cycle in symmetric_cycles(subset):
                hard.append(_chordality_clause(cycle, varmap))
    close_family("chordality", start)

    # (f) s_{c,c'} -> x_c & x_c'
    start = len(hard)
    for (i, j), s in varmap.s.items():
        hard.append((-s, x[i]))
        hard.append((-s, x[j]))
    close_family("separator_support", start)

    # (g) per node: #chosen cliques containing it = 1 + #separators containing it
    start = len(hard)
    for node in range(n):
        left = [x[i] for i, m in enumerate(masks) if m >> node & 1]
        right = [
            s for (i, j), s in varmap.s.items() if (masks[i] & masks[j]) >> node & 1
        ]
        hard.extend(encode_cardinality(left, right, 1, varmap))
    close_family("balancing", start)

    # (h) forest is acyclic: every candidate is a level floor(m/2) leaf
    start = len(hard)
    neighbours: List[List[Tuple[int, int]]] = [[] for _ in candidates]
    for (i, j), s in varmap.s.items():
        neighbours[i].append((s, j))
        neighbours[j].append((s, i))
    for level in range(levels + 1):
        for i in range(len(candidates)):
            leaf = varmap.leaf[(i, level)]
            if level == 0:
                terms = tuple((s,) for s, _ in neighbours[i])
            else:
                terms = tuple((s, -varmap.leaf[(j, level - 1)]) for s, j in neighbours[i])
            varmap.definitions.append(ThresholdDefinition(leaf, terms, 2, negated=True))
            _guarded_at_most_one(terms, leaf, varmap, hard)
    for i in range(len(candidates)):
        hard.append((varmap.leaf[(i, levels)],))
    close_family("acyclicity", start)

    empty = next((k for k, clause in enumerate(hard) if not clause), None)
    if empty is not None:
        raise EncodingError("encoding produced an empty hard clause", family=None)

    soft: List[Tuple[Clause, int]] = []
    offset = 0

    def add_term(lit: int, coefficient: int) -> None:
        # objective contribution coefficient * [lit]
        nonlocal offset
        if coefficient < 0:
            soft.append(((-lit,), -coefficient))
        elif coefficient > 0:
            soft.append(((lit,), coefficient))
            offset += coefficient

    for i, c in enumerate(candidates):
        add_term(x[i], table[c])
    for (i, j), s in varmap.s.items():
        add_term(s, -table[from_mask(masks[i] & masks[j])])

    if sum(w for _, w in soft) + 1 >= INT_LIMIT:
        raise EncodingError("soft weights overflow the WCNF top weight")

    return Encoding(
        varmap=varmap,
        hard=tuple(hard),
        soft=tuple(soft),
        offset=offset,
        n_nodes=n,
        cap=cap,
        scale_factor=table.scale_factor,
        families=tuple(families),
    )


def emit_wcnf(enc: Encoding) -> str:
    """Classic DIMACS WCNF; hard clauses carry weight top = Σ soft + 1."""
    top = enc.top
    lines = [
        f"c chordnet nodes={enc.n_nodes} cap={enc.cap} scale={enc.scale_factor} "
        f"offset={enc.offset}",
        f"p wcnf {enc.n_vars} {len(enc.hard) + len(enc.soft)} {top}",
    ]
    prefix = f"{top} "
    lines.extend(prefix + " ".join(map(str, clause)) + " 0" for clause in enc.hard)
    lines.extend(f"{w} " + " ".join(map(str, clause)) + " 0" for clause, w in enc.soft)
    return "\n".join(lines) + "\n"


def write_vars_sidecar(enc: Encoding) -> str:
    """``x <id> <k> <i_1>…<i_k>``, ``e <id> <n> <m>`` and ``s <id> <c> <c'>`` lines."""
    vm = enc.varmap
    lines = [f"c chordnet nodes={enc.n_nodes} cap={enc.cap} vars={enc.n_vars}"]
    for c, var in vm.x.items():
        lines.append(f"x {var} {len(c)} " + " ".join(map(str, c)))
    for (a, b), var in vm.e.items():
        lines.append(f"e {var} {a} {b}")
    for (i, j), var in vm.s.items():
        lines.append(f"s {var} {i} {j}")
    return "\n".join(lines) + "\n"


def parse_vars_sidecar(text: str) -> Dict[str, Dict[int, Tuple[int, ...]]]:
    """Map each of ``x``, ``e``, ``s`` to {variable id: indices}.

    Raises:
        InputError on malformed lines
    """
    parsed: Dict[str, Dict[int, Tuple[int, ...]]] = {"x": {}, "e": {}, "s": {}}
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens or tokens[0] == "c":
            continue
        kind = tokens[0]
        try:
            numbers = [int(t) for t in tokens[1:]]
        except ValueError:
            raise InputError("non-integer field in vars sidecar", line=lineno)
        if kind == "x" and len(numbers) >= 3 and numbers[1] == len(numbers) - 2:
            parsed["x"][numbers[0]] = tuple(numbers[2:])
        elif kind in ("e", "s") and len(numbers) == 3:
            parsed[kind][numbers[0]] = tuple(numbers[1:])
        else:
            raise InputError(f"malformed vars sidecar line {line!r}", line=lineno)
    return parsed


def _evaluate_terms(values: np.ndarray, terms: Sequence[Term]) -> Iterator[bool]:
    for term in terms:
        yield all(values[l] if l > 0 else not values[-l] for l in term)


def derive_auxiliaries(definitions: Sequence[AuxDefinition], values: np.ndarray) -> None:
    """Set counter and leaf-level variables to the values their definitions force.

    Definitions are evaluated in order; each only reads variables defined earlier.
    """
    for definition in definitions:
        if isinstance(definition, ThresholdDefinition):
            count = sum(_evaluate_terms(values, definition.terms))
            holds = count >= definition.threshold
            values[definition.var] = holds != definition.negated
        else:
            count = 0
            for row, hit in zip(definition.outputs, _evaluate_terms(values, definition.terms)):
                count += hit
                for j, var in enumerate(row, start=1):
                    if var:
                        values[var] = count >= j


def complete_assignment(enc: Encoding, true_vars: Sequence[int]) -> Assignment:
    """Assignment with ``true_vars`` set, everything else false, auxiliaries derived."""
    values = np.zeros(enc.n_vars + 1, dtype=bool)
    for var in true_vars:
        values[var] = True
    derive_auxiliaries(enc.varmap.definitions, values)
    values.flags.writeable = False
    return Assignment(values)


def canonical_assignment(net: ChordalNetwork, enc: Encoding) -> Assignment:
    """Assignment encoding ``net``: x, e and s from the network, auxiliaries derived.

    Raises:
        EncodingError when a clique is not a candidate (e.g. over the size cap)
    """
    vm = enc.varmap
    index = {c: i for i, c in enumerate(vm.candidates)}
    true_vars = []
    for c in net.cliques:
        if c not in vm.x:
            raise EncodingError(f"clique {list(c)} is not a candidate of this encoding")
        true_vars.append(vm.x[c])
    for a, b in net.graph(enc.n_nodes).edges:
        true_vars.append(vm.edge(a, b))
    for edge in net.forest.edges:
        u, v = net.forest.endpoints(edge)
        key = tuple(sorted((index[u], index[v])))
        if key not in vm.s:
            raise EncodingError(f"forest edge {list(u)}-{list(v)} has no separator variable")
        true_vars.append(vm.s[key])  # type: ignore[index]
    return complete_assignment(enc, true_vars)


def check_hard_clauses(enc: Encoding, assignment: Assignment) -> None:
    """Raise EncodingError naming the first violated family, if any."""
    violated = enc.violated_hard_clauses(assignment)
    if violated.size == 0:
        return
    first = int(violated[0])
    family = enc.family_of(first)
    names = sorted({enc.family_of(int(k)) for k in violated}, key=FAMILIES.index)
    raise EncodingError(
        f"{violated.size} hard clauses violated, first #{first} ({family}) "
        f"{list(enc.hard[first])}; families: {', '.join(names)}",
        family=family,
    )


def verify_network(net: ChordalNetwork, n: int) -> None:
    """Independent structural verification through the chordal module.

    Raises:
        VerificationError naming the failed property
    """
    covered = set().union(*net.cliques) if net.cliques else set()
    if covered != set(range(n)):
        raise VerificationError("cliques do not cover every node", family="coverage")
    graph = graph_from_cliques(n, net.cliques)
    chordal, _ = is_chordal(graph)
    if not chordal:
        raise VerificationError("edge union is not chordal", family="chordality")
    if maximal_cliques(graph) != net.cliques:
        raise VerificationError(
            "chosen cliques are not the maximal cliques of their edge union",
            family="maximality",
        )
    if not is_acyclic(net.forest):
        raise VerificationError("separator edges contain a cycle", family="acyclicity")
    if not is_balanced(net.cliques, net.forest):
        raise VerificationError("forest violates the balancing condition", family="balancing")
    if not check_running_intersection(net.forest, net.cliques):
        raise VerificationError(
            "forest violates running intersection", family="running_intersection"
        )


def decode_model(enc: Encoding, a: Assignment, table: IntScoreTable) -> ChordalNetwork:
    """Decode a solver model into a verified network scored with ``table``.

    Raises:
        EncodingError when a hard clause is violated
        VerificationError when the decoded network fails verification
    """
    check_hard_clauses(enc, a)
    vm = enc.varmap
    cliques = [c for c, var in vm.x.items() if a.value(var)]
    pairs = [
        (vm.candidates[i], vm.candidates[j]) for (i, j), var in vm.s.items() if a.value(var)
    ]
    net = build_network(cliques, pairs, table)
    verify_network(net, enc.n_nodes)
    return net
