"""Chordal graphs, clique graphs, spanning forests and the balancing condition.

This module is the independent oracle for everything the encoder asserts:
chordality via maximum cardinality search, maximal cliques from a perfect
elimination ordering, Kruskal spanning forests of clique graphs and the
per-node balancing test.
"""

from collections import Counter, deque
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from .errors import InputError
from .nodeset import NodeSet, intersection, is_strict_subset, sorted_nodesets
from .scoring import AnyScoreTable, network_score

Edge = Tuple[int, int]


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes 0..n-1; edges stored as (i, j) with i < j."""

    n: int
    edges: FrozenSet[Edge] = frozenset()

    def __post_init__(self) -> None:
        if self.n < 0:
            raise InputError(f"node count must be nonnegative, got {self.n}")
        for i, j in self.edges:
            if not 0 <= i < j < self.n:
                raise InputError(f"invalid edge ({i}, {j}) for {self.n} nodes")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        normalized = set()
        for a, b in edges:
            if a == b:
                raise InputError(f"self-loop on node {a}")
            normalized.add((min(a, b), max(a, b)))
        return cls(n, frozenset(normalized))

    @cached_property
    def _adjacency(self) -> Tuple[FrozenSet[int], ...]:
        adj: List[Set[int]] = [set() for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return tuple(frozenset(a) for a in adj)

    def adjacency(self) -> Tuple[FrozenSet[int], ...]:
        return self._adjacency

    def sorted_edges(self) -> Tuple[Edge, ...]:
        return tuple(sorted(self.edges))


@dataclass(frozen=True)
class CliqueEdge:
    """Clique-graph edge between nodes ``u`` < ``v`` labeled by their intersection."""

    u: int
    v: int
    label: NodeSet
    weight: int


@dataclass(frozen=True)
class CliqueGraph:
    nodes: Tuple[NodeSet, ...]
    edges: Tuple[CliqueEdge, ...]


@dataclass(frozen=True)
class SpanningForest:
    """Edge subset of a clique graph; ``nodes`` are the clique graph's nodes."""

    nodes: Tuple[NodeSet, ...]
    edges: Tuple[CliqueEdge, ...] = ()

    @property
    def weight(self) -> int:
        return sum(e.weight for e in self.edges)

    def endpoints(self, edge: CliqueEdge) -> Tuple[NodeSet, NodeSet]:
        return self.nodes[edge.u], self.nodes[edge.v]


@dataclass(frozen=True)
class ChordalNetwork:
    """Maximal cliques, a junction forest over them and the decomposable score."""

    cliques: FrozenSet[NodeSet]
    forest: SpanningForest
    separators: Tuple[NodeSet, ...]
    score: Union[float, int]

    def sorted_cliques(self) -> Tuple[NodeSet, ...]:
        return sorted_nodesets(self.cliques)

    def graph(self, n: int) -> Graph:
        return graph_from_cliques(n, self.cliques)


class UnionFind:
    """Disjoint sets with path halving."""

    def __init__(self, size: int):
        self.parent = list(range(size))

    def root(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def join(self, a: int, b: int) -> bool:
        ra, rb = self.root(a), self.root(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def pair_list(n: int) -> Tuple[Edge, ...]:
    """All node pairs in lexicographic order; bit b of a graph index is pair b."""
    return tuple(combinations(range(n), 2))


def graph_from_index(n: int, index: int, pairs: Optional[Sequence[Edge]] = None) -> Graph:
    pairs = pairs if pairs is not None else pair_list(n)
    return Graph(n, frozenset(p for b, p in enumerate(pairs) if index >> b & 1))


def graph_from_cliques(n: int, cliques: Iterable[NodeSet]) -> Graph:
    edges = set()
    for c in cliques:
        edges.update(combinations(sorted(c), 2))
    return Graph(n, frozenset(edges))


def is_chordal(g: Graph) -> Tuple[bool, Optional[Tuple[int, ...]]]:
    """Maximum cardinality search plus a zero fill-in check.

    Returns:
        (True, perfect elimination ordering) or (False, None)
    """
    adj = g.adjacency()
    weight = [0] * g.n
    numbered = [False] * g.n
    order: List[int] = []
    for _ in range(g.n):
        v = -1
        for u in range(g.n):
            if not numbered[u] and (v < 0 or weight[u] > weight[v]):
                v = u
        numbered[v] = True
        order.append(v)
        for u in adj[v]:
            if not numbered[u]:
                weight[u] += 1

    position = {v: i for i, v in enumerate(order)}
    for v in order:
        earlier = [u for u in adj[v] if position[u] < position[v]]
        if len(earlier) < 2:
            continue
        latest = max(earlier, key=position.__getitem__)
        neighbours = adj[latest]
        if any(w != latest and w not in neighbours for w in earlier):
            return False, None

    return True, tuple(reversed(order))


def _bron_kerbosch(adj: Sequence[FrozenSet[int]], n: int) -> Set[NodeSet]:
    found: Set[NodeSet] = set()
    stack = [(frozenset(), frozenset(range(n)), frozenset())]
    while stack:
        r, p, x = stack.pop()
        if not p and not x:
            found.add(tuple(sorted(r)))
            continue
        pivot = max(p | x, key=lambda u: len(adj[u] & p))
        for v in sorted(p - adj[pivot]):
            stack.append((r | {v}, p & adj[v], x & adj[v]))
            p = p - {v}
            x = x | {v}
    return found


def maximal_cliques(g: Graph) -> FrozenSet[NodeSet]:
    """Inclusion-maximal cliques; chordal graphs have at most n of them."""
    if g.n == 0:
        return frozenset()
    chordal, peo = is_chordal(g)
    adj = g.adjacency()
    if not chordal or peo is None:
        return frozenset(_bron_kerbosch(adj, g.n))

    rank = {v: i for i, v in enumerate(peo)}
    candidates = {
        tuple(sorted({v} | {u for u in adj[v] if rank[u] > rank[v]})) for v in peo
    }
    as_sets = {c: set(c) for c in candidates}
    return frozenset(
        c for c in candidates
        if not any(len(d) > len(c) and as_sets[c] <= as_sets[d] for d in candidates)
    )


def clique_graph(cliques: Iterable[NodeSet]) -> CliqueGraph:
    """Clique graph: edge for every intersecting pair, labeled and weighted.

    Raises:
        InputError when two cliques are comparable
    """
    nodes = sorted_nodesets(set(tuple(c) for c in cliques))
    edges = []
    for u, v in combinations(range(len(nodes)), 2):
        a, b = nodes[u], nodes[v]
        if is_strict_subset(a, b) or is_strict_subset(b, a):
            raise InputError(f"cliques {a} and {b} are comparable")
        label = intersection(a, b)
        if label:
            edges.append(CliqueEdge(u, v, label, len(label)))
    return CliqueGraph(nodes=nodes, edges=tuple(edges))


def max_weight_spanning_forest(cg: CliqueGraph) -> SpanningForest:
    """Kruskal on negated weights; ties broken by endpoint indices."""
    uf = UnionFind(len(cg.nodes))
    chosen = []
    for edge in sorted(cg.edges, key=lambda e: (-e.weight, e.u, e.v)):
        if uf.join(edge.u, edge.v):
            chosen.append(edge)
    return SpanningForest(nodes=cg.nodes, edges=tuple(chosen))


def separators_of(forest: SpanningForest) -> Tuple[NodeSet, ...]:
    """Edge labels with multiplicity, canonically sorted."""
    return sorted_nodesets(e.label for e in forest.edges)


def is_balanced(cliques: Iterable[NodeSet], forest: SpanningForest) -> bool:
    """Every node lies in exactly one more clique than forest labels."""
    in_cliques = Counter(n for c in cliques for n in c)
    in_labels = Counter(n for e in forest.edges for n in e.label)
    return all(
        in_cliques[n] - in_labels[n] == 1 for n in set(in_cliques) | set(in_labels)
    )


def is_acyclic(forest: SpanningForest) -> bool:
    uf = UnionFind(len(forest.nodes))
    return all(uf.join(e.u, e.v) for e in forest.edges)


def _forest_neighbours(forest: SpanningForest) -> Dict[int, List[int]]:
    neighbours: Dict[int, List[int]] = {i: [] for i in range(len(forest.nodes))}
    for e in forest.edges:
        neighbours[e.u].append(e.v)
        neighbours[e.v].append(e.u)
    return neighbours


def check_running_intersection(
    forest: SpanningForest, cliques: Optional[Iterable[NodeSet]] = None
) -> bool:
    """Junction-forest property: c∩c' lies in every clique on the path between them.

    When ``cliques`` is given the forest must span exactly those cliques; a
    clique missing from the forest has no path to check and fails instead.
    """
    if cliques is not None and set(forest.nodes) != set(cliques):
        return False
    if not is_acyclic(forest):
        return False
    neighbours = _forest_neighbours(forest)
    sets = [set(c) for c in forest.nodes]

    for start in range(len(forest.nodes)):
        # BFS tree rooted at start; walk back from each reachable clique
        parent = {start: -1}
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for nxt in neighbours[cur]:
                if nxt not in parent:
                    parent[nxt] = cur
                    queue.append(nxt)
        for target in parent:
            if target <= start:
                continue
            shared = sets[start] & sets[target]
            step = parent[target]
            while step != start:
                if not shared <= sets[step]:
                    return False
                step = parent[step]
    return True


def network_from_graph(g: Graph, table: AnyScoreTable) -> ChordalNetwork:
    """Maximal cliques → clique graph → Kruskal forest → separators → score.

    Raises:
        InputError when ``g`` is not chordal
        MissingScoreError when a clique exceeds the table's size cap
    """
    chordal, _ = is_chordal(g)
    if not chordal:
        raise InputError("graph is not chordal")
    cliques = maximal_cliques(g)
    forest = max_weight_spanning_forest(clique_graph(cliques))
    separators = separators_of(forest)
    score = network_score(table, cliques, separators)
    return ChordalNetwork(
        cliques=cliques, forest=forest, separators=separators, score=score
    )


def build_network(
    cliques: Iterable[NodeSet],
    forest_pairs: Iterable[Tuple[NodeSet, NodeSet]],
    table: AnyScoreTable,
) -> ChordalNetwork:
    """Assemble a network from explicit cliques and forest endpoint pairs.

    No validity checks beyond label computation; use ``solve.certify``.
    """
    nodes = sorted_nodesets(set(tuple(c) for c in cliques))
    index = {c: i for i, c in enumerate(nodes)}
    edges = []
    for a, b in forest_pairs:
        u, v = sorted((index[tuple(a)], index[tuple(b)]))
        label = intersection(nodes[u], nodes[v])
        edges.append(CliqueEdge(u, v, label, len(label)))
    edges.sort(key=lambda e: (e.u, e.v))
    forest = SpanningForest(nodes=nodes, edges=tuple(edges))
    separators = separators_of(forest)
    return ChordalNetwork(
        cliques=frozenset(nodes),
        forest=forest,
        separators=separators,
        score=network_score(table, nodes, separators),
    )


def random_chordal(n: int, density: float = 0.5, seed: int = 0) -> Graph:
    """Random chordal graph built along a random elimination ordering.

    Each vertex, when inserted, is joined to a random clique of the vertices
    already placed, so it is simplicial and the reverse insertion order is a
    perfect elimination ordering.
    """
    if n < 1:
        raise InputError("random_chordal needs n ≥ 1")
    rng = np.random.default_rng(seed)
    adj: List[Set[int]] = [set() for _ in range(n)]
    edges = set()
    placed: List[int] = []
    for v in (int(x) for x in rng.permutation(n)):
        if placed and rng.random() < density:
            anchor = placed[int(rng.integers(len(placed)))]
            clique = [anchor]
            for u in (int(x) for x in rng.permutation(placed)):
                if u != anchor and rng.random() < density and all(w in adj[u] for w in clique):
                    clique.append(u)
            for u in clique:
                adj[u].add(v)
                adj[v].add(u)
                edges.add((min(u, v), max(u, v)))
        placed.append(v)
    return Graph(n, frozenset(edges))


def sorted_forest_pairs(forest: SpanningForest) -> List[Tuple[NodeSet, NodeSet]]:
    return sorted(
        (forest.nodes[e.u], forest.nodes[e.v]) for e in forest.edges
    )


def count_chordal(n: int) -> int:
    """Number of labeled chordal graphs on n nodes, by exhaustion."""
    pairs = pair_list(n)
    return sum(
        1 for index in range(1 << len(pairs)) if is_chordal(graph_from_index(n, index, pairs))[0]
    )
