"""Tests for encoder module."""

from itertools import combinations, permutations, product

import numpy as np
import pytest

from chordnet.chordal import (
    Graph,
    count_chordal,
    graph_from_index,
    is_chordal,
    network_from_graph,
    pair_list,
    sorted_forest_pairs,
)
from chordnet.encoder import (
    FAMILIES,
    Assignment,
    Encoding,
    VarMap,
    build_encoding,
    canonical_assignment,
    check_hard_clauses,
    complete_assignment,
    decode_model,
    derive_auxiliaries,
    emit_wcnf,
    encode_cardinality,
    parse_vars_sidecar,
    symmetric_cycles,
    write_vars_sidecar,
)
from chordnet.errors import EncodingError, InputError
from chordnet.scoring import IntScoreTable, integer_scale


def _int_table(random_table, n, seed=0, cap=None):
    return integer_scale(random_table(n, seed, cap), 1000)


def _complete(n):
    return Graph.from_edges(n, combinations(range(n), 2))


def _satisfied(clauses, values):
    return all(any(values[l] if l > 0 else not values[-l] for l in c) for c in clauses)


def _assert_sound(enc, table, graph):
    net = network_from_graph(graph, table)
    assignment = canonical_assignment(net, enc)

    assert enc.violated_hard_clauses(assignment).size == 0
    assert enc.objective(assignment) == net.score


def test_family_order_is_fixed(random_table):
    enc = build_encoding(_int_table(random_table, 4), 4)

    assert tuple(name for name, _, _ in enc.families) == FAMILIES
    assert sum(enc.family_counts().values()) == len(enc.hard)


def test_family_counts_for_three_nodes(random_table):
    enc = build_encoding(_int_table(random_table, 3), 3)
    counts = enc.family_counts()

    assert counts["coverage"] == 3
    assert counts["antichain"] == 12
    assert counts["chordality"] == 0
    assert len(enc.varmap.x) == 7
    assert len(enc.varmap.e) == 3


@pytest.mark.parametrize("n,expected", [(4, 3), (5, 27)])
def test_chordality_clause_counts(random_table, n, expected):
    enc = build_encoding(_int_table(random_table, n), n)

    assert enc.family_counts()["chordality"] == expected


@pytest.mark.parametrize("k", [4, 5, 6])
def test_symmetric_cycles_lists_each_cycle_once(k):
    nodes = tuple(range(k))
    expected = set()
    for perm in permutations(nodes):
        expected.add(frozenset(frozenset((perm[i], perm[(i + 1) % k])) for i in range(k)))

    produced = [
        frozenset(frozenset((c[i], c[(i + 1) % k])) for i in range(k))
        for c in symmetric_cycles(nodes)
    ]

    assert len(produced) == len(set(produced))
    assert set(produced) == expected


def test_cardinality_single_literal_is_unit():
    assert encode_cardinality([1], [], 1) == [(1,)]


def test_cardinality_impossible_constant_is_empty_clause():
    assert encode_cardinality([], [1], 1) == [()]


@pytest.mark.parametrize(
    "n_left,n_right,constant",
    [(2, 0, 1), (3, 0, 1), (3, 2, 1), (4, 3, 1), (2, 4, -1), (4, 1, 3), (3, 3, 0), (1, 3, 2)],
)
def test_cardinality_canonical_extension_satisfies(n_left, n_right, constant):
    left = list(range(1, n_left + 1))
    right = list(range(n_left + 1, n_left + n_right + 1))
    varmap = VarMap(start=n_left + n_right)
    clauses = encode_cardinality(left, right, constant, varmap)

    for bits in product([False, True], repeat=n_left + n_right):
        values = np.zeros(varmap.size + 1, dtype=bool)
        values[1:n_left + n_right + 1] = bits
        derive_auxiliaries(varmap.definitions, values)
        holds = sum(bits[:n_left]) == constant + sum(bits[n_left:])
        assert _satisfied(clauses, values) == holds


@pytest.mark.parametrize(
    "n_left,n_right,constant", [(3, 0, 1), (3, 2, 1), (4, 3, 1), (2, 4, -1), (3, 3, 0)]
)
def test_cardinality_rejects_every_wrong_count(n_left, n_right, constant):
    solvers = pytest.importorskip("pysat.solvers")
    left = list(range(1, n_left + 1))
    right = list(range(n_left + 1, n_left + n_right + 1))
    clauses = encode_cardinality(left, right, constant, VarMap(start=n_left + n_right))

    with solvers.Glucose3(bootstrap_with=[list(c) for c in clauses]) as solver:
        for bits in product([False, True], repeat=n_left + n_right):
            assumptions = [v if b else -v for v, b in zip(left + right, bits)]
            holds = sum(bits[:n_left]) == constant + sum(bits[n_left:])
            assert solver.solve(assumptions=assumptions) == holds


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_every_chordal_graph_satisfies_its_encoding(random_table, n):
    table = _int_table(random_table, n, seed=n)
    enc = build_encoding(table, n)
    pairs = pair_list(n)

    for index in range(1 << len(pairs)):
        graph = graph_from_index(n, index, pairs)
        if is_chordal(graph)[0]:
            _assert_sound(enc, table, graph)


def test_sampled_five_node_chordal_graphs_satisfy_encoding(random_table):
    table = _int_table(random_table, 5, seed=5)
    enc = build_encoding(table, 5)
    pairs = pair_list(5)
    rng = np.random.default_rng(11)

    checked = 0
    while checked < 40:
        graph = graph_from_index(5, int(rng.integers(0, 1 << len(pairs))), pairs)
        if is_chordal(graph)[0]:
            _assert_sound(enc, table, graph)
            checked += 1


@pytest.mark.parametrize("cycle", list(symmetric_cycles((0, 1, 2, 3))))
def test_chordless_square_violates_chordality(random_table, cycle):
    enc = build_encoding(_int_table(random_table, 4), 4)
    vm = enc.varmap
    ring = [tuple(sorted((cycle[i], cycle[(i + 1) % 4]))) for i in range(4)]
    assignment = complete_assignment(enc, [vm.x[e] for e in ring] + [vm.e[e] for e in ring])

    with pytest.raises(EncodingError) as exc_info:
        check_hard_clauses(enc, assignment)

    assert exc_info.value.family == "chordality"


def test_nested_cliques_violate_antichain(random_table):
    table = _int_table(random_table, 3)
    enc = build_encoding(table, 3)
    net = network_from_graph(_complete(3), table)
    canonical = canonical_assignment(net, enc)
    assignment = complete_assignment(enc, canonical.true_vars() + [enc.varmap.x[(0, 1)]])

    with pytest.raises(EncodingError) as exc_info:
        decode_model(enc, assignment, table)

    assert exc_info.value.family == "antichain"


def test_single_clique_assignment(random_table):
    table = _int_table(random_table, 3)
    enc = build_encoding(table, 3)
    vm = enc.varmap
    assignment = canonical_assignment(network_from_graph(_complete(3), table), enc)

    assert [c for c, v in vm.x.items() if assignment.value(v)] == [(0, 1, 2)]
    assert all(assignment.value(v) for v in vm.e.values())
    assert not any(assignment.value(v) for v in vm.s.values())
    assert enc.objective(assignment) == table[(0, 1, 2)]


def test_decode_inverts_canonical_assignment(random_table):
    table = _int_table(random_table, 5, seed=2)
    enc = build_encoding(table, 5)
    graph = Graph.from_edges(5, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (3, 4)])
    net = network_from_graph(graph, table)

    decoded = decode_model(enc, canonical_assignment(net, enc), table)

    assert decoded.cliques == net.cliques
    assert decoded.separators == net.separators
    assert sorted_forest_pairs(decoded.forest) == sorted_forest_pairs(net.forest)
    assert decoded.score == net.score


def test_clique_over_cap_is_not_a_candidate(random_table):
    capped = build_encoding(_int_table(random_table, 3, cap=2), 3)
    net = network_from_graph(_complete(3), _int_table(random_table, 3))

    assert capped.cap == 2
    with pytest.raises(EncodingError, match="not a candidate"):
        canonical_assignment(net, capped)


def test_planted_separator_cycle_violates_acyclicity(random_table):
    enc = build_encoding(_int_table(random_table, 3), 3)
    vm = enc.varmap
    index = {c: i for i, c in enumerate(vm.candidates)}
    ring = [((0, 1), (1, 2)), ((0, 1), (0, 2)), ((0, 2), (1, 2))]
    s_vars = [vm.s[tuple(sorted((index[a], index[b])))] for a, b in ring]

    assignment = complete_assignment(enc, s_vars)
    violated = {enc.family_of(int(k)) for k in enc.violated_hard_clauses(assignment)}

    assert "acyclicity" in violated


def test_acyclicity_clauses_admit_trees_but_not_cycles(random_table):
    solvers = pytest.importorskip("pysat.solvers")
    enc = build_encoding(_int_table(random_table, 3), 3)
    vm = enc.varmap
    index = {c: i for i, c in enumerate(vm.candidates)}
    ring = [((0, 1), (1, 2)), ((0, 1), (0, 2)), ((0, 2), (1, 2))]
    s_vars = [vm.s[tuple(sorted((index[a], index[b])))] for a, b in ring]
    _, start, end = next(f for f in enc.families if f[0] == "acyclicity")
    clauses = [list(c) for c in enc.hard[start:end]]

    with solvers.Glucose3(bootstrap_with=clauses) as solver:
        assert solver.solve(assumptions=s_vars) is False
        assert solver.solve(assumptions=s_vars[:2] + [-s_vars[2]]) is True


@pytest.mark.parametrize("n", [3, 4])
def test_models_decode_to_exactly_the_chordal_graphs(random_table, n):
    solvers = pytest.importorskip("pysat.solvers")
    table = _int_table(random_table, n)
    enc = build_encoding(table, n)
    projected = set(enc.varmap.x.values()) | set(enc.varmap.s.values())

    graphs = set()
    with solvers.Glucose3(bootstrap_with=[list(c) for c in enc.hard]) as solver:
        while solver.solve():
            model = solver.get_model()
            assignment = Assignment.from_literals(
                enc.n_vars, [l for l in model if abs(l) <= enc.n_vars]
            )
            net = decode_model(enc, assignment, table)
            graphs.add(net.graph(n).edges)
            solver.add_clause([-l for l in model if abs(l) in projected])

    assert len(graphs) == count_chordal(n)


def test_wcnf_header_and_weights():
    vm = VarMap(start=2)
    enc = Encoding(
        varmap=vm,
        hard=((1, 2), (-1,)),
        soft=(((2,), 5),),
        offset=5,
        n_nodes=1,
        cap=1,
        scale_factor=1000,
    )

    lines = emit_wcnf(enc).splitlines()

    assert lines[0].startswith("c chordnet")
    assert lines[1] == "p wcnf 2 3 6"
    assert lines[2:] == ["6 1 2 0", "6 -1 0", "5 2 0"]


def test_wcnf_is_deterministic(random_table):
    table = _int_table(random_table, 4, seed=3)

    assert emit_wcnf(build_encoding(table, 4)) == emit_wcnf(build_encoding(table, 4))


def test_six_variable_instance_is_megabyte_scale(random_table):
    enc = build_encoding(_int_table(random_table, 6), 6)
    size = len(emit_wcnf(enc).encode("utf-8"))

    assert 312_000 <= size <= 31_200_000


def test_objective_is_offset_minus_falsified_cost(random_table):
    table = _int_table(random_table, 3)
    enc = build_encoding(table, 3)
    empty = complete_assignment(enc, [])

    assert enc.objective(empty) == enc.offset - enc.falsified_soft_cost(empty)
    assert enc.objective(empty) == 0


def test_vars_sidecar_round_trip(random_table):
    enc = build_encoding(_int_table(random_table, 3), 3)
    vm = enc.varmap

    parsed = parse_vars_sidecar(write_vars_sidecar(enc))

    assert parsed["x"] == {v: c for c, v in vm.x.items()}
    assert parsed["e"] == {v: pair for pair, v in vm.e.items()}
    assert parsed["s"] == {v: pair for pair, v in vm.s.items()}


def test_vars_sidecar_rejects_bad_arity():
    with pytest.raises(InputError, match="line 2"):
        parse_vars_sidecar("c header\nx 1 2 0\n")


def test_encoding_rejects_too_many_variables():
    table = IntScoreTable(n_vars=11, entries={}, scale_factor=1000, max_subset_size=11)

    with pytest.raises(EncodingError, match="limit of 10"):
        build_encoding(table, 11)


def test_encoding_rejects_incomplete_table(random_table):
    table = _int_table(random_table, 3)
    del table.entries[(0, 2)]

    with pytest.raises(EncodingError, match=r"\[0, 2\]"):
        build_encoding(table, 3)


def test_encoding_rejects_variable_mismatch(random_table):
    with pytest.raises(EncodingError):
        build_encoding(_int_table(random_table, 3), 4)
