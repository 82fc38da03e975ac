import math
import random

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paritycc.device import DeviceGraph
from paritycc.oracle import assert_equiv, circuit_unitary, constraint_target
from paritycc.steiner import SteinerTree, steiner_tree
from paritycc.synthesis import (
    CNOT,
    CX,
    EXCHANGE,
    RX_,
    RZ,
    RZ_,
    Circuit,
    Gate,
    asap_steps,
    bridged_cnots,
    choose_root,
    commute,
    local_depth,
    path_constraint,
    rearrange,
    schedule,
    synth_bridged,
    synth_constraint,
    synth_local,
    synth_swap_baseline,
)


def matches_target(circ: Circuit, nodes, cset, angle) -> float:
    reg = sorted(nodes)
    axis = {q: k for k, q in enumerate(reg)}
    want = constraint_target([axis[q] for q in cset], len(reg), angle)
    ok, dev = assert_equiv(circuit_unitary(circ, reg), want)
    assert ok, dev
    return dev


def random_tree(rng: random.Random, n: int):
    g = nx.random_labeled_tree(n, seed=rng.randint(0, 10**6))
    edges = frozenset(tuple(sorted(e)) for e in g.edges)
    leaves = [v for v in g if g.degree(v) == 1]
    inner = [v for v in g if g.degree(v) > 1]
    cset = set(leaves) | set(rng.sample(inner, rng.randint(0, len(inner))))
    return edges, frozenset(g.nodes), frozenset(cset)


def test_gate_validation():
    with pytest.raises(ValueError):
        CNOT(1, 1)
    with pytest.raises(ValueError):
        Gate("cz", (0, 1))
    with pytest.raises(ValueError):
        Gate(RZ, (0, 1), 0.1)
    assert RZ_(0, 0.5).inverse() == RZ_(0, -0.5)
    assert CNOT(0, 1).inverse() == CNOT(0, 1)


def test_depth_counts():
    c = Circuit([CNOT(0, 1), RZ_(2, 0.1), CNOT(2, 3), CNOT(1, 2), RZ_(1, 0.2)])
    assert asap_steps(c.gates) == [1, 1, 2, 3, 4]
    assert c.depth == 4
    assert c.cnot_depth == 2
    assert c.cnot_count == 3 and c.count(RZ) == 2
    ordered, layers = schedule(c)
    assert [len(l) for l in layers] == [2, 1, 1, 1]
    assert np.allclose(circuit_unitary(ordered, 4), circuit_unitary(c, 4))


def test_local_three_qubit():
    tree = SteinerTree(frozenset({(0, 1), (1, 2)}), frozenset({0, 1, 2}))
    c = synth_local(tree, 1, 0.3)
    assert c.cnot_count == 4
    assert c.cnot_depth == 4
    matches_target(c, tree.nodes, tree.terminals, 0.3)


def test_bridged_five_node_four_constraint():
    dev = DeviceGraph.chain(5)
    cset = {0, 1, 3, 4}
    c, tree = synth_constraint(dev, cset, 0.7)
    assert tree.size == 4 and len(tree.nodes) == 5
    assert c.cnot_count == 10 == bridged_cnots(5, 4)
    matches_target(c, tree.nodes, cset, 0.7)


@pytest.mark.parametrize("l", range(1, 9))
def test_path_counts_and_depths(l):
    dev, tree, cset = path_constraint(l)
    b = synth_bridged(tree, cset, 0.41)
    s = synth_swap_baseline(dev, cset, 0.41)
    assert b.cnot_count == 2 + 4 * (l - 1)
    assert s.cnot_count == 2 + 6 * (l - 1)
    bound = 2 * math.ceil((l + 1) / 2) + 4
    slack = 0 if l == 1 else (2 if l < 5 else 0)
    assert b.cnot_depth <= bound + slack
    assert s.cnot_depth == 6 * math.ceil((l + 1) / 2) - 4
    matches_target(b, tree.nodes, cset, 0.41)
    matches_target(s, tree.nodes, cset, 0.41)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 10))
def test_random_trees_bridged(seed, n):
    rng = random.Random(seed)
    edges, nodes, cset = random_tree(rng, n)
    tree = SteinerTree(edges, cset)
    assert tree.is_valid()
    angle = rng.uniform(-np.pi, np.pi)
    c = synth_bridged(tree, cset, angle)
    assert c.cnot_count == 4 * n - 2 * len(cset) - 2
    assert c.cnot_depth <= local_depth(SteinerTree(edges, nodes)) + 4
    assert all(g.kind != CX or frozenset(sorted(g.qubits)) in {frozenset(e) for e in edges} for g in c.gates)
    matches_target(c, nodes, cset, angle)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 9))
def test_random_trees_swap_baseline(seed, n):
    rng = random.Random(seed)
    edges, nodes, cset = random_tree(rng, n)
    dev = DeviceGraph(sorted(nodes), sorted(edges))
    tree = SteinerTree(edges, cset)
    c = synth_swap_baseline(dev, cset, 0.9, tree)
    matches_target(c, nodes, cset, 0.9)
    assert c.cnot_count >= synth_bridged(tree, cset, 0.9).cnot_count


def test_explicit_root_and_root_errors():
    dev, tree, cset = path_constraint(4)
    for root in sorted(tree.nodes):
        matches_target(synth_bridged(tree, cset, 0.2, root=root), tree.nodes, cset, 0.2)
    with pytest.raises(ValueError):
        choose_root(tree, [99])
    with pytest.raises(ValueError):
        choose_root(tree, [])
    with pytest.raises(ValueError):
        synth_local(tree, 99, 0.1)
    with pytest.raises(ValueError):
        synth_bridged(tree, {0, 99}, 0.1)


def test_invalid_tree_rejected():
    bad = SteinerTree(frozenset({(0, 1), (1, 2), (0, 2)}), frozenset({0, 1, 2}))
    with pytest.raises(ValueError):
        synth_local(bad, 0, 0.1)


def test_single_qubit_constraint():
    c, tree = synth_constraint(DeviceGraph.chain(3), {1}, 0.25)
    assert c.gates == (RZ_(1, -0.5),)
    matches_target(c, {1}, {1}, 0.25)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("czxe"), st.integers(0, 3), st.integers(0, 3)), max_size=25))
def test_rearrange_preserves_unitary(spec):
    gates = []
    for i, (kind, a, b) in enumerate(spec):
        t = 0.1 * (i + 1)
        if kind in "ce" and a == b:
            continue
        gates.append({"c": CNOT, "e": EXCHANGE}[kind](a, b, *([t] if kind == "e" else [])) if kind in "ce" else (RZ_ if kind == "z" else RX_)(a, t))
    c = Circuit(gates)
    r = rearrange(c)
    assert sorted(map(str, r.gates)) == sorted(map(str, c.gates))
    assert r.depth <= c.depth
    assert np.allclose(circuit_unitary(r, 4), circuit_unitary(c, 4))


@settings(max_examples=200)
@given(st.sampled_from("czxe"), st.sampled_from("czxe"), st.permutations([0, 1, 2]), st.booleans())
def test_commute_is_sound(k1, k2, perm, share_all):
    def make(kind, qs):
        if kind == "c":
            return CNOT(*qs)
        if kind == "e":
            return EXCHANGE(*qs, 0.3)
        return (RZ_ if kind == "z" else RX_)(qs[0], 0.7)

    a = make(k1, (perm[0], perm[1]))
    b = make(k2, (perm[1], perm[0]) if share_all else (perm[1], perm[2]))
    if commute(a, b):
        ua = circuit_unitary(Circuit([a]), 3)
        ub = circuit_unitary(Circuit([b]), 3)
        assert np.allclose(ua @ ub, ub @ ua)


def test_grid_constraint_uses_device_edges():
    dev = DeviceGraph.grid(4, 4)
    cset = {0, 3, 12, 15}
    c, tree = synth_constraint(dev, cset, 0.5)
    assert tree is steiner_tree(dev, cset)
    for g in c.gates:
        if g.kind == CX:
            assert dev.has_edge(*g.qubits)
    assert c.cnot_count == bridged_cnots(len(tree.nodes), 4)
