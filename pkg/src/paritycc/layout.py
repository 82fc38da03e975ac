"""Placement of parity qubits and local search over layout and basis choice."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Callable

from .basis import ConstraintBasis
from .device import DeviceGraph
from .errors import MoveRejected, PlacementError
from .gf2 import IncrementalBasis
from .problem import Constraint, HCBOProblem
from .steiner import SteinerTree, steiner_tree
from .synthesis import Circuit, bridged_cnots, synth_constraint

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 10_000
DEFAULT_RESTARTS = 8
COST_MODES = ("cnot-first", "depth-first")


@dataclass(frozen=True)
class Layout:
    """Injective map from parity qubit id to device node."""

    assignment: dict[int, int]

    def __post_init__(self):
        if len(set(self.assignment.values())) != len(self.assignment):
            raise ValueError("layout is not injective")

    def __getitem__(self, q: int) -> int:
        return self.assignment[q]

    def occupant(self, node: int) -> int | None:
        return self.inverse.get(node)

    @property
    def inverse(self) -> dict[int, int]:
        inv = self.__dict__.get("_inv")
        if inv is None:
            inv = {n: q for q, n in self.assignment.items()}
            object.__setattr__(self, "_inv", inv)
        return inv

    def nodes_of(self, qubits) -> frozenset[int]:
        return frozenset(self.assignment[q] for q in qubits)

    def swapped(self, a: int, b: int) -> "Layout":
        new = dict(self.assignment)
        new[a], new[b] = self.assignment[b], self.assignment[a]
        return Layout(new)

    def moved(self, q: int, node: int) -> "Layout":
        other = self.occupant(node)
        if other is not None:
            return self.swapped(q, other)
        new = dict(self.assignment)
        new[q] = node
        return Layout(new)


def locality_violations(layout: Layout, groups: list[list[int]], device: DeviceGraph) -> list[tuple[int, int]]:
    """Exchange pairs of polynomial constraints that are not on a device edge."""
    bad = []
    for g in groups:
        for a, b in zip(g[:-1], g[1:]):
            if not device.has_edge(layout[a], layout[b]):
                bad.append((a, b))
    return bad


def constraint_cost(tree: SteinerTree, n_constraint: int) -> int:
    """CNOTs of the bridged implementation of one constraint."""
    if n_constraint <= 1:
        return 0
    return bridged_cnots(len(tree.nodes), n_constraint)


def _structure_circuit(device: DeviceGraph, nodes: frozenset[int]) -> Circuit:
    cache = device.__dict__.setdefault("_circuit_cache", {})
    circ = cache.get(nodes)
    if circ is None:
        circ, _ = synth_constraint(device, nodes, 1.0)
        cache[nodes] = circ
    return circ


@dataclass(frozen=True)
class CompilationState:
    problem: HCBOProblem
    device: DeviceGraph
    basis: ConstraintBasis
    layout: Layout
    trees: tuple[SteinerTree, ...] = field(default=(), compare=False)
    cost: tuple[int, int] = field(default=(0, 0), compare=False)

    @classmethod
    def build(cls, problem, device, basis, layout) -> "CompilationState":
        trees = tuple(
            steiner_tree(device, layout.nodes_of(c.qubits)) for c in basis.constraints
        )
        st = cls(problem, device, basis, layout, trees)
        object.__setattr__(st, "cost", compute_cost(st))
        return st

    @property
    def groups(self) -> list[list[int]]:
        return self.problem.polynomial_groups()

    def constraint_nodes(self, i: int) -> frozenset[int]:
        return self.layout.nodes_of(self.basis.constraints[i].qubits)

    def is_local(self, i: int) -> bool:
        return len(self.trees[i].nodes) == len(self.basis.constraints[i])

    def check(self):
        """Re-verify the state invariants (used by tests)."""
        for i, c in enumerate(self.basis.constraints):
            t = self.trees[i]
            assert t.terminals == self.constraint_nodes(i)
            assert t.is_valid()
        assert not locality_violations(self.layout, self.groups, self.device)
        assert self.cost == compute_cost(self)


def compute_cost(state: CompilationState) -> tuple[int, int]:
    """``(total CNOTs, estimated depth)`` of one problem layer's constraints.

    The depth is the ASAP depth of all constraint circuits run back to back,
    so constraints on disjoint qubits overlap.
    """
    total = 0
    gates = []
    for c, t in zip(state.basis.constraints, state.trees):
        total += constraint_cost(t, len(c))
        gates.extend(_structure_circuit(state.device, t.terminals).gates)
    return total, Circuit(gates).depth


cost = compute_cost


def _cost_key(c: tuple[int, int], mode: str):
    return c if mode == "cnot-first" else (c[1], c[0])


def _retree(state: CompilationState, layout: Layout, moved: set[int]) -> CompilationState:
    trees = list(state.trees)
    for i, c in enumerate(state.basis.constraints):
        if c.qubits & moved:
            trees[i] = steiner_tree(state.device, layout.nodes_of(c.qubits))
    st = CompilationState(state.problem, state.device, state.basis, layout, tuple(trees))
    object.__setattr__(st, "cost", compute_cost(st))
    return st


def relocate(state: CompilationState, qubit: int, node: int) -> CompilationState:
    """Move ``qubit`` to ``node``, swapping with its occupant if there is one.

    Raises:
        MoveRejected: the move would pull a polynomial exchange pair apart.
    """
    if state.layout[qubit] == node:
        return state
    other = state.layout.occupant(node)
    new = state.layout.moved(qubit, node)
    bad = locality_violations(new, state.groups, state.device)
    if bad:
        raise MoveRejected(f"exchange pairs {bad} would leave device edges")
    moved = {qubit} if other is None else {qubit, other}
    return _retree(state, new, moved)


def swap_move(state: CompilationState, qubit_a: int, qubit_b: int) -> CompilationState:
    """Exchange the positions of two placed qubits."""
    if qubit_a == qubit_b:
        return state
    return relocate(state, qubit_a, state.layout[qubit_b])


def basis_move(state: CompilationState, i: int, j: int) -> CompilationState:
    """Replace constraint ``i`` by its product with constraint ``j``."""
    if i == j:
        raise ValueError("basis_move needs two different rows")
    cs = list(state.basis.constraints)
    cs[i] = cs[i] * cs[j]
    basis = state.basis.replace(cs)
    trees = list(state.trees)
    trees[i] = steiner_tree(state.device, state.layout.nodes_of(cs[i].qubits))
    st = CompilationState(state.problem, state.device, basis, state.layout, tuple(trees))
    object.__setattr__(st, "cost", compute_cost(st))
    return st


# -- initial placement ------------------------------------------------------


def _find_path(device: DeviceGraph, free: set[int], length: int, rng: random.Random | None) -> list[int] | None:
    starts = sorted(free)
    if rng is not None:
        rng.shuffle(starts)

    def dfs(path):
        if len(path) == length:
            return path
        nbrs = [v for v in device.neighbors(path[-1]) if v in free and v not in path]
        if rng is not None:
            rng.shuffle(nbrs)
        for v in nbrs:
            got = dfs(path + [v])
            if got:
                return got
        return None

    for s in starts:
        got = dfs([s])
        if got:
            return got
    return None


def _place_groups(problem: HCBOProblem, device: DeviceGraph, rng: random.Random | None) -> dict[int, int]:
    assignment: dict[int, int] = {}
    free = set(device.nodes)
    groups = sorted(problem.polynomial_groups(), key=lambda g: -len(g))
    for g in groups:
        path = _find_path(device, free, len(g), rng)
        if path is None:
            raise PlacementError(
                f"no free path of {len(g)} adjacent nodes for a polynomial constraint"
            )
        for q, n in zip(g, path):
            assignment[q] = n
            free.discard(n)
    return assignment


def initial_layout(
    problem: HCBOProblem,
    device: DeviceGraph,
    basis: ConstraintBasis,
    rng: random.Random | None = None,
) -> Layout:
    """Greedy placement, or a random feasible one when ``rng`` is given.

    Polynomial groups go first as contiguous device paths.  The greedy
    variant then adds qubits by affinity (shared constraints, then shared
    logical indices with already placed qubits), each at the free node
    closest to its placed partners.
    """
    physical = [q for q in basis.physical_qubits()]
    if len(physical) > len(device):
        raise PlacementError(f"{len(physical)} qubits do not fit on {len(device)} device nodes")
    assignment = _place_groups(problem, device, rng)
    free = sorted(set(device.nodes) - set(assignment.values()))
    rest = [q.id for q in physical if q.id not in assignment]
    if rng is not None:
        rng.shuffle(free)
        for q, n in zip(rest, free):
            assignment[q] = n
        return Layout(assignment)

    partners: dict[int, dict[int, int]] = {q: {} for q in rest}
    for c in basis.constraints:
        for q in c.qubits:
            if q in partners:
                for p in c.qubits:
                    if p != q:
                        partners[q][p] = partners[q].get(p, 0) + 1
    labels = {q.id: q.label for q in basis.qubits}
    free_set = set(free)
    unplaced = set(rest)
    while unplaced:
        placed = set(assignment)

        def affinity(q):
            shared = sum(w for p, w in partners[q].items() if p in placed)
            overlap = sum(len(labels[q] & labels[p]) for p in placed)
            return (-shared, -overlap, -sum(partners[q].values()), q)

        q = min(unplaced, key=affinity)
        anchors = [assignment[p] for p in partners[q] if p in placed]
        if not anchors:
            anchors = [assignment[p] for p in placed]

        def closeness(n):
            return (sum(device.distance(n, a) for a in anchors), n)

        node = min(free_set, key=closeness)
        assignment[q] = node
        free_set.discard(node)
        unplaced.discard(q)
    return Layout(assignment)


# -- search ---------------------------------------------------------------


@dataclass
class SearchResult:
    state: CompilationState
    trace: list[dict]
    evaluations: int
    initial_cost: tuple[int, int]


def _propose(state: CompilationState, rng: random.Random, qubits: list[int]):
    n_c = len(state.basis.constraints)
    if n_c >= 2 and rng.random() < 0.5:
        i, j = rng.sample(range(n_c), 2)
        return ("basis", i, j), lambda: basis_move(state, i, j)
    q = rng.choice(qubits)
    node = rng.choice(state.device.nodes)
    while node == state.layout[q] and len(state.device) > 1:
        node = rng.choice(state.device.nodes)
    return ("move", q, node), lambda: relocate(state, q, node)


def _climb(
    state: CompilationState,
    rng: random.Random,
    budget: int,
    mode: str,
    restart: int,
    trace: list[dict],
    on_accept: Callable | None = None,
) -> tuple[CompilationState, int]:
    qubits = sorted(state.layout.assignment)
    used = 0
    while used < budget:
        move, apply = _propose(state, rng, qubits)
        used += 1
        try:
            cand = apply()
        except MoveRejected:
            continue
        if _cost_key(cand.cost, mode) < _cost_key(state.cost, mode):
            state = cand
            entry = {
                "restart": restart,
                "evaluation": used,
                "move": list(move),
                "cnots": state.cost[0],
                "depth": state.cost[1],
            }
            trace.append(entry)
            if on_accept is not None:
                on_accept(entry)
    return state, used


def local_search(
    problem: HCBOProblem,
    device: DeviceGraph,
    basis: ConstraintBasis,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
    restarts: int = DEFAULT_RESTARTS,
    mode: str = "cnot-first",
    on_accept: Callable | None = None,
) -> SearchResult:
    """First-improvement hill climbing over qubit moves and basis row products.

    The budget (number of evaluated moves) is split evenly over the
    restarts.  Restart 0 begins at the greedy placement, later restarts at
    random feasible placements.  Only strict improvements of the cost
    (compared lexicographically in ``mode`` order) are accepted, so the
    result is reproducible for a given seed.

    Raises:
        PlacementError: polynomial constraints cannot be placed adjacently.
    """
    if mode not in COST_MODES:
        raise ValueError(f"cost mode must be one of {COST_MODES}")
    rng = random.Random(seed)
    start = CompilationState.build(problem, device, basis, initial_layout(problem, device, basis))
    trace: list[dict] = []
    all_local = all(start.is_local(i) for i in range(len(basis.constraints)))
    if mode == "cnot-first" and all_local and not basis.ancillas:
        # greedy short basis + all local: CNOT count is already minimal
        return SearchResult(start, trace, 0, start.cost)
    restarts = max(1, restarts)
    per = budget // restarts
    extra = budget - per * restarts
    best = None
    evaluations = 0
    for r in range(restarts):
        if r == 0:
            st = start
        else:
            st = CompilationState.build(problem, device, basis, initial_layout(problem, device, basis, rng))
        st, used = _climb(st, rng, per + (extra if r == 0 else 0), mode, r, trace, on_accept)
        evaluations += used
        log.debug("restart %d: cost %s", r, st.cost)
        if best is None or _cost_key(st.cost, mode) < _cost_key(best.cost, mode):
            best = st
    return SearchResult(best, trace, evaluations, start.cost)


def basis_rank(state: CompilationState) -> int:
    b = IncrementalBasis(state.basis.n_cols)
    for c in state.basis.constraints:
        b.add(c.mask)
    return len(b)
