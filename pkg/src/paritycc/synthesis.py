"""CNOT + rotation circuits for sigma_z-product constraints on Steiner trees.

Angle conventions: ``RZ(t) = exp(-i t Z / 2)``, ``RX(t) = exp(-i t X / 2)``
and ``EXCHANGE(t) = exp(i t (XX + YY) / 2)``.  A constraint operator
``exp(i a prod Z)`` is therefore realized as a CNOT fan-in onto a root,
``RZ(root, -2a)``, and the mirrored fan-out.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .device import DeviceGraph
from .steiner import SteinerTree, steiner_tree

CX, RZ, RX, EXCH = "cx", "rz", "rx", "exch"


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.kind in (CX, EXCH):
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError(f"{self.kind} needs two distinct qubits, got {self.qubits}")
        elif self.kind in (RZ, RX):
            if len(self.qubits) != 1:
                raise ValueError(f"{self.kind} acts on one qubit")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")

    @property
    def is_two_qubit(self) -> bool:
        return len(self.qubits) == 2

    def inverse(self) -> "Gate":
        if self.kind == CX:
            return self
        return Gate(self.kind, self.qubits, -self.angle)

    def __str__(self):
        if self.angle is None:
            return f"{self.kind} {self.qubits}"
        return f"{self.kind}({self.angle:.6g}) {self.qubits}"


def CNOT(control: int, target: int) -> Gate:
    return Gate(CX, (control, target))


def RZ_(q: int, angle: float) -> Gate:
    return Gate(RZ, (q,), float(angle))


def RX_(q: int, angle: float) -> Gate:
    return Gate(RX, (q,), float(angle))


def EXCHANGE(a: int, b: int, angle: float) -> Gate:
    return Gate(EXCH, (a, b), float(angle))


def asap_steps(gates: Sequence[Gate], two_qubit_only: bool = False) -> list[int]:
    """Greedy as-soon-as-possible time step of each gate (1-based).

    Per-qubit gate order is kept; gates on disjoint qubits share steps.  With
    ``two_qubit_only`` single-qubit gates get step 0 and take no time.
    """
    free: dict[int, int] = {}
    steps = []
    for g in gates:
        if two_qubit_only and not g.is_two_qubit:
            steps.append(0)
            continue
        s = 1 + max((free.get(q, 0) for q in g.qubits), default=0)
        for q in g.qubits:
            free[q] = s
        steps.append(s)
    return steps


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list; depth and counts are derived, never stored."""

    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        return Circuit(self.gates + other.gates)

    @cached_property
    def depth(self) -> int:
        return max(asap_steps(self.gates), default=0)

    @cached_property
    def cnot_depth(self) -> int:
        """Depth counting only two-qubit gates."""
        return max(asap_steps(self.gates, two_qubit_only=True), default=0)

    @cached_property
    def cnot_count(self) -> int:
        return sum(1 for g in self.gates if g.kind == CX)

    def count(self, kind: str) -> int:
        return sum(1 for g in self.gates if g.kind == kind)

    @property
    def qubits(self) -> set[int]:
        return {q for g in self.gates for q in g.qubits}

    def inverse(self) -> "Circuit":
        return Circuit(g.inverse() for g in reversed(self.gates))


def schedule(c: Circuit) -> tuple[Circuit, list[list[Gate]]]:
    """ASAP schedule; returns the circuit reordered by time step and the steps."""
    steps = asap_steps(c.gates)
    layers: list[list[Gate]] = [[] for _ in range(max(steps, default=0))]
    for g, s in zip(c.gates, steps):
        layers[s - 1].append(g)
    return Circuit(g for layer in layers for g in layer), layers


def commute(a: Gate, b: Gate) -> bool:
    """Sufficient commutation test for the gate set used here."""
    shared = set(a.qubits) & set(b.qubits)
    if not shared:
        return True
    if a == b:
        return True
    if a.kind == CX and b.kind == CX:
        # shared controls or shared targets only
        return a.qubits[0] != b.qubits[1] and a.qubits[1] != b.qubits[0]
    if a.kind == CX or b.kind == CX:
        cx, other = (a, b) if a.kind == CX else (b, a)
        if other.kind == RZ:
            return other.qubits[0] == cx.qubits[0]
        if other.kind == RX:
            return other.qubits[0] == cx.qubits[1]
        return False
    if a.kind == b.kind and a.kind in (RZ, RX):
        return True
    if a.kind == EXCH and b.kind == EXCH:
        return set(a.qubits) == set(b.qubits)
    return False


def rearrange(c: Circuit) -> Circuit:
    """Commutation-aware compaction.

    Each gate is placed in the earliest time step that follows every earlier
    gate it does not commute with and where its qubits are idle.  Only
    commuting pairs change relative order, so the unitary is unchanged.
    """
    occupied: dict[int, set[int]] = {}
    placed: list[tuple[Gate, int]] = []
    for g in c.gates:
        lo = 1
        for h, s in placed:
            if s >= lo and not commute(g, h):
                lo = s + 1
        s = lo
        while any(s in occupied.get(q, ()) for q in g.qubits):
            s += 1
        for q in g.qubits:
            occupied.setdefault(q, set()).add(s)
        placed.append((g, s))
    order = sorted(range(len(placed)), key=lambda i: (placed[i][1], i))
    return Circuit(placed[i][0] for i in order)


# -- tree helpers -------------------------------------------------------------


class _Rooted:
    def __init__(self, tree: SteinerTree, root: int):
        self.root = root
        self.parent: dict[int, int | None] = {root: None}
        self.children: dict[int, list[int]] = {n: [] for n in tree.nodes}
        self.depth = {root: 0}
        order = [root]
        for u in order:
            for v in tree.adjacency.get(u, []):
                if v not in self.parent:
                    self.parent[v] = u
                    self.depth[v] = self.depth[u] + 1
                    self.children[u].append(v)
                    order.append(v)
        self.order = order
        self.height: dict[int, int] = {}
        for u in reversed(order):
            self.height[u] = 1 + max((self.height[c] for c in self.children[u]), default=-1)


def choose_root(tree: SteinerTree, candidates: Iterable[int]) -> int:
    """Candidate node with the smallest tree eccentricity (ties: smallest id)."""
    cands = sorted(set(candidates))
    if not cands:
        raise ValueError("no root candidates")
    for c in cands:
        if c not in tree.nodes:
            raise ValueError(f"root candidate {c} is not in the tree")
    return min(cands, key=lambda n: (tree.eccentricity(n), n))


def _fan_in(r: _Rooted) -> list[Gate]:
    """Parity collection onto the root, children ordered earliest-ready first.

    A node may forward its parity once all children have reported; feeding
    the children in order of readiness minimizes that time.  Gates are
    emitted in time order.
    """
    ready: dict[int, int] = {}
    timed: list[tuple[int, int, Gate]] = []
    for u in reversed(r.order):
        t = 0
        for c in sorted(r.children[u], key=lambda c: (ready[c], c)):
            t = max(t, ready[c]) + 1
            timed.append((t, c, CNOT(c, u)))
        ready[u] = t
    timed.sort(key=lambda x: (x[0], x[1]))
    return [g for _, _, g in timed]


def _check_tree(tree: SteinerTree):
    if not tree.is_valid():
        raise ValueError("input is not a valid Steiner tree")


def synth_local(tree: SteinerTree, root: int, angle: float) -> Circuit:
    """``exp(i angle prod_{m in tree} Z_m)`` using CNOTs along the tree edges.

    Every tree node is a constraint qubit.  Uses ``2 (|T| - 1)`` CNOTs.
    """
    _check_tree(tree)
    if root not in tree.nodes:
        raise ValueError(f"root {root} is not in the tree")
    pre = _fan_in(_Rooted(tree, root))
    return Circuit(pre + [RZ_(root, -2.0 * angle)] + pre[::-1])


def _bridged_half(r: _Rooted, bridged: set[int], strategy: str) -> list[Gate]:
    ready_full: dict[int, int] = {}
    for u in reversed(r.order):
        t = 0
        for c in sorted(r.children[u], key=lambda c: (ready_full[c], c)):
            t = max(t, ready_full[c]) + 1
        ready_full[u] = t
    dups = []
    for u in bridged:
        kids = r.children[u]
        if strategy == "deep":
            w = min(kids, key=lambda c: (-r.height[c], c))
        else:
            w = min(kids, key=lambda c: (ready_full[c], c))
        dups.append((r.depth[u], u, w))
    # leaf-ward duplications first, so no parity is copied twice
    dups.sort(key=lambda x: (-x[0], x[1]))
    gates = [CNOT(u, w) for _, u, w in dups] + _fan_in(r)
    return list(rearrange(Circuit(gates)).gates)


def synth_bridged(
    tree: SteinerTree,
    constraint: Iterable[int],
    angle: float,
    root: int | None = None,
) -> Circuit:
    """``exp(i angle prod_{m in C} Z_m)`` on a tree that may contain extra nodes.

    The full-tree fan-in is wrapped with one duplication CNOT per bridged
    (non-constraint) node, copying its parity onto a child so that it
    reaches the root twice and cancels.  Uses ``4|T| - 2|C| - 2`` CNOTs.
    The post-rotation half is the exact mirror of the pre-rotation half.

    Without an explicit ``root``, the near-central tree nodes and two child
    selection rules are tried and the shallowest circuit is kept.
    """
    _check_tree(tree)
    cset = set(constraint)
    missing = cset - tree.nodes
    if missing:
        raise ValueError(f"constraint nodes {sorted(missing)} are not in the tree")
    bridged = set(tree.nodes) - cset
    if not bridged:
        r = root if root is not None else choose_root(tree, cset)
        return synth_local(tree, r, angle)
    if root is not None:
        roots = [root]
    else:
        ecc = {n: tree.eccentricity(n) for n in tree.nodes}
        best = min(ecc.values())
        roots = sorted(n for n in tree.nodes if ecc[n] <= best + 1)
    best_circ = None
    best_key = None
    for rt in roots:
        r = _Rooted(tree, rt)
        for strategy in ("early", "deep"):
            pre = _bridged_half(r, bridged, strategy)
            circ = Circuit(pre + [RZ_(rt, -2.0 * angle)] + pre[::-1])
            key = (circ.cnot_depth, circ.depth)
            if best_key is None or key < best_key:
                best_circ, best_key = circ, key
    return best_circ


def synth_constraint(device: DeviceGraph, nodes: Iterable[int], angle: float) -> tuple[Circuit, SteinerTree]:
    """Tree + circuit for a constraint placed on ``nodes``."""
    nodes = frozenset(nodes)
    tree = steiner_tree(device, nodes)
    if len(nodes) == 1:
        (q,) = nodes
        return Circuit([RZ_(q, -2.0 * angle)]), tree
    return synth_bridged(tree, nodes, angle), tree


def local_depth(tree: SteinerTree) -> int:
    """CNOT depth of the best full-tree (all nodes in the constraint) circuit."""
    return min(synth_local(tree, n, 0.1).cnot_depth for n in tree.nodes)


def bridged_cnots(tree_size_nodes: int, n_constraint: int) -> int:
    return 4 * tree_size_nodes - 2 * n_constraint - 2


def swap_gates(a: int, b: int) -> list[Gate]:
    return [CNOT(a, b), CNOT(b, a), CNOT(a, b)]


def synth_swap_baseline(
    device: DeviceGraph,
    constraint: Iterable[int],
    angle: float,
    tree: SteinerTree | None = None,
) -> Circuit:
    """SWAP-routing comparison circuit, with no gate cancellation.

    Constraint qubits are walked toward the tree centre (shallowest first)
    until they form a connected cluster, the constraint is applied locally,
    and the SWAPs are undone.  Each SWAP costs three CNOTs.
    """
    cset = frozenset(constraint)
    if tree is None:
        tree = steiner_tree(device, cset)
    if len(cset) == 1:
        (q,) = cset
        return Circuit([RZ_(q, -2.0 * angle)])
    root = choose_root(tree, tree.nodes)
    r = _Rooted(tree, root)
    occupied: set[int] = set()
    swaps: list[Gate] = []
    for t in sorted(cset, key=lambda n: (r.depth[n], n)):
        pos = t
        while pos != root and r.parent[pos] not in occupied:
            up = r.parent[pos]
            swaps.extend(swap_gates(pos, up))
            pos = up
        occupied.add(pos)
    cluster_edges = frozenset(e for e in tree.tree_edges if e[0] in occupied and e[1] in occupied)
    cluster = SteinerTree(cluster_edges, frozenset(occupied))
    core = synth_local(cluster, root, angle)
    return Circuit(swaps) + core + Circuit(swaps[::-1])


def path_constraint(l: int) -> tuple[DeviceGraph, SteinerTree, frozenset[int]]:
    """Two constraint qubits at distance ``l`` on a chain of ``l + 1`` nodes."""
    dev = DeviceGraph.chain(l + 1)
    cset = frozenset({0, l})
    return dev, steiner_tree(dev, cset), cset
