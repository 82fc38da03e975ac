"""Steiner trees on device graphs.

Three routes are available:

* rectilinear constructions for 3 and 4 terminals on obstacle-free grid
  patches (median star, and the central-rectangle construction),
* a metric-closure MST approximation (plus shortest-path-heuristic
  variants) for arbitrary graphs,
* an exact Dreyfus-Wagner search, used on the Hanan grid as an oracle.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

from .device import DeviceGraph
from .errors import DeviceError, FallbackSignal

Edge = tuple[int, int]


def _edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class SteinerTree:
    tree_edges: frozenset[Edge]
    terminals: frozenset[int]

    @property
    def size(self) -> int:
        return len(self.tree_edges)

    @cached_property
    def nodes(self) -> frozenset[int]:
        if not self.tree_edges:
            return frozenset(self.terminals)
        return frozenset(n for e in self.tree_edges for n in e)

    @cached_property
    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {n: [] for n in self.nodes}
        for u, v in self.tree_edges:
            adj[u].append(v)
            adj[v].append(u)
        for n in adj:
            adj[n].sort()
        return adj

    def is_valid(self) -> bool:
        """Connected, acyclic, spans the terminals, and every leaf is a terminal."""
        nodes = self.nodes
        if not self.terminals <= nodes:
            return False
        if len(self.tree_edges) != len(nodes) - 1:
            return False
        start = min(nodes)
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in self.adjacency[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if seen != nodes:
            return False
        return all(len(self.adjacency[n]) > 1 or n in self.terminals for n in nodes) or len(nodes) == 1

    def path(self, a: int, b: int) -> list[int]:
        parent = {a: None}
        stack = [a]
        while stack:
            u = stack.pop()
            for v in self.adjacency[u]:
                if v not in parent:
                    parent[v] = u
                    stack.append(v)
        out = [b]
        while out[-1] != a:
            out.append(parent[out[-1]])
        return out[::-1]

    def eccentricity(self, n: int) -> int:
        dist = self.distances_from(n)
        return max(dist.values())

    def distances_from(self, n: int) -> dict[int, int]:
        dist = {n: 0}
        stack = [n]
        while stack:
            u = stack.pop()
            for v in self.adjacency[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    stack.append(v)
        return dist

    def max_terminal_distance(self) -> int:
        """Largest in-tree distance between two terminals."""
        best = 0
        for t in self.terminals:
            d = self.distances_from(t)
            best = max(best, max(d[s] for s in self.terminals))
        return best

    def sort_key(self):
        return (self.size, self.max_terminal_distance(), sorted(self.tree_edges))


def _finalize(edges: Iterable[Edge], terminals: frozenset[int]) -> SteinerTree:
    """Spanning tree of the union of ``edges`` with non-terminal leaves pruned."""
    adj: dict[int, set[int]] = {t: set() for t in terminals}
    for u, v in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    root = min(terminals)
    seen = {root}
    order = [root]
    tree: set[Edge] = set()
    for u in order:  # BFS, smallest neighbour first
        for v in sorted(adj[u]):
            if v not in seen:
                seen.add(v)
                order.append(v)
                tree.add(_edge(u, v))
    if not terminals <= seen:
        raise FallbackSignal("edge set does not connect all terminals")
    deg: dict[int, int] = {}
    for u, v in tree:
        deg[u] = deg.get(u, 0) + 1
        deg[v] = deg.get(v, 0) + 1
    leaves = [n for n, d in deg.items() if d == 1 and n not in terminals]
    while leaves:
        n = leaves.pop()
        e = next(e for e in tree if n in e)
        tree.discard(e)
        other = e[0] if e[1] == n else e[1]
        deg[n] = 0
        deg[other] -= 1
        if deg[other] == 1 and other not in terminals:
            leaves.append(other)
    return SteinerTree(frozenset(tree), terminals)


# -- rectilinear fast paths ---------------------------------------------------


def _straight(device: DeviceGraph, a: tuple[int, int], b: tuple[int, int]) -> list[Edge]:
    """Device edges of the axis-parallel segment from ``a`` to ``b``."""
    (x0, y0), (x1, y1) = a, b
    if x0 != x1 and y0 != y1:
        raise ValueError("segment is not axis-parallel")
    steps = max(abs(x1 - x0), abs(y1 - y0))
    dx = (x1 > x0) - (x1 < x0)
    dy = (y1 > y0) - (y1 < y0)
    out = []
    prev = device.node_at(x0, y0)
    if prev is None:
        raise FallbackSignal(f"no node at {(x0, y0)}")
    for k in range(1, steps + 1):
        cur = device.node_at(x0 + k * dx, y0 + k * dy)
        if cur is None or not device.has_edge(prev, cur):
            raise FallbackSignal(f"grid segment {a}->{b} is blocked")
        out.append(_edge(prev, cur))
        prev = cur
    return out


def _l_path(device: DeviceGraph, a, b) -> list[Edge]:
    """Rectilinear L path from ``a`` to ``b``: horizontal first, else vertical first."""
    corner_h = (b[0], a[1])
    corner_v = (a[0], b[1])
    try:
        return _straight(device, a, corner_h) + _straight(device, corner_h, b)
    except FallbackSignal:
        return _straight(device, a, corner_v) + _straight(device, corner_v, b)


def _coords_of(device: DeviceGraph, terminals: Sequence[int]) -> list[tuple[int, int]]:
    pts = []
    for t in terminals:
        if t not in device.coords:
            raise FallbackSignal(f"node {t} has no coordinates")
        pts.append(device.coords[t])
    if len(set(pts)) != len(pts):
        raise ValueError("terminals must be distinct")
    return pts


def rect_steiner_3(device: DeviceGraph, terminals: Sequence[int]) -> SteinerTree:
    """Median-star rectilinear tree for three terminals.

    Each terminal is joined to the point of medians by an L path, giving
    ``(x3 - x1) + (y3 - y1)`` edges for sorted coordinates.

    Raises:
        FallbackSignal: a needed grid node or edge is missing.
    """
    if len(terminals) != 3:
        raise ValueError("rect_steiner_3 needs exactly three terminals")
    pts = _coords_of(device, terminals)
    mx = sorted(p[0] for p in pts)[1]
    my = sorted(p[1] for p in pts)[1]
    edges: set[Edge] = set()
    for p in pts:
        edges.update(_l_path(device, p, (mx, my)))
    if device.node_at(mx, my) is None:
        raise FallbackSignal("median point missing")
    return _finalize(edges, frozenset(terminals))


def steiner_size_3(xs: Sequence[int], ys: Sequence[int]) -> int:
    xs, ys = sorted(xs), sorted(ys)
    return (xs[2] - xs[0]) + (ys[2] - ys[0])


def steiner_bound_4(xs: Sequence[int], ys: Sequence[int]) -> int:
    """Upper bound for four terminals: half perimeter plus the shorter central side."""
    xs, ys = sorted(xs), sorted(ys)
    return (xs[3] - xs[0]) + (ys[3] - ys[0]) + min(ys[2] - ys[1], xs[2] - xs[1])


def _connect_corners(device: DeviceGraph, used: set[tuple[int, int]], x2, x3, y2, y3) -> list[Edge]:
    bl, br, tl, tr = (x2, y2), (x3, y2), (x2, y3), (x3, y3)
    used = set(used)
    if len(used) <= 1:
        return []
    w, h = x3 - x2, y3 - y2
    if len(used) == 4:
        # both short sides plus one long side
        if w <= h:
            sides = [(bl, br), (tl, tr), (bl, tl)]
            alt = [(bl, br), (tl, tr), (br, tr)]
        else:
            sides = [(bl, tl), (br, tr), (bl, br)]
            alt = [(bl, tl), (br, tr), (tl, tr)]
        for option in (sides, alt):
            try:
                return [e for a, b in option for e in _straight(device, a, b)]
            except FallbackSignal:
                continue
        raise FallbackSignal("central rectangle blocked")
    # at most three distinct corners: join them through one shared corner
    pts = sorted(used)
    if len(pts) == 2:
        a, b = pts
        if a[0] == b[0] or a[1] == b[1]:
            return _straight(device, a, b)
        return _l_path(device, a, b)
    for hub in pts:
        others = [p for p in pts if p != hub]
        if all(p[0] == hub[0] or p[1] == hub[1] for p in others):
            return [e for p in others for e in _straight(device, hub, p)]
    raise FallbackSignal("degenerate corner set")  # pragma: no cover


def rect_steiner_4(device: DeviceGraph, terminals: Sequence[int]) -> SteinerTree:
    """Central-rectangle rectilinear tree for four terminals.

    Every terminal is joined to its nearest corner of the rectangle spanned
    by the second and third sorted x and y coordinates.  If all four corners
    are used, they are linked by both short sides and one long side,
    otherwise by one connection per direction.

    Raises:
        FallbackSignal: a needed grid node or edge is missing.
    """
    if len(terminals) != 4:
        raise ValueError("rect_steiner_4 needs exactly four terminals")
    pts = _coords_of(device, terminals)
    xs = sorted(p[0] for p in pts)
    ys = sorted(p[1] for p in pts)
    x2, x3, y2, y3 = xs[1], xs[2], ys[1], ys[2]
    edges: set[Edge] = set()
    used = set()
    for p in pts:
        cx = x2 if abs(p[0] - x2) <= abs(p[0] - x3) else x3
        cy = y2 if abs(p[1] - y2) <= abs(p[1] - y3) else y3
        used.add((cx, cy))
        if (cx, cy) != p:
            edges.update(_l_path(device, p, (cx, cy)))
    edges.update(_connect_corners(device, used, x2, x3, y2, y3))
    return _finalize(edges, frozenset(terminals))


# -- general graphs -----------------------------------------------------------


def _path_edges(device: DeviceGraph, a: int, b: int) -> list[Edge]:
    p = device.shortest_path(a, b)
    return [_edge(u, v) for u, v in zip(p[:-1], p[1:])]


def _kmb(device: DeviceGraph, terms: list[int]) -> SteinerTree:
    """Metric-closure MST, expanded to shortest paths, re-spanned and pruned."""
    closure = sorted(
        (device.distance(u, v), u, v) for u, v in combinations(terms, 2)
    )
    parent = {t: t for t in terms}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges: set[Edge] = set()
    for _, u, v in closure:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            edges.update(_path_edges(device, u, v))
    return _finalize(edges, frozenset(terms))


def _sph(device: DeviceGraph, terms: list[int], start: int) -> SteinerTree:
    """Shortest-path heuristic: repeatedly attach the closest terminal to the tree."""
    in_tree = {start}
    edges: set[Edge] = set()
    remaining = set(terms) - {start}
    while remaining:
        best = None
        for t in sorted(remaining):
            dist = device.distances_from(t)
            for n in sorted(in_tree):
                cand = (dist[n], t, n)
                if best is None or cand < best:
                    best = cand
        _, t, n = best
        path = device.shortest_path(t, n)
        in_tree.update(path)
        edges.update(_edge(u, v) for u, v in zip(path[:-1], path[1:]))
        remaining.discard(t)
    return _finalize(edges, frozenset(terms))


def general_steiner(device: DeviceGraph, terminals: Iterable[int]) -> SteinerTree:
    """Approximate Steiner tree on an arbitrary connected device.

    Runs the metric-closure MST construction (at most twice the optimum) and
    the shortest-path heuristic from each terminal, and keeps the best tree.

    Raises:
        DeviceError: a terminal is not a device node.
    """
    terms = sorted(set(terminals))
    for t in terms:
        if t not in device:
            raise DeviceError(f"terminal {t} is not a device node")
    if len(terms) == 1:
        return SteinerTree(frozenset(), frozenset(terms))
    if len(terms) == 2:
        return SteinerTree(frozenset(_path_edges(device, *terms)), frozenset(terms))
    candidates = [_kmb(device, terms)]
    candidates.extend(_sph(device, terms, s) for s in terms)
    return min(candidates, key=SteinerTree.sort_key)


def steiner_tree(device: DeviceGraph, terminals: Iterable[int]) -> SteinerTree:
    """Best available tree: grid fast path when it applies, else the general route.

    Results are cached on the device, keyed by the terminal set.
    """
    key = frozenset(terminals)
    cached = device.steiner_cache.get(key)
    if cached is not None:
        return cached
    terms = sorted(key)
    candidates = []
    if len(terms) in (3, 4) and all(t in device.coords for t in terms):
        fast = rect_steiner_3 if len(terms) == 3 else rect_steiner_4
        try:
            candidates.append(fast(device, terms))
        except FallbackSignal:
            pass
    candidates.append(general_steiner(device, terms))
    best = min(candidates, key=SteinerTree.sort_key)
    device.steiner_cache[key] = best
    return best


def distance(device: DeviceGraph, a: int, b: int) -> int:
    return device.distance(a, b)


# -- exact search -------------------------------------------------------------


def dreyfus_wagner(
    adj: dict, terminals: Sequence, weight=lambda u, v: 1
) -> int:
    """Exact minimum Steiner tree weight by the Dreyfus-Wagner recursion.

    ``adj`` maps each node to its neighbours.  Exponential in the number of
    terminals, polynomial in graph size; meant for small instances.
    """
    terms = list(dict.fromkeys(terminals))
    if len(terms) <= 1:
        return 0
    nodes = list(adj)
    idx = {n: i for i, n in enumerate(nodes)}
    inf = float("inf")

    def dijkstra(src):
        dist = [inf] * len(nodes)
        dist[idx[src]] = 0
        heap = [(0, idx[src])]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for v in adj[nodes[u]]:
                nd = d + weight(nodes[u], v)
                if nd < dist[idx[v]]:
                    dist[idx[v]] = nd
                    heapq.heappush(heap, (nd, idx[v]))
        return dist

    dist = [dijkstra(n) for n in nodes]
    k = len(terms) - 1
    base = terms[:-1]
    last = terms[-1]
    # cost[mask][v]: min tree spanning base subset `mask` plus node v
    cost = {}
    for i, t in enumerate(base):
        cost[1 << i] = [dist[idx[t]][v] for v in range(len(nodes))]
    for size in range(2, k + 1):
        for subset in combinations(range(k), size):
            mask = 0
            for i in subset:
                mask |= 1 << i
            # merge at u
            merged = [inf] * len(nodes)
            sub = (mask - 1) & mask
            while sub:
                if sub & (1 << subset[0]):  # each split once
                    a, b = cost[sub], cost[mask ^ sub]
                    for u in range(len(nodes)):
                        s = a[u] + b[u]
                        if s < merged[u]:
                            merged[u] = s
                sub = (sub - 1) & mask
            cost[mask] = [
                min(merged[u] + dist[u][v] for u in range(len(nodes))) for v in range(len(nodes))
            ]
    return cost[(1 << k) - 1][idx[last]]


def hanan_grid(points: Sequence[tuple[int, int]]) -> tuple[dict, callable]:
    """Hanan grid of ``points`` as an adjacency map with Manhattan edge weights."""
    xs = sorted({p[0] for p in points})
    ys = sorted({p[1] for p in points})
    adj: dict = {}
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            nb = []
            if i > 0:
                nb.append((xs[i - 1], y))
            if i + 1 < len(xs):
                nb.append((xs[i + 1], y))
            if j > 0:
                nb.append((x, ys[j - 1]))
            if j + 1 < len(ys):
                nb.append((x, ys[j + 1]))
            adj[(x, y)] = nb

    def w(a, b):
        return abs(a[0] - b[0]) + abs(a[1] - b[1])

    return adj, w


def hanan_exact_size(points: Sequence[tuple[int, int]]) -> int:
    """Minimum rectilinear Steiner tree length, searched on the Hanan grid."""
    adj, w = hanan_grid(points)
    return dreyfus_wagner(adj, list(points), w)


def exact_steiner_size(device: DeviceGraph, terminals: Sequence[int]) -> int:
    """Exact minimum tree size on the full device graph (small inputs only)."""
    adj = {n: device.neighbors(n) for n in device.nodes}
    return dreyfus_wagner(adj, list(terminals))
