"""Device connectivity graphs."""

from __future__ import annotations

import json
import re
from collections import deque
from functools import cached_property
from pathlib import Path
from typing import Iterable

import jsonschema
import networkx as nx

from .errors import DeviceError, DisconnectedDeviceError

DEVICE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "device connectivity graph",
    "type": "object",
    "required": ["nodes", "edges"],
    "additionalProperties": False,
    "properties": {
        "nodes": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "integer"},
                    "x": {"type": "integer"},
                    "y": {"type": "integer"},
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        },
    },
}


class DeviceGraph:
    """Connected undirected graph of hardware qubits.

    Nodes are integers; nodes may carry integer ``(x, y)`` coordinates, which
    enables the rectilinear Steiner fast paths.  Missing nodes or edges of an
    otherwise regular grid act as obstacles.
    """

    def __init__(
        self,
        nodes: Iterable[int],
        edges: Iterable[tuple[int, int]],
        coords: dict[int, tuple[int, int]] | None = None,
        name: str = "",
    ):
        g = nx.Graph()
        g.add_nodes_from(sorted(int(n) for n in nodes))
        for u, v in edges:
            u, v = int(u), int(v)
            if u not in g or v not in g:
                raise DeviceError(f"edge ({u}, {v}) references an unknown node")
            if u == v:
                raise DeviceError(f"self-loop on node {u}")
            g.add_edge(u, v)
        if g.number_of_nodes() == 0:
            raise DeviceError("device has no nodes")
        if not nx.is_connected(g):
            raise DisconnectedDeviceError("device connectivity graph is not connected")
        self.graph = g
        self.coords = dict(coords or {})
        if len(set(self.coords.values())) != len(self.coords):
            raise DeviceError("node coordinates must be unique")
        for n in self.coords:
            if n not in g:
                raise DeviceError(f"coordinates given for unknown node {n}")
        self.name = name
        self._dist: dict[int, dict[int, int]] = {}
        self._at = {xy: n for n, xy in self.coords.items()}
        self.steiner_cache: dict = {}

    # -- constructors -----------------------------------------------------

    @classmethod
    def chain(cls, n: int) -> "DeviceGraph":
        if n < 1:
            raise DeviceError("chain needs at least one node")
        return cls(
            range(n),
            [(i, i + 1) for i in range(n - 1)],
            {i: (i, 0) for i in range(n)},
            name=f"chain:{n}",
        )

    @classmethod
    def grid(cls, w: int, h: int, missing: Iterable[int] = ()) -> "DeviceGraph":
        """``w x h`` nearest-neighbour grid; node ``y * w + x`` sits at ``(x, y)``."""
        if w < 1 or h < 1:
            raise DeviceError("grid dimensions must be positive")
        missing = set(missing)
        nodes = [y * w + x for y in range(h) for x in range(w) if y * w + x not in missing]
        present = set(nodes)
        edges = []
        for y in range(h):
            for x in range(w):
                n = y * w + x
                if n not in present:
                    continue
                if x + 1 < w and n + 1 in present:
                    edges.append((n, n + 1))
                if y + 1 < h and n + w in present:
                    edges.append((n, n + w))
        coords = {n: (n % w, n // w) for n in nodes}
        suffix = f"-{len(missing)}" if missing else ""
        return cls(nodes, edges, coords, name=f"grid:{w}x{h}{suffix}")

    @classmethod
    def from_spec(cls, spec: str) -> "DeviceGraph":
        """``chain:N``, ``grid:WxH`` or a path to a device JSON file."""
        m = re.fullmatch(r"chain:(\d+)", spec)
        if m:
            return cls.chain(int(m.group(1)))
        m = re.fullmatch(r"grid:(\d+)x(\d+)", spec)
        if m:
            return cls.grid(int(m.group(1)), int(m.group(2)))
        return cls.load(spec)

    @classmethod
    def from_dict(cls, doc: dict, name: str = "") -> "DeviceGraph":
        try:
            jsonschema.validate(doc, DEVICE_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise DeviceError(f"invalid device file: {exc.message}") from None
        ids = [n["id"] for n in doc["nodes"]]
        if len(set(ids)) != len(ids):
            raise DeviceError("duplicate node id")
        coords = {}
        for n in doc["nodes"]:
            if ("x" in n) != ("y" in n):
                raise DeviceError(f"node {n['id']} needs both x and y or neither")
            if "x" in n:
                coords[n["id"]] = (n["x"], n["y"])
        return cls(ids, [tuple(e) for e in doc["edges"]], coords, name=name)

    @classmethod
    def load(cls, path) -> "DeviceGraph":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DeviceError(f"cannot read device file {path}: {exc}") from None
        return cls.from_dict(doc, name=path.stem)

    def to_dict(self) -> dict:
        nodes = []
        for n in self.nodes:
            d = {"id": n}
            if n in self.coords:
                d["x"], d["y"] = self.coords[n]
            nodes.append(d)
        return {"nodes": nodes, "edges": [list(e) for e in self.edges]}

    # -- queries ----------------------------------------------------------

    @cached_property
    def nodes(self) -> list[int]:
        return sorted(self.graph.nodes)

    @cached_property
    def edges(self) -> list[tuple[int, int]]:
        return sorted(tuple(sorted(e)) for e in self.graph.edges)

    @cached_property
    def index(self) -> dict[int, int]:
        """Node id -> dense index ``0..n-1`` (used for register numbering)."""
        return {n: i for i, n in enumerate(self.nodes)}

    def __len__(self) -> int:
        return self.graph.number_of_nodes()

    def __contains__(self, node) -> bool:
        return node in self.graph

    def neighbors(self, n: int) -> list[int]:
        return sorted(self.graph.neighbors(n))

    def has_edge(self, u: int, v: int) -> bool:
        return self.graph.has_edge(u, v)

    def node_at(self, x: int, y: int) -> int | None:
        return self._at.get((x, y))

    @property
    def has_coords(self) -> bool:
        return len(self.coords) == len(self)

    def distances_from(self, a: int) -> dict[int, int]:
        if a not in self._dist:
            if a not in self.graph:
                raise DeviceError(f"unknown node {a}")
            dist = {a: 0}
            queue = deque([a])
            while queue:
                u = queue.popleft()
                for v in self.graph.neighbors(u):
                    if v not in dist:
                        dist[v] = dist[u] + 1
                        queue.append(v)
            self._dist[a] = dist
        return self._dist[a]

    def distance(self, a: int, b: int) -> int:
        """Shortest-path edge count between two nodes."""
        if b not in self.graph:
            raise DeviceError(f"unknown node {b}")
        return self.distances_from(a)[b]

    def shortest_path(self, a: int, b: int) -> list[int]:
        """Deterministic shortest path: at each step move to the smallest closer neighbour."""
        to_b = self.distances_from(b)
        path = [a]
        cur = a
        while cur != b:
            cur = min(v for v in self.graph.neighbors(cur) if to_b[v] == to_b[cur] - 1)
            path.append(cur)
        return path
