"""Coupling maps, a deterministic greedy SWAP router and the CNOT/depth cost model."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .circuit import DIAGONAL, Circuit, Gate, circuit_depth


class DisconnectedMapError(ValueError):
    pass


@dataclass(frozen=True)
class CouplingMap:
    n_phys: int
    edges: frozenset[tuple[int, int]]
    kind: str = "custom"

    def __post_init__(self):
        norm = frozenset((min(a, b), max(a, b)) for a, b in self.edges)
        for a, b in norm:
            if a == b or not (0 <= a < self.n_phys and 0 <= b < self.n_phys):
                raise ValueError(f"invalid coupling edge {(a, b)}")
        object.__setattr__(self, "edges", norm)

    @classmethod
    def custom(cls, n_phys: int, edges: Iterable[tuple[int, int]]) -> "CouplingMap":
        return cls(n_phys, frozenset(edges), "custom")

    @classmethod
    def linear(cls, n: int) -> "CouplingMap":
        return cls(n, frozenset((i, i + 1) for i in range(n - 1)), "linear")

    @classmethod
    def complete(cls, n: int) -> "CouplingMap":
        return cls(n, frozenset((i, j) for i in range(n) for j in range(i + 1, n)), "complete")

    @classmethod
    def heavy_hex(cls, rows: int, cells: int) -> "CouplingMap":
        """Heavy-hex lattice: ``rows`` qubit chains of length ``4*cells + 3``.

        Neighbouring chains are joined through single bridge qubits placed every
        fourth column, alternating between offsets 0 and 2 so that each hexagon
        is bounded by degree-2 and degree-3 sites.
        """
        if rows < 1 or cells < 1:
            raise ValueError("rows and cells must be >= 1")
        length = 4 * cells + 3
        starts, bridges = [], []
        pos = 0
        for r in range(rows):
            starts.append(pos)
            pos += length
            if r < rows - 1:
                cols = list(range(0 if r % 2 == 0 else 2, length, 4))
                bridges.append([(pos + t, c) for t, c in enumerate(cols)])
                pos += len(cols)
        edges = []
        for r, s0 in enumerate(starts):
            edges += [(s0 + c, s0 + c + 1) for c in range(length - 1)]
        for r, gap in enumerate(bridges):
            for b, c in gap:
                edges += [(starts[r] + c, b), (b, starts[r + 1] + c)]
        return cls(pos, frozenset(edges), "heavy-hex")

    @cached_property
    def neighbors(self) -> list[list[int]]:
        adj = [[] for _ in range(self.n_phys)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        for lst in adj:
            lst.sort()
        return adj

    @property
    def average_degree(self) -> float:
        return 2 * len(self.edges) / self.n_phys if self.n_phys else 0.0

    def adjacent(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def bfs_order(self, start: int = 0) -> list[int]:
        order, seen, queue = [], {start}, deque([start])
        while queue:
            node = queue.popleft()
            order.append(node)
            for nb in self.neighbors[node]:
                if nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
        return order

    def is_connected(self) -> bool:
        return self.n_phys == 0 or len(self.bfs_order()) == self.n_phys

    @cached_property
    def distances(self) -> list[list[float]]:
        inf = float("inf")
        dist = []
        for s in range(self.n_phys):
            row = [inf] * self.n_phys
            row[s] = 0
            queue = deque([s])
            while queue:
                x = queue.popleft()
                for nb in self.neighbors[x]:
                    if row[nb] == inf:
                        row[nb] = row[x] + 1
                        queue.append(nb)
            dist.append(row)
        return dist

    def shortest_path(self, a: int, b: int) -> list[int]:
        """BFS path from a to b; lower-index neighbours are preferred."""
        parent = {a: None}
        queue = deque([a])
        while queue:
            x = queue.popleft()
            if x == b:
                break
            for nb in self.neighbors[x]:
                if nb not in parent:
                    parent[nb] = x
                    queue.append(nb)
        if b not in parent:
            raise DisconnectedMapError(f"no path between physical qubits {a} and {b}")
        path = [b]
        while path[-1] != a:
            path.append(parent[path[-1]])
        return path[::-1]


def default_layout(cmap: CouplingMap, n_qubits: int) -> list[int]:
    """Logical qubit u -> the u-th physical qubit in BFS order from qubit 0."""
    order = cmap.bfs_order()
    if len(order) < n_qubits:
        raise ValueError(f"map reaches only {len(order)} physical qubits, {n_qubits} needed")
    return order[:n_qubits]


@dataclass(frozen=True)
class RoutingResult:
    depth: int
    cnot_count: int
    swap_count: int
    routed: Circuit
    initial_layout: tuple[int, ...]
    final_layout: tuple[int, ...]


def decompose(gates: Iterable[Gate]) -> list[Gate]:
    """Lower RZZ to CNOT-RZ-CNOT and SWAP to three CNOTs."""
    out = []
    for g in gates:
        if g.kind == "RZZ":
            a, b = g.qubits
            out += [Gate("CNOT", (a, b)), Gate("RZ", (b,), g.param, g.scale), Gate("CNOT", (a, b))]
        elif g.kind == "SWAP":
            a, b = g.qubits
            out += [Gate("CNOT", (a, b)), Gate("CNOT", (b, a)), Gate("CNOT", (a, b))]
        else:
            out.append(g)
    return out


def route_and_count(circuit: Circuit, cmap: CouplingMap, layout: Sequence[int] | None = None) -> RoutingResult:
    """Route ``circuit`` onto ``cmap`` and report CNOT-level depth and CNOT count.

    Runs of consecutive diagonal gates commute, so within a run the router first
    emits every gate whose qubits are adjacent, then walks the farthest-apart
    pending pair together one SWAP at a time (ties: lowest logical qubits).
    Other gates are barriers and are routed in program order.
    """
    n = circuit.n_qubits
    if n > cmap.n_phys:
        raise ValueError(f"circuit needs {n} qubits, map has {cmap.n_phys}")
    if not cmap.is_connected():
        raise DisconnectedMapError("coupling map is disconnected")
    l2p = list(default_layout(cmap, n) if layout is None else layout)
    if len(l2p) != n or len(set(l2p)) != n or any(not 0 <= x < cmap.n_phys for x in l2p):
        raise ValueError("layout must map each logical qubit to a distinct physical qubit")
    initial = tuple(l2p)
    p2l = {p: u for u, p in enumerate(l2p)}
    dist = cmap.distances
    out: list[Gate] = []
    swaps = 0

    def emit(g: Gate):
        out.append(Gate(g.kind, tuple(l2p[q] for q in g.qubits), g.param, g.scale))

    def swap_phys(a: int, b: int):
        nonlocal swaps
        ua, ub = p2l.get(a), p2l.get(b)
        if ua is not None:
            l2p[ua] = b
        if ub is not None:
            l2p[ub] = a
        p2l.pop(a, None)
        p2l.pop(b, None)
        if ua is not None:
            p2l[b] = ua
        if ub is not None:
            p2l[a] = ub
        out.append(Gate("SWAP", (a, b)))
        swaps += 1

    def step_toward(u: int, v: int):
        path = cmap.shortest_path(l2p[u], l2p[v])
        swap_phys(path[0], path[1])

    gates = list(circuit.gates)
    i = 0
    while i < len(gates):
        g = gates[i]
        if g.kind in DIAGONAL:
            j = i
            while j < len(gates) and gates[j].kind in DIAGONAL:
                j += 1
            pending = gates[i:j]
            while pending:
                rest = []
                for h in pending:
                    if len(h.qubits) == 1 or cmap.adjacent(l2p[h.qubits[0]], l2p[h.qubits[1]]):
                        emit(h)
                    else:
                        rest.append(h)
                pending = rest
                if pending:
                    far = max(pending, key=lambda h: (dist[l2p[h.qubits[0]]][l2p[h.qubits[1]]],
                                                      -min(h.qubits), -max(h.qubits)))
                    u, v = sorted(far.qubits)
                    while not cmap.adjacent(l2p[u], l2p[v]):
                        step_toward(u, v)
            i = j
            continue
        if len(g.qubits) == 2:
            u, v = g.qubits
            while not cmap.adjacent(l2p[u], l2p[v]):
                step_toward(u, v)
        emit(g)
        i += 1

    routed = Circuit(cmap.n_phys, tuple(out), circuit.n_params)
    lowered = decompose(out)
    cnots = sum(1 for g in lowered if g.kind == "CNOT")
    return RoutingResult(circuit_depth(lowered, cmap.n_phys), cnots, swaps, routed, initial, tuple(l2p))
