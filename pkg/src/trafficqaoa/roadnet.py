"""Road networks, candidate routes and traffic instances.

Network files are line oriented::

    # comment
    node <id>
    edge <id> <u> <v> <weight>

Node and segment ids are arbitrary whitespace-free tokens. Segments are
undirected unless the network is built with ``directed=True``.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

DEFAULT_POOL_SIZE = 1000


class NetworkFormatError(ValueError):
    """Raised for malformed or inconsistent network files."""


class NoPathError(ValueError):
    """Raised when no route connects an origin to a destination."""


class InsufficientRoutesError(ValueError):
    """Raised when a car asks for more routes than the pool can supply."""


@dataclass(frozen=True)
class Segment:
    id: str
    u: str
    v: str
    weight: float


@dataclass(frozen=True)
class RoadNetwork:
    nodes: tuple[str, ...]
    segments: tuple[Segment, ...]
    directed: bool = False

    def __post_init__(self):
        node_set = set(self.nodes)
        if len(node_set) != len(self.nodes):
            raise NetworkFormatError("duplicate node ids")
        seen = set()
        for seg in self.segments:
            if seg.id in seen:
                raise NetworkFormatError(f"duplicate segment id {seg.id!r}")
            seen.add(seg.id)
            for end in (seg.u, seg.v):
                if end not in node_set:
                    raise NetworkFormatError(f"segment {seg.id!r} references unknown node {end!r}")
            if seg.u == seg.v:
                raise NetworkFormatError(f"segment {seg.id!r} is a self loop")
            if not (seg.weight > 0 and math.isfinite(seg.weight)):
                raise NetworkFormatError(f"segment {seg.id!r} has nonpositive weight {seg.weight}")

    @cached_property
    def segment_map(self) -> dict[str, Segment]:
        return {seg.id: seg for seg in self.segments}

    @cached_property
    def adjacency(self) -> dict[str, list[tuple[str, str, float]]]:
        """node -> sorted list of (neighbor, segment id, weight)."""
        adj: dict[str, list[tuple[str, str, float]]] = {n: [] for n in self.nodes}
        for seg in self.segments:
            adj[seg.u].append((seg.v, seg.id, seg.weight))
            if not self.directed:
                adj[seg.v].append((seg.u, seg.id, seg.weight))
        for lst in adj.values():
            lst.sort()
        return adj

    def path_weight(self, segment_ids: Iterable[str]) -> float:
        return math.fsum(self.segment_map[s].weight for s in segment_ids)

    def to_text(self) -> str:
        lines = [f"node {n}" for n in self.nodes]
        lines += [f"edge {s.id} {s.u} {s.v} {s.weight!r}" for s in self.segments]
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Route:
    car: int
    route_index: int
    segment_ids: tuple[str, ...]
    nodes: tuple[str, ...]
    weight: float

    @property
    def origin(self) -> str:
        return self.nodes[0]

    @property
    def destination(self) -> str:
        return self.nodes[-1]


@dataclass(frozen=True)
class TrafficInstance:
    network: RoadNetwork
    cars: tuple[tuple[Route, ...], ...]
    seed: int | None = None
    network_ref: str = ""

    def __post_init__(self):
        for i, routes in enumerate(self.cars):
            if not routes:
                raise ValueError(f"car {i} has no routes")
            ends = {(r.origin, r.destination) for r in routes}
            if len(ends) != 1:
                raise ValueError(f"routes of car {i} do not share origin/destination")

    @property
    def n_cars(self) -> int:
        return len(self.cars)

    @property
    def route_counts(self) -> tuple[int, ...]:
        return tuple(len(r) for r in self.cars)

    @property
    def n_vars(self) -> int:
        return sum(self.route_counts)

    @cached_property
    def var_index(self) -> tuple[tuple[int, int], ...]:
        """Variable u -> (car i, route j), with j varying fastest."""
        return tuple((i, j) for i, routes in enumerate(self.cars) for j in range(len(routes)))

    def variable(self, car: int, route: int) -> int:
        return sum(self.route_counts[:car]) + route

    @property
    def routes(self) -> list[Route]:
        return [r for routes in self.cars for r in routes]

    def to_json(self) -> str:
        data = {
            "network": self.network_ref,
            "network_digest": self.network.digest(),
            "directed": self.network.directed,
            "seed": self.seed,
            "cars": [
                [{"segments": list(r.segment_ids), "nodes": list(r.nodes)} for r in routes]
                for routes in self.cars
            ],
        }
        return json.dumps(data, indent=2)


def parse_network(text: str, directed: bool = False) -> RoadNetwork:
    """Parse network file content into a validated :class:`RoadNetwork`."""
    nodes: list[str] = []
    segments: list[Segment] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        kind = fields[0]
        if kind == "node":
            if len(fields) != 2:
                raise NetworkFormatError(f"line {lineno}: expected 'node <id>'")
            nodes.append(fields[1])
        elif kind == "edge":
            if len(fields) != 5:
                raise NetworkFormatError(f"line {lineno}: expected 'edge <id> <u> <v> <weight>'")
            try:
                weight = float(fields[4])
            except ValueError:
                raise NetworkFormatError(f"line {lineno}: weight field {fields[4]!r} is not a number") from None
            segments.append(Segment(fields[1], fields[2], fields[3], weight))
        else:
            raise NetworkFormatError(f"line {lineno}: unknown record {kind!r}")
    try:
        return RoadNetwork(tuple(nodes), tuple(segments), directed=directed)
    except NetworkFormatError as exc:
        raise NetworkFormatError(str(exc)) from None


def load_network(source, directed: bool = False) -> RoadNetwork:
    """Load a network from a path or from file content."""
    if hasattr(source, "read_text"):
        return parse_network(source.read_text(), directed)
    text = str(source)
    if "\n" not in text and not text.lstrip().startswith(("node", "edge", "#")):
        with open(text) as fh:
            text = fh.read()
    return parse_network(text, directed)


def fixture_path(name: str):
    from importlib.resources import files

    return files("trafficqaoa") / "data" / name


def load_fixture(name: str, directed: bool = False) -> RoadNetwork:
    return parse_network(fixture_path(name).read_text(), directed)


# --- shortest paths ---------------------------------------------------------

_Path = tuple[float, tuple[str, ...], tuple[str, ...]]


def _dijkstra(net: RoadNetwork, source: str, target: str, banned_nodes=frozenset(),
              banned_segments=frozenset()) -> _Path | None:
    # heap keys carry the full path so equal-weight ties resolve lexicographically
    heap: list[_Path] = [(0.0, (source,), ())]
    settled = set()
    adj = net.adjacency
    seg = net.segment_map
    while heap:
        dist, nodes, segs = heapq.heappop(heap)
        node = nodes[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == target:
            return net.path_weight(segs), nodes, segs
        for nbr, sid, w in adj[node]:
            if nbr in settled or nbr in banned_nodes or sid in banned_segments:
                continue
            heapq.heappush(heap, (dist + seg[sid].weight, nodes + (nbr,), segs + (sid,)))
    return None


def k_shortest_paths(net: RoadNetwork, origin: str, dest: str, k: int) -> list[_Path]:
    """Yen's algorithm. Returns up to ``k`` loopless (weight, nodes, segments) paths."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if origin == dest:
        raise ValueError("origin and destination must differ")
    for n in (origin, dest):
        if n not in net.adjacency:
            raise ValueError(f"unknown node {n!r}")
    first = _dijkstra(net, origin, dest)
    if first is None:
        raise NoPathError(f"no path from {origin!r} to {dest!r}")
    found = [first]
    candidates: list[_Path] = []
    seen = {first[2]}
    while len(found) < k:
        _, prev_nodes, prev_segs = found[-1]
        for i in range(len(prev_nodes) - 1):
            root_nodes = prev_nodes[: i + 1]
            root_segs = prev_segs[:i]
            banned_segs = {
                segs[i] for _, nodes, segs in found
                if len(segs) > i and nodes[: i + 1] == root_nodes and segs[:i] == root_segs
            }
            spur = _dijkstra(net, root_nodes[-1], dest, frozenset(root_nodes[:-1]), frozenset(banned_segs))
            if spur is None:
                continue
            segs = root_segs + spur[2]
            if segs in seen:
                continue
            seen.add(segs)
            heapq.heappush(candidates, (net.path_weight(segs), root_nodes[:-1] + spur[1], segs))
        if not candidates:
            break
        found.append(heapq.heappop(candidates))
    return found


def k_shortest_routes(net: RoadNetwork, origin: str, dest: str, k: int, car: int = 0) -> list[Route]:
    """Up to ``k`` simple routes sorted by weight, ties by node sequence."""
    paths = k_shortest_paths(net, origin, dest, k)
    return [Route(car, j, segs, nodes, w) for j, (w, nodes, segs) in enumerate(paths)]


def build_instance(net: RoadNetwork, car_specs: Sequence[tuple[str, str, int]], seed: int,
                   pool_size: int = DEFAULT_POOL_SIZE, network_ref: str = "") -> TrafficInstance:
    """Assign each car its shortest route plus uniformly drawn alternatives.

    Args:
        net: road network.
        car_specs: ``(origin, destination, route_count)`` per car.
        seed: seed for the route draws.
        pool_size: number of k-shortest candidates computed per origin/destination pair.

    Raises:
        InsufficientRoutesError: if a pool holds fewer distinct routes than requested.
    """
    rng = np.random.default_rng(seed)
    pools: dict[tuple[str, str], list[_Path]] = {}
    cars = []
    for i, (origin, dest, count) in enumerate(car_specs):
        if count < 1:
            raise ValueError(f"car {i}: route_count must be >= 1")
        key = (origin, dest)
        if key not in pools:
            pools[key] = k_shortest_paths(net, origin, dest, pool_size)
        pool = pools[key]
        if len(pool) < count:
            raise InsufficientRoutesError(
                f"car {i}: {count} routes requested but only {len(pool)} distinct routes exist"
            )
        picks = [0]
        if count > 1:
            picks += [int(x) + 1 for x in rng.choice(len(pool) - 1, size=count - 1, replace=False)]
        routes = tuple(
            Route(i, j, pool[x][2], pool[x][1], pool[x][0]) for j, x in enumerate(picks)
        )
        cars.append(routes)
    return TrafficInstance(net, tuple(cars), seed, network_ref)


def instance_from_json(text: str, net: RoadNetwork) -> TrafficInstance:
    data = json.loads(text)
    if data.get("network_digest") not in (None, net.digest()):
        raise ValueError("instance was generated for a different network")
    cars = []
    for i, routes in enumerate(data["cars"]):
        cars.append(tuple(
            Route(i, j, tuple(r["segments"]), tuple(r["nodes"]), net.path_weight(r["segments"]))
            for j, r in enumerate(routes)
        ))
    return TrafficInstance(net, tuple(cars), data.get("seed"), data.get("network", ""))


# --- synthetic networks ------------------------------------------------------

def grid_network(rows: int, cols: int, weights=None, seed: int | None = None,
                 weight_range: tuple[float, float] = (0.5, 1.5)) -> RoadNetwork:
    """Rectangular street grid. Nodes are numbered row-major from ``"0"``.

    Weights are taken from ``weights`` (one per segment, row edges first), or
    drawn uniformly from ``weight_range`` and rounded to two decimals when a
    seed is given, or set to 1.
    """
    nodes = tuple(str(r * cols + c) for r in range(rows) for c in range(cols))
    ends = []
    for r in range(rows):
        for c in range(cols - 1):
            ends.append((r * cols + c, r * cols + c + 1))
    for r in range(rows - 1):
        for c in range(cols):
            ends.append((r * cols + c, (r + 1) * cols + c))
    if weights is None:
        if seed is None:
            weights = [1.0] * len(ends)
        else:
            rng = np.random.default_rng(seed)
            weights = np.round(rng.uniform(*weight_range, size=len(ends)), 2).tolist()
    segments = tuple(Segment(f"e{k}", str(a), str(b), float(w)) for k, ((a, b), w) in enumerate(zip(ends, weights)))
    return RoadNetwork(nodes, segments)


def random_instance(n_cars: int, n_routes: int, seed: int, rows: int = 4, cols: int = 4,
                    pool_size: int = DEFAULT_POOL_SIZE) -> TrafficInstance:
    """Grid instance where every car shares the corner-to-corner trip.

    The grid weights and the route draws both derive from ``seed``.
    """
    net = grid_network(rows, cols, seed=seed)
    origin, dest = net.nodes[0], net.nodes[-1]
    ref = f"grid:{rows}x{cols}:seed={seed}"
    return build_instance(net, [(origin, dest, n_routes)] * n_cars, seed + 7919, pool_size, ref)
