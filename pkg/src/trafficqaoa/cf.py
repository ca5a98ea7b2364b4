"""Connectivity-forced compression: drop the RZZ gates a coupling map cannot host.

The compressed circuits keep every RZ and RX gate and are still scored
against the full Ising model, so removed couplings keep shaping the objective.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .circuit import Circuit, ParamVector, broadcast_params, build_multi_angle, build_qaoa
from .ising import IsingModel
from .params import DEFAULT_MAX_ITER, OptimizationTrace, optimize
from .routing import CouplingMap, default_layout

LAYOUT_STRATEGIES = ("bfs", "greedy")


@dataclass(frozen=True)
class CompressionPlan:
    layout: tuple[int, ...]
    kept_pairs: tuple[tuple[int, int], ...]
    removed_pairs: tuple[tuple[int, int], ...]
    strategy: str = "bfs"
    meta: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "layout": list(self.layout),
            "kept_pairs": [list(p) for p in self.kept_pairs],
            "removed_pairs": [list(p) for p in self.removed_pairs],
            "strategy": self.strategy,
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "CompressionPlan":
        return cls(
            tuple(data["layout"]),
            tuple(tuple(p) for p in data["kept_pairs"]),
            tuple(tuple(p) for p in data["removed_pairs"]),
            data.get("strategy", "bfs"),
            dict(data.get("meta", {})),
        )


def greedy_layout(model: IsingModel, cmap: CouplingMap) -> list[int]:
    """Place qubits one at a time to maximise the total kept |J_uv|.

    The logical qubit with the largest total coupling goes first onto the
    first BFS site; each next qubit (most coupling to placed ones) takes the
    free site that gains the most weight, ties going to the lowest index.
    """
    n = model.n_qubits
    if n > cmap.n_phys:
        raise ValueError(f"{n} qubits do not fit on {cmap.n_phys} sites")
    weight = [[0.0] * n for _ in range(n)]
    for (u, v), w in model.J.items():
        weight[u][v] = weight[v][u] = abs(w)
    layout: dict[int, int] = {}
    used: set[int] = set()
    first = max(range(n), key=lambda u: (sum(weight[u]), -u))
    layout[first] = cmap.bfs_order()[0]
    used.add(layout[first])
    while len(layout) < n:
        u = max((x for x in range(n) if x not in layout),
                key=lambda x: (sum(weight[x][y] for y in layout), -x))
        # candidate sites: free neighbours of placed qubits, else any free site
        frontier = sorted({nb for q in layout.values() for nb in cmap.neighbors[q] if nb not in used})
        if not frontier:
            frontier = [s for s in range(cmap.n_phys) if s not in used]
        site = max(frontier, key=lambda s: (sum(weight[u][y] for y, q in layout.items() if cmap.adjacent(s, q)), -s))
        layout[u] = site
        used.add(site)
    return [layout[u] for u in range(n)]


def plan_compression(model: IsingModel, cmap: CouplingMap, layout=None, strategy: str = "bfs") -> CompressionPlan:
    """Split the model's couplings into those adjacent under ``layout`` and the rest."""
    n = model.n_qubits
    if n > cmap.n_phys:
        raise ValueError(f"{n} qubits do not fit on {cmap.n_phys} sites")
    if layout is None:
        if strategy == "bfs":
            layout = default_layout(cmap, n)
        elif strategy == "greedy":
            layout = greedy_layout(model, cmap)
        else:
            raise ValueError(f"unknown layout strategy {strategy!r}")
    else:
        strategy = "custom"
    layout = tuple(int(x) for x in layout)
    if len(layout) != n or len(set(layout)) != n or any(not 0 <= x < cmap.n_phys for x in layout):
        raise ValueError("layout must map each logical qubit to a distinct physical qubit")
    kept, removed = [], []
    for u, v in model.pairs:
        (kept if cmap.adjacent(layout[u], layout[v]) else removed).append((u, v))
    kept_weight = sum(abs(model.J[p]) for p in kept)
    return CompressionPlan(layout, tuple(kept), tuple(removed), strategy,
                           {"map": cmap.kind, "n_phys": cmap.n_phys, "kept_weight": kept_weight})


def build_cf_qaoa(model: IsingModel, plan: CompressionPlan, p: int) -> Circuit:
    """Standard QAOA with RZZ gates only for the plan's kept pairs."""
    return build_qaoa(model, p, plan.kept_pairs)


def build_cf_maqaoa(model: IsingModel, plan: CompressionPlan, p: int) -> tuple[Circuit, ParamVector]:
    """CF circuit with one angle per rotation gate, plus a zero template."""
    return build_multi_angle(model, p, plan.kept_pairs)


def optimize_cf_maqaoa(model: IsingModel, plan: CompressionPlan, starts: list[ParamVector],
                       max_iter: int = DEFAULT_MAX_ITER) -> OptimizationTrace:
    """Optimise CF-maQAOA from broadcasts of each standard start and keep the best run."""
    if not starts:
        raise ValueError("need at least one standard starting point")
    circuit, template = build_cf_maqaoa(model, plan, starts[0].p)
    best = None
    for s in starts:
        trace = optimize(model, circuit, broadcast_params(template, s), max_iter)
        if best is None or trace.value < best.value:
            best = trace
    return best
