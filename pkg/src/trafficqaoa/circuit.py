"""Gate-list circuits and the QAOA ansatz.

Rotation conventions: ``RZ(t) = exp(-i t Z/2)``, ``RX(t) = exp(-i t X/2)`` and
``RZZ(t) = exp(-i t ZZ/2)``. A layer ``exp(-i b H_B) exp(-i g H_C)`` with mixer
``H_B = -sum X`` is therefore ``RZ(2 g h_u)``, ``RZZ(2 g J_uv)`` and
``RX(-2 b)`` on every qubit.

A gate angle is ``scale * theta[param]`` for a parameterised gate, or the
literal ``scale`` when ``param`` is None.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .ising import IsingModel

GATE_ARITY = {"H": 1, "RX": 1, "RZ": 1, "RZZ": 2, "CNOT": 2, "SWAP": 2}
ROTATIONS = {"RX", "RZ", "RZZ"}
DIAGONAL = {"RZ", "RZZ"}

STANDARD = "standard"
MULTI_ANGLE = "multi-angle"


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    param: int | None = None
    scale: float = 0.0

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise ValueError(f"unknown gate {self.kind!r}")
        if len(self.qubits) != GATE_ARITY[self.kind]:
            raise ValueError(f"{self.kind} acts on {GATE_ARITY[self.kind]} qubit(s)")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"{self.kind} needs distinct qubits, got {self.qubits}")

    def angle(self, theta: Sequence[float]) -> float:
        if self.param is None:
            return self.scale
        return self.scale * theta[self.param]


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...]
    n_params: int = 0

    def __post_init__(self):
        for g in self.gates:
            if any(not 0 <= q < self.n_qubits for q in g.qubits):
                raise ValueError(f"gate {g} addresses a qubit outside 0..{self.n_qubits - 1}")
            if g.param is not None and not 0 <= g.param < self.n_params:
                raise ValueError(f"gate {g} references parameter outside 0..{self.n_params - 1}")

    def count(self, kind: str) -> int:
        return sum(1 for g in self.gates if g.kind == kind)

    def depth(self) -> int:
        return circuit_depth(self.gates, self.n_qubits)

    def to_text(self) -> str:
        lines = [f"qubits {self.n_qubits}", f"params {self.n_params}"]
        for g in self.gates:
            qs = ",".join(map(str, g.qubits))
            if g.kind in ROTATIONS:
                ang = f"{g.scale!r}*p{g.param}" if g.param is not None else repr(g.scale)
                lines.append(f"{g.kind} {qs} {ang}")
            else:
                lines.append(f"{g.kind} {qs}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        n = n_params = None
        gates = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if fields[0] == "qubits":
                n = int(fields[1])
            elif fields[0] == "params":
                n_params = int(fields[1])
            else:
                kind = fields[0]
                qubits = tuple(int(q) for q in fields[1].split(","))
                param, scale = None, 0.0
                if kind in ROTATIONS:
                    if len(fields) != 3:
                        raise ValueError(f"line {lineno}: rotation needs an angle")
                    if "*p" in fields[2]:
                        s, pidx = fields[2].split("*p")
                        scale, param = float(s), int(pidx)
                    else:
                        scale = float(fields[2])
                gates.append(Gate(kind, qubits, param, scale))
        if n is None:
            raise ValueError("missing 'qubits' header")
        return cls(n, tuple(gates), n_params or 0)


def circuit_depth(gates: Iterable[Gate], n_qubits: int) -> int:
    """Longest dependency chain, each gate counting one time step."""
    level = [0] * n_qubits
    for g in gates:
        t = 1 + max(level[q] for q in g.qubits)
        for q in g.qubits:
            level[q] = t
    return max(level, default=0)


@dataclass(frozen=True, eq=False)
class ParamVector:
    """Variational angles bound to a circuit's parameter slots.

    Standard mode stores ``[gamma_1..gamma_p, beta_1..beta_p]``. Multi-angle mode
    stores ``p`` consecutive blocks, one angle per rotation gate of a layer;
    ``labels`` names the slots of one block as ``(kind, qubits)``.
    """

    mode: str
    p: int
    values: np.ndarray
    labels: tuple[tuple[str, tuple[int, ...]], ...] = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if self.mode == STANDARD:
            if vals.shape != (2 * self.p,):
                raise ValueError(f"standard mode needs {2 * self.p} values, got {vals.size}")
        elif self.mode == MULTI_ANGLE:
            if vals.shape != (self.p * len(self.labels),):
                raise ValueError("multi-angle values do not match labels x p")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")

    @classmethod
    def standard(cls, gammas, betas, **meta) -> "ParamVector":
        gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
        betas = np.atleast_1d(np.asarray(betas, dtype=float))
        if gammas.shape != betas.shape:
            raise ValueError("gammas and betas differ in length")
        return cls(STANDARD, gammas.size, np.concatenate([gammas, betas]), meta=meta)

    @property
    def gammas(self) -> np.ndarray:
        self._require_standard()
        return self.values[: self.p]

    @property
    def betas(self) -> np.ndarray:
        self._require_standard()
        return self.values[self.p:]

    @property
    def per_layer(self) -> int:
        return 2 if self.mode == STANDARD else len(self.labels)

    def layer_maps(self, layer: int) -> dict[str, dict]:
        """Multi-angle slots of one layer keyed by qubit / qubit pair."""
        if self.mode != MULTI_ANGLE:
            raise ValueError("layer maps exist only in multi-angle mode")
        block = self.values[layer * len(self.labels):(layer + 1) * len(self.labels)]
        out: dict[str, dict] = {"RZ": {}, "RZZ": {}, "RX": {}}
        for (kind, qs), val in zip(self.labels, block):
            out[kind][qs if kind == "RZZ" else qs[0]] = float(val)
        return out

    def with_values(self, values, **meta) -> "ParamVector":
        return ParamVector(self.mode, self.p, values, self.labels, {**self.meta, **meta})

    def _require_standard(self):
        if self.mode != STANDARD:
            raise ValueError("gammas/betas are defined for standard mode only")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "p": self.p,
            "values": self.values.tolist(),
            "labels": [[k, list(q)] for k, q in self.labels],
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ParamVector":
        labels = tuple((k, tuple(q)) for k, q in data.get("labels", []))
        return cls(data["mode"], int(data["p"]), data["values"], labels, dict(data.get("meta", {})))


def edge_colored_order(pairs: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    """Order commuting two-qubit terms so each run of gates is a matching.

    Greedy edge colouring over sorted pairs; output is sorted by (colour, pair).
    """
    used: dict[int, set[int]] = {}
    colored = []
    for u, v in sorted(pairs):
        cu, cv = used.setdefault(u, set()), used.setdefault(v, set())
        color = 0
        while color in cu or color in cv:
            color += 1
        cu.add(color)
        cv.add(color)
        colored.append((color, (u, v)))
    return [pair for _, pair in sorted(colored)]


def _qaoa_gates(model: IsingModel, p: int, pairs, multi_angle: bool):
    n = model.n_qubits
    fields = sorted(model.h.items())
    couplings = [(pair, model.J[pair]) for pair in edge_colored_order(pairs)]
    labels = tuple(
        [("RZ", (u,)) for u, _ in fields]
        + [("RZZ", pair) for pair, _ in couplings]
        + [("RX", (u,)) for u in range(n)]
    )
    gates = [Gate("H", (q,)) for q in range(n)]
    for layer in range(p):
        if multi_angle:
            base = layer * len(labels)
            slots = iter(range(base, base + len(labels)))
            g_idx = b_idx = None
        else:
            g_idx, b_idx = layer, p + layer
        for u, hv in fields:
            gates.append(Gate("RZ", (u,), next(slots) if multi_angle else g_idx, 2.0 * hv))
        for pair, jv in couplings:
            gates.append(Gate("RZZ", pair, next(slots) if multi_angle else g_idx, 2.0 * jv))
        for u in range(n):
            gates.append(Gate("RX", (u,), next(slots) if multi_angle else b_idx, -2.0))
    n_params = p * len(labels) if multi_angle else 2 * p
    return Circuit(n, tuple(gates), n_params), labels


def build_qaoa(model: IsingModel, p: int, pairs: Iterable[tuple[int, int]] | None = None) -> Circuit:
    """Standard QAOA circuit with ``2p`` parameters.

    ``pairs`` restricts which couplings receive an RZZ gate (all by default).
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    circuit, _ = _qaoa_gates(model, p, model.pairs if pairs is None else pairs, False)
    return circuit


def build_multi_angle(model: IsingModel, p: int, pairs: Iterable[tuple[int, int]] | None = None):
    """Multi-angle QAOA circuit plus a zero-valued parameter template."""
    if p < 1:
        raise ValueError("p must be >= 1")
    circuit, labels = _qaoa_gates(model, p, model.pairs if pairs is None else pairs, True)
    return circuit, ParamVector(MULTI_ANGLE, p, np.zeros(circuit.n_params), labels)


def broadcast_params(template: ParamVector, standard: ParamVector) -> ParamVector:
    """Multi-angle vector reproducing a standard (gamma, beta) point exactly."""
    if standard.p != template.p:
        raise ValueError("layer counts differ")
    vals = []
    for layer in range(template.p):
        g, b = standard.gammas[layer], standard.betas[layer]
        vals.extend(b if kind == "RX" else g for kind, _ in template.labels)
    return template.with_values(vals, init="broadcast")


def _wrap(x: float, lo: float, period: float) -> float:
    return lo + (x - lo) % period


def canonicalize_params(params: ParamVector, wrap_gamma: bool = True) -> ParamVector:
    """Fold mixer angles into ``[-pi/2, pi/2)`` using the ``beta -> beta +- pi`` symmetry.

    Out-of-box gammas (outside ``[-pi, pi]``) are reduced modulo 2*pi when
    ``wrap_gamma`` is set. That reduction preserves the state only when the
    cost spectrum is integer valued; the optimiser keeps gammas inside the
    box so it is a no-op on optimised parameters.
    """
    vals = params.values.copy()
    if params.mode == STANDARD:
        p = params.p
        for l in range(p):
            vals[p + l] = _wrap(vals[p + l], -math.pi / 2, math.pi)
            if wrap_gamma and not -math.pi <= vals[l] <= math.pi:
                vals[l] = _wrap(vals[l], -math.pi, 2 * math.pi)
    else:
        k = len(params.labels)
        for l in range(params.p):
            for t, (kind, _) in enumerate(params.labels):
                if kind == "RX":
                    vals[l * k + t] = _wrap(vals[l * k + t], -math.pi / 2, math.pi)
    return params.with_values(vals)
