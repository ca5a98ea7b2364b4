"""Noiseless statevector simulation, diagonal expectations and shot sampling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from . import _kernels
from .circuit import DIAGONAL, Circuit, ParamVector
from .ising import IsingModel, index_to_bitstring

DEFAULT_QUBIT_CAP = 24


@dataclass(frozen=True, eq=False)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class ShotDistribution:
    counts: Mapping[str, int]
    shots: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts do not add up to shots")

    def frequencies(self) -> dict[str, float]:
        return {b: c / self.shots for b, c in self.counts.items()}

    def to_text(self) -> str:
        return "".join(f"{b} {c}\n" for b, c in sorted(self.counts.items()))

    @classmethod
    def from_text(cls, text: str) -> "ShotDistribution":
        counts = {}
        for line in text.splitlines():
            if line.strip():
                b, c = line.split()
                counts[b] = counts.get(b, 0) + int(c)
        return cls(counts, sum(counts.values()))


def _pattern(n: int, qubits) -> np.ndarray:
    """Diagonal of Z_u (or Z_u Z_v) as a +-1 vector."""
    idx = np.arange(1 << n)
    out = np.ones(1 << n)
    for q in qubits:
        out *= 1 - 2 * ((idx >> (n - 1 - q)) & 1)
    return out


class CircuitSimulator:
    """Circuit compiled into fused steps, reusable across parameter bindings.

    Runs of consecutive RZ/RZZ gates become a single diagonal phase
    ``exp(-i sum_k theta_k D_k)``; runs of RX gates on distinct qubits become one
    rotation sweep.
    """

    def __init__(self, circuit: Circuit, cap: int = DEFAULT_QUBIT_CAP):
        n = circuit.n_qubits
        if n > cap:
            raise ValueError(f"{n} qubits exceeds the simulation cap of {cap}")
        self.circuit = circuit
        self.n = n
        gates = list(circuit.gates)
        self.start_plus = len(gates) >= n and all(
            g.kind == "H" and g.qubits == (q,) for q, g in enumerate(gates[:n])
        )
        if self.start_plus:
            gates = gates[n:]
        self.steps = []
        diag_cache: dict[tuple, np.ndarray] = {}
        i = 0
        while i < len(gates):
            g = gates[i]
            if g.kind in DIAGONAL:
                j = i
                while j < len(gates) and gates[j].kind in DIAGONAL:
                    j += 1
                self.steps.append(self._diag_step(gates[i:j], diag_cache))
                i = j
            elif g.kind == "RX":
                j, seen = i, set()
                while j < len(gates) and gates[j].kind == "RX" and gates[j].qubits[0] not in seen:
                    seen.add(gates[j].qubits[0])
                    j += 1
                run = gates[i:j]
                self.steps.append((
                    "rx",
                    np.array([h.qubits[0] for h in run], dtype=np.int64),
                    np.array([-1 if h.param is None else h.param for h in run], dtype=np.int64),
                    np.array([h.scale for h in run]),
                ))
                i = j
            else:
                self.steps.append((g.kind, g.qubits))
                i += 1

    def _diag_step(self, run, cache):
        by_param: dict[int | None, list] = {}
        for g in run:
            by_param.setdefault(g.param, []).append(g)
        params, vectors = [], []
        literal = None
        for param, group in by_param.items():
            key = tuple((g.qubits, g.scale) for g in group)
            if key not in cache:
                vec = np.zeros(1 << self.n)
                for g in group:
                    vec += (g.scale / 2) * _pattern(self.n, g.qubits)
                cache[key] = vec
            if param is None:
                literal = cache[key]
            else:
                params.append(param)
                vectors.append(cache[key])
        return ("diag", np.array(params, dtype=np.int64), np.array(vectors) if vectors else None, literal)

    def _theta(self, params) -> np.ndarray:
        theta = params.values if isinstance(params, ParamVector) else np.asarray(params, dtype=float)
        if theta.shape != (self.circuit.n_params,):
            raise ValueError(f"expected {self.circuit.n_params} parameters, got {theta.shape}")
        return theta

    def run(self, params=()) -> np.ndarray:
        theta = self._theta(params)
        n = self.n
        dim = 1 << n
        if self.start_plus:
            psi = np.full(dim, 1 / np.sqrt(dim), dtype=complex)
        else:
            psi = np.zeros(dim, dtype=complex)
            psi[0] = 1.0
        for step in self.steps:
            kind = step[0]
            if kind == "diag":
                _, pidx, vecs, literal = step
                if literal is not None:
                    _kernels.apply_phase(psi, literal, 1.0)
                if len(pidx) == 1:
                    _kernels.apply_phase(psi, vecs[0], float(theta[pidx[0]]))
                elif len(pidx) > 1:
                    _kernels.apply_phase(psi, theta[pidx] @ vecs, 1.0)
            elif kind == "rx":
                _, qubits, pidx, scales = step
                angles = np.where(pidx >= 0, scales * theta[np.maximum(pidx, 0)], scales)
                _kernels.apply_rx_layer(psi, n, qubits, angles)
            elif kind == "H":
                _kernels.apply_h(psi, n, step[1][0])
            elif kind == "CNOT":
                _kernels.apply_cnot(psi, n, *step[1])
            elif kind == "SWAP":
                _kernels.apply_swap(psi, n, *step[1])
            else:  # pragma: no cover - guarded by Gate validation
                raise ValueError(kind)
        return psi

    def statevector(self, params=()) -> StateVector:
        return StateVector(self.n, self.run(params))


def simulate(circuit: Circuit, params=(), fast: bool = True, cap: int = DEFAULT_QUBIT_CAP) -> StateVector:
    """Exact final state of ``circuit`` bound to ``params``.

    ``fast=False`` applies every gate individually with plain numpy; it exists
    to cross-check the fused path.
    """
    if fast:
        return CircuitSimulator(circuit, cap).statevector(params)
    n = circuit.n_qubits
    if n > cap:
        raise ValueError(f"{n} qubits exceeds the simulation cap of {cap}")
    theta = params.values if isinstance(params, ParamVector) else np.asarray(params, dtype=float)
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1.0
    for g in circuit.gates:
        psi = _apply_gate_numpy(psi, n, g, g.angle(theta) if g.kind in ("RX", "RZ", "RZZ") else 0.0)
    return StateVector(n, psi)


def _apply_gate_numpy(psi: np.ndarray, n: int, g, angle: float) -> np.ndarray:
    if g.kind in ("RZ", "RZZ"):
        return psi * np.exp(-0.5j * angle * _pattern(n, g.qubits))
    t = psi.reshape([2] * n)
    if g.kind in ("H", "RX"):
        if g.kind == "H":
            m = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        else:
            c, s = np.cos(angle / 2), np.sin(angle / 2)
            m = np.array([[c, -1j * s], [-1j * s, c]])
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [g.qubits[0]])), 0, g.qubits[0])
    elif g.kind == "CNOT":
        c, tq = g.qubits
        t = t.copy()
        sel = [slice(None)] * n
        sel[c] = 1
        sub = t[tuple(sel)]
        axis = tq - (1 if tq > c else 0)
        t[tuple(sel)] = np.flip(sub, axis=axis)
    elif g.kind == "SWAP":
        a, b = g.qubits
        t = np.swapaxes(t, a, b)
    return np.ascontiguousarray(t).reshape(-1)


def expectation(sv: StateVector | np.ndarray, model: IsingModel) -> float:
    """<H_C> of a diagonal Hamiltonian: sum_z |amp_z|^2 E(z)."""
    amps = sv.amplitudes if isinstance(sv, StateVector) else sv
    if amps.shape != (1 << model.n_qubits,):
        raise ValueError("state and model dimensions differ")
    return float(_kernels.weighted_sum(amps, model.energy_table))


def sample(sv: StateVector, shots: int, seed: int | None) -> ShotDistribution:
    """Multinomial measurement record in the computational basis."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = sv.probabilities
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, probs)
    nz = np.flatnonzero(draws)
    return ShotDistribution({index_to_bitstring(int(k), sv.n_qubits): int(draws[k]) for k in nz}, shots)


class ExpectationFunction:
    """theta -> <H_C> for a fixed circuit, evaluated against ``model``."""

    def __init__(self, model: IsingModel, circuit: Circuit):
        if model.n_qubits != circuit.n_qubits:
            raise ValueError("model and circuit sizes differ")
        self.model = model
        self.circuit = circuit
        self.sim = CircuitSimulator(circuit)
        self.table = model.energy_table
        self.nfev = 0

    def __call__(self, theta) -> float:
        self.nfev += 1
        return float(_kernels.weighted_sum(self.sim.run(theta), self.table))

    def gradient(self, theta, step: float = 1e-6) -> np.ndarray:
        return finite_difference(self, theta, step)


def finite_difference(fn: Callable[[np.ndarray], float], theta, step: float = 1e-6,
                      central: bool = True) -> np.ndarray:
    x = np.array(theta.values if isinstance(theta, ParamVector) else theta, dtype=float)
    grad = np.empty_like(x)
    f0 = None if central else fn(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = step
        if central:
            grad[k] = (fn(x + e) - fn(x - e)) / (2 * step)
        else:
            grad[k] = (fn(x + e) - f0) / step
    return grad


def gradient(model: IsingModel, circuit: Circuit, params, step: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of <H_C> with respect to the circuit parameters."""
    return ExpectationFunction(model, circuit).gradient(params, step)
