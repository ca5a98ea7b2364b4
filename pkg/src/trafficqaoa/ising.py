"""Ising Hamiltonians ``H = sum J_uv Z_u Z_v + sum h_u Z_u + c``.

Bit convention: measuring bit 1 on qubit ``u`` means ``z_u = -1``, which is
the image of ``q_u = 1`` under ``q_u = (1 - z_u) / 2``.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from . import _kernels
from .qubo import QuadraticForm, QuboModel, as_bits

DEFAULT_SPECTRUM_CAP = 24


def index_to_bitstring(index: int, n: int) -> str:
    return format(index, f"0{n}b") if n else ""


def bitstring_to_index(bits: str) -> int:
    return int(bits, 2) if bits else 0


@dataclass(frozen=True, eq=False)
class IsingModel:
    n_qubits: int
    J: Mapping[tuple[int, int], float] = field(default_factory=dict)
    h: Mapping[int, float] = field(default_factory=dict)
    constant: float = 0.0
    norm_factor: float = 1.0

    def __post_init__(self):
        if not self.norm_factor > 0:
            raise ValueError("norm_factor must be positive")
        for (u, v) in self.J:
            if not (0 <= u < v < self.n_qubits):
                raise ValueError(f"coupling key {(u, v)} must satisfy 0 <= u < v < n")
        for u in self.h:
            if not 0 <= u < self.n_qubits:
                raise ValueError(f"field key {u} out of range")

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self.J)

    def coefficients(self) -> np.ndarray:
        """Stored J and h values (the set averaged over by :func:`normalize`)."""
        return np.array(list(self.J.values()) + list(self.h.values()), dtype=float)

    def energy(self, bits) -> float:
        z = 1 - 2 * as_bits(bits, self.n_qubits).astype(float)
        e = self.constant
        e += sum(hv * z[u] for u, hv in self.h.items())
        e += sum(jv * z[u] * z[v] for (u, v), jv in self.J.items())
        return float(e)

    @cached_property
    def energy_table(self) -> np.ndarray:
        """Energies of all 2**N basis states, big-endian index order."""
        h_items = sorted(self.h.items())
        j_items = sorted(self.J.items())
        table = _kernels.ising_table(
            self.n_qubits,
            np.array([u for u, _ in h_items], dtype=np.int64),
            np.array([v for _, v in h_items], dtype=float),
            np.array([u for (u, _), _ in j_items], dtype=np.int64),
            np.array([v for (_, v), _ in j_items], dtype=np.int64),
            np.array([w for _, w in j_items], dtype=float),
            float(self.constant),
        )
        table.flags.writeable = False
        return table

    def dense_matrix(self) -> np.ndarray:
        """Explicit 2**N x 2**N matrix built from Pauli tensor products (small N only)."""
        n = self.n_qubits
        Z = np.diag([1.0, -1.0])
        I = np.eye(2)

        def z_string(qs):
            out = np.ones((1, 1))
            for q in range(n):
                out = np.kron(out, Z if q in qs else I)
            return out

        H = self.constant * np.eye(1 << n)
        for u, hv in self.h.items():
            H = H + hv * z_string({u})
        for (u, v), jv in self.J.items():
            H = H + jv * z_string({u, v})
        return H

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "J": [[u, v, w] for (u, v), w in sorted(self.J.items())],
            "h": [[u, w] for u, w in sorted(self.h.items())],
            "constant": self.constant,
            "norm_factor": self.norm_factor,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "IsingModel":
        return cls(
            int(data["n_qubits"]),
            {(int(u), int(v)): float(w) for u, v, w in data["J"]},
            {int(u): float(w) for u, w in data["h"]},
            float(data["constant"]),
            float(data.get("norm_factor", 1.0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "IsingModel":
        return cls.from_dict(json.loads(text))


def to_ising(qubo: QuboModel | QuadraticForm) -> IsingModel:
    """Substitute ``q_u = (1 - Z_u)/2`` and collect Pauli terms."""
    form = qubo.form if isinstance(qubo, QuboModel) else qubo
    h: dict[int, float] = defaultdict(float)
    J: dict[tuple[int, int], float] = {}
    c = form.constant
    for u, a in form.linear.items():
        c += a / 2
        h[u] -= a / 2
    for (u, v), b in form.quadratic.items():
        c += b / 4
        h[u] -= b / 4
        h[v] -= b / 4
        J[(u, v)] = J.get((u, v), 0.0) + b / 4
    return IsingModel(form.n, J, dict(sorted(h.items())), c)


def normalize(model: IsingModel) -> IsingModel:
    """Rescale so the mean absolute stored coefficient is 1."""
    coeffs = model.coefficients()
    scale = float(np.mean(np.abs(coeffs))) if coeffs.size else 0.0
    if scale == 0.0:
        raise ValueError("cannot normalize an all-zero model")
    return IsingModel(
        model.n_qubits,
        {k: w / scale for k, w in model.J.items()},
        {k: w / scale for k, w in model.h.items()},
        model.constant / scale,
        model.norm_factor * scale,
    )


def energy(model: IsingModel, bits) -> float:
    return model.energy(bits)


@dataclass(frozen=True, eq=False)
class Spectrum:
    e_min: float
    e_max: float
    ground_states: tuple[str, ...]
    e_random: float
    table: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_qubits(self) -> int:
        return len(self.ground_states[0])


def exhaustive_spectrum(model: IsingModel, cap: int = DEFAULT_SPECTRUM_CAP) -> Spectrum:
    """Exact extremal energies, ground states and the uniform-average energy."""
    n = model.n_qubits
    if n > cap:
        raise ValueError(f"{n} qubits exceeds the enumeration cap of {cap}")
    table = model.energy_table
    e_min = float(table.min())
    e_max = float(table.max())
    e_random = float(table.mean())
    scale = max(1.0, float(np.abs(model.coefficients()).sum()) + abs(model.constant))
    if abs(e_random - model.constant) > 1e-9 * scale:
        raise RuntimeError(f"uniform average {e_random} differs from the constant {model.constant}")
    ground = np.flatnonzero(table <= e_min + 1e-9 * scale)
    return Spectrum(e_min, e_max, tuple(index_to_bitstring(int(k), n) for k in ground), e_random, table)


def random_dense_model(n: int, rng: np.random.Generator, j_mean: float = 0.0, j_std: float = 1.0,
                       h_mean: float = 0.0, h_std: float = 1.0, constant: float = 0.0) -> IsingModel:
    """Fully connected model with normally distributed couplings and fields."""
    J = {(u, v): float(rng.normal(j_mean, j_std)) for u in range(n) for v in range(u + 1, n)}
    h = {u: float(rng.normal(h_mean, h_std)) for u in range(n)}
    return IsingModel(n, J, h, constant)
