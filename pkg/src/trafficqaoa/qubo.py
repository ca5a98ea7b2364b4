"""QUBO construction for the route-assignment congestion problem.

Binary variable ``u`` stands for "car i takes route j"; the ordering is the
instance's ``var_index`` (route index varying fastest). The total cost is
``C = A + lam * B`` with ``A`` the quadratic segment congestion and ``B`` the
one-route-per-car penalty.
"""

from __future__ import annotations

import json
import logging
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .roadnet import TrafficInstance

log = logging.getLogger(__name__)


def as_bits(bits, n: int | None = None) -> np.ndarray:
    """Coerce a bitstring ("0110") or 0/1 sequence to an int8 array."""
    if isinstance(bits, str):
        arr = np.array([int(ch) for ch in bits], dtype=np.int8)
    else:
        arr = np.asarray(bits, dtype=np.int8).ravel()
    if np.any((arr != 0) & (arr != 1)):
        raise ValueError("assignment must be binary")
    if n is not None and arr.size != n:
        raise ValueError(f"assignment has length {arr.size}, expected {n}")
    return arr


def bit_columns(n: int) -> np.ndarray:
    """All 2**n assignments as rows, index order big-endian (variable 0 is the MSB)."""
    idx = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts) & 1).astype(np.int8)


@dataclass(frozen=True)
class QuadraticForm:
    """Polynomial ``constant + sum linear[u] q_u + sum quadratic[u, v] q_u q_v`` over binaries."""

    n: int
    linear: Mapping[int, float] = field(default_factory=dict)
    quadratic: Mapping[tuple[int, int], float] = field(default_factory=dict)
    constant: float = 0.0

    def __post_init__(self):
        for (u, v) in self.quadratic:
            if not (0 <= u < v < self.n):
                raise ValueError(f"quadratic key {(u, v)} must satisfy 0 <= u < v < n")
        for u in self.linear:
            if not 0 <= u < self.n:
                raise ValueError(f"linear key {u} out of range")

    def __add__(self, other: "QuadraticForm") -> "QuadraticForm":
        if other.n != self.n:
            raise ValueError("size mismatch")
        lin = defaultdict(float, self.linear)
        quad = defaultdict(float, self.quadratic)
        for u, a in other.linear.items():
            lin[u] += a
        for k, b in other.quadratic.items():
            quad[k] += b
        return QuadraticForm(self.n, dict(lin), dict(quad), self.constant + other.constant)

    def scaled(self, factor: float) -> "QuadraticForm":
        return QuadraticForm(
            self.n,
            {u: factor * a for u, a in self.linear.items()},
            {k: factor * b for k, b in self.quadratic.items()},
            factor * self.constant,
        )

    def evaluate(self, bits) -> float:
        q = as_bits(bits, self.n)
        total = self.constant
        total += sum(a for u, a in self.linear.items() if q[u])
        total += sum(b for (u, v), b in self.quadratic.items() if q[u] and q[v])
        return float(total)

    def evaluate_all(self) -> np.ndarray:
        """Values on every assignment, indexed big-endian."""
        cols = bit_columns(self.n)
        out = np.full(1 << self.n, self.constant, dtype=float)
        for u, a in self.linear.items():
            out += a * cols[:, u]
        for (u, v), b in self.quadratic.items():
            out += b * (cols[:, u] & cols[:, v])
        return out

    def to_matrix(self) -> np.ndarray:
        """Upper-triangular matrix Q with linear terms on the diagonal."""
        Q = np.zeros((self.n, self.n))
        for u, a in self.linear.items():
            Q[u, u] = a
        for (u, v), b in self.quadratic.items():
            Q[u, v] = b
        return Q

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "linear": [[u, a] for u, a in sorted(self.linear.items())],
            "quadratic": [[u, v, b] for (u, v), b in sorted(self.quadratic.items())],
            "constant": self.constant,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QuadraticForm":
        return cls(
            int(data["n"]),
            {int(u): float(a) for u, a in data["linear"]},
            {(int(u), int(v)): float(b) for u, v, b in data["quadratic"]},
            float(data["constant"]),
        )


def _square_of_sum(n: int, variables: Sequence[int], weight: float, offset: float = 0.0) -> QuadraticForm:
    """Expand ``weight * (offset - sum q)^2`` using q^2 = q (offset in {0, 1})."""
    vs = sorted(variables)
    # (o - S)^2 = o^2 - 2oS + S + 2 sum_{pairs}
    lin = {u: weight * (1.0 - 2.0 * offset) for u in vs}
    quad = {(vs[a], vs[b]): 2.0 * weight for a in range(len(vs)) for b in range(a + 1, len(vs))}
    return QuadraticForm(n, lin, quad, weight * offset * offset)


def segment_users(instance: TrafficInstance) -> dict[str, list[int]]:
    """segment id -> variables whose route traverses it."""
    users: dict[str, list[int]] = defaultdict(list)
    for u, route in enumerate(instance.routes):
        for sid in route.segment_ids:
            users[sid].append(u)
    return users


def segment_cost_terms(instance: TrafficInstance, segment_id: str) -> QuadraticForm:
    """Congestion contribution ``d_k (sum of q over routes using s_k)^2`` of one segment."""
    seg = instance.network.segment_map[segment_id]
    users = segment_users(instance).get(segment_id, [])
    return _square_of_sum(instance.n_vars, users, seg.weight)


def congestion_terms(instance: TrafficInstance) -> QuadraticForm:
    total = QuadraticForm(instance.n_vars)
    for sid, users in sorted(segment_users(instance).items()):
        total = total + _square_of_sum(instance.n_vars, users, instance.network.segment_map[sid].weight)
    return total


def constraint_terms(instance: TrafficInstance) -> QuadraticForm:
    """One-route-per-car penalty ``sum_i (1 - sum_j q_ij)^2``; zero exactly on one-hot assignments."""
    total = QuadraticForm(instance.n_vars)
    for i in range(instance.n_cars):
        variables = [instance.variable(i, j) for j in range(instance.route_counts[i])]
        total = total + _square_of_sum(instance.n_vars, variables, 1.0, offset=1.0)
    return total


def calibrate_lambda(congestion: QuadraticForm, constraint: QuadraticForm,
                     route_counts: Sequence[int], mode: str = "exact") -> float:
    """Penalty weight that equalises the value range of ``lam * B`` with that of ``A``.

    ``mode="exact"`` uses the true ranges: ``A`` has nonnegative coefficients so
    it spans ``[A(0...0), A(1...1)]``, and ``B`` spans ``[0, sum_i max(1, (m_i - 1)^2)]``.
    ``mode="endpoints"`` takes both extrema at the all-zeros / all-ones assignments;
    when that range is not positive the weight falls back to 1 with a warning.
    """
    n = congestion.n
    a_range = congestion.evaluate(np.ones(n)) - congestion.evaluate(np.zeros(n))
    if mode == "exact":
        if any(c < 0 for c in congestion.linear.values()) or any(c < 0 for c in congestion.quadratic.values()):
            values = congestion.evaluate_all()
            a_range = float(values.max() - values.min())
        b_range = float(sum(max(1, (m - 1) ** 2) for m in route_counts))
    elif mode == "endpoints":
        b_range = constraint.evaluate(np.ones(n)) - constraint.evaluate(np.zeros(n))
    else:
        raise ValueError(f"unknown lambda mode {mode!r}")
    if b_range <= 0:
        warnings.warn("constraint range is not positive; using lambda = 1", RuntimeWarning, stacklevel=2)
        return 1.0
    if a_range <= 0:
        warnings.warn("congestion range is zero; using lambda = 1", RuntimeWarning, stacklevel=2)
        return 1.0
    return a_range / b_range


@dataclass(frozen=True)
class QuboModel:
    congestion: QuadraticForm
    constraint: QuadraticForm
    lam: float
    var_index: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")

    @property
    def n_vars(self) -> int:
        return self.congestion.n

    @cached_property
    def form(self) -> QuadraticForm:
        return self.congestion + self.constraint.scaled(self.lam)

    @property
    def linear(self):
        return self.form.linear

    @property
    def quadratic(self):
        return self.form.quadratic

    @property
    def constant(self) -> float:
        return self.form.constant

    @property
    def route_counts(self) -> tuple[int, ...]:
        counts: dict[int, int] = defaultdict(int)
        for i, _ in self.var_index:
            counts[i] += 1
        return tuple(counts[i] for i in sorted(counts))

    def evaluate(self, bits) -> float:
        return self.form.evaluate(bits)

    def evaluate_all(self) -> np.ndarray:
        return self.form.evaluate_all()

    def is_feasible(self, bits) -> bool:
        return self.constraint.evaluate(bits) == 0.0

    def to_json(self) -> str:
        form = self.form
        data = {
            "n_vars": self.n_vars,
            **{k: v for k, v in form.to_dict().items() if k != "n"},
            "lambda": self.lam,
            "var_index": [list(p) for p in self.var_index],
            "congestion": self.congestion.to_dict(),
            "constraint": self.constraint.to_dict(),
        }
        return json.dumps(data, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "QuboModel":
        data = json.loads(text)
        return cls(
            QuadraticForm.from_dict(data["congestion"]),
            QuadraticForm.from_dict(data["constraint"]),
            float(data["lambda"]),
            tuple(tuple(p) for p in data["var_index"]),
        )


def build_qubo(instance: TrafficInstance, lambda_mode: str = "exact") -> QuboModel:
    a = congestion_terms(instance)
    b = constraint_terms(instance)
    lam = calibrate_lambda(a, b, instance.route_counts, lambda_mode)
    log.debug("lambda=%g for %d variables", lam, instance.n_vars)
    return QuboModel(a, b, lam, instance.var_index)


def direct_cost(instance: TrafficInstance, bits, lam: float) -> tuple[float, float, float]:
    """(A, B, A + lam*B) evaluated straight from the route/segment definitions."""
    q = as_bits(bits, instance.n_vars)
    load: dict[str, int] = defaultdict(int)
    for u, route in enumerate(instance.routes):
        if q[u]:
            for sid in route.segment_ids:
                load[sid] += 1
    seg = instance.network.segment_map
    a = sum(seg[s].weight * c * c for s, c in load.items())
    b = 0.0
    for i in range(instance.n_cars):
        taken = sum(int(q[instance.variable(i, j)]) for j in range(instance.route_counts[i]))
        b += (1 - taken) ** 2
    return a, b, a + lam * b
