"""Approximation measures, solution extraction and shot-count/runtime estimates."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .ising import IsingModel, Spectrum, bitstring_to_index, exhaustive_spectrum
from .simulator import ShotDistribution, StateVector, expectation

ACCEPT_THRESHOLD = 0.8
CONFIDENCE = 0.99


class DegenerateSpectrumError(ValueError):
    pass


class UnboundedShotsError(ValueError):
    """No finite number of shots reaches the confidence target."""


@dataclass(frozen=True)
class ApproxReport:
    r_true: float
    r_random: float
    e_min: float
    e_max: float
    e_random: float
    expectation: float
    mode: str = "exact"

    def to_dict(self) -> dict:
        return asdict(self)


def _check_spectrum(spectrum: Spectrum):
    if not spectrum.e_max > spectrum.e_min:
        raise DegenerateSpectrumError("E_max equals E_min; approximation measures are undefined")


def measures_from_energy(energy: float, spectrum: Spectrum, mode: str = "exact") -> ApproxReport:
    """R_true = (E_max - E) / (E_max - E_min), R_random = (c - E) / (c - E_min)."""
    _check_spectrum(spectrum)
    r_true = (spectrum.e_max - energy) / (spectrum.e_max - spectrum.e_min)
    denom = spectrum.e_random - spectrum.e_min
    r_random = (spectrum.e_random - energy) / denom if denom > 0 else math.nan
    return ApproxReport(r_true, r_random, spectrum.e_min, spectrum.e_max, spectrum.e_random, energy, mode)


def distribution_energy(dist: ShotDistribution, model: IsingModel) -> float:
    """Frequency-weighted mean energy of the observed bitstrings."""
    return math.fsum(c * model.energy(b) for b, c in dist.counts.items()) / dist.shots


def approx_measures(source, model: IsingModel, spectrum: Spectrum | None = None) -> ApproxReport:
    """Approximation measures of a state (exact mode) or a shot record (empirical mode)."""
    spectrum = exhaustive_spectrum(model) if spectrum is None else spectrum
    if isinstance(source, ShotDistribution):
        return measures_from_energy(distribution_energy(source, model), spectrum, "empirical")
    return measures_from_energy(expectation(source, model), spectrum, "exact")


def extract_solutions(dist: ShotDistribution, model: IsingModel) -> tuple[str, str]:
    """(lowest-energy observed string, most frequent string); ties go to the smaller bitstring."""
    if not dist.counts:
        raise ValueError("empty distribution")
    best = min(dist.counts, key=lambda b: (model.energy(b), b))
    most = min(dist.counts, key=lambda b: (-dist.counts[b], b))
    return best, most


def state_measures(spectrum: Spectrum) -> np.ndarray:
    """R_true of every basis state, indexed like the energy table."""
    _check_spectrum(spectrum)
    if spectrum.table is None:
        raise ValueError("spectrum carries no energy table")
    return (spectrum.e_max - spectrum.table) / (spectrum.e_max - spectrum.e_min)


def acceptable_probability(source, spectrum: Spectrum, threshold: float = ACCEPT_THRESHOLD) -> tuple[float, float]:
    """Probability mass on basis states with R_true above ``threshold``.

    Returns ``(p_single, baseline)`` where the baseline is the fraction of all
    2**N states that qualify, i.e. the value for uniform random guessing.
    """
    r = state_measures(spectrum)
    good = r > threshold
    baseline = float(good.mean())
    if isinstance(source, ShotDistribution):
        n_good = sum(c for b, c in source.counts.items() if good[bitstring_to_index(b)])
        return n_good / source.shots, baseline
    probs = source.probabilities if isinstance(source, StateVector) else np.abs(np.asarray(source)) ** 2
    return float(probs[good].sum()), baseline


def ground_state_probability(source, spectrum: Spectrum) -> float:
    idx = [bitstring_to_index(b) for b in spectrum.ground_states]
    if isinstance(source, ShotDistribution):
        return sum(source.counts.get(b, 0) for b in spectrum.ground_states) / source.shots
    probs = source.probabilities if isinstance(source, StateVector) else np.abs(np.asarray(source)) ** 2
    return float(probs[idx].sum())


def shots_for_confidence(p_single: float, confidence: float = CONFIDENCE) -> int:
    """Smallest K with ``1 - (1 - p_single)**K >= confidence``."""
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    if p_single >= 1:
        return 1
    if p_single <= 0:
        raise UnboundedShotsError("no acceptable state has nonzero probability")
    bound = math.log1p(-confidence) / math.log1p(-p_single)
    k = max(1, math.ceil(bound - 1e-9))
    # the slack above guards against bounds like 2.0000000000000004; verify directly
    while 1 - (1 - p_single) ** k < confidence - 1e-12:
        k += 1
    return k


@dataclass(frozen=True)
class RuntimeEstimate:
    p_single: float
    k99: int
    t_single: float
    threshold: float = ACCEPT_THRESHOLD

    def __post_init__(self):
        if self.k99 < 1:
            raise ValueError("k99 must be >= 1")

    @property
    def t_total(self) -> float:
        return self.t_single * self.k99

    @classmethod
    def from_probability(cls, p_single: float, t_single: float = 1.0,
                         threshold: float = ACCEPT_THRESHOLD) -> "RuntimeEstimate":
        return cls(p_single, shots_for_confidence(p_single), t_single, threshold)

    def to_dict(self) -> dict:
        return {**asdict(self), "t_total": self.t_total}


def runtime_ratio(series: Sequence[RuntimeEstimate]) -> list[float]:
    """Each total runtime divided by the smallest in the series."""
    if not series:
        raise ValueError("empty series")
    totals = [r.t_total for r in series]
    lo = min(totals)
    if not lo > 0:
        raise ValueError("runtimes must be positive")
    return [t / lo for t in totals]
