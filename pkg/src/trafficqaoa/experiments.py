"""Experiment recipes behind the command line: configs, problem ensembles and run records.

Every number in a record derives from the config and the seeds it lists, so
rerunning a config reproduces its records exactly.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .cf import build_cf_maqaoa, build_cf_qaoa, optimize_cf_maqaoa, plan_compression
from .circuit import ParamVector, build_qaoa
from .ising import IsingModel, Spectrum, exhaustive_spectrum, normalize, to_ising
from .metrics import (
    RuntimeEstimate,
    UnboundedShotsError,
    acceptable_probability,
    approx_measures,
    extract_solutions,
    ground_state_probability,
    measures_from_energy,
    state_measures,
)
from .params import (
    coefficient_stats,
    fourier_expand,
    fourier_fit,
    init_interp,
    init_random,
    init_tqa,
    optimize,
    optimize_p1,
    precompute_params,
    tqa_grid,
)
from .qubo import QuboModel, build_qubo
from .roadnet import TrafficInstance, build_instance, load_fixture, load_network, random_instance
from .routing import CouplingMap, route_and_count
from .simulator import ExpectationFunction, sample, simulate

log = logging.getLogger(__name__)

ALGORITHMS = ("qaoa", "cf-qaoa", "cf-maqaoa")
SCOPE_NOTE = ("noiseless statevector simulation and circuit cost model only; "
              "physical-hardware arms (device runs, readout mitigation) are out of scope")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines an experiment's output.

    ``network`` is ``"grid"`` for a seeded ``rows x cols`` street grid per
    instance, or the name of a bundled fixture, or a path to a network file.
    Instance ``k`` of every size uses seed ``seed + k``.
    """

    cars: tuple[int, ...] = (3,)
    routes: int = 3
    instances: int = 20
    seed: int = 0
    network: str = "grid"
    rows: int = 4
    cols: int = 4
    origin: str | None = None
    destination: str | None = None
    pool_size: int = 1000
    lambda_mode: str = "exact"
    algorithms: tuple[str, ...] = ("qaoa",)
    p: tuple[int, ...] = (2,)
    restarts: int = 50
    dt_min: float = 0.1
    dt_max: float = 1.0
    max_iter: int = 150
    shots: int = 10000
    coupling_map: str = "heavy-hex:3x2"
    layout: str = "bfs"
    threshold: float = 0.8
    t_single: float = 1.0
    precompute_samples: int = 100
    precompute_qubits: int = 9
    precompute_dt: float = 0.75
    grid_points: int = 64
    grid_max_qubits: int = 12
    fourier_beta_kernel: str = "sin"

    def __post_init__(self):
        for name in ("cars", "p", "algorithms"):
            value = getattr(self, name)
            if isinstance(value, (int, str)):
                value = (value,)
            object.__setattr__(self, name, tuple(value))
        self.validate()

    def validate(self):
        if not self.cars or any(c < 1 for c in self.cars):
            raise ConfigError("cars must list positive car counts")
        if self.routes < 1 or self.instances < 1 or self.restarts < 1:
            raise ConfigError("routes, instances and restarts must be >= 1")
        if not self.p or any(p < 1 for p in self.p):
            raise ConfigError("p must list positive layer counts")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ConfigError(f"unknown algorithm(s) {bad}; choose from {ALGORITHMS}")
        if self.lambda_mode not in ("exact", "endpoints"):
            raise ConfigError(f"unknown lambda mode {self.lambda_mode!r}")
        if self.layout not in ("bfs", "greedy"):
            raise ConfigError(f"unknown layout {self.layout!r}")
        if self.fourier_beta_kernel not in ("sin", "cos"):
            raise ConfigError("fourier_beta_kernel must be 'sin' or 'cos'")
        if self.shots < 1 or self.max_iter < 1 or self.grid_points < 2 or self.precompute_samples < 1:
            raise ConfigError("shots, max_iter, precompute_samples must be >= 1 and grid_points >= 2")
        if not 0 < self.dt_min < self.dt_max:
            raise ConfigError("need 0 < dt_min < dt_max")
        if self.network != "grid" and not _network_exists(self.network):
            raise ConfigError(f"network {self.network!r} is neither 'grid', a bundled fixture nor a file")
        parse_coupling_map(self.coupling_map)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _network_exists(name: str) -> bool:
    from .roadnet import fixture_path

    return fixture_path(name).is_file() or Path(name).is_file()


def parse_coupling_map(spec: str) -> CouplingMap:
    """``heavy-hex:RxC``, ``linear:N`` or ``complete:N``."""
    try:
        kind, _, arg = spec.partition(":")
        if kind == "heavy-hex":
            rows, cells = (int(x) for x in arg.split("x"))
            return CouplingMap.heavy_hex(rows, cells)
        if kind == "linear":
            return CouplingMap.linear(int(arg))
        if kind == "complete":
            return CouplingMap.complete(int(arg))
    except ValueError:
        pass
    raise ConfigError(f"bad coupling map spec {spec!r}; use heavy-hex:RxC, linear:N or complete:N")


# --- problems ------------------------------------------------------------------

@dataclass(eq=False)
class Problem:
    n_cars: int
    index: int
    seed: int
    instance: TrafficInstance
    qubo: QuboModel
    model: IsingModel
    spectrum: Spectrum

    @property
    def n_qubits(self) -> int:
        return self.model.n_qubits

    @property
    def label(self) -> str:
        return f"c{self.n_cars}_r{self.instance.route_counts[0]}_s{self.seed}"

    def digest(self) -> str:
        blob = self.instance.to_json() + self.model.to_json()
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def make_instance(config: ExperimentConfig, n_cars: int, seed: int) -> TrafficInstance:
    if config.network == "grid":
        return random_instance(n_cars, config.routes, seed, config.rows, config.cols, config.pool_size)
    from .roadnet import fixture_path

    path = fixture_path(config.network)
    net = load_fixture(config.network) if path.is_file() else load_network(Path(config.network))
    origin = config.origin or net.nodes[0]
    dest = config.destination or net.nodes[-1]
    return build_instance(net, [(origin, dest, config.routes)] * n_cars, seed, config.pool_size, config.network)


def make_problem(config: ExperimentConfig, n_cars: int, index: int) -> Problem:
    seed = config.seed + index
    instance = make_instance(config, n_cars, seed)
    qubo = build_qubo(instance, config.lambda_mode)
    model = normalize(to_ising(qubo))
    return Problem(n_cars, index, seed, instance, qubo, model, exhaustive_spectrum(model))


def make_ensemble(config: ExperimentConfig, n_cars: int | None = None) -> list[Problem]:
    sizes = config.cars if n_cars is None else (n_cars,)
    return [make_problem(config, n, k) for n in sizes for k in range(config.instances)]


def precomputed_for(config: ExperimentConfig, problems: Sequence[Problem], p: int) -> ParamVector:
    """Median-optimum parameters from models sharing the ensemble's coefficient statistics."""
    stats = coefficient_stats([pr.model for pr in problems])
    return precompute_params(stats, p, config.precompute_samples, config.precompute_qubits,
                             config.seed, config.precompute_dt, config.max_iter)


# --- run records -----------------------------------------------------------------

def _digest_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _run_seed(config: ExperimentConfig, *keys: int) -> int:
    return int(np.random.SeedSequence([config.seed, *keys]).generate_state(1)[0])


def evaluate_state(config: ExperimentConfig, problem: Problem, circuit, params: ParamVector,
                   shot_seed: int) -> dict:
    """Exact and sampled measures of the state prepared by ``circuit`` at ``params``."""
    sv = simulate(circuit, params)
    dist = sample(sv, config.shots, shot_seed)
    spec = problem.spectrum
    model = problem.model
    exact = approx_measures(sv, model, spec)
    empirical = approx_measures(dist, model, spec)
    best, most = extract_solutions(dist, model)
    p_single, baseline = acceptable_probability(dist, spec, config.threshold)
    try:
        runtime = RuntimeEstimate.from_probability(p_single, config.t_single, config.threshold).to_dict()
    except UnboundedShotsError:
        runtime = None
    return {
        "exact": exact.to_dict(),
        "empirical": empirical.to_dict(),
        "best_state": best,
        "best_r_true": measures_from_energy(model.energy(best), spec).r_true,
        "most_probable_state": most,
        "most_probable_r_true": measures_from_energy(model.energy(most), spec).r_true,
        "ground_state_probability": ground_state_probability(dist, spec),
        "ground_state_probability_exact": ground_state_probability(sv, spec),
        "acceptable_probability": p_single,
        "acceptable_probability_exact": acceptable_probability(sv, spec, config.threshold)[0],
        "acceptable_baseline": baseline,
        "runtime": runtime,
        "shots": config.shots,
        "shot_seed": shot_seed,
        "shots_digest": _digest_text(dist.to_text()),
    }


def make_record(config: ExperimentConfig, problem: Problem, algorithm: str, p: int,
                initial: ParamVector, trace, evaluation: dict, routing=None, extra=None) -> dict:
    record = {
        "config_hash": config.config_hash(),
        "instance": problem.label,
        "instance_digest": problem.digest(),
        "n_cars": problem.n_cars,
        "n_qubits": problem.n_qubits,
        "seed": problem.seed,
        "algorithm": algorithm,
        "p": p,
        "params_initial": initial.to_dict(),
        "params_final": trace.params.to_dict(),
        "trace": trace.summary(),
        "spectrum": {"e_min": problem.spectrum.e_min, "e_max": problem.spectrum.e_max,
                     "e_random": problem.spectrum.e_random, "ground_states": list(problem.spectrum.ground_states)},
        "norm_factor": problem.model.norm_factor,
        "lambda": problem.qubo.lam,
        **evaluation,
    }
    if routing is not None:
        record["routing"] = {"depth": routing.depth, "cnots": routing.cnot_count, "swaps": routing.swap_count,
                             "map": config.coupling_map, "layout": list(routing.initial_layout)}
    if extra:
        record.update(extra)
    return record


# --- benchmark of initialisations --------------------------------------------------

def benchmark_init(config: ExperimentConfig, problems: Sequence[Problem] | None = None):
    """RANDOM versus TQA starts, ``restarts`` runs per arm, every p in ``config.p``.

    Returns ``(summary_rows, trace_rows)``; traces hold the best-so-far
    approximation measures after every optimiser iteration.
    """
    problems = make_ensemble(config) if problems is None else problems
    summary, traces = [], []
    dts = tqa_grid(config.restarts, config.dt_min, config.dt_max)
    for prob in problems:
        spec = prob.spectrum
        for p in config.p:
            circuit = build_qaoa(prob.model, p)
            arms = {
                "random": [init_random(p, _run_seed(config, prob.index, prob.n_cars, p, k)) for k in range(config.restarts)],
                "tqa": [init_tqa(p, float(dt)) for dt in dts],
            }
            for arm, starts in arms.items():
                finals_rand, finals_true = [], []
                for run, start in enumerate(starts):
                    trace = optimize(prob.model, circuit, start, config.max_iter)
                    for it, val in enumerate(trace.best_so_far()):
                        rep = measures_from_energy(float(val), spec)
                        traces.append({"instance": prob.label, "p": p, "arm": arm, "run": run, "iteration": it,
                                       "r_random": rep.r_random, "r_true": rep.r_true})
                    final = measures_from_energy(trace.value, spec)
                    finals_rand.append(final.r_random)
                    finals_true.append(final.r_true)
                summary.append({
                    "instance": prob.label, "n_qubits": prob.n_qubits, "p": p, "arm": arm, "runs": len(starts),
                    "mean_r_random": float(np.mean(finals_rand)), "min_r_random": float(np.min(finals_rand)),
                    "max_r_random": float(np.max(finals_rand)), "mean_r_true": float(np.mean(finals_true)),
                })
    return summary, traces


# --- density data ----------------------------------------------------------------

DENSITY_ARMS = ("interp", "fourier", "precomputed", "optimized")


def density(config: ExperimentConfig, problems: Sequence[Problem] | None = None):
    """Per-state (probability, R_true) for the four parameter strategies.

    Returns ``(state_rows, summary_rows, meta)``.
    """
    problems = make_ensemble(config) if problems is None else problems
    p = config.p[0]
    if p < 2:
        raise ConfigError("density compares layer-growing strategies and needs p >= 2")
    pre = precomputed_for(config, problems, p)
    rows, summary = [], []
    for prob in problems:
        model = prob.model
        circuit = build_qaoa(model, p)
        prev = optimize_p1(model, points=config.grid_points, max_iter=config.max_iter).params
        interp = prev
        for _ in range(1, p):
            interp = init_interp(interp)
        four = fourier_expand(fourier_fit(prev, 1, config.fourier_beta_kernel), p, config.fourier_beta_kernel)
        params = {
            "interp": interp,
            "fourier": four,
            "precomputed": pre,
            "optimized": optimize(model, circuit, pre, config.max_iter).params,
        }
        r_state = state_measures(prob.spectrum)
        fn = ExpectationFunction(model, circuit)
        for arm in DENSITY_ARMS:
            sv = simulate(circuit, params[arm])
            probs = sv.probabilities
            energy = fn(params[arm].values)
            rep = measures_from_energy(energy, prob.spectrum)
            summary.append({
                "instance": prob.label, "arm": arm, "energy": energy, "r_true": rep.r_true,
                "r_random": rep.r_random,
                "ground_state_probability": ground_state_probability(sv, prob.spectrum),
                "max_probability": float(probs.max()),
                "params": json.dumps([round(float(x), 12) for x in params[arm].values]),
            })
            n = prob.n_qubits
            for k in range(1 << n):
                rows.append({"instance": prob.label, "arm": arm, "state": format(k, f"0{n}b"),
                             "probability": float(probs[k]), "r_true": float(r_state[k])})
    meta = {"p": p, "background_probability": 1.0 / (1 << problems[0].n_qubits),
            "precomputed": pre.to_dict(), "scope": SCOPE_NOTE}
    return rows, summary, meta


# --- scaling sweep --------------------------------------------------------------------

def _qaoa_start(config: ExperimentConfig, problem: Problem, p: int, transfer: ParamVector | None):
    """Start for the full QAOA arm.

    Single-layer circuits on at most ``grid_max_qubits`` qubits get a global
    grid search; larger ones start from the median optimum of the previous
    size, falling back to TQA when no earlier size exists.
    """
    if p == 1 and problem.n_qubits <= config.grid_max_qubits:
        from .params import grid_search_p1

        start, _ = grid_search_p1(problem.model, build_qaoa(problem.model, 1), config.grid_points)
        return start.with_values(start.values, strategy="grid")
    if transfer is not None and transfer.p == p:
        return transfer.with_values(transfer.values, strategy="transfer")
    return init_tqa(p, config.precompute_dt)


def scaling(config: ExperimentConfig):
    """Sweep problem sizes; optimise and sample every algorithm on every instance.

    Returns ``(records, summary_rows)``.
    """
    cmap = parse_coupling_map(config.coupling_map)
    records, summary = [], []
    for p in config.p:
        transfer = None
        for n_cars in config.cars:
            problems = make_ensemble(config, n_cars)
            optima = []
            per_alg: dict[str, list[dict]] = {a: [] for a in config.algorithms}
            for prob in problems:
                model = prob.model
                if prob.n_qubits > cmap.n_phys:
                    raise ConfigError(f"{prob.n_qubits} qubits exceed the {cmap.n_phys}-site coupling map")
                qc = build_qaoa(model, p)
                start = _qaoa_start(config, prob, p, transfer)
                q_trace = optimize(model, qc, start, config.max_iter)
                optima.append(q_trace.params.values)
                shot_seed = _run_seed(config, prob.index, n_cars, p)
                if "qaoa" in config.algorithms:
                    ev = evaluate_state(config, prob, qc, q_trace.params, shot_seed)
                    rec = make_record(config, prob, "qaoa", p, start, q_trace, ev, route_and_count(qc, cmap))
                    per_alg["qaoa"].append(rec)
                if {"cf-qaoa", "cf-maqaoa"} & set(config.algorithms):
                    plan = plan_compression(model, cmap, strategy=config.layout)
                    cf_circ = build_cf_qaoa(model, plan, p)
                    cf_trace = optimize(model, cf_circ, q_trace.params, config.max_iter)
                    extra = {"plan": {"kept": len(plan.kept_pairs), "removed": len(plan.removed_pairs),
                                      "strategy": plan.strategy}}
                    if "cf-qaoa" in config.algorithms:
                        ev = evaluate_state(config, prob, cf_circ, cf_trace.params, shot_seed)
                        per_alg["cf-qaoa"].append(make_record(config, prob, "cf-qaoa", p, q_trace.params, cf_trace,
                                                              ev, route_and_count(cf_circ, cmap), extra))
                    if "cf-maqaoa" in config.algorithms:
                        ma_circ, template = build_cf_maqaoa(model, plan, p)
                        ma_trace = optimize_cf_maqaoa(model, plan, [q_trace.params, cf_trace.params], config.max_iter)
                        ev = evaluate_state(config, prob, ma_circ, ma_trace.params, shot_seed)
                        per_alg["cf-maqaoa"].append(make_record(
                            config, prob, "cf-maqaoa", p, ma_trace.initial[0], ma_trace, ev,
                            route_and_count(ma_circ, cmap), {**extra, "n_params": ma_circ.n_params}))
            transfer = ParamVector.standard(*np.split(np.median(optima, axis=0), 2), strategy="median")
            for alg in config.algorithms:
                recs = per_alg[alg]
                records.extend(recs)
                summary.append(summarize(recs, n_cars=n_cars, n_qubits=recs[0]["n_qubits"], algorithm=alg, p=p))
            log.info("scaling: %d cars done", n_cars)
    return records, summary


def _stat(values, prefix: str) -> dict:
    arr = np.asarray(values, dtype=float)
    return {f"{prefix}_median": float(np.median(arr)), f"{prefix}_min": float(arr.min()),
            f"{prefix}_max": float(arr.max())}


def summarize(records: Sequence[dict], **keys) -> dict:
    """Median and range of the headline metrics over a group of records."""
    row = dict(keys)
    row["instances"] = len(records)
    row.update(_stat([r["empirical"]["r_true"] for r in records], "avg_r_true"))
    row.update(_stat([r["empirical"]["r_random"] for r in records], "avg_r_random"))
    row.update(_stat([r["best_r_true"] for r in records], "best_r_true"))
    row.update(_stat([r["most_probable_r_true"] for r in records], "most_probable_r_true"))
    row.update(_stat([r["ground_state_probability"] for r in records], "ground_prob"))
    row.update(_stat([r["acceptable_probability"] for r in records], "acceptable_prob"))
    row["acceptable_baseline_median"] = float(np.median([r["acceptable_baseline"] for r in records]))
    k99 = [r["runtime"]["k99"] for r in records if r.get("runtime")]
    row["k99_median"] = float(np.median(k99)) if k99 else math.inf
    if all("routing" in r for r in records):
        row.update(_stat([r["routing"]["depth"] for r in records], "depth"))
        row.update(_stat([r["routing"]["cnots"] for r in records], "cnots"))
    return row


# --- generation and precompute ------------------------------------------------------

def generate(config: ExperimentConfig, out: Path) -> list[Path]:
    """Write instance, QUBO and Ising files for every configured problem."""
    written = []
    for n_cars in config.cars:
        for k in range(config.instances):
            prob = make_problem(config, n_cars, k)
            folder = Path(out) / prob.label
            folder.mkdir(parents=True, exist_ok=True)
            (folder / "instance.json").write_text(prob.instance.to_json())
            (folder / "qubo.json").write_text(prob.qubo.to_json())
            (folder / "ising.json").write_text(prob.model.to_json())
            (folder / "network.net").write_text(prob.instance.network.to_text())
            written.append(folder)
    return written


def precompute(config: ExperimentConfig) -> list[ParamVector]:
    """Precomputed parameters for each p, from the statistics of all configured sizes."""
    problems = make_ensemble(config)
    return [precomputed_for(config, problems, p) for p in config.p]


# --- output helpers --------------------------------------------------------------------

def write_csv(path: Path, rows: Sequence[dict]):
    if not rows:
        raise ValueError(f"no rows for {path}")
    fieldnames = list(rows[0])
    for row in rows[1:]:
        for k in row:
            if k not in fieldnames:
                fieldnames.append(k)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def csv_text(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]))
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def write_json(path: Path, data):
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def load_records(paths: Sequence[Path]) -> list[dict]:
    records = []
    for path in paths:
        data = json.loads(Path(path).read_text())
        if isinstance(data, dict) and "records" in data:
            data = data["records"]
        if isinstance(data, dict):
            data = [data]
        records.extend(data)
    return records


def report(records: Sequence[dict]) -> list[dict]:
    """Summary rows grouped by algorithm, p and size."""
    if not records:
        raise ValueError("no records to report")
    groups: dict[tuple, list[dict]] = {}
    for r in records:
        groups.setdefault((r["algorithm"], r["p"], r["n_qubits"]), []).append(r)
    return [summarize(recs, algorithm=a, p=p, n_qubits=n) for (a, p, n), recs in sorted(groups.items())]
