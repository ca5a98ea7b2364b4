"""Command line for the traffic-routing QAOA experiments: ``trafficqaoa <command> [options]``.

Exit status is 0 on success, 1 for a bad configuration and 2 when a run fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import experiments as ex
from .experiments import ConfigError, ExperimentConfig

log = logging.getLogger("trafficqaoa")

# Defaults that differ from ExperimentConfig's, per command.
COMMAND_DEFAULTS = {
    "generate": {"instances": 1},
    "benchmark-init": {"cars": (3,), "routes": 3, "instances": 20, "p": (2, 3), "restarts": 50},
    "density": {"cars": (3,), "routes": 3, "instances": 20, "p": (2,)},
    "scaling": {"cars": tuple(range(1, 12)), "routes": 2, "instances": 10, "p": (1,),
                "algorithms": ex.ALGORITHMS},
    "precompute": {"cars": (3,), "routes": 3, "instances": 20, "p": (1, 2, 3)},
}

# (flag, config field, type, nargs, help)
CONFIG_FLAGS = [
    ("--cars", "cars", int, "+", "car counts to sweep"),
    ("--routes", "routes", int, None, "candidate routes per car"),
    ("--instances", "instances", int, None, "instances per size"),
    ("--seed", "seed", int, None, "base seed; instance k uses seed + k"),
    ("--network", "network", str, None, "'grid', a bundled fixture name or a network file"),
    ("--rows", "rows", int, None, "grid rows"),
    ("--cols", "cols", int, None, "grid columns"),
    ("--origin", "origin", str, None, "trip origin node (fixture networks)"),
    ("--destination", "destination", str, None, "trip destination node (fixture networks)"),
    ("--pool-size", "pool_size", int, None, "shortest paths drawn from per car"),
    ("--lambda-mode", "lambda_mode", str, None, "penalty calibration: exact or endpoints"),
    ("--algorithms", "algorithms", str, "+", "qaoa, cf-qaoa, cf-maqaoa"),
    ("--p", "p", int, "+", "layer counts"),
    ("--restarts", "restarts", int, None, "starts per initialisation arm"),
    ("--dt-min", "dt_min", float, None, "smallest TQA time step"),
    ("--dt-max", "dt_max", float, None, "TQA time step upper bound (exclusive)"),
    ("--max-iter", "max_iter", int, None, "optimiser iteration cap"),
    ("--shots", "shots", int, None, "measurement shots"),
    ("--coupling-map", "coupling_map", str, None, "heavy-hex:RxC, linear:N or complete:N"),
    ("--layout", "layout", str, None, "CF layout strategy: bfs or greedy"),
    ("--threshold", "threshold", float, None, "acceptable-solution threshold on R_true"),
    ("--t-single", "t_single", float, None, "time per shot for runtime estimates"),
    ("--precompute-samples", "precompute_samples", int, None, "synthetic models for precomputed parameters"),
    ("--precompute-qubits", "precompute_qubits", int, None, "qubits per synthetic model"),
    ("--precompute-dt", "precompute_dt", float, None, "TQA step used as the precompute start"),
    ("--grid-points", "grid_points", int, None, "points per axis of the p=1 grid search"),
    ("--grid-max-qubits", "grid_max_qubits", int, None, "largest size that gets a grid search"),
    ("--fourier-beta-kernel", "fourier_beta_kernel", str, None, "sin or cos"),
]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trafficqaoa", description="Traffic-routing QAOA experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMAND_DEFAULTS:
        cmd = sub.add_parser(name, help=_HELP[name])
        cmd.add_argument("--config", type=Path, help="JSON config file; flags override it")
        cmd.add_argument("--out", type=Path, required=True, help="output directory")
        for flag, dest, typ, nargs, text in CONFIG_FLAGS:
            cmd.add_argument(flag, dest=dest, type=typ, nargs=nargs, default=None, help=text)
    rep = sub.add_parser("report", help=_HELP["report"])
    rep.add_argument("records", type=Path, nargs="+", help="records.json files")
    rep.add_argument("--out", type=Path, help="write the merged CSV here instead of stdout")
    return parser


_HELP = {
    "generate": "write instance, QUBO and Ising files",
    "benchmark-init": "compare RANDOM and TQA initialisation",
    "density": "per-state probability data for four parameter strategies",
    "scaling": "optimise and sample QAOA variants across problem sizes",
    "precompute": "median-optimum parameters from coefficient statistics",
    "report": "merge run records into a summary CSV",
}


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    data = {k: list(v) if isinstance(v, tuple) else v for k, v in COMMAND_DEFAULTS[args.command].items()}
    if args.config is not None:
        try:
            data.update(json.loads(args.config.read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    for _, dest, *_ in CONFIG_FLAGS:
        value = getattr(args, dest)
        if value is not None:
            data[dest] = value
    return ExperimentConfig.from_dict(data)


def _write_common(out: Path, config: ExperimentConfig, started: float, **extra):
    out.mkdir(parents=True, exist_ok=True)
    ex.write_json(out / "config.json", {"config": config.to_dict(), "config_hash": config.config_hash(),
                                        "elapsed_s": round(time.time() - started, 3), "scope": ex.SCOPE_NOTE,
                                        **extra})


def run(args: argparse.Namespace) -> int:
    if args.command == "report":
        records = ex.load_records(args.records)
        rows = ex.report(records)
        if args.out:
            ex.write_csv(args.out, rows)
        else:
            sys.stdout.write(ex.csv_text(rows))
        return 0

    config = resolve_config(args)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    if args.command == "generate":
        folders = ex.generate(config, out)
        print(f"wrote {len(folders)} instance folder(s) to {out}")
    elif args.command == "benchmark-init":
        summary, traces = ex.benchmark_init(config)
        ex.write_csv(out / "summary.csv", summary)
        ex.write_csv(out / "traces.csv", traces)
        print(ex.csv_text(summary), end="")
    elif args.command == "density":
        rows, summary, meta = ex.density(config)
        ex.write_csv(out / "density.csv", rows)
        ex.write_csv(out / "summary.csv", summary)
        ex.write_json(out / "meta.json", meta)
        print(ex.csv_text(summary), end="")
    elif args.command == "scaling":
        records, summary = ex.scaling(config)
        ex.write_json(out / "records.json", {"records": records})
        ex.write_csv(out / "summary.csv", summary)
        print(ex.csv_text(summary), end="")
    elif args.command == "precompute":
        vectors = ex.precompute(config)
        ex.write_json(out / "params.json", [v.to_dict() for v in vectors])
        for v in vectors:
            print(f"p={v.p}: {' '.join(f'{x:.6f}' for x in v.values)}")
    _write_common(out, config, started)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, FloatingPointError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
