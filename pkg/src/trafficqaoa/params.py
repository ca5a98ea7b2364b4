"""Parameter initialisation strategies and the box-constrained optimisation loop."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .circuit import MULTI_ANGLE, STANDARD, Circuit, ParamVector, build_qaoa, canonicalize_params
from .ising import IsingModel, normalize, random_dense_model
from .simulator import ExpectationFunction

log = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 150
DEFAULT_TQA_DT = 0.75
GRADIENT_TOL = 1e-8


def init_random(p: int, seed: int | None) -> ParamVector:
    """gamma ~ U[-pi, pi), beta ~ U[-pi/2, pi/2)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    rng = np.random.default_rng(seed)
    gammas = rng.uniform(-math.pi, math.pi, size=p)
    betas = rng.uniform(-math.pi / 2, math.pi / 2, size=p)
    return ParamVector.standard(gammas, betas, strategy="random", seed=seed)


@dataclass(frozen=True)
class TqaSchedule:
    dt: float
    p: int

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.p < 1:
            raise ValueError("p must be >= 1")

    @property
    def total_time(self) -> float:
        return self.p * self.dt

    def params(self) -> ParamVector:
        j = np.arange(1, self.p + 1)
        return ParamVector.standard(j / self.p * self.dt, (1 - j / self.p) * self.dt, strategy="tqa", dt=self.dt)


def init_tqa(p: int, dt: float = DEFAULT_TQA_DT) -> ParamVector:
    """Linear-ramp annealing schedule: gamma_j = (j/p) dt, beta_j = (1 - j/p) dt."""
    return TqaSchedule(dt, p).params()


def tqa_grid(count: int = 50, lo: float = 0.1, hi: float = 1.0) -> np.ndarray:
    """``count`` equally spaced time steps on ``[lo, hi)``."""
    return np.linspace(lo, hi, count, endpoint=False)


def _resample(values: np.ndarray, new_len: int) -> np.ndarray:
    old = len(values)
    x_old = (np.arange(1, old + 1) - 0.5) / old
    x_new = (np.arange(1, new_len + 1) - 0.5) / new_len
    return np.interp(x_new, x_old, values)


def init_interp(prev: ParamVector) -> ParamVector:
    """Grow a p-layer schedule to p+1 layers by linear interpolation.

    Layer l of p sits at fraction (l - 1/2)/p; the new schedule is read off at
    (l - 1/2)/(p + 1), holding the end values flat outside the old range.
    """
    if prev.mode != STANDARD:
        raise ValueError("INTERP needs standard-mode parameters")
    p = prev.p
    return ParamVector.standard(_resample(prev.gammas, p + 1), _resample(prev.betas, p + 1), strategy="interp")


@dataclass(frozen=True, eq=False)
class FourierParams:
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.atleast_1d(np.asarray(self.u, dtype=float))
        v = np.atleast_1d(np.asarray(self.v, dtype=float))
        if u.shape != v.shape or u.size < 1:
            raise ValueError("u and v must be nonempty and equally long")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def q(self) -> int:
        return self.u.size


def fourier_kernel(q: int, p: int, kind: str = "sin") -> np.ndarray:
    """Matrix K[i, k] = f((k - 1/2)(i - 1/2) pi / p), i over layers, k over modes."""
    i = np.arange(1, p + 1)[:, None] - 0.5
    k = np.arange(1, q + 1)[None, :] - 0.5
    arg = k * i * math.pi / p
    if kind == "sin":
        return np.sin(arg)
    if kind == "cos":
        return np.cos(arg)
    raise ValueError(f"unknown kernel {kind!r}")


def fourier_expand(f: FourierParams, p: int, beta_kernel: str = "sin") -> ParamVector:
    """Layer angles from Fourier amplitudes; gamma uses the sine kernel, beta ``beta_kernel``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    gammas = fourier_kernel(f.q, p, "sin") @ f.u
    betas = fourier_kernel(f.q, p, beta_kernel) @ f.v
    return ParamVector.standard(gammas, betas, strategy="fourier", q=f.q)


def fourier_fit(params: ParamVector, q: int | None = None, beta_kernel: str = "sin") -> FourierParams:
    """Least-squares Fourier amplitudes reproducing a standard schedule (exact for q = p)."""
    p = params.p
    q = p if q is None else q
    u = np.linalg.lstsq(fourier_kernel(q, p, "sin"), params.gammas, rcond=None)[0]
    v = np.linalg.lstsq(fourier_kernel(q, p, beta_kernel), params.betas, rcond=None)[0]
    return FourierParams(u, v)


def standard_bounds(p: int) -> list[tuple[float, float]]:
    return [(-math.pi, math.pi)] * p + [(-math.pi / 2, math.pi / 2)] * p


@dataclass
class OptimizationTrace:
    iterates: list[tuple[ParamVector, float]]
    converged: bool
    iterations: int
    nfev: int = 0
    message: str = ""

    @property
    def initial(self) -> tuple[ParamVector, float]:
        return self.iterates[0]

    @property
    def best(self) -> tuple[ParamVector, float]:
        return min(self.iterates, key=lambda item: item[1])

    @property
    def params(self) -> ParamVector:
        return self.best[0]

    @property
    def value(self) -> float:
        return self.best[1]

    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate([val for _, val in self.iterates])

    def summary(self) -> dict:
        return {
            "iterations": self.iterations,
            "nfev": self.nfev,
            "converged": self.converged,
            "initial_value": self.initial[1],
            "final_value": self.value,
            "message": self.message,
        }


def minimize_box(fn: Callable[[np.ndarray], float], x0: np.ndarray, bounds=None,
                 max_iter: int = DEFAULT_MAX_ITER, step: float = 1e-6,
                 callback: Callable[[np.ndarray, float], None] | None = None):
    """L-BFGS-B with central finite-difference gradients; returns scipy's result."""

    def fun_and_grad(x):
        f = fn(x)
        if not math.isfinite(f):
            raise FloatingPointError(f"objective is not finite at {x}")
        g = np.empty_like(x)
        for k in range(x.size):
            e = np.zeros_like(x)
            e[k] = step
            g[k] = (fn(x + e) - fn(x - e)) / (2 * step)
        return f, g

    last = {}

    def wrapped(x):
        f, g = fun_and_grad(x)
        last["x"], last["f"] = x.copy(), f
        return f, g

    def cb(xk, *args):
        if callback is not None:
            f = last["f"] if "x" in last and np.array_equal(last["x"], xk) else fn(xk)
            callback(np.array(xk), f)

    return minimize(wrapped, np.asarray(x0, dtype=float), jac=True, method="L-BFGS-B", bounds=bounds,
                    callback=cb, options={"maxiter": max_iter, "gtol": GRADIENT_TOL})


def optimize(model: IsingModel, circuit: Circuit, init: ParamVector, max_iter: int = DEFAULT_MAX_ITER,
             step: float = 1e-6) -> OptimizationTrace:
    """Minimise <H_C> over the circuit parameters starting from ``init``.

    Standard parameters stay inside gamma in [-pi, pi], beta in [-pi/2, pi/2];
    multi-angle parameters are unconstrained. Every iterate is canonicalised.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    fn = ExpectationFunction(model, circuit)
    bounds = standard_bounds(init.p) if init.mode == STANDARD else None
    x0 = np.array(init.values, dtype=float)
    if bounds is not None:
        x0 = np.clip(x0, [b[0] for b in bounds], [b[1] for b in bounds])
    f0 = fn(x0)
    if not math.isfinite(f0):
        raise FloatingPointError("objective is not finite at the initial point")
    iterates = [(init.with_values(x0), f0)]

    def record(x, f):
        iterates.append((canonicalize_params(init.with_values(x)), f))

    res = minimize_box(fn, x0, bounds, max_iter, step, record)
    final = canonicalize_params(init.with_values(res.x))
    if not np.allclose(iterates[-1][0].values, final.values) and res.fun < iterates[-1][1]:
        iterates.append((final, float(res.fun)))
    return OptimizationTrace(iterates, bool(res.success), int(res.nit), fn.nfev, str(res.message))


def optimize_fourier(model: IsingModel, circuit: Circuit, init: FourierParams, p: int,
                     max_iter: int = DEFAULT_MAX_ITER, beta_kernel: str = "sin") -> OptimizationTrace:
    """Optimise the Fourier amplitudes (u, v) of a p-layer circuit."""
    fn_theta = ExpectationFunction(model, circuit)
    q = init.q

    def expand(x):
        return fourier_expand(FourierParams(x[:q], x[q:]), p, beta_kernel)

    def fn(x):
        return fn_theta(expand(x).values)

    x0 = np.concatenate([init.u, init.v])
    iterates = [(expand(x0), fn(x0))]
    res = minimize_box(fn, x0, None, max_iter, callback=lambda x, f: iterates.append((expand(x), f)))
    return OptimizationTrace(iterates, bool(res.success), int(res.nit), fn_theta.nfev, str(res.message))


def grid_search_p1(model: IsingModel, circuit: Circuit, points: int = 64) -> tuple[ParamVector, float]:
    """Best point of a ``points x points`` grid over the p=1 box."""
    if circuit.n_params != 2:
        raise ValueError("grid search expects a single standard layer")
    fn = ExpectationFunction(model, circuit)
    best = (None, math.inf)
    for g in np.linspace(-math.pi, math.pi, points, endpoint=False):
        for b in np.linspace(-math.pi / 2, math.pi / 2, points, endpoint=False):
            val = fn(np.array([g, b]))
            if val < best[1]:
                best = (ParamVector.standard([g], [b], strategy="grid"), val)
    return best


def optimize_p1(model: IsingModel, circuit: Circuit | None = None, points: int = 64,
                max_iter: int = DEFAULT_MAX_ITER) -> OptimizationTrace:
    """Global grid search followed by local refinement for a single layer."""
    circuit = build_qaoa(model, 1) if circuit is None else circuit
    start, _ = grid_search_p1(model, circuit, points)
    return optimize(model, circuit, start, max_iter)


@dataclass(frozen=True)
class CoefficientStats:
    j_mean: float
    j_std: float
    h_mean: float
    h_std: float

    def to_dict(self) -> dict:
        return {"j_mean": self.j_mean, "j_std": self.j_std, "h_mean": self.h_mean, "h_std": self.h_std}


def coefficient_stats(models: Sequence[IsingModel]) -> CoefficientStats:
    """Pooled mean/std of the couplings and of the fields over ``models``."""
    js = np.concatenate([np.fromiter(m.J.values(), float) for m in models])
    hs = np.concatenate([np.fromiter(m.h.values(), float) for m in models])
    return CoefficientStats(float(js.mean()), float(js.std()), float(hs.mean()), float(hs.std()))


def precompute_params(stats: CoefficientStats, p: int, n_samples: int = 100, n_qubits: int = 9,
                      seed: int = 0, dt: float = DEFAULT_TQA_DT,
                      max_iter: int = DEFAULT_MAX_ITER) -> ParamVector:
    """Median optimum over an ensemble of synthetic fully connected models.

    Each model draws couplings and fields from normal distributions with the
    given statistics, is normalised, and is optimised from a TQA start.
    """
    if stats.j_std < 0 or stats.h_std < 0:
        raise ValueError("standard deviations must be nonnegative")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    start = init_tqa(p, dt)
    optima = []
    for k in range(n_samples):
        model = normalize(random_dense_model(n_qubits, rng, stats.j_mean, stats.j_std, stats.h_mean, stats.h_std))
        trace = optimize(model, build_qaoa(model, p), start, max_iter)
        optima.append(trace.params.values)
        log.debug("precompute sample %d: %.6f", k, trace.value)
    median = np.median(np.array(optima), axis=0)
    return ParamVector(STANDARD, p, median, meta={
        "strategy": "precomputed", "n_samples": n_samples, "n_qubits": n_qubits, "seed": seed,
        "start": {"strategy": "tqa", "dt": dt}, "stats": stats.to_dict(),
    })
