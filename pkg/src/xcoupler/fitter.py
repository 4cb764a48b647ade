"""Fit coupling-matrix entries on a topology mask to a target response.

Each start runs a short Nelder-Mead pass followed by a bounded
least-squares refinement with finite-difference Jacobians. Starts after the
first are seeded jitters of the initial matrix. The reported matrix is the
first start (in seed order) that reaches ``tol``, or else the lowest-cost
one, so the result does not depend on how the starts were scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares, minimize

from .errors import ReconfigurationError
from .matrix import CouplingMatrix, TopologyMask
from .prototype import CharPoly
from .response import FrequencyPlan, SParamSweep, max_threads, network_response, normalized_frequency


@dataclass(frozen=True)
class FitWeights:
    """Per-band weights; ``tz_weight`` multiplies points within +/-2 % of a zero."""

    passband: float = 1.0
    stopband: float = 1.0
    tz_weight: float = 1.0
    tz_freqs_hz: tuple[float, ...] = ()

    def __post_init__(self):
        if min(self.passband, self.stopband, self.tz_weight) < 0:
            raise ValueError("weights must be nonnegative")
        if self.passband == 0 and self.stopband == 0:
            raise ValueError("passband and stopband weights cannot both be zero")

    def evaluate(self, freqs_hz: np.ndarray, plan: FrequencyPlan) -> np.ndarray:
        lam = normalized_frequency(plan, freqs_hz)
        w = np.where(np.abs(lam) <= 1.0, self.passband, self.stopband).astype(float)
        for fz in self.tz_freqs_hz:
            w[np.abs(freqs_hz - fz) <= 0.02 * fz] *= self.tz_weight
        return w


@dataclass(frozen=True)
class FitOptions:
    max_iters: int = 5000
    tol: float = 1e-10
    multistart_count: int = 8
    seed: int = 0
    jitter: float = 0.10
    simplex_iters: int = 200


@dataclass(frozen=True, eq=False)
class FitProblem:
    mask: TopologyMask
    initial: CouplingMatrix
    plan: FrequencyPlan
    target: SParamSweep | CharPoly
    weights: FitWeights = field(default_factory=FitWeights)
    bounds: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        if self.mask.order != self.initial.order:
            raise ValueError("mask and initial matrix orders differ")
        if not self.mask.admits(self.initial, 0.0):
            raise ValueError("initial matrix has entries outside the mask")
        lo, hi = self.resolved_bounds()
        v = self.initial.values
        if np.any(v < lo) or np.any(v > hi):
            raise ValueError("bounds do not contain the initial matrix")

    def resolved_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if self.bounds is None:
            shape = self.initial.values.shape
            return np.full(shape, -3.0), np.full(shape, 3.0)
        lo, hi = (np.broadcast_to(np.asarray(b, dtype=float), self.initial.values.shape) for b in self.bounds)
        return lo, hi


@dataclass(frozen=True, eq=False)
class FitResult:
    matrix: CouplingMatrix
    cost: float
    iterations: int
    converged: bool
    history: tuple[tuple[int, float], ...]
    seed: int = 0


def _target_arrays(target, plan: FrequencyPlan, grid_points: int = 401):
    if isinstance(target, SParamSweep):
        if not len(target):
            raise ValueError("target sweep is empty")
        return target.freqs_hz, target.s11, target.s21
    if isinstance(target, CharPoly):
        from .response import denormalize_tz

        om = np.linspace(-3.0, 3.0, grid_points)
        s11, s21 = target.response(om)
        return denormalize_tz(plan, om), s11, s21
    raise TypeError(f"unsupported target type {type(target).__name__}")


def response_error(m: CouplingMatrix, plan: FrequencyPlan, target: SParamSweep,
                   weights: FitWeights | None = None) -> float:
    """Weighted mean of |dS11|^2 + |dS21|^2 over the target grid."""
    f, t11, t21 = _target_arrays(target, plan)
    w = (weights or FitWeights()).evaluate(f, plan)
    s11, s21, _ = network_response(m.values, normalized_frequency(plan, f))
    e = np.abs(s11 - t11) ** 2 + np.abs(s21 - t21) ** 2
    return float(np.sum(w * e) / np.sum(w))


class _Objective:
    """Residual vector over the free (mask-true) upper-triangle entries."""

    def __init__(self, base: np.ndarray, free: tuple[np.ndarray, np.ndarray], lam: np.ndarray,
                 t11: np.ndarray, t21: np.ndarray, w: np.ndarray):
        self.base = base
        self.free = free
        self.lam = lam
        self.t11, self.t21 = t11, t21
        self.sw = np.sqrt(w / np.sum(w))
        self.evals = 0
        self.best = math.inf
        self.best_x = None
        self.trace: list[tuple[int, float]] = []

    def matrix(self, x: np.ndarray) -> np.ndarray:
        v = self.base.copy()
        i, j = self.free
        v[i, j] = x
        v[j, i] = x
        return v

    def residuals(self, x: np.ndarray) -> np.ndarray:
        self.evals += 1
        try:
            s11, s21, _ = network_response(self.matrix(x), self.lam, threads=1)
        except Exception:
            r = np.full(4 * self.lam.size, 1e3)
        else:
            d11 = self.sw * (s11 - self.t11)
            d21 = self.sw * (s21 - self.t21)
            r = np.concatenate([d11.real, d11.imag, d21.real, d21.imag])
        cost = float(r @ r)
        if cost < self.best:
            self.best = cost
            self.best_x = np.array(x, dtype=float)
            self.trace.append((self.evals, cost))
        return r

    def cost(self, x: np.ndarray) -> float:
        r = self.residuals(x)
        return float(r @ r)


def _check_feasible(mask: TopologyMask) -> None:
    if not mask.connects_source_to_load():
        raise ReconfigurationError("infeasible mask: no coupling path from source to load")


def _run_start(obj: _Objective, x0: np.ndarray, lo: np.ndarray, hi: np.ndarray,
               opts: FitOptions) -> _Objective:
    obj.cost(x0)
    if obj.best <= opts.tol:
        return obj
    budget = opts.max_iters
    if opts.simplex_iters > 0:
        nm_iters = min(opts.simplex_iters, max(1, budget // 4))
        minimize(lambda x: obj.cost(np.clip(x, lo, hi)), x0, method="Nelder-Mead",
                 options={"maxiter": nm_iters, "xatol": 1e-12, "fatol": 1e-24})
    remaining = max(10, budget - obj.evals)
    start = np.clip(obj.best_x, lo, hi)
    # keep the start strictly inside the box for the trust-region reflective solver
    span = hi - lo
    start = np.clip(start, lo + 1e-12 * span, hi - 1e-12 * span)
    if obj.best > opts.tol:
        least_squares(obj.residuals, start, bounds=(lo, hi), method="trf", x_scale="jac",
                      xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=remaining)
    return obj


def fit_matrix(problem: FitProblem, options: FitOptions | None = None) -> FitResult:
    """Fit the mask-permitted entries of ``problem.initial`` to the target."""
    opts = options or FitOptions()
    _check_feasible(problem.mask)
    f, t11, t21 = _target_arrays(problem.target, problem.plan)
    lam = normalized_frequency(problem.plan, f)
    w = problem.weights.evaluate(f, problem.plan)
    base = problem.initial.copy_values()
    iu, ju = np.triu_indices(base.shape[0])
    keep = problem.mask.allowed[iu, ju]
    free = (iu[keep], ju[keep])
    x_init = base[free]
    lo_m, hi_m = problem.resolved_bounds()
    lo, hi = lo_m[free], hi_m[free]

    seeds = np.random.SeedSequence(opts.seed).spawn(max(1, opts.multistart_count))
    starts = []
    for k, ss in enumerate(seeds):
        if k == 0:
            x0 = x_init.copy()
        else:
            rng = np.random.default_rng(ss)
            x0 = np.clip(x_init * (1 + rng.uniform(-opts.jitter, opts.jitter, x_init.size)), lo, hi)
        starts.append(x0)

    def run(x0):
        obj = _Objective(base, free, lam, t11, t21, w)
        return _run_start(obj, x0, lo, hi, opts)

    threads = min(max_threads(), len(starts))
    results: list[_Objective] = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, starts))
    else:
        for x0 in starts:
            results.append(run(x0))
            if results[-1].best <= opts.tol:
                break

    chosen = next((k for k, r in enumerate(results) if r.best <= opts.tol), None)
    if chosen is None:
        chosen = min(range(len(results)), key=lambda k: (results[k].best, k))
        used = results
    else:
        used = results[: chosen + 1]

    history = []
    offset = 0
    best = math.inf
    for r in used:
        for it, c in r.trace:
            if c < best:
                best = c
                history.append((offset + it, c))
        offset += r.evals
    win = results[chosen]
    matrix = problem.initial.with_values(win.matrix(win.best_x))
    return FitResult(matrix, float(win.best), offset, win.best <= opts.tol, tuple(history), opts.seed)


def fit_to_reference(reference: CouplingMatrix, mask: TopologyMask, seed: int = 0,
                     tol: float = 1e-14) -> CouplingMatrix:
    """Constrained fit of a matrix on ``mask`` reproducing ``reference``'s response.

    Seeded from the reference projected onto the mask; the response is
    compared on 401 points of Omega in [-3, 3].
    """
    _check_feasible(mask)
    plan = FrequencyPlan(1.0, 1.0)
    om = np.linspace(-3.0, 3.0, 401)
    from .response import denormalize_tz

    f = denormalize_tz(plan, om)
    s11, s21, s22 = network_response(reference.values, om)
    target = SParamSweep.from_params(f, s11, s21, s21, s22)
    v = reference.copy_values()
    v[~mask.allowed] = 0.0
    v = np.clip(v, -3.0, 3.0)
    initial = reference.with_values(v)
    problem = FitProblem(mask, initial, plan, target)
    return fit_matrix(problem, FitOptions(tol=tol, multistart_count=16, seed=seed)).matrix
