"""Exact Monte Carlo simulation of stopping times and the inequality validators.

Each run draws from its own counter-based stream keyed by (seed, run index),
so results are bit-identical no matter how runs are batched across workers.
Discrete walks apply the stopping rule only at schedule sizes and use closed
membership by default (a strict variant is a switch).  Brownian paths use
Euler steps with strict continuation so that drift-only passages land
exactly on the boundary grid point.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import Region
from .moments import DistributionSpec, StreamPool, analytic_moments, sample_block, stream_for_run
from .schedules import SampleSchedule

_CHUNK = 8192
_BLOCK = 256


class AllTruncatedError(RuntimeError):
    """Every run hit the horizon cap; no stopping-time estimate exists."""


@dataclass(frozen=True)
class PathSample:
    """Per-run records of one batch of simulated stopping times."""

    stop_n: np.ndarray          # stopping size or time, horizon value when truncated
    stop_sum: np.ndarray        # walk sum / path value at the stop, shape (runs, dim)
    last_before: np.ndarray     # last schedule size strictly before the stop
    truncated: np.ndarray       # boolean mask of runs that hit the horizon
    seed: int
    horizon: float

    @property
    def n_runs(self) -> int:
        return self.stop_n.shape[0]


@dataclass(frozen=True)
class SimulationEstimate:
    """Aggregated Monte Carlo estimate with truncation accounting.

    A nonzero ``truncated`` count biases the stopping-time mean downward, so
    certification must then only test upper bounds against it.
    """

    mean: float
    stderr: float
    n_runs: int
    truncated: int
    horizon: float
    seed: int
    extras: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def downward_biased(self) -> bool:
        return self.truncated > 0


def _mean_stderr(values: np.ndarray):
    mean = float(np.mean(values))
    if values.shape[0] > 1:
        stderr = float(np.std(values, ddof=1) / math.sqrt(values.shape[0]))
    else:
        stderr = 0.0
    return mean, stderr


def _exit_test(region: Region, boundary: str):
    """Vectorized stop test over (sizes, sums) given the boundary convention."""
    if region.slack_batch is not None:
        sb = region.slack_batch
        if region.kind == "continuity":
            if boundary == "closed":
                return lambda ts, ss: sb(ts, ss) < 0.0
            return lambda ts, ss: sb(ts, ss) <= 0.0
        if boundary == "closed":
            return lambda ts, ss: sb(ts, ss) >= 0.0
        return lambda ts, ss: sb(ts, ss) > 0.0
    member = region.membership
    if region.kind == "continuity":
        return lambda ts, ss: np.array([not member(t, s) for t, s in zip(ts, ss)])
    return lambda ts, ss: np.array([member(t, s) for t, s in zip(ts, ss)])


def _block_plan(schedule: SampleSchedule, horizon: int):
    """Fixed ladder of draw blocks with the schedule checkpoints inside each."""
    points = list(schedule.iter_elements(horizon))
    plan = []
    start = 0
    idx = 0
    while start < horizon:
        length = min(_BLOCK, horizon - start)
        offs, vals = [], []
        while idx < len(points) and points[idx] <= start + length:
            offs.append(points[idx] - start - 1)
            vals.append(points[idx])
            idx += 1
        plan.append((start, length, np.array(offs, dtype=np.int64),
                     np.array(vals, dtype=np.float64)))
        start += length
        if idx >= len(points):
            break
    return plan


def discrete_paths(region: Region, spec: DistributionSpec, schedule: SampleSchedule,
                   n_runs: int, horizon: int = 1_000_000, seed: int = 0,
                   boundary: str = "closed", workers: int = 1) -> PathSample:
    """Simulate stopping times of the i.i.d. walk, one stream per run.

    The rule is evaluated only at schedule sizes; ``last_before`` records
    the schedule size preceding the stop (the start anchor when the rule
    fires at the first size).  Runs reaching the horizon are marked
    truncated and keep their horizon-size state.
    """
    if boundary not in ("closed", "strict"):
        raise ValueError("boundary must be 'closed' or 'strict'")
    if region.dim != spec.dim:
        raise ValueError("region and distribution dimensions disagree")
    plan = _block_plan(schedule, horizon)
    if not plan or all(p[2].size == 0 for p in plan):
        raise ValueError("horizon lies below the first schedule element")
    stops = _exit_test(region, boundary)
    d = spec.dim

    stop_n = np.empty(n_runs)
    stop_sum = np.empty((n_runs, d))
    last_before = np.empty(n_runs)
    truncated = np.zeros(n_runs, dtype=bool)

    def run_one(rng, idx: int):
        total = np.zeros(d)
        last = float(schedule.n0)
        for start, length, offs, vals in plan:
            draws = sample_block(spec, rng, length)
            sums = total + np.cumsum(draws, axis=0)
            if offs.size:
                hits = stops(vals, sums[offs])
                where = np.nonzero(hits)[0]
                if where.size:
                    j = int(where[0])
                    prev = last if j == 0 else vals[j - 1]
                    return vals[j], sums[offs[j]], prev, False
                last = vals[-1]
            total = sums[-1]
        return float(horizon), total, last, True

    def run_span(lo: int, hi: int):
        pool = StreamPool(seed)
        for idx in range(lo, hi):
            n, s, prev, trunc = run_one(pool.stream(idx), idx)
            stop_n[idx] = n
            stop_sum[idx] = s
            last_before[idx] = prev
            truncated[idx] = trunc

    spans = [(lo, min(lo + _CHUNK, n_runs)) for lo in range(0, n_runs, _CHUNK)]
    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda span: run_span(*span), spans))
    else:
        for span in spans:
            run_span(*span)
    if bool(truncated.all()):
        raise AllTruncatedError("every run hit the horizon cap")
    return PathSample(stop_n, stop_sum, last_before, truncated, seed, float(horizon))


def estimate_from_paths(paths: PathSample, overshoot_level: Optional[float] = None) -> SimulationEstimate:
    mean, stderr = _mean_stderr(paths.stop_n)
    extras = {}
    for k in range(paths.stop_sum.shape[1]):
        extras[f"stop_sum[{k}]"] = _mean_stderr(paths.stop_sum[:, k])
    extras["last_before"] = _mean_stderr(paths.last_before)
    if overshoot_level is not None:
        extras["overshoot"] = _mean_stderr(paths.stop_sum[:, 0] - overshoot_level)
    return SimulationEstimate(mean, stderr, paths.n_runs, int(paths.truncated.sum()),
                              paths.horizon, paths.seed, extras)


def run_discrete(region: Region, spec: DistributionSpec, schedule: SampleSchedule,
                 n_runs: int, horizon: int = 1_000_000, seed: int = 0,
                 boundary: str = "closed", workers: int = 1,
                 overshoot_level: Optional[float] = None) -> SimulationEstimate:
    """Monte Carlo estimate of the expected stopping size (see discrete_paths)."""
    paths = discrete_paths(region, spec, schedule, n_runs, horizon, seed, boundary, workers)
    return estimate_from_paths(paths, overshoot_level)


# ---------------------------------------------------------------------------
# Brownian motion
# ---------------------------------------------------------------------------


def _brownian_paths(region: Region, drift, diffusion, dt: float, n_runs: int,
                    horizon: float, seed: int, index_offset: int, workers: int) -> PathSample:
    drift_vec = np.atleast_1d(np.asarray(drift, dtype=float))
    diff_vec = np.atleast_1d(np.asarray(diffusion, dtype=float))
    d = drift_vec.shape[0]
    if diff_vec.shape[0] == 1 and d > 1:
        diff_vec = np.full(d, float(diff_vec[0]))
    n_steps = int(math.ceil(horizon / dt))
    # continuity regions use strict continuation so that drift-only passages
    # stop exactly when the path reaches the boundary grid point
    boundary = "strict" if region.kind == "continuity" else "closed"
    stops = _exit_test(region, boundary)
    sqdt = math.sqrt(dt)
    step_drift = drift_vec * dt
    noisy = bool(np.any(diff_vec != 0.0))

    stop_n = np.empty(n_runs)
    stop_sum = np.empty((n_runs, d))
    last_before = np.empty(n_runs)
    truncated = np.zeros(n_runs, dtype=bool)
    block = 512

    def run_one(rng, idx: int):
        w = np.zeros(d)
        prev_t = 0.0
        k = 0
        while k < n_steps:
            length = min(block, n_steps - k)
            if noisy:
                incr = step_drift + sqdt * diff_vec * rng.standard_normal((length, d))
            else:
                incr = np.tile(step_drift, (length, 1))
            path = w + np.cumsum(incr, axis=0)
            ts = (np.arange(1, length + 1) + k) * dt
            hits = stops(ts, path)
            where = np.nonzero(hits)[0]
            if where.size:
                j = int(where[0])
                prev = prev_t if j == 0 else ts[j - 1]
                return ts[j], path[j], prev, False
            w = path[-1]
            prev_t = ts[-1]
            k += length
        return float(n_steps) * dt, w, prev_t, True

    def run_span(lo: int, hi: int):
        pool = StreamPool(seed)
        for idx in range(lo, hi):
            t, s, prev, trunc = run_one(pool.stream(index_offset + idx), idx)
            stop_n[idx] = t
            stop_sum[idx] = s
            last_before[idx] = prev
            truncated[idx] = trunc

    spans = [(lo, min(lo + _CHUNK, n_runs)) for lo in range(0, n_runs, _CHUNK)]
    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda span: run_span(*span), spans))
    else:
        for span in spans:
            run_span(*span)
    if bool(truncated.all()):
        raise AllTruncatedError("every Brownian run hit the horizon cap")
    return PathSample(stop_n, stop_sum, last_before, truncated, seed, float(horizon))


def run_brownian(region: Region, drift, diffusion, dt: float, n_runs: int,
                 horizon: float = 10_000.0, seed: int = 0, workers: int = 1) -> SimulationEstimate:
    """Euler-discretized first passage for drifted Brownian motion.

    The estimate is computed at step sizes dt and dt/4; the headline figures
    come from the finer grid and the difference between the two is recorded
    as the discretization diagnostic.  Discrete crossing detection misses
    excursions between grid points, which biases passage times upward for
    exits through an upper boundary; the two-grid difference quantifies it.
    """
    coarse = _brownian_paths(region, drift, diffusion, dt, n_runs, horizon, seed,
                             index_offset=n_runs, workers=workers)
    fine = _brownian_paths(region, drift, diffusion, dt / 4.0, n_runs, horizon, seed,
                           index_offset=0, workers=workers)
    mean, stderr = _mean_stderr(fine.stop_n)
    coarse_mean, coarse_stderr = _mean_stderr(coarse.stop_n)
    extras = {"coarse": (coarse_mean, coarse_stderr)}
    for k in range(fine.stop_sum.shape[1]):
        extras[f"stop_sum[{k}]"] = _mean_stderr(fine.stop_sum[:, k])
    diag = {
        "dt": dt,
        "dt_fine": dt / 4.0,
        "discretization_diagnostic": abs(mean - coarse_mean),
    }
    return SimulationEstimate(mean, stderr, n_runs, int(fine.truncated.sum()),
                              horizon, seed, extras, diag)


# ---------------------------------------------------------------------------
# Validators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationResult:
    name: str
    passed: bool
    margins: dict = field(default_factory=dict)
    witness: Optional[dict] = None


def box_rejection_sampler(halfspaces, box_lo, box_hi):
    """Sampler of uniform points in a polytope via rejection from a box."""
    box_lo = np.atleast_1d(np.asarray(box_lo, dtype=float))
    box_hi = np.atleast_1d(np.asarray(box_hi, dtype=float))

    def draw(rng: np.random.Generator) -> np.ndarray:
        for _ in range(100_000):
            x = rng.uniform(box_lo, box_hi)
            if all(float(np.dot(w, x)) <= c + 1e-12 for w, c in halfspaces):
                return x
        raise RuntimeError("rejection sampler failed to hit the polytope")

    return draw


def validate_convex_mean(halfspaces, sampler: Callable, n_samples: int,
                         seed: int = 0) -> ValidationResult:
    """Check that the empirical mean of points inside a polytope stays inside.

    ``halfspaces`` is a list of (normal, offset) with the polytope
    {x : <normal, x> <= offset}; a failure returns the violated halfspace.
    """
    rng = np.random.default_rng(seed)
    points = np.array([sampler(rng) for _ in range(n_samples)])
    mean = points.mean(axis=0)
    margins = {}
    for i, (w, c) in enumerate(halfspaces):
        margins[f"halfspace[{i}]"] = float(c - np.dot(w, mean))
    for i, (w, c) in enumerate(halfspaces):
        if float(np.dot(w, mean)) > c + 1e-9:
            return ValidationResult("convex-mean", False, margins,
                                    {"halfspace": i, "normal": list(map(float, np.atleast_1d(w))),
                                     "offset": float(c), "mean": mean.tolist()})
    return ValidationResult("convex-mean", True, margins)


def validate_perspective(gfun: Callable, n_trials: int, seed: int = 0,
                         dim: int = 1) -> ValidationResult:
    """Probabilistic audit that (t, s) -> t * gfun(s/t) is jointly convex for t > 0.

    Fails with a witness triple when a sampled chord dips below the surface,
    which happens quickly when gfun itself is not convex.
    """
    rng = np.random.default_rng(seed)

    def f(t, s):
        return t * float(gfun(s / t))

    worst = math.inf
    for trial in range(n_trials):
        t1, t2 = rng.uniform(0.2, 3.0, 2)
        s1, s2 = rng.uniform(-3.0, 3.0, (2, dim))
        rho = rng.uniform(0.05, 0.95)
        tm = rho * t1 + (1 - rho) * t2
        sm = rho * s1 + (1 - rho) * s2
        gap = rho * f(t1, s1) + (1 - rho) * f(t2, s2) - f(tm, sm)
        worst = min(worst, gap)
        if gap < -1e-10:
            return ValidationResult("perspective-convexity", False,
                                    {"worst_gap": gap, "trials": trial + 1},
                                    {"t1": t1, "s1": s1.tolist(), "t2": t2,
                                     "s2": s2.tolist(), "rho": rho})
    return ValidationResult("perspective-convexity", True,
                            {"worst_gap": worst, "trials": n_trials})


def _four_sigma(values: np.ndarray):
    mean, stderr = _mean_stderr(values)
    return mean, stderr, 4.0 * stderr


def validate_identity(which: str, scenario: dict, n_runs: int, seed: int = 0) -> ValidationResult:
    """Monte Carlo check of one generalized identity or inequality.

    ``scenario`` supplies the simulation inputs: keys ``spec``, ``region``,
    ``schedule`` (plus ``gfun`` for the sample-mean inequalities, ``p`` for
    the norm inequality, ``lam``/``variant`` handled by the overshoot checks
    in the bounds module).  Equalities pass when |mean| <= 4 stderr of the
    per-run difference; inequalities when mean >= -4 stderr.
    """
    if which in ("jensen-T3",):
        gfun = scenario["gfun"]
        y_spec, z_spec = scenario["y_spec"], scenario["z_spec"]
        rng = stream_for_run(seed, 0)
        y = sample_block(y_spec, rng, n_runs)[:, 0]
        z = sample_block(z_spec, rng, n_runs)[:, 0]
        if np.any(y <= 0):
            raise ValueError("jensen-T3 check needs a positive ratio variable")
        lhs = y * np.array([float(gfun(np.atleast_1d(v))) for v in z / y])
        ratio = float(np.mean(z)) / float(np.mean(y))
        rhs = float(np.mean(y)) * float(gfun(np.atleast_1d(ratio)))
        mean, stderr, slack = _four_sigma(lhs - rhs)
        return ValidationResult(which, mean >= -slack,
                                {"mean_gap": mean, "stderr": stderr})

    paths = discrete_paths(scenario["region"], scenario["spec"], scenario["schedule"],
                           n_runs, scenario.get("horizon", 1_000_000), seed,
                           scenario.get("boundary", "closed"))
    spec = scenario["spec"]
    prof = analytic_moments(spec)
    mu = prof.mean
    n = paths.stop_n
    s = paths.stop_sum
    if which == "wald-T4-I":
        gfun = scenario.get("gfun")
        if gfun is None:
            # linear rule function: the inequality collapses to Wald equality
            diff = s[:, 0] - n * mu[0]
            mean, stderr, slack = _four_sigma(diff)
            return ValidationResult(which, abs(mean) <= slack,
                                    {"mean_gap": mean, "stderr": stderr, "mode": "equality"})
        xbar = s / n[:, None]
        vals = n * np.array([float(gfun(x)) for x in xbar])
        rhs = float(gfun(mu))
        diff = vals - n * rhs
        mean, stderr, slack = _four_sigma(diff)
        return ValidationResult(which, mean >= -slack,
                                {"mean_gap": mean, "stderr": stderr, "mode": "inequality"})
    if which == "wald-T4-II":
        centered = s - n[:, None] * mu
        vbar = centered**2 / n[:, None]
        gfun = scenario.get("gfun")
        if gfun is None:
            diff = n * vbar[:, 0] - n * prof.variance[0]
            mean, stderr, slack = _four_sigma(diff)
            return ValidationResult(which, abs(mean) <= slack,
                                    {"mean_gap": mean, "stderr": stderr, "mode": "equality"})
        vals = n * np.array([float(gfun(v)) for v in vbar])
        diff = vals - n * float(gfun(prof.variance))
        mean, stderr, slack = _four_sigma(diff)
        return ValidationResult(which, mean >= -slack,
                                {"mean_gap": mean, "stderr": stderr, "mode": "inequality"})
    if which == "lp-norm":
        p = scenario.get("p", 2)
        lhs = np.linalg.norm(s, ord=p, axis=1)
        rhs = n * float(np.linalg.norm(mu, ord=p))
        mean, stderr, slack = _four_sigma(lhs - rhs)
        return ValidationResult(f"lp-norm-p{p}", mean >= -slack,
                                {"mean_gap": mean, "stderr": stderr})
    if which in ("lorden-T6", "lorden-T7"):
        # the one validator that consumes a calculator; imported here so the
        # simulator stays importable without the bounds machinery
        from .bounds import overshoot_upper_bound

        lam = scenario["lam"]
        level = lam if isinstance(lam, (int, float)) else None
        if level is None:
            raise ValueError("overshoot validators use a constant threshold")
        overshoot = s[:, 0] - level
        mean, stderr, slack = _four_sigma(overshoot)
        variant = "T6" if which.endswith("T6") else "T7"
        report = overshoot_upper_bound(spec, lam, variant=variant,
                                       schedule=scenario["schedule"])
        ok = report.applicable and mean - slack <= report.value
        return ValidationResult(which, ok,
                                {"mc_overshoot": mean, "stderr": stderr,
                                 "bound": report.value})
    raise ValueError(f"unknown identity check {which!r}")
