"""Bound calculators: each returns a report with a checked assumption list.

A report whose assumption list contains a failure is inapplicable and its
value must not be consumed by the certification harness.  When a proviso
fails the calculators return such a report rather than a silently wrong
number; when a search reveals an unbounded domain the value is +inf with
the relevant check marked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import overshoot as ovs
from .geometry import (
    GradientDomainError,
    Hyperplane,
    NoRayExitError,
    Region,
    hyperplane_slice_distance,
    log_exit_gradient,
    mean_ray_crossing,
    ray_entry_and_exit,
    ray_exit_time,
    slice_distance,
    slice_side,
    supporting_hyperplane,
)
from .moments import DistributionSpec, MomentProfile, analytic_moments
from .optimize import ProvisoViolatedError, Slab, max_concave_over_box, max_time_in_region, vertex_fraction_max
from .schedules import SampleSchedule, audit_assumptions, gap_supremum, tau_index

UPPER_TAGS = (
    "T10-upper", "T11-upper-bounded", "T12-samplemean", "T13-samplemean-naturals",
    "T-try88-bounded", "T14-hyperplane", "T15-hyperplane-bounded",
    "T16-chenlorden-I", "T16-chenlorden-II", "T16-chenlorden-III",
    "T17-gradient", "vipformula", "T18-concentration", "T19-concentration-hyperplane",
    "Lorden-T6", "Lorden-T7", "Brown1", "Brown2-upper", "Brown3",
)
LOWER_TAGS = ("T8-lower", "T-UseWald-lower", "Brown2-lower", "Brown4")
ALL_TAGS = UPPER_TAGS + LOWER_TAGS


class CapExceededError(RuntimeError):
    """A series bound failed to converge within the iteration cap."""


@dataclass(frozen=True)
class AssumptionCheck:
    ident: str
    status: str  # "pass" | "fail" | "unchecked" | "declared"
    note: str = ""


@dataclass
class BoundReport:
    theorem: str
    direction: str  # "upper" | "lower"
    value: float
    assumptions: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def applicable(self) -> bool:
        return all(c.status != "fail" for c in self.assumptions)

    def failed_assumptions(self):
        return [c.ident for c in self.assumptions if c.status == "fail"]


def _chk(ident: str, ok: bool, note: str = "") -> AssumptionCheck:
    return AssumptionCheck(ident, "pass" if ok else "fail", note)


def _audit_horizon(schedule: SampleSchedule) -> int:
    index = min(64, schedule.size or 64)
    index = max(index, 2)
    return schedule.element(index)


def _standard_audit(region: Region, profile: MomentProfile, schedule: SampleSchedule,
                    need_third_moment: bool, start_containment_declared: bool):
    aud = audit_assumptions(schedule, _audit_horizon(schedule))
    checks = [
        _chk("I", aud.growth_pass, f"worst excess {aud.worst_excess:.3g}"),
        _chk("II", aud.gap_or_ratio_pass, aud.gap_or_ratio_mode),
        _chk("III", region.convex_closure and region.contains_origin, "asserted flags"),
        AssumptionCheck("IV", "declared" if start_containment_declared else "fail",
                        "start containment is a modeling hypothesis"),
    ]
    if need_third_moment:
        checks.append(_chk("VI", profile.abs_third_finite))
    return checks


def _crossing_check(region: Region, mean, tol=None):
    """Assumption (V): the unique mean-ray crossing.  Returns (checks, m or inf)."""
    try:
        m = mean_ray_crossing(region, mean, tol=tol)
        return [_chk("V", True, f"m={m:.12g}")], m
    except NoRayExitError:
        return [AssumptionCheck("V", "fail", "mean ray never exits; bound domain unbounded")], math.inf


# ---------------------------------------------------------------------------
# Lower bounds
# ---------------------------------------------------------------------------


def stopping_region_lower_bound(region: Region, mean) -> BoundReport:
    """E[N] >= first mean-ray entry time of a convex stopping region.

    When the mean ray never meets the region the expected stopping time is
    infinite and the report carries value +inf.
    """
    checks = [
        _chk("stopping-kind", region.kind == "stopping"),
        _chk("convex", region.convex_closure, "asserted flag"),
    ]
    diag = {}
    if all(c.status == "pass" for c in checks):
        entry, sup = ray_entry_and_exit(region, mean)
        if entry is None:
            value = math.inf
            diag["mean_ray_entry"] = None
        else:
            value = entry
            diag["mean_ray_entry"] = entry
            diag["mean_ray_exit"] = sup
    else:
        value = math.nan
    return BoundReport("T8-lower", "lower", value, checks, diag)


def wald_lower_bound(gfun: Callable[[np.ndarray], float], mean,
                     concave_declared: bool = True) -> BoundReport:
    """E[N] >= 1/gfun(mean) for rules that stop once n >= 1/gfun(sample mean)."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    g0 = float(gfun(mean))
    checks = [
        AssumptionCheck("g-concave", "declared" if concave_declared else "fail"),
        _chk("g-positive-at-mean", g0 > 0.0, f"g(mean)={g0:.6g}"),
    ]
    value = 1.0 / g0 if g0 > 0 else math.nan
    return BoundReport("T-UseWald-lower", "lower", value, checks, {"g_at_mean": g0})


# ---------------------------------------------------------------------------
# Slab-optimization upper bounds
# ---------------------------------------------------------------------------


def deviation_slab(profile: MomentProfile, lam: float, K: float, n0: float) -> Slab:
    """Slab from the one-sided deviations of the increment law."""
    return Slab(
        lower_slope=profile.mean - lam * profile.pos_dev,
        upper_slope=profile.mean + lam * profile.neg_dev,
        lower_icept=(n0 - K) * profile.pos_dev,
        upper_icept=(K - n0) * profile.neg_dev,
    )


def bounded_support_slab(profile: MomentProfile, lam: float, K: float, n0: float) -> Slab:
    """Envelope slab for bounded increments, with the primed support quadruple."""
    if not profile.bounded:
        raise ValueError("bounded_support_slab requires support bounds")
    v = profile.bound_v
    a, b, mu = profile.support_lo, profile.support_hi, profile.mean
    primed = Slab(
        lower_slope=b + lam * (mu - b),
        upper_slope=a + lam * (mu - a),
        lower_icept=K * (mu - b),
        upper_icept=K * (mu - a),
    )
    return Slab(
        lower_slope=mu - lam * v,
        upper_slope=mu + lam * v,
        lower_icept=(n0 - K) * v,
        upper_icept=-(n0 - K) * v,
        primed=primed,
    )


def slab_optimization_upper_bound(region: Region, profile: MomentProfile,
                                  schedule: SampleSchedule, variant: str = "T10",
                                  t_cap: float = 2.0**30, tol: float = 1e-9,
                                  start_containment_declared: bool = True) -> BoundReport:
    """E[N] <= lam * max{t over the slab-constrained region} + K.

    Variant "T10" uses the one-sided-deviation slab; "T11" needs support
    bounds and intersects the envelope slab with the primed support slab.
    """
    if variant not in ("T10", "T11"):
        raise ValueError("variant must be T10 or T11")
    tag = "T10-upper" if variant == "T10" else "T11-upper-bounded"
    lam, K, n0 = schedule.lam, schedule.K, schedule.n0
    checks = _standard_audit(region, profile, schedule,
                             need_third_moment=(variant == "T10"),
                             start_containment_declared=start_containment_declared)
    vchecks, m = _crossing_check(region, profile.mean)
    checks += vchecks
    diag = {"m": m, "lam": lam, "K": K, "n0": n0}
    if variant == "T11":
        checks.append(_chk("support-bounds", profile.bounded))
        if not profile.bounded:
            return BoundReport(tag, "upper", math.nan, checks, diag)
        slab = bounded_support_slab(profile, lam, K, n0)
    else:
        slab = deviation_slab(profile, lam, K, n0)
    if any(c.status == "fail" for c in checks if c.ident != "V"):
        return BoundReport(tag, "upper", math.nan, checks, diag)
    if not math.isfinite(m):
        return BoundReport(tag, "upper", math.inf, checks, diag)
    checks.append(_chk("slab-nonempty", not slab.is_empty))
    if slab.is_empty:
        return BoundReport(tag, "upper", math.nan, checks, diag)
    res = max_time_in_region(region, slab, t_cap=t_cap, tol=tol)
    diag["sample_count_before_exit_max"] = res.value
    diag["optimizer_uncertainty"] = res.uncertainty
    if res.empty_domain:
        checks.append(AssumptionCheck("feasible-domain", "fail", "slab misses the region"))
        return BoundReport(tag, "upper", math.nan, checks, diag)
    value = lam * res.value + K if math.isfinite(res.value) else math.inf
    return BoundReport(tag, "upper", value, checks, diag)


def sample_mean_upper_bound(gfun: Callable[[np.ndarray], float], profile: MomentProfile,
                            schedule: SampleSchedule, variant: str = "T12",
                            concave_declared: bool = True,
                            sure_start_declared: bool = True,
                            audit_concavity: bool = False,
                            tol: float = 1e-10) -> BoundReport:
    """E[N] <= K + max of gfun over a moment box, for rules n >= gfun(sample mean).

    "T12" uses the one-sided-deviation box with the schedule's max gap K;
    "T13" is the all-naturals form with constant 2 instead of K; "try88"
    uses the support envelope box and needs bounded increments.
    """
    if variant not in ("T12", "T13", "try88"):
        raise ValueError("variant must be T12, T13 or try88")
    tag = {"T12": "T12-samplemean", "T13": "T13-samplemean-naturals",
           "try88": "T-try88-bounded"}[variant]
    mu = profile.mean
    checks = []
    diag = {}
    K = gap_supremum(schedule)
    n0 = schedule.n0
    diag["K"] = K
    checks.append(AssumptionCheck("g-concave", "declared" if concave_declared else "fail"))
    if audit_concavity:
        ok = _concavity_probe(gfun, *(_box_for_variant(profile, variant)))
        checks.append(_chk("g-concavity-audit", ok))
    if variant == "T13":
        checks.append(_chk("all-naturals", schedule.is_all_naturals))
        gmu = float(gfun(mu))
        checks.append(_chk("g-nonnegative", gmu >= 0.0, f"g(mean)={gmu:.6g}"))
        constant = 2.0
    else:
        checks.append(_chk("gap-at-most-start", K <= n0,
                           f"max gap {K} vs start anchor {n0}"))
        checks.append(AssumptionCheck(
            "sure-start", "declared" if sure_start_declared else "fail",
            "rule must surely continue at the start anchor"))
        checks.append(_chk("VI", profile.abs_third_finite))
        constant = float(K)
    if variant == "try88":
        checks.append(_chk("support-bounds", profile.bounded))
        if not profile.bounded:
            return BoundReport(tag, "upper", math.nan, checks, diag)
    lo, hi = _box_for_variant(profile, variant)
    diag["box"] = (lo.tolist(), hi.tolist())
    if any(c.status == "fail" for c in checks):
        return BoundReport(tag, "upper", math.nan, checks, diag)
    peak = max_concave_over_box(gfun, lo, hi, tol=tol)
    diag["box_max"] = peak
    value = constant + peak if math.isfinite(peak) else math.inf
    return BoundReport(tag, "upper", value, checks, diag)


def _box_for_variant(profile: MomentProfile, variant: str):
    if variant == "try88":
        return profile.mean - profile.bound_v, profile.mean + profile.bound_v
    return profile.mean - profile.pos_dev, profile.mean + profile.neg_dev


def _concavity_probe(gfun, lo, hi, trials: int = 400, seed: int = 5) -> bool:
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        x = lo + rng.random(lo.shape[0]) * (hi - lo)
        y = lo + rng.random(lo.shape[0]) * (hi - lo)
        rho = rng.random()
        mid = rho * x + (1.0 - rho) * y
        gm, gx, gy = float(gfun(mid)), float(gfun(x)), float(gfun(y))
        if not (math.isfinite(gm) and math.isfinite(gx) and math.isfinite(gy)):
            continue
        if gm < rho * gx + (1.0 - rho) * gy - 1e-9 * (1.0 + abs(gm)):
            return False
    return True


# ---------------------------------------------------------------------------
# Hyperplane vertex bounds
# ---------------------------------------------------------------------------


def hyperplane_vertex_upper_bound(hyp: Hyperplane, profile: MomentProfile,
                                  schedule: SampleSchedule, variant: str = "T14",
                                  region: Optional[Region] = None,
                                  start_containment_declared: bool = True) -> BoundReport:
    """E[N] <= lam * (vertex fractional max) + K using the supporting hyperplane.

    "T14" evaluates the deviation slab; "T15" evaluates both the envelope
    and primed support slabs and keeps the smaller vertex maximum among
    those whose positivity proviso holds.
    """
    if variant not in ("T14", "T15"):
        raise ValueError("variant must be T14 or T15")
    tag = "T14-hyperplane" if variant == "T14" else "T15-hyperplane-bounded"
    lam, K, n0 = schedule.lam, schedule.K, schedule.n0
    checks = []
    diag = {"m": hyp.anchor, "C": hyp.level, "lam": lam, "K": K, "n0": n0}
    if region is not None:
        checks += _standard_audit(region, profile, schedule,
                                  need_third_moment=(variant == "T14"),
                                  start_containment_declared=start_containment_declared)
    if variant == "T14":
        slabs = {"deviation": deviation_slab(profile, lam, K, n0)}
    else:
        checks.append(_chk("support-bounds", profile.bounded))
        if not profile.bounded:
            return BoundReport(tag, "upper", math.nan, checks, diag)
        both = bounded_support_slab(profile, lam, K, n0)
        slabs = {
            "envelope": Slab(both.lower_slope, both.upper_slope,
                             both.lower_icept, both.upper_icept),
            "support": both.primed,
        }
    results = {}
    for name, slab in slabs.items():
        try:
            results[name] = vertex_fraction_max(hyp, slab)
        except ProvisoViolatedError as exc:
            diag[f"{name}_proviso"] = str(exc)
    checks.append(_chk("denominator-positive", bool(results),
                       "proviso failed on every available slab" if not results else ""))
    if any(c.status == "fail" for c in checks):
        return BoundReport(tag, "upper", math.nan, checks, diag)
    winner = min(results, key=lambda k: results[k].value)
    res = results[winner]
    diag["winning_slab"] = winner
    diag["vertex"] = res.vertex
    diag["min_denominator"] = res.min_denominator
    diag["sample_count_before_exit_max"] = res.value
    return BoundReport(tag, "upper", lam * res.value + K, checks, diag)


# ---------------------------------------------------------------------------
# Overshoot-based hyperplane bound
# ---------------------------------------------------------------------------


def lorden_hyperplane_upper_bound(hyp: Hyperplane, profile: MomentProfile, K: int,
                                  assertion: str = "II",
                                  independent_components: Optional[bool] = None) -> BoundReport:
    """Renewal-overshoot bound for rules checked every K samples.

    Assertion "I" is the Euclidean-norm chain member, "II" the elementwise
    variance form (independent components), "III" the bounded-support form.
    The elementwise reading of assertion II is sum_k s_coef_k^2 * var_k,
    recorded in diagnostics.
    """
    if assertion not in ("I", "II", "III"):
        raise ValueError("assertion must be I, II or III")
    tag = f"T16-chenlorden-{assertion}"
    m, c = hyp.anchor, hyp.level
    a = hyp.s_coef
    if independent_components is None:
        independent_components = profile.dim == 1
    checks = [
        _chk("K-positive-integer", K >= 1 and int(K) == K),
        _chk("second-moment-finite", bool(np.all(np.isfinite(profile.variance)))),
    ]
    diag = {"m": m, "C": c, "K": K}
    if assertion == "I":
        quad = float(np.dot(a, a)) * float(np.sum(profile.variance))
        value = m + K + (m / c) ** 2 * quad
        diag["norm_chain_member"] = value
    elif assertion == "II":
        checks.append(_chk("independent-components", bool(independent_components)))
        quad = float(np.sum(a * a * profile.variance))
        value = m + K + (m / c) ** 2 * quad
        diag["elementwise_quadratic"] = quad
        diag["elementwise_reading"] = "sum_k s_coef_k^2 var_k"
    else:
        checks.append(_chk("support-bounds", profile.bounded))
        if not profile.bounded:
            return BoundReport(tag, "upper", math.nan, checks, diag)
        lo, hi = profile.support_lo, profile.support_hi
        u = 0.5 * (float(a @ (lo + hi)) + float(np.abs(a) @ (lo - hi))) + hyp.t_coef
        vbar = 0.5 * (float(a @ (lo + hi)) + float(np.abs(a) @ (hi - lo))) + hyp.t_coef
        diag["batch_min_mean_gap"] = u
        diag["batch_max_mean_gap"] = vbar
        value = m + K * m * (u + vbar) / c - K * m * m * u * vbar / (c * c)
        if u < 0.0:
            diag["negative_min_form"] = (
                m + (K * vbar**2 / (vbar - u)) * (m / c) ** 2 * (c / m - u))
    if any(ch.status == "fail" for ch in checks):
        return BoundReport(tag, "upper", math.nan, checks, diag)
    return BoundReport(tag, "upper", value, checks, diag)


# ---------------------------------------------------------------------------
# Gradient bound
# ---------------------------------------------------------------------------


def gradient_upper_bound(region: Region, profile: MomentProfile,
                         variant: str = "T17", schedule: Optional[SampleSchedule] = None,
                         independent_components: Optional[bool] = None) -> BoundReport:
    """E[N] <= g(mean) + 1 + quadratic form of the log-gradient against the noise.

    Variant "vipformula" is the closed scalar form m + 1 + var/(f'(m)-mean)^2
    for d=1 regions with a differentiable boundary curve.
    """
    if variant not in ("T17", "vipformula"):
        raise ValueError("variant must be T17 or vipformula")
    tag = "T17-gradient" if variant == "T17" else "vipformula"
    mu = profile.mean
    if independent_components is None:
        independent_components = profile.dim == 1
    checks = [
        _chk("III", region.convex_closure and region.contains_origin, "asserted flags"),
        _chk("second-moment-finite", bool(np.all(np.isfinite(profile.variance)))),
    ]
    if schedule is not None:
        checks.append(_chk("all-naturals", schedule.is_all_naturals))
    else:
        checks.append(AssumptionCheck("all-naturals", "unchecked", "no schedule supplied"))
    diag = {}
    if any(c.status == "fail" for c in checks):
        return BoundReport(tag, "upper", math.nan, checks, diag)
    g0 = ray_exit_time(region, mu)
    diag["g_at_mean"] = g0
    if not math.isfinite(g0):
        checks.append(AssumptionCheck("V", "fail", "mean ray never exits"))
        return BoundReport(tag, "upper", math.inf, checks, diag)
    checks.append(_chk("V", True, f"m={g0:.12g}"))
    if variant == "vipformula":
        checks.append(_chk("scalar-boundary", region.scalar_boundary is not None
                           and profile.dim == 1))
        if region.scalar_boundary is None or profile.dim != 1:
            return BoundReport(tag, "upper", math.nan, checks, diag)
        h = 1e-6 * max(1.0, g0)
        f = region.scalar_boundary
        fprime = (f(g0 + h) - f(g0 - h)) / (2.0 * h)
        diag["boundary_slope_at_m"] = fprime
        value = g0 + 1.0 + float(profile.variance[0]) / (fprime - float(mu[0])) ** 2
        return BoundReport(tag, "upper", value, checks, diag)
    try:
        grad = log_exit_gradient(region, mu)
    except GradientDomainError as exc:
        checks.append(AssumptionCheck("g-differentiable", "fail", str(exc)))
        return BoundReport(tag, "upper", math.nan, checks, diag)
    checks.append(_chk("g-differentiable", True))
    diag["log_gradient"] = grad.tolist()
    if independent_components:
        quad = float(np.sum(grad * grad * profile.variance))
    else:
        # cross moments unknown: fall back to the norm chain member
        quad = float(np.dot(grad, grad)) * float(np.sum(profile.variance))
    diag["norm_chain_member"] = (
        g0 + 1.0 + float(np.dot(grad, grad)) * float(np.sum(profile.variance)))
    if region.scalar_boundary is not None and profile.dim == 1:
        h = 1e-6 * max(1.0, g0)
        f = region.scalar_boundary
        fprime = (f(g0 + h) - f(g0 - h)) / (2.0 * h)
        diag["closed_scalar_form"] = (
            g0 + 1.0 + float(profile.variance[0]) / (fprime - float(mu[0])) ** 2)
    return BoundReport(tag, "upper", g0 + 1.0 + quad, checks, diag)


# ---------------------------------------------------------------------------
# Concentration bounds
# ---------------------------------------------------------------------------


def _hoeffding_one_sided(n: float, dev: float, width: float) -> float:
    if dev <= 0.0:
        return 1.0
    if width == 0.0:
        return 0.0  # degenerate increments never deviate
    return math.exp(-2.0 * n * dev * dev / (width * width))


def concentration_upper_bound(region: Region, profile: MomentProfile,
                              schedule: SampleSchedule, tail: str = "hoeffding",
                              variant: str = "auto", hyp: Optional[Hyperplane] = None,
                              user_tail: Optional[Callable] = None,
                              term_tol: float = 1e-12, max_terms: int = 1_000_000,
                              start_containment_declared: bool = True) -> BoundReport:
    """Tail-sum bound N_tau + sum of schedule gaps weighted by deviation tails.

    Deviations come from the distance between the mean and the region slice
    at each schedule size ("T18-*" variants) or from the supporting
    hyperplane's closed-form distance ("T19").  The scalar variants need a
    verified one-sided condition at the first post-crossing slice; "auto"
    selects the valid scalar side and falls back to the vector form.  The
    support restriction on contributing indices is over-approximated by all
    indices, which can only loosen the bound.
    """
    if variant not in ("auto", "T18-vector", "T18-scalar-above", "T18-scalar-below", "T19"):
        raise ValueError(f"unknown variant {variant!r}")
    tag = "T19-concentration-hyperplane" if variant == "T19" else "T18-concentration"
    d = profile.dim
    mu = profile.mean
    checks = _standard_audit(region, profile, schedule, need_third_moment=True,
                             start_containment_declared=start_containment_declared)
    vchecks, m = _crossing_check(region, mu)
    checks += vchecks
    diag = {"m": m}
    if tail == "hoeffding":
        checks.append(_chk("support-bounds", profile.bounded, "tail=hoeffding"))
    elif tail == "chernoff-user":
        checks.append(_chk("user-tail-supplied", user_tail is not None))
    else:
        raise ValueError("tail must be 'hoeffding' or 'chernoff-user'")
    if any(c.status == "fail" for c in checks) or not math.isfinite(m):
        value = math.inf if not math.isfinite(m) else math.nan
        return BoundReport(tag, "upper", value, checks, diag)
    if variant == "T19" and hyp is None:
        hyp = supporting_hyperplane(region, mu)
    tau, n_tau = tau_index(schedule, m)
    diag["tau"] = tau
    diag["N_tau"] = n_tau

    side = None
    if d == 1:
        side = slice_side(region, n_tau, mu)
        diag["slice_side_at_N_tau"] = side
    if variant in ("T18-scalar-above", "T18-scalar-below"):
        wanted = "above" if variant.endswith("above") else "below"
        checks.append(_chk("one-sided-condition", side == wanted,
                           f"slice lies {side}"))
        if side != wanted:
            return BoundReport(tag, "upper", math.nan, checks, diag)
        one_sided = True
    elif variant == "auto" or variant == "T19":
        one_sided = d == 1 and side in ("above", "below")
    else:
        one_sided = False
    diag["one_sided"] = one_sided

    widths = (profile.support_hi - profile.support_lo) if profile.bounded else None

    def deviation(n: float) -> float:
        if variant == "T19":
            return hyperplane_slice_distance(hyp, n, mu)
        if region.scalar_boundary is not None and d == 1:
            z = region.scalar_boundary(n) / n
            return abs(float(mu[0]) - z)
        return slice_distance(region, n, mu)

    def tail_probability(n: float, dev: float) -> float:
        if one_sided:
            if tail == "hoeffding":
                return min(1.0, _hoeffding_one_sided(n, dev, float(widths[0])))
            return min(1.0, float(user_tail(n, dev)))
        total = 0.0
        comp_dev = dev / math.sqrt(d)
        for k in range(d):
            if tail == "hoeffding":
                total += 2.0 * _hoeffding_one_sided(n, comp_dev, float(widths[k]))
            else:
                total += 2.0 * float(user_tail(n, comp_dev))
        return min(1.0, total)  # a continuation probability never exceeds one

    total = 0.0
    tiny_streak = 0
    terms = 0
    index = tau
    while True:
        n_cur = schedule.element(index)
        n_next = schedule.element(index + 1)
        gap = n_next - n_cur
        term = gap * tail_probability(n_cur, deviation(n_cur))
        total += term
        terms += 1
        if term < term_tol:
            tiny_streak += 1
            if tiny_streak >= 3:
                break
        else:
            tiny_streak = 0
        index += 1
        if terms >= max_terms:
            raise CapExceededError("concentration series did not fall below the cutoff")
    diag["series_terms"] = terms
    diag["last_term"] = term
    diag["truncation_tol"] = term_tol
    return BoundReport(tag, "upper", n_tau + total, checks, diag)


# ---------------------------------------------------------------------------
# Overshoot bounds
# ---------------------------------------------------------------------------


def overshoot_upper_bound(z_spec: DistributionSpec, lam, variant: str = "T6",
                          schedule: Optional[SampleSchedule] = None) -> BoundReport:
    """Expected-overshoot bound for renewal sums crossing a threshold.

    "T6" bounds E[overshoot] for a crossing checked at every sample; "T7"
    handles thresholds checked only on a schedule with finite maximum gap K,
    via the law of the first-batch sum.
    """
    if variant not in ("T6", "T7"):
        raise ValueError("variant must be T6 or T7")
    tag = "Lorden-T6" if variant == "T6" else "Lorden-T7"
    if z_spec.dim != 1:
        raise ValueError("overshoot bounds are for scalar increments")
    prof = analytic_moments(z_spec)
    ez = float(prof.mean[0])
    ez2 = ovs.second_moment(z_spec)
    checks = [
        _chk("positive-mean", ez > 0.0, f"E[Z]={ez:.6g}"),
        _chk("second-moment-finite", math.isfinite(ez2)),
    ]
    diag = {"mean": ez, "second_moment": ez2}
    if variant == "T6":
        pos2 = ovs.positive_part_second_moment(z_spec)
        diag["positive_part_second_moment"] = pos2
        if any(c.status == "fail" for c in checks):
            return BoundReport(tag, "upper", math.nan, checks, diag)
        pr, pe = ovs.threshold_functionals(
            z_spec, lam, lambda c: ovs.cdf_strict(z_spec, c),
            lambda c: ovs.partial_expectation_above(z_spec, c))
        diag["prob_below_threshold"] = pr
        diag["partial_expectation"] = pe
        value = pos2 / ez * pr + pe
        return BoundReport(tag, "upper", value, checks, diag)
    # T7: positive increments, schedule with finite max gap
    if schedule is None:
        raise ValueError("T7 needs the sample schedule")
    strictly_positive = (z_spec.family == "exponential" or (
        prof.bounded and float(prof.support_lo[0]) > 0.0))
    checks.append(_chk("positive-increments", strictly_positive))
    K = gap_supremum(schedule)
    checks.append(_chk("finite-max-gap", math.isfinite(K)))
    if not math.isfinite(K):
        return BoundReport(tag, "upper", math.nan, checks, diag)
    n1 = schedule.element(1)
    diag["K"] = K
    diag["first_element"] = n1
    if any(c.status == "fail" for c in checks):
        return BoundReport(tag, "upper", math.nan, checks, diag)
    law = ovs.sum_law(z_spec, n1)
    if law.estimated:
        checks.append(AssumptionCheck("batch-law", "declared", "estimated by Monte Carlo"))
        diag["batch_law"] = "estimated"
    pr, pe = ovs.threshold_functionals(z_spec, lam, law.cdf_strict, law.partial_above)
    diag["prob_below_threshold"] = pr
    diag["partial_expectation"] = pe
    value = ((K - 1.0) * ez + ez2 / ez) * pr + pe
    return BoundReport(tag, "upper", value, checks, diag)


# ---------------------------------------------------------------------------
# Brownian bounds
# ---------------------------------------------------------------------------


def brownian_bound(region: Region, drift, variant: str,
                   gfun: Optional[Callable] = None,
                   concave_declared: bool = True) -> BoundReport:
    """Continuous-time analogues: crossing-time and ray-entry bounds for drift paths.

    "Brown1" bounds first exit of a continuity region by the drift-ray
    crossing; "Brown2-lower"/"Brown2-upper" bracket first entry of a convex
    stopping region by the entry and exit of the drift ray; "Brown3" and
    "Brown4" are the sample-mean forms with a concave rule function.
    """
    drift_vec = np.atleast_1d(np.asarray(drift, dtype=float))
    if variant == "Brown1":
        checks = [_chk("III", region.convex_closure and region.contains_origin)]
        if any(c.status == "fail" for c in checks):
            return BoundReport("Brown1", "upper", math.nan, checks, {})
        vchecks, m = _crossing_check(region, drift_vec)
        checks += vchecks
        return BoundReport("Brown1", "upper", m, checks, {"m": m})
    if variant in ("Brown2-lower", "Brown2-upper"):
        checks = [
            _chk("stopping-kind", region.kind == "stopping"),
            _chk("convex", region.convex_closure),
        ]
        if any(c.status == "fail" for c in checks):
            return BoundReport(variant, "lower" if variant.endswith("lower") else "upper",
                               math.nan, checks, {})
        entry, sup = ray_entry_and_exit(region, drift_vec)
        diag = {"mean_ray_entry": entry, "mean_ray_exit": sup}
        if entry is None:
            value = math.inf
        else:
            value = entry if variant.endswith("lower") else sup
        direction = "lower" if variant.endswith("lower") else "upper"
        return BoundReport(variant, direction, value, checks, diag)
    if variant in ("Brown3", "Brown4"):
        if gfun is None:
            raise ValueError(f"{variant} needs the rule function")
        g0 = float(gfun(drift_vec))
        checks = [
            AssumptionCheck("g-concave", "declared" if concave_declared else "fail"),
            _chk("g-positive-at-mean", g0 > 0.0, f"g(drift)={g0:.6g}"),
        ]
        if any(c.status == "fail" for c in checks):
            return BoundReport(variant, "upper" if variant == "Brown3" else "lower",
                               math.nan, checks, {"g_at_drift": g0})
        if variant == "Brown3":
            return BoundReport("Brown3", "upper", g0, checks, {"g_at_drift": g0})
        return BoundReport("Brown4", "lower", 1.0 / g0, checks, {"g_at_drift": g0})
    raise ValueError(f"unknown variant {variant!r}")
