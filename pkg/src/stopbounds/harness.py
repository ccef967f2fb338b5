"""Scenario bundles, theorem-tag dispatch, and the certification comparison.

A bundle ties one increment law, one region, and one schedule together and
derives the views the calculators need: the continuity-side closure, the
stopping-side closure, the ray rule function and its reciprocal, and the
supporting hyperplane.  ``bound_report`` turns a theorem tag into a report;
``certify`` compares reports against a Monte Carlo estimate with the
four-sigma slack, respecting truncation bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

from . import bounds as bd
from .geometry import (
    GradientDomainError,
    NonConvexityError,
    NoRayExitError,
    Region,
    ray_exit_time,
    supporting_hyperplane,
)
from .moments import DistributionSpec, MomentProfile, analytic_moments
from .schedules import SampleSchedule
from .simulate import SimulationEstimate


@dataclass
class ScenarioBundle:
    """One experiment: distribution + region + schedule + declared hypotheses."""

    name: str
    spec: DistributionSpec
    region: Region
    schedule: SampleSchedule
    n_runs: int = 100_000
    horizon: int = 1_000_000
    boundary: str = "closed"
    declarations: dict = field(default_factory=dict)

    @cached_property
    def profile(self) -> MomentProfile:
        return analytic_moments(self.spec)

    @cached_property
    def continuity_view(self) -> Region:
        if self.region.kind == "continuity":
            return self.region
        return self.region.complement_closure()

    @cached_property
    def stopping_view(self) -> Region:
        if self.region.kind == "stopping":
            return self.region
        return self.region.complement_closure()

    @cached_property
    def hyperplane(self):
        return supporting_hyperplane(self.continuity_view, self.profile.mean)

    def rule_function(self):
        """g(v): how long the slope-v ray stays in the continuity closure."""
        view = self.continuity_view

        def g(v):
            return ray_exit_time(view, v)

        return g

    def reciprocal_rule_function(self):
        view = self.continuity_view

        def g(v):
            val = ray_exit_time(view, v)
            return 1.0 / val if math.isfinite(val) and val > 0 else 0.0

        return g

    def threshold_level(self) -> Optional[float]:
        """Constant stopping threshold, when the stopping view is one."""
        fam = self.stopping_view.family
        if fam and fam.get("family") == "constant" and fam.get("orientation") == "ge":
            return float(fam["level"])
        return None

    def declared(self, key: str, default: bool = True) -> bool:
        return bool(self.declarations.get(key, default))


def _failed(tag: str, direction: str, ident: str, note: str) -> bd.BoundReport:
    return bd.BoundReport(tag, direction, math.nan,
                          [bd.AssumptionCheck(ident, "fail", note)], {})


def bound_report(tag: str, bundle: ScenarioBundle) -> bd.BoundReport:
    """Compute the report for one theorem tag against the bundle's scenario."""
    prof = bundle.profile
    sched = bundle.schedule
    mean = prof.mean
    iv = bundle.declared("start_containment")
    try:
        if tag == "T8-lower":
            return bd.stopping_region_lower_bound(bundle.stopping_view, mean)
        if tag == "T-UseWald-lower":
            return bd.wald_lower_bound(bundle.reciprocal_rule_function(), mean,
                                       concave_declared=bundle.declared("concave_rule"))
        if tag in ("T10-upper", "T11-upper-bounded"):
            variant = "T10" if tag == "T10-upper" else "T11"
            return bd.slab_optimization_upper_bound(
                bundle.continuity_view, prof, sched, variant,
                start_containment_declared=iv)
        if tag in ("T12-samplemean", "T13-samplemean-naturals", "T-try88-bounded"):
            variant = {"T12-samplemean": "T12", "T13-samplemean-naturals": "T13",
                       "T-try88-bounded": "try88"}[tag]
            return bd.sample_mean_upper_bound(
                bundle.rule_function(), prof, sched, variant,
                concave_declared=bundle.declared("concave_rule"),
                sure_start_declared=bundle.declared("sure_start"))
        if tag in ("T14-hyperplane", "T15-hyperplane-bounded"):
            variant = "T14" if tag == "T14-hyperplane" else "T15"
            return bd.hyperplane_vertex_upper_bound(
                bundle.hyperplane, prof, sched, variant,
                region=bundle.continuity_view, start_containment_declared=iv)
        if tag.startswith("T16-chenlorden-"):
            assertion = tag.rsplit("-", 1)[1]
            k = 1 if sched.is_all_naturals else (sched.step or 0)
            if not k or not sched.is_multiples_of(k):
                return _failed(tag, "upper", "schedule-multiples",
                               "rule must be checked at multiples of a fixed batch size")
            return bd.lorden_hyperplane_upper_bound(bundle.hyperplane, prof, k, assertion)
        if tag in ("T17-gradient", "vipformula"):
            variant = "T17" if tag == "T17-gradient" else "vipformula"
            return bd.gradient_upper_bound(bundle.continuity_view, prof, variant, sched)
        if tag in ("T18-concentration", "T19-concentration-hyperplane"):
            if tag.startswith("T19"):
                return bd.concentration_upper_bound(
                    bundle.continuity_view, prof, sched, "hoeffding", "T19",
                    hyp=bundle.hyperplane, start_containment_declared=iv)
            return bd.concentration_upper_bound(
                bundle.continuity_view, prof, sched, "hoeffding", "auto",
                start_containment_declared=iv)
        if tag in ("Lorden-T6", "Lorden-T7"):
            level = bundle.threshold_level()
            if level is None:
                return _failed(tag, "upper", "constant-threshold",
                               "overshoot bounds need a constant stopping threshold")
            if prof.dim != 1:
                return _failed(tag, "upper", "scalar-increments", "dim must be 1")
            if tag == "Lorden-T6":
                report = bd.overshoot_upper_bound(bundle.spec, level, "T6")
                report.assumptions.append(bd.AssumptionCheck(
                    "all-naturals", "pass" if sched.is_all_naturals else "fail",
                    "every-sample crossing rule"))
                return report
            return bd.overshoot_upper_bound(bundle.spec, level, "T7", schedule=sched)
    except (NoRayExitError, NonConvexityError, GradientDomainError) as exc:
        return _failed(tag, "upper" if tag in bd.UPPER_TAGS else "lower",
                       "geometry", str(exc))
    raise ValueError(f"unknown theorem tag {tag!r}")


@dataclass(frozen=True)
class BrownianBundle:
    """Continuous-time experiment: drift/diffusion path in a region."""

    name: str
    region: Region
    drift: float
    diffusion: float
    dt: float
    n_runs: int = 50_000
    horizon: float = 10_000.0
    declarations: dict = field(default_factory=dict)

    def rule_function(self):
        view = (self.region if self.region.kind == "continuity"
                else self.region.complement_closure())

        def g(v):
            return ray_exit_time(view, v)

        return g

    def reciprocal_rule_function(self):
        base = self.rule_function()

        def g(v):
            val = base(v)
            return 1.0 / val if math.isfinite(val) and val > 0 else 0.0

        return g


def brownian_report(tag: str, bundle: BrownianBundle) -> bd.BoundReport:
    declared = bool(bundle.declarations.get("concave_rule", True))
    if tag == "Brown1":
        region = (bundle.region if bundle.region.kind == "continuity"
                  else bundle.region.complement_closure())
        return bd.brownian_bound(region, bundle.drift, "Brown1")
    if tag in ("Brown2-lower", "Brown2-upper"):
        region = (bundle.region if bundle.region.kind == "stopping"
                  else bundle.region.complement_closure())
        return bd.brownian_bound(region, bundle.drift, tag)
    if tag == "Brown3":
        return bd.brownian_bound(bundle.region, bundle.drift, "Brown3",
                                 gfun=bundle.rule_function(), concave_declared=declared)
    if tag == "Brown4":
        return bd.brownian_bound(bundle.region, bundle.drift, "Brown4",
                                 gfun=bundle.reciprocal_rule_function(),
                                 concave_declared=declared)
    raise ValueError(f"unknown Brownian tag {tag!r}")


# ---------------------------------------------------------------------------
# Certification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CertRow:
    theorem: str
    direction: str
    value: float
    applicable: bool
    mc_mean: float
    mc_stderr: float
    verdict: str  # "pass" | "fail" | "inapplicable" | "skipped-biased"


def _target_stat(report: bd.BoundReport, estimate: SimulationEstimate):
    if report.theorem.startswith("Lorden-"):
        stat = estimate.extras.get("overshoot")
        if stat is None:
            return None
        return stat
    return estimate.mean, estimate.stderr


def certify(reports, estimate: SimulationEstimate, slack_sigmas: float = 4.0):
    """Compare each applicable report against the Monte Carlo estimate.

    Upper bounds must exceed mean - slack, lower bounds must not exceed
    mean + slack.  A truncated (downward-biased) estimate cannot refute a
    lower bound, so those comparisons are skipped.  For Euler-discretized
    estimates the slack also absorbs twice the two-grid discretization
    diagnostic.
    """
    grid_bias = 2.0 * estimate.diagnostics.get("discretization_diagnostic", 0.0)
    rows = []
    for report in reports:
        target = _target_stat(report, estimate)
        if not report.applicable or target is None or math.isnan(report.value):
            rows.append(CertRow(report.theorem, report.direction, report.value,
                                False, estimate.mean, estimate.stderr, "inapplicable"))
            continue
        mean, stderr = target
        slack = max(slack_sigmas * stderr, grid_bias)
        if report.direction == "upper":
            verdict = "pass" if report.value >= mean - slack else "fail"
        else:
            if estimate.downward_biased:
                verdict = "skipped-biased"
            else:
                verdict = "pass" if report.value <= mean + slack else "fail"
        rows.append(CertRow(report.theorem, report.direction, report.value,
                            True, mean, stderr, verdict))
    return rows
