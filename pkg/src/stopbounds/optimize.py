"""Convex-optimization kernels behind the slab and vertex bounds.

Three operations: maximize the time coordinate over a slab-constrained
region slice, maximize a concave function over a box, and maximize the
fractional vertex form over the corners of the unit cube.  All of them are
deterministic given their tolerances and seeds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geometry import Hyperplane, Region


class ProvisoViolatedError(RuntimeError):
    """The positivity proviso of the vertex bound fails; the bound is inapplicable."""


@dataclass(frozen=True)
class Slab:
    """Constraint t*lower_slope + lower_icept <= s <= t*upper_slope + upper_icept.

    An optional primed quadruple intersects a second slab of the same form.
    The slab is flagged empty when a lower edge exceeds its upper edge.
    """

    lower_slope: np.ndarray
    upper_slope: np.ndarray
    lower_icept: np.ndarray
    upper_icept: np.ndarray
    primed: Optional["Slab"] = None

    def __post_init__(self):
        for name in ("lower_slope", "upper_slope", "lower_icept", "upper_icept"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))

    @property
    def dim(self) -> int:
        return self.lower_slope.shape[0]

    @property
    def is_empty(self) -> bool:
        bad = np.any(self.lower_slope > self.upper_slope) or np.any(self.lower_icept > self.upper_icept)
        if self.primed is not None:
            bad = bad or self.primed.is_empty
        return bool(bad)

    def box(self, t: float):
        """Elementwise box [lo, hi] for s at fixed t, intersecting the primed slab."""
        lo = t * self.lower_slope + self.lower_icept
        hi = t * self.upper_slope + self.upper_icept
        if self.primed is not None:
            plo, phi = self.primed.box(t)
            lo = np.maximum(lo, plo)
            hi = np.minimum(hi, phi)
        return lo, hi


@dataclass(frozen=True)
class SlabMaxResult:
    value: float
    empty_domain: bool = False
    unbounded: bool = False
    uncertainty: float = 0.0  # one bisection step plus feasibility margin


def _feasible_scalar(region: Region, t: float, lo: float, hi: float) -> bool:
    if lo > hi:
        return False
    if region.scalar_boundary is not None:
        f = region.scalar_boundary(t)
        if region.orientation == "le":
            return lo <= f
        return hi >= f
    # membership-only scalar region: endpoint checks plus a grid sweep
    for s in np.linspace(lo, hi, 65):
        if region.contains(t, np.array([s])):
            return True
    return False


def _find_slice_anchor(region: Region, t: float, center: np.ndarray, scale: float):
    """Any point of the region slice at time t, found by directional doubling."""
    d = center.shape[0]
    if region.contains(t, center):
        return center
    dirs = [np.eye(d)[k] * s for k in range(d) for s in (1.0, -1.0)]
    rng = np.random.default_rng(1234)
    dirs += [u / np.linalg.norm(u) for u in rng.normal(size=(2 * d, d))]
    for u in dirs:
        r = max(scale, 1e-9)
        for _ in range(48):
            if region.contains(t, center + r * u):
                return center + r * u
            r *= 2.0
    return None


def _feasible_vector(region: Region, t: float, lo: np.ndarray, hi: np.ndarray,
                     tol: float) -> bool:
    if np.any(lo > hi):
        return False
    d = lo.shape[0]
    center = 0.5 * (lo + hi)
    probes = [center]
    if d <= 12:
        probes += [np.where(np.array(mask, dtype=bool), hi, lo)
                   for mask in itertools.product((0, 1), repeat=d)]
    for p in probes:
        if region.contains(t, p):
            return True
    scale = float(np.max(hi - lo) + np.max(np.abs(center)) + 1.0)
    anchor = _find_slice_anchor(region, t, center, scale)
    if anchor is None:
        return False
    if np.all(anchor >= lo - tol) and np.all(anchor <= hi + tol):
        return True
    # walk each probe toward the slice anchor; feasible when the region
    # boundary point on that segment still lies inside the box
    for p in probes:
        lam_lo, lam_hi = 0.0, 1.0  # p + lam*(anchor - p); lam=1 is inside
        for _ in range(60):
            lam = 0.5 * (lam_lo + lam_hi)
            if region.contains(t, p + lam * (anchor - p)):
                lam_hi = lam
            else:
                lam_lo = lam
        b = p + lam_hi * (anchor - p)
        if np.all(b >= lo - tol) and np.all(b <= hi + tol):
            return True
    return False


def max_time_in_region(region: Region, slab: Slab, t_cap: float = 2.0**30,
                       tol: float = 1e-9) -> SlabMaxResult:
    """Largest t whose slab box intersects the region slice.

    The feasible t values form an interval by convexity, so the search
    probes a geometric grid for one feasible point, brackets the upper end
    by doubling, and bisects.  Feasibility at t_cap is reported as an
    unbounded domain; feasibility nowhere as an empty one.
    """
    if not region.convex_closure:
        raise ValueError("max_time_in_region requires the asserted convex closure")
    if slab.is_empty:
        return SlabMaxResult(0.0, empty_domain=True)

    if region.dim == 1:
        def feasible(t: float) -> bool:
            lo, hi = slab.box(t)
            return _feasible_scalar(region, t, float(lo[0]), float(hi[0]))
    else:
        def feasible(t: float) -> bool:
            lo, hi = slab.box(t)
            return _feasible_vector(region, t, lo, hi, tol)

    if feasible(t_cap):
        return SlabMaxResult(math.inf, unbounded=True)
    t_feas = None
    for k in range(0, 120):
        t = t_cap * 0.5**k
        if t < 1e-12:
            break
        if feasible(t):
            t_feas = t
            break
    if t_feas is None and feasible(0.0):
        t_feas = 0.0
    if t_feas is None:
        return SlabMaxResult(0.0, empty_domain=True)
    lo, hi = t_feas, 2.0 * t_feas if t_feas > 0 else 1.0
    while feasible(hi):
        lo = hi
        hi *= 2.0
        if hi >= t_cap:
            if feasible(t_cap):
                return SlabMaxResult(math.inf, unbounded=True)
            hi = t_cap
            break
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return SlabMaxResult(hi, uncertainty=hi - lo)


def max_concave_over_box(fun: Callable[[np.ndarray], float], lo, hi,
                         tol: float = 1e-10, restarts: int = 6, seed: int = 3) -> float:
    """Maximum of a caller-asserted concave function over the box [lo, hi].

    Golden-section search per coordinate for d=1, projected multi-start
    ascent for d >= 2.  An infinite probe value propagates as the maximum.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if np.any(lo > hi):
        raise ValueError("box is empty")
    d = lo.shape[0]

    def probe(x: np.ndarray) -> float:
        v = float(fun(x))
        if math.isnan(v):
            raise ValueError("objective returned NaN inside the box")
        return v

    corners = [np.where(np.array(mask), hi, lo) for mask in itertools.product((0, 1), repeat=min(d, 12))]
    base_points = corners + [0.5 * (lo + hi)]
    best = -math.inf
    for p in base_points:
        v = probe(p)
        if v == math.inf:
            return math.inf
        best = max(best, v)

    if d == 1:
        a, b = float(lo[0]), float(hi[0])
        if b - a <= tol:
            return best
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        c, e = b - invphi * (b - a), a + invphi * (b - a)
        fc, fe = probe(np.array([c])), probe(np.array([e]))
        if math.inf in (fc, fe):
            return math.inf
        while b - a > tol:
            if fc >= fe:
                b, e, fe = e, c, fc
                c = b - invphi * (b - a)
                fc = probe(np.array([c]))
            else:
                a, c, fc = c, e, fe
                e = a + invphi * (b - a)
                fe = probe(np.array([e]))
            if math.inf in (fc, fe):
                return math.inf
        return max(best, fc, fe)

    rng = np.random.default_rng(seed)
    width = hi - lo
    for r in range(restarts):
        x = lo + rng.random(d) * width if r else 0.5 * (lo + hi)
        fx = probe(x)
        if fx == math.inf:
            return math.inf
        step_scale = 1.0
        for _ in range(400):
            h = 1e-6 * np.maximum(1.0, np.abs(x))
            grad = np.empty(d)
            for k in range(d):
                xp, xm = x.copy(), x.copy()
                xp[k] = min(hi[k], x[k] + h[k])
                xm[k] = max(lo[k], x[k] - h[k])
                denom = xp[k] - xm[k]
                fp, fm = probe(xp), probe(xm)
                if math.inf in (fp, fm):
                    return math.inf
                grad[k] = (fp - fm) / denom if denom > 0 else 0.0
            gnorm = float(np.linalg.norm(grad))
            if gnorm * step_scale * float(np.max(width)) < tol:
                break
            cand = np.clip(x + step_scale * grad / max(gnorm, 1e-300) * np.max(width), lo, hi)
            fc = probe(cand)
            if fc == math.inf:
                return math.inf
            if fc > fx:
                x, fx = cand, fc
            else:
                step_scale *= 0.5
                if step_scale < 1e-12:
                    break
        best = max(best, fx)
    return best


@dataclass(frozen=True)
class VertexMaxResult:
    value: float
    vertex: tuple
    min_denominator: float


def vertex_fraction_max(hyp: Hyperplane, slab: Slab, use_primed: bool = False) -> VertexMaxResult:
    """Maximum of (level - <a, icept(q)>) / (t_coef + <a, slope(q)>) over cube vertices.

    q ranges over {0,1}^d; slope(q) interpolates the upper and lower slab
    slopes elementwise and icept(q) the intercepts.  The positivity of every
    denominator is the applicability proviso and is checked first.  Ties
    resolve to the lexicographically smallest maximizing vertex.
    """
    quad = slab.primed if use_primed else slab
    if quad is None:
        raise ValueError("slab carries no primed quadruple")
    d = quad.dim
    if d > 20:
        raise ValueError("vertex enumeration is limited to dim <= 20")
    if hyp.dim != d:
        raise ValueError("hyperplane and slab dimensions disagree")
    a = hyp.s_coef
    best_val, best_vertex = -math.inf, None
    min_den = math.inf
    rows = []
    for bits in itertools.product((0, 1), repeat=d):
        q = np.array(bits, dtype=float)
        slope = quad.upper_slope + q * (quad.lower_slope - quad.upper_slope)
        icept = quad.upper_icept + q * (quad.lower_icept - quad.upper_icept)
        den = hyp.t_coef + float(a @ slope)
        num = hyp.level - float(a @ icept)
        min_den = min(min_den, den)
        rows.append((bits, num, den))
    if min_den <= 0.0:
        raise ProvisoViolatedError(
            f"vertex denominator minimum {min_den:.6g} is not positive")
    for bits, num, den in rows:
        val = num / den
        if val > best_val + 0.0 or (val == best_val and bits < best_vertex):
            if val > best_val:
                best_val, best_vertex = val, bits
            elif bits < best_vertex:
                best_vertex = bits
    return VertexMaxResult(best_val, best_vertex, min_den)
