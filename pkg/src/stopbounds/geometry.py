"""Regions in the (time, sum) hyperspace and the geometry every bound needs.

A region is a membership oracle over points (t, s) with t >= 0 and s a
d-vector, plus asserted convexity/origin flags.  The quantities computed
here: the crossing time m where the mean ray (t, t*mean) leaves the region,
the ray function g(v) = sup{t : (t, t v) in region}, the gradient of ln g,
the supporting hyperplane at (m, m*mean), and distances from the mean to
region slices at fixed sample size.

Built-in scalar families carry a signed slack function (positive inside,
zero on the boundary) which enables exact root refinement and vectorized
membership checks; custom oracles fall back to plain bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

DOUBLING_CAP = 2.0**60


class RegionError(ValueError):
    """Region flags or parameters inconsistent with the requested operation."""


class NoRayExitError(RuntimeError):
    """The ray never leaves the region below the doubling cap (no unique crossing)."""


class NonConvexityError(RuntimeError):
    """Observed membership pattern contradicts the asserted convexity."""


class GradientDomainError(RuntimeError):
    """g is infinite or non-finite-differentiable where a gradient was requested."""


class EmptySliceError(RuntimeError):
    """The fixed-size slice of the region contains no point reachable by search."""


@dataclass(frozen=True)
class Region:
    """Continuity or stopping region with membership oracle and asserted flags.

    ``slack`` maps (t, s) to a signed margin, nonnegative exactly on the
    closed region; it is present for the built-in families.  For d=1 regions
    of the form {s <= f(t)} or {s >= f(t)}, ``scalar_boundary`` holds f and
    ``orientation`` is "le" or "ge".
    """

    kind: str  # "continuity" | "stopping"
    dim: int
    membership: Callable[[float, np.ndarray], bool]
    convex_closure: bool = False
    contains_origin: bool = False
    slack: Optional[Callable[[float, np.ndarray], float]] = None
    slack_batch: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    scalar_boundary: Optional[Callable[[float], float]] = None
    orientation: Optional[str] = None
    family: Optional[dict] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("continuity", "stopping"):
            raise RegionError(f"unknown region kind {self.kind!r}")

    def contains(self, t: float, s, strict: bool = False) -> bool:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self.slack is not None:
            margin = self.slack(t, s)
            return margin > 0.0 if strict else margin >= 0.0
        return bool(self.membership(t, s))

    def complement_closure(self) -> "Region":
        """Closure of the complement, as a region of the opposite kind.

        Only available for the built-in families, where flipping the
        boundary orientation gives the complement exactly.
        """
        if self.family is None:
            raise RegionError("complement_closure requires a built-in region family")
        spec = dict(self.family)
        spec["orientation"] = "ge" if spec["orientation"] == "le" else "le"
        spec["kind"] = "stopping" if self.kind == "continuity" else "continuity"
        return region_from_family(spec)


def _mk_region(kind, dim, slack, slack_batch, convex, origin, boundary, orientation, family):
    def membership(t, s):
        return slack(t, np.atleast_1d(np.asarray(s, dtype=float))) >= 0.0

    return Region(
        kind=kind,
        dim=dim,
        membership=membership,
        convex_closure=convex,
        contains_origin=origin,
        slack=slack,
        slack_batch=slack_batch,
        scalar_boundary=boundary,
        orientation=orientation,
        family=family,
    )


def _oriented(value_minus_s, orientation):
    # slack for {s <= f}: f - s;  for {s >= f}: s - f
    return value_minus_s if orientation == "le" else -value_minus_s


def constant_region(level: float, orientation: str = "le", kind: str = "continuity") -> Region:
    """Region {s <= level} ("le") or {s >= level} ("ge") for scalar s."""
    level = float(level)
    sgn = 1.0 if orientation == "le" else -1.0

    def slack(t, s):
        if t < 0:
            return -math.inf
        return sgn * (level - s[0])

    def slack_batch(ts, ss):
        out = sgn * (level - ss[:, 0])
        return np.where(ts < 0, -np.inf, out)

    origin = level >= 0 if orientation == "le" else level <= 0
    return _mk_region(kind, 1, slack, slack_batch, True, origin, lambda t: level,
                      orientation, {"family": "constant", "level": level,
                                    "orientation": orientation, "kind": kind})


def affine_region(slope: float, intercept: float, orientation: str = "le",
                  kind: str = "continuity") -> Region:
    """Region bounded by the line f(t) = slope*t + intercept."""
    slope, intercept = float(slope), float(intercept)
    sgn = 1.0 if orientation == "le" else -1.0

    def slack(t, s):
        if t < 0:
            return -math.inf
        return sgn * (slope * t + intercept - s[0])

    def slack_batch(ts, ss):
        out = sgn * (slope * ts + intercept - ss[:, 0])
        return np.where(ts < 0, -np.inf, out)

    origin = intercept >= 0 if orientation == "le" else intercept <= 0
    return _mk_region(kind, 1, slack, slack_batch, True, origin,
                      lambda t: slope * t + intercept, orientation,
                      {"family": "affine", "slope": slope, "intercept": intercept,
                       "orientation": orientation, "kind": kind})


def power_region(coef: float, exponent: float, orientation: str = "le",
                 kind: str = "continuity") -> Region:
    """Region bounded by f(t) = coef * t**exponent with 0 < exponent < 1.

    {s <= f} is convex when coef > 0 (region below a concave curve);
    {s >= f} is convex when coef < 0.  Other combinations get the convexity
    flag cleared.
    """
    coef, exponent = float(coef), float(exponent)
    if not 0.0 < exponent < 1.0:
        raise RegionError("exponent must lie in (0, 1)")
    sgn = 1.0 if orientation == "le" else -1.0

    def slack(t, s):
        if t < 0:
            return -math.inf
        return sgn * (coef * t**exponent - s[0])

    def slack_batch(ts, ss):
        safe = np.maximum(ts, 0.0)
        out = sgn * (coef * safe**exponent - ss[:, 0])
        return np.where(ts < 0, -np.inf, out)

    convex = coef > 0 if orientation == "le" else coef < 0
    return _mk_region(kind, 1, slack, slack_batch, convex, True,
                      lambda t: coef * t**exponent, orientation,
                      {"family": "power", "coef": coef, "exponent": exponent,
                       "orientation": orientation, "kind": kind})


def halfspace_region(s_coef, t_coef: float, level: float, orientation: str = "le",
                     kind: str = "continuity") -> Region:
    """Region {<s_coef, s> + t_coef*t <= level} ("le") or ">=" ("ge"), any dim."""
    a = np.atleast_1d(np.asarray(s_coef, dtype=float))
    b, c = float(t_coef), float(level)
    sgn = 1.0 if orientation == "le" else -1.0

    def slack(t, s):
        if t < 0:
            return -math.inf
        return sgn * (c - (float(a @ s) + b * t))

    def slack_batch(ts, ss):
        out = sgn * (c - (ss @ a + b * ts))
        return np.where(ts < 0, -np.inf, out)

    origin = c >= 0 if orientation == "le" else c <= 0
    boundary = None
    if a.shape[0] == 1 and a[0] != 0.0:
        # scalar halfspace reduces to an affine boundary s = (c - b t)/a
        boundary = lambda t: (c - b * t) / a[0]
    return _mk_region(kind, a.shape[0], slack, slack_batch, True, origin, boundary,
                      orientation if boundary is not None else None,
                      {"family": "halfspace", "s_coef": [float(x) for x in a],
                       "t_coef": b, "level": c, "orientation": orientation, "kind": kind})


def region_from_oracle(membership, dim: int, kind: str = "continuity",
                       convex_closure: bool = False, contains_origin: bool = False,
                       scalar_boundary=None, orientation=None) -> Region:
    """Wrap a plain membership predicate; no slack, so boundary refinement bisects."""
    def member(t, s):
        return bool(membership(t, np.atleast_1d(np.asarray(s, dtype=float))))

    return Region(kind=kind, dim=dim, membership=member, convex_closure=convex_closure,
                  contains_origin=contains_origin, scalar_boundary=scalar_boundary,
                  orientation=orientation)


_FAMILY_BUILDERS = {
    "constant": lambda p: constant_region(p["level"], p["orientation"], p["kind"]),
    "affine": lambda p: affine_region(p["slope"], p["intercept"], p["orientation"], p["kind"]),
    "power": lambda p: power_region(p["coef"], p["exponent"], p["orientation"], p["kind"]),
    "halfspace": lambda p: halfspace_region(p["s_coef"], p["t_coef"], p["level"],
                                            p["orientation"], p["kind"]),
}


def region_from_family(spec: dict) -> Region:
    builder = _FAMILY_BUILDERS.get(spec.get("family"))
    if builder is None:
        raise RegionError(f"unknown region family {spec.get('family')!r}")
    return builder(spec)


# ---------------------------------------------------------------------------
# Ray searches
# ---------------------------------------------------------------------------


def _require_convex_origin(region: Region):
    if not (region.convex_closure and region.contains_origin):
        raise RegionError("operation requires asserted convex_closure and contains_origin")


def _ray_member(region: Region, v: np.ndarray):
    def member(t: float) -> bool:
        return region.contains(t, t * v)

    return member


def _refine_exit(region: Region, v: np.ndarray, lo: float, hi: float, tol: float) -> float:
    """Boundary time in (lo, hi] with inside at lo, outside at hi."""
    if region.slack is not None:
        phi = lambda t: region.slack(t, t * v)
        flo, fhi = phi(lo), phi(hi)
        if flo == 0.0:
            return lo
        if flo > 0.0 > fhi and np.isfinite(flo) and np.isfinite(fhi):
            return float(brentq(phi, lo, hi, xtol=1e-15, rtol=8.9e-16))
    member = _ray_member(region, v)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if member(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _bracket_ray_exit(region: Region, v: np.ndarray, t_hi_hint: float):
    """Find lo (inside) and hi (outside) along the ray, or hi=None if capped."""
    member = _ray_member(region, v)
    if not member(0.0):
        raise RegionError("asserted origin containment fails at (0, 0)")
    t = max(float(t_hi_hint), 1e-12)
    if member(t):
        lo, hi = t, None
        while t <= DOUBLING_CAP:
            t *= 2.0
            if not member(t):
                hi = t
                break
            lo = t
        if hi is None:
            return lo, None
    else:
        hi, lo = t, None
        while t > 1e-300:
            t *= 0.5
            if member(t):
                lo = t
                break
            hi = t
        if lo is None:
            lo = 0.0
    # convexity audit around the bracket: inside must persist below, outside above
    if lo > 0.0 and not member(0.25 * lo):
        raise NonConvexityError("membership not monotone along the ray below the exit")
    for factor in (1.5, 4.0):
        if hi * factor <= DOUBLING_CAP and member(hi * factor):
            raise NonConvexityError("membership recurs along the ray beyond the exit")
    return lo, hi


def ray_exit_time(region: Region, v, t_hi_hint: float = 1.0, tol: Optional[float] = None) -> float:
    """sup{t >= 0 : (t, t v) in the closed region}; inf when the ray never leaves.

    Requires the convexity and origin flags; the search doubles up to 2**60
    before declaring the supremum infinite.
    """
    _require_convex_origin(region)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    lo, hi = _bracket_ray_exit(region, v, t_hi_hint)
    if hi is None:
        return math.inf
    if tol is None:
        tol = 1e-9 * max(1.0, hi)
    return _refine_exit(region, v, lo, hi, tol)


def mean_ray_crossing(region: Region, mean, t_hi_hint: float = 1.0,
                      tol: Optional[float] = None) -> float:
    """The unique positive m with (m, m*mean) on the region boundary.

    Raises NoRayExitError when the mean ray never leaves the region below
    the doubling cap (the caller may interpret the associated bound as
    infinite).
    """
    _require_convex_origin(region)
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    lo, hi = _bracket_ray_exit(region, mean, t_hi_hint)
    if hi is None:
        raise NoRayExitError("mean ray stays inside the region up to the doubling cap")
    if tol is None:
        tol = 1e-9 * max(1.0, hi)
    return _refine_exit(region, mean, lo, hi, tol)


def ray_entry_and_exit(region: Region, v, t_hi_hint: float = 1.0,
                       tol: Optional[float] = None):
    """(inf A, sup A) for A = {t >= 0 : (t, t v) in the closed region}.

    Returns (None, None) when no ray point inside the region is found below
    the doubling cap (A empty as far as the search can tell).  sup A is
    math.inf when the ray stays inside past the cap.
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    member = _ray_member(region, v)

    def interior(t: float) -> bool:
        # strict probe: at huge t the boundary terms can round away, making
        # slack exactly zero far outside the true region
        if region.slack is not None:
            return region.contains(t, t * v, strict=True)
        return member(t)

    if member(0.0):
        entry = 0.0
        t_in = max(float(t_hi_hint), 1e-12)
        if not member(t_in):
            t_in = 0.0
    else:
        t_in = None
        base = max(float(t_hi_hint), 1e-12)
        prev = 0.0
        for k in range(-40, 62):
            t = base * 2.0**k
            if t > DOUBLING_CAP:
                break
            if interior(t):
                t_in = t
                break
            prev = t
        if t_in is None:
            return None, None
        if tol is None:
            tol = 1e-9 * max(1.0, t_in)
        # boundary between prev (outside) and t_in (inside)
        if region.slack is not None:
            phi = lambda t: region.slack(t, t * v)
            flo, fhi = phi(prev), phi(t_in)
            if fhi == 0.0:
                entry = t_in
            elif flo < 0.0 < fhi and np.isfinite(flo):
                entry = float(brentq(phi, prev, t_in, xtol=1e-15, rtol=8.9e-16))
            else:
                entry = _bisect_entry(member, prev, t_in, tol)
        else:
            entry = _bisect_entry(member, prev, t_in, tol)
    # supremum: double from an inside point
    t = max(t_in, 1e-12)
    lo, hi = t, None
    while t <= DOUBLING_CAP:
        t *= 2.0
        if not member(t):
            hi = t
            break
        lo = t
    if hi is None:
        return entry, math.inf
    if tol is None:
        tol = 1e-9 * max(1.0, hi)
    return entry, _refine_exit(region, v, lo, hi, tol)


def _bisect_entry(member, lo: float, hi: float, tol: float) -> float:
    # lo outside, hi inside
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if member(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Gradient and supporting hyperplane
# ---------------------------------------------------------------------------


def log_exit_gradient(region: Region, mean, step: Optional[float] = None) -> np.ndarray:
    """Gradient of ln g(v) at v=mean by Richardson-extrapolated central differences.

    For d=1 regions with differentiable boundary f this equals
    1 / (f'(m) - mean) at the crossing time m.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    d = mean.shape[0]
    g0 = ray_exit_time(region, mean)
    if not (np.isfinite(g0) and g0 > 0.0):
        raise GradientDomainError("g is not finite and positive at the mean")
    grad = np.empty(d)
    for k in range(d):
        h = step if step is not None else 1e-5 * max(1.0, abs(mean[k]))

        def central(hh):
            vp = mean.copy()
            vm = mean.copy()
            vp[k] += hh
            vm[k] -= hh
            gp = ray_exit_time(region, vp, t_hi_hint=g0)
            gm = ray_exit_time(region, vm, t_hi_hint=g0)
            if not (np.isfinite(gp) and np.isfinite(gm) and gp > 0.0 and gm > 0.0):
                raise GradientDomainError("g not finite in the difference stencil")
            return (math.log(gp) - math.log(gm)) / (2.0 * hh)

        coarse, fine = central(h), central(0.5 * h)
        grad[k] = (4.0 * fine - coarse) / 3.0
        if not np.isfinite(grad[k]):
            raise GradientDomainError("non-finite difference quotient")
    return grad


@dataclass(frozen=True)
class Hyperplane:
    """Supporting hyperplane <s_coef, s> + t_coef * t = level, anchored at time ``anchor``.

    The whole region lies on the side <= level, and level is positive.
    """

    s_coef: np.ndarray
    t_coef: float
    level: float
    anchor: float

    def __post_init__(self):
        object.__setattr__(self, "s_coef", np.atleast_1d(np.asarray(self.s_coef, dtype=float)))
        if not self.level > 0.0:
            raise RegionError("hyperplane level must be positive")
        if not self.anchor > 0.0:
            raise RegionError("hyperplane anchor time must be positive")

    @property
    def dim(self) -> int:
        return self.s_coef.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.s_coef))

    def mean_gap(self, mean) -> float:
        """<s_coef, mean> + t_coef, which equals level/anchor for a valid plane."""
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        return float(self.s_coef @ mean + self.t_coef)

    def value(self, t: float, s) -> float:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return float(self.s_coef @ s + self.t_coef * t)


def sample_member_points(region: Region, n_points: int, seed: int, t_max: float,
                         s_span, max_attempts_factor: int = 200):
    """Rejection-sample up to n_points members of the region inside a box."""
    rng = np.random.default_rng(seed)
    s_span = np.atleast_1d(np.asarray(s_span, dtype=float))
    found_t, found_s = [], []
    attempts = 0
    cap = max_attempts_factor * n_points
    while len(found_t) < n_points and attempts < cap:
        attempts += 1
        t = rng.uniform(0.0, t_max)
        s = rng.uniform(-s_span, s_span)
        if region.contains(t, s):
            found_t.append(t)
            found_s.append(s)
    return np.array(found_t), np.array(found_s).reshape(len(found_t), region.dim)


def supporting_hyperplane(region: Region, mean, step: Optional[float] = None,
                          tol: Optional[float] = None, grad=None,
                          check_points: int = 200, seed: int = 7) -> Hyperplane:
    """Supporting hyperplane of the region at the mean-ray crossing point.

    Coefficients come from the log-gradient of the ray function: the normal
    on the sum coordinate is minus that gradient, the time coefficient is
    chosen so the mean gap equals one, and the level equals the crossing
    time.  A sampled support check guards against bad gradients or a
    non-convex region.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    m = mean_ray_crossing(region, mean, tol=tol)
    numeric = log_exit_gradient(region, mean, step=step)
    if grad is not None:
        grad = np.atleast_1d(np.asarray(grad, dtype=float))
        if not np.allclose(grad, numeric, rtol=1e-4, atol=1e-4):
            raise GradientDomainError("supplied gradient disagrees with the numeric one")
        use = grad
    else:
        use = numeric
    a = -use
    b = 1.0 - float(a @ mean)
    hyp = Hyperplane(s_coef=a, t_coef=b, level=m, anchor=m)
    # support audit: every sampled member must satisfy value <= level
    span = 2.0 * m * (np.abs(mean) + 1.0)
    ts, ss = sample_member_points(region, check_points, seed, 2.0 * m, span)
    if ts.size:
        vals = ss @ hyp.s_coef + hyp.t_coef * ts
        slackness = 1e-6 * max(1.0, abs(m))
        if np.any(vals > m + slackness):
            raise NonConvexityError("support check failed: a member lies above the plane")
    return hyp


# ---------------------------------------------------------------------------
# Slice distances
# ---------------------------------------------------------------------------


def hyperplane_slice_distance(hyp: Hyperplane, n: float, mean) -> float:
    """Distance from the mean to the slice of the plane's halfspace at size n.

    Closed form (1 - anchor/n) * |mean gap| / norm, valid for n > anchor.
    """
    if not n > hyp.anchor:
        raise ValueError("slice size must exceed the anchor time")
    return (1.0 - hyp.anchor / n) * abs(hyp.mean_gap(mean)) / hyp.norm


def _slice_member(region: Region, n: float):
    def member(z: np.ndarray) -> bool:
        return region.contains(n, n * z)

    return member


def _directional_hit(member, mu, u, scale, cap_doublings=60):
    """Smallest r with member(mu + r u) found by doubling, else None."""
    r = 1e-9 * scale
    prev = 0.0
    for _ in range(cap_doublings):
        if member(mu + r * u):
            return prev, r
        prev = r
        r *= 2.0
    return None


def _slice_distance_1d(region: Region, n: float, mu: np.ndarray, tol: float):
    member = _slice_member(region, n)
    if member(mu):
        return "inside", 0.0
    scale = max(1.0, abs(mu[0]))
    best = None
    side = None
    for sgn, name in ((1.0, "above"), (-1.0, "below")):
        hit = _directional_hit(member, mu, np.array([sgn]), scale)
        if hit is None:
            continue
        lo, hi = hit  # lo: outside offset, hi: member offset
        if region.slack is not None:
            phi = lambda r: region.slack(n, n * (mu + sgn * np.array([r])))
            flo, fhi = phi(lo), phi(hi)
            if fhi == 0.0:
                dist = hi
            elif flo < 0.0 < fhi:
                dist = float(brentq(phi, lo, hi, xtol=1e-15, rtol=8.9e-16))
            else:
                dist = _bisect_entry(lambda r: member(mu + sgn * np.array([r])), lo, hi, tol)
        else:
            dist = _bisect_entry(lambda r: member(mu + sgn * np.array([r])), lo, hi, tol)
        if best is None or dist < best:
            best, side = dist, name
    if best is None:
        raise EmptySliceError(f"no member of the slice at n={n} found near the mean")
    return side, best


def _radial_boundary(member, region, n, mu, u, tol):
    """Distance along direction u from mu to the nearest member, or inf."""
    scale = max(1.0, float(np.linalg.norm(mu)))
    hit = _directional_hit(member, mu, u, scale)
    if hit is None:
        return math.inf
    lo, hi = hit
    if region.slack is not None:
        phi = lambda r: region.slack(n, n * (mu + r * u))
        flo, fhi = phi(lo), phi(hi)
        if fhi == 0.0:
            return hi
        if flo < 0.0 < fhi:
            return float(brentq(phi, lo, hi, xtol=1e-15, rtol=8.9e-16))
    return _bisect_entry(lambda r: member(mu + r * u), lo, hi, tol)


def _slice_distance_2d(region: Region, n: float, mu: np.ndarray, tol: float) -> float:
    member = _slice_member(region, n)
    angles = np.linspace(0.0, 2.0 * math.pi, 721)[:-1]
    dists = np.array([
        _radial_boundary(member, region, n, mu,
                         np.array([math.cos(a), math.sin(a)]), tol)
        for a in angles
    ])
    if not np.any(np.isfinite(dists)):
        raise EmptySliceError(f"no member of the slice at n={n} found near the mean")
    best = int(np.argmin(dists))
    span = angles[1] - angles[0]
    lo, hi = angles[best] - span, angles[best] + span

    def objective(a):
        return _radial_boundary(member, region, n, mu,
                                np.array([math.cos(a), math.sin(a)]), tol)

    # golden-section refinement of the radial distance over the bracketing arc
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = objective(c), objective(d)
    for _ in range(80):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = objective(d)
    return min(fc, fd, dists[best])


def _slice_distance_nd(region: Region, n: float, mu: np.ndarray, tol: float,
                       iterations: int = 10_000, restarts: int = 4, seed: int = 11) -> float:
    member = _slice_member(region, n)
    d = mu.shape[0]
    rng = np.random.default_rng(seed)
    dirs = [np.eye(d)[k] * s for k in range(d) for s in (1.0, -1.0)]
    dirs += [u / np.linalg.norm(u) for u in rng.normal(size=(4 * d, d))]
    candidates = []
    for u in dirs:
        r = _radial_boundary(member, region, n, mu, u, tol)
        if math.isfinite(r):
            candidates.append(mu + r * u)
    if not candidates:
        raise EmptySliceError(f"no member of the slice at n={n} found near the mean")
    best = min(candidates, key=lambda z: np.linalg.norm(z - mu))
    best_d = float(np.linalg.norm(best - mu))
    # derivative-free descent over the convex slice: random steps, shrinking radius
    for _ in range(restarts):
        z, dist, h = best.copy(), best_d, 0.5 * best_d
        for it in range(iterations // restarts):
            u = rng.normal(size=d)
            u /= np.linalg.norm(u)
            cand = z + h * u
            if member(cand):
                cd = float(np.linalg.norm(cand - mu))
                if cd < dist:
                    z, dist = cand, cd
                    continue
            if it % 40 == 39:
                h *= 0.8
                if h < tol:
                    break
        if dist < best_d:
            best_d, best = dist, z
    return best_d


def slice_distance(region: Region, n: float, mean, tol: float = 1e-9) -> float:
    """Euclidean distance from the mean to {z : (n, n z) in the closed region}.

    Exact bisection for d=1, an angular refinement for d=2, and a
    derivative-free projected search (approximate) for d >= 3.  Returns 0
    when the mean itself lies in the slice.
    """
    if not region.convex_closure:
        raise RegionError("slice distance requires the asserted convex closure")
    mu = np.atleast_1d(np.asarray(mean, dtype=float))
    if region.contains(n, n * mu):
        return 0.0
    if mu.shape[0] == 1:
        return _slice_distance_1d(region, n, mu, tol)[1]
    if mu.shape[0] == 2:
        return _slice_distance_2d(region, n, mu, tol)
    return _slice_distance_nd(region, n, mu, tol)


def convexity_audit(region: Region, t_max: float, s_span, n_pairs: int = 200,
                    seed: int = 19) -> bool:
    """Probabilistic audit of the asserted convexity inside a sampling box.

    Samples member pairs and checks membership of random mixtures.  Passing
    does not certify convexity; a failure refutes the asserted flag.
    """
    rng = np.random.default_rng(seed)
    ts, ss = sample_member_points(region, 2 * n_pairs, seed + 1, t_max, s_span)
    if ts.size < 2:
        return True
    for _ in range(n_pairs):
        i, j = rng.integers(0, ts.size, 2)
        rho = rng.uniform(0.0, 1.0)
        t_mix = rho * ts[i] + (1.0 - rho) * ts[j]
        s_mix = rho * ss[i] + (1.0 - rho) * ss[j]
        if not region.contains(t_mix, s_mix):
            return False
    return True


def slice_side(region: Region, n: float, mean, tol: float = 1e-9) -> str:
    """For scalar regions: whether the slice lies above or below the mean.

    Returns "inside" when the mean belongs to the slice.  Used to verify the
    one-sided conditions of the scalar concentration bounds.
    """
    mu = np.atleast_1d(np.asarray(mean, dtype=float))
    if mu.shape[0] != 1:
        raise RegionError("slice_side is defined for scalar regions only")
    if region.contains(n, n * mu):
        return "inside"
    return _slice_distance_1d(region, n, mu, tol)[0]
