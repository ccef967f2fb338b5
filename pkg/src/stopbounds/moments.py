"""Increment distributions with exact analytic moments and reproducible sampling.

Every bound calculator in this package consumes moments of the i.i.d.
increment vector X: the mean, the one-sided deviations E[(X-mean)^+] and
E[(X-mean)^-], the variance E[|X-mean|^2], and the third absolute moment.
These are computed in closed form, never estimated, so that "bound holds"
assertions are not polluted by estimation noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF

SCALAR_FAMILIES = (
    "point-mass",
    "bernoulli-affine",
    "uniform-interval",
    "gaussian",
    "exponential",
)
FAMILIES = SCALAR_FAMILIES + ("product-of-scalars",)


class ParameterError(ValueError):
    """Distribution parameters outside their valid domain."""


@dataclass(frozen=True)
class DistributionSpec:
    """Declarative description of one increment distribution.

    ``params`` is family specific; for ``product-of-scalars`` it holds the
    key ``components`` with a tuple of scalar specs, one per coordinate.
    """

    family: str
    params: dict = field(default_factory=dict)
    dim: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}")
        if self.family == "product-of-scalars":
            comps = tuple(self.params["components"])
            if not comps:
                raise ParameterError("product-of-scalars needs >= 1 component")
            for c in comps:
                if c.family == "product-of-scalars":
                    raise ParameterError("components must be scalar specs")
                if c.dim != 1:
                    raise ParameterError("components must have dim 1")
            if self.dim != len(comps):
                raise ParameterError("dim must equal the number of components")
        elif self.dim != 1:
            raise ParameterError("scalar families have dim 1")

    @property
    def components(self) -> tuple["DistributionSpec", ...]:
        if self.family == "product-of-scalars":
            return tuple(self.params["components"])
        return (self,)


def point_mass(value: float) -> DistributionSpec:
    return DistributionSpec("point-mass", {"value": float(value)})


def bernoulli_affine(x0: float, x1: float, p: float) -> DistributionSpec:
    """Two-point distribution taking ``x1`` with probability ``p``, else ``x0``."""
    if not (0.0 <= p <= 1.0):
        raise ParameterError("p must lie in [0, 1]")
    if not x0 < x1:
        raise ParameterError("need x0 < x1")
    return DistributionSpec("bernoulli-affine", {"x0": float(x0), "x1": float(x1), "p": float(p)})


def uniform_interval(lo: float, hi: float) -> DistributionSpec:
    if not lo < hi:
        raise ParameterError("need lo < hi")
    return DistributionSpec("uniform-interval", {"lo": float(lo), "hi": float(hi)})


def gaussian(mean: float, sd: float) -> DistributionSpec:
    if sd <= 0:
        raise ParameterError("sd must be positive (use point-mass for sd=0)")
    return DistributionSpec("gaussian", {"mean": float(mean), "sd": float(sd)})


def exponential(rate: float) -> DistributionSpec:
    if rate <= 0:
        raise ParameterError("rate must be positive")
    return DistributionSpec("exponential", {"rate": float(rate)})


def product(components) -> DistributionSpec:
    comps = tuple(components)
    return DistributionSpec("product-of-scalars", {"components": comps}, dim=len(comps))


@dataclass(frozen=True)
class MomentProfile:
    """Exact moments of an increment vector, one entry per coordinate.

    ``pos_dev`` and ``neg_dev`` are E[(X-mean)^+] and E[(X-mean)^-]; they are
    equal for every distribution since the centered increment has zero mean.
    ``bound_v`` is the moment envelope (mean-a)(b-mean)/(b-a), defined only
    when the support box [a, b] exists; it dominates both one-sided
    deviations.
    """

    mean: np.ndarray
    pos_dev: np.ndarray
    neg_dev: np.ndarray
    variance: np.ndarray
    abs_third: np.ndarray
    support_lo: Optional[np.ndarray] = None
    support_hi: Optional[np.ndarray] = None
    bound_v: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def bounded(self) -> bool:
        return self.support_lo is not None and self.support_hi is not None

    @property
    def abs_third_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.abs_third)))


def _scalar_moments(spec: DistributionSpec):
    """Return (mean, pos_dev, variance, abs_third, lo, hi) for a scalar family."""
    p = spec.params
    if spec.family == "point-mass":
        c = p["value"]
        return c, 0.0, 0.0, 0.0, c, c
    if spec.family == "bernoulli-affine":
        w = p["x1"] - p["x0"]
        q = p["p"]
        mean = p["x0"] + q * w
        pos = q * (1.0 - q) * w
        var = q * (1.0 - q) * w * w
        a3 = q * (1.0 - q) * w**3 * ((1.0 - q) ** 2 + q**2)
        return mean, pos, var, a3, p["x0"], p["x1"]
    if spec.family == "uniform-interval":
        w = p["hi"] - p["lo"]
        mean = 0.5 * (p["lo"] + p["hi"])
        # E[(X-mean)^+] = w/8, E[|X-mean|^3] = w^3/32
        return mean, w / 8.0, w * w / 12.0, w**3 / 32.0, p["lo"], p["hi"]
    if spec.family == "gaussian":
        sd = p["sd"]
        pos = sd / math.sqrt(2.0 * math.pi)
        a3 = 2.0 * math.sqrt(2.0) / math.sqrt(math.pi) * sd**3
        return p["mean"], pos, sd * sd, a3, None, None
    if spec.family == "exponential":
        r = p["rate"]
        # E[(X-1/r)^+] = e^-1 / r, E[|X-1/r|^3] = (12/e - 2) / r^3
        return 1.0 / r, math.exp(-1.0) / r, 1.0 / r**2, (12.0 * math.exp(-1.0) - 2.0) / r**3, None, None
    raise ParameterError(f"unsupported scalar family {spec.family!r}")


def analytic_moments(spec: DistributionSpec) -> MomentProfile:
    """Closed-form moment profile for a distribution spec."""
    rows = [_scalar_moments(c) for c in spec.components]
    mean = np.array([r[0] for r in rows], dtype=float)
    pos = np.array([r[1] for r in rows], dtype=float)
    var = np.array([r[2] for r in rows], dtype=float)
    a3 = np.array([r[3] for r in rows], dtype=float)
    los = [r[4] for r in rows]
    his = [r[5] for r in rows]
    if all(v is not None for v in los):
        lo = np.array(los, dtype=float)
        hi = np.array(his, dtype=float)
        width = hi - lo
        v = np.where(width > 0, (mean - lo) * (hi - mean) / np.where(width > 0, width, 1.0), 0.0)
        return MomentProfile(mean, pos, pos.copy(), var, a3, lo, hi, v)
    return MomentProfile(mean, pos, pos.copy(), var, a3)


def stream_for_run(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one simulation run.

    Distinct (seed, index) pairs map to distinct Philox keys, so draws are
    independent across runs and identical regardless of scheduling or worker
    count.
    """
    key = np.array([seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class StreamPool:
    """Reusable generator that is rekeyed per run index.

    Rekeying an existing Philox state is an order of magnitude cheaper than
    constructing a fresh bit generator, and the draws are bit-identical to
    ``stream_for_run(seed, index)``.  Not thread-safe: use one pool per
    worker.
    """

    def __init__(self, seed: int):
        self._key = np.array([seed & _MASK64, 0], dtype=np.uint64)
        self._zeros = np.zeros(4, dtype=np.uint64)
        self._bg = np.random.Philox(key=self._key)
        self._gen = np.random.Generator(self._bg)
        self._state = self._bg.state

    def stream(self, index: int) -> np.random.Generator:
        self._key[1] = index & _MASK64
        inner = self._state["state"]
        inner["key"] = self._key
        inner["counter"] = self._zeros
        self._state["buffer_pos"] = 4
        self._state["buffer"] = self._zeros
        self._state["has_uint32"] = 0
        self._state["uinteger"] = 0
        self._bg.state = self._state
        return self._gen


def _scalar_block(spec: DistributionSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    p = spec.params
    if spec.family == "point-mass":
        return np.full(n, p["value"])
    if spec.family == "bernoulli-affine":
        return p["x0"] + (p["x1"] - p["x0"]) * (rng.random(n) < p["p"])
    if spec.family == "uniform-interval":
        return rng.uniform(p["lo"], p["hi"], n)
    if spec.family == "gaussian":
        return rng.normal(p["mean"], p["sd"], n)
    if spec.family == "exponential":
        return rng.exponential(1.0 / p["rate"], n)
    raise ParameterError(f"unsupported scalar family {spec.family!r}")


def sample_block(spec: DistributionSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` i.i.d. increments, shape (n, dim). Component draw order is fixed."""
    if spec.family != "product-of-scalars":
        return _scalar_block(spec, rng, n).reshape(n, 1)
    cols = [_scalar_block(c, rng, n) for c in spec.components]
    return np.column_stack(cols)


def sample(spec: DistributionSpec, rng: np.random.Generator) -> np.ndarray:
    """One i.i.d. draw as a length-``dim`` vector."""
    return sample_block(spec, rng, 1)[0]
