"""Batch front-end: JSON experiment configs in, CSV/JSON certification reports out.

Three subcommands: ``bound`` computes the requested theorem bounds, ``certify``
also simulates and checks every applicable bound against the Monte Carlo
estimate (exit 0 only when all comparisons pass), and ``validate`` runs the
foundational-inequality validators.  Reports carry the config hash and seed
on every row so any result can be replayed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import moments as mm
from . import schedules as sch
from .geometry import region_from_family
from .harness import BrownianBundle, ScenarioBundle, bound_report, brownian_report, certify
from .simulate import (
    AllTruncatedError,
    box_rejection_sampler,
    run_brownian,
    run_discrete,
    validate_convex_mean,
    validate_identity,
    validate_perspective,
)

CSV_COLUMNS = ("scenario", "theorem", "direction", "value", "applicable",
               "mc_mean", "mc_stderr", "verdict", "config_hash", "seed")


class ConfigError(ValueError):
    """Malformed experiment configuration."""


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def spec_from_config(cfg: dict) -> mm.DistributionSpec:
    family = cfg.get("family")
    params = cfg.get("params", {})
    try:
        if family == "point-mass":
            return mm.point_mass(params["value"])
        if family == "bernoulli-affine":
            return mm.bernoulli_affine(params["x0"], params["x1"], params["p"])
        if family == "uniform-interval":
            return mm.uniform_interval(params["lo"], params["hi"])
        if family == "gaussian":
            return mm.gaussian(params["mean"], params["sd"])
        if family == "exponential":
            return mm.exponential(params["rate"])
        if family == "product-of-scalars":
            comps = [spec_from_config(c) for c in params["components"]]
            return mm.product(comps)
    except (KeyError, mm.ParameterError) as exc:
        raise ConfigError(f"bad distribution config: {exc}") from exc
    raise ConfigError(f"unknown distribution family {family!r}")


def region_from_config(cfg: dict):
    spec = dict(cfg)
    spec.setdefault("orientation", "le")
    spec.setdefault("kind", "continuity")
    try:
        return region_from_family(spec)
    except Exception as exc:
        raise ConfigError(f"bad region config: {exc}") from exc


def schedule_from_config(cfg: dict) -> sch.SampleSchedule:
    kind = cfg.get("kind")
    try:
        if kind == "all-naturals":
            return sch.naturals(cfg.get("n0", 0))
        if kind == "arithmetic":
            return sch.arithmetic(cfg["n0"], cfg["step"])
        if kind == "geometric":
            return sch.geometric(cfg["first"], cfg["ratio"], cfg.get("n0", 0))
        if kind == "explicit":
            return sch.explicit(cfg["values"], cfg["lam"], cfg["K"], cfg.get("n0", 0))
    except (KeyError, sch.ScheduleError) as exc:
        raise ConfigError(f"bad schedule config: {exc}") from exc
    raise ConfigError(f"unknown schedule kind {kind!r}")


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _fmt(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def write_report(rows, columns, path: str, fmt: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump([{c: row.get(c, "") for c in columns} for row in rows],
                      fh, indent=2, default=_fmt)
            fh.write("\n")
        return
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c, "")) for c in columns])


def _build_discrete_bundle(config: dict) -> ScenarioBundle:
    sim = config.get("simulate", {})
    spec = spec_from_config(config.get("distribution") or _missing("distribution"))
    region = region_from_config(config.get("region") or _missing("region"))
    schedule = schedule_from_config(config.get("schedule") or _missing("schedule"))
    if region.dim != spec.dim:
        raise ConfigError("region and distribution dimensions disagree")
    return ScenarioBundle(
        name=config.get("name", "scenario"),
        spec=spec, region=region, schedule=schedule,
        n_runs=int(sim.get("n_runs", 100_000)),
        horizon=int(sim.get("horizon", 1_000_000)),
        boundary=sim.get("boundary", "closed"),
        declarations=config.get("declarations", {}),
    )


def _missing(key: str):
    raise ConfigError(f"config key {key!r} is required")


def _bound_rows(config: dict, seed: int):
    tags = config.get("bounds", [])
    chash = config_hash(config)
    name = config.get("name", "scenario")
    rows = []
    reports = []
    if "brownian" in config:
        br = config["brownian"]
        sim = config.get("simulate", {})
        bundle = BrownianBundle(name, region_from_config(config["region"]),
                                drift=br["drift"], diffusion=br.get("diffusion", 0.0),
                                dt=float(sim.get("dt", 0.01)),
                                n_runs=int(sim.get("n_runs", 50_000)),
                                horizon=float(sim.get("horizon", 10_000.0)),
                                declarations=config.get("declarations", {}))
        reports = [brownian_report(tag, bundle) for tag in tags]
    else:
        bundle = _build_discrete_bundle(config)
        reports = [bound_report(tag, bundle) for tag in tags]
    for rep in reports:
        rows.append({"scenario": name, "theorem": rep.theorem,
                     "direction": rep.direction, "value": rep.value,
                     "applicable": rep.applicable, "mc_mean": "", "mc_stderr": "",
                     "verdict": "", "config_hash": chash, "seed": seed})
    return bundle, reports, rows


def cmd_bound(config: dict, seed: int, out: str, fmt: str) -> int:
    _, _, rows = _bound_rows(config, seed)
    write_report(rows, CSV_COLUMNS, out, fmt)
    return 0


def _simulate_bundle(bundle, config: dict, seed: int, overshoot_level=None):
    sim = config.get("simulate", {})
    workers = int(sim.get("workers", 1))
    if isinstance(bundle, BrownianBundle):
        return run_brownian(bundle.region, bundle.drift, bundle.diffusion,
                            bundle.dt, bundle.n_runs, bundle.horizon, seed,
                            workers=workers)
    return run_discrete(bundle.region, bundle.spec, bundle.schedule,
                        bundle.n_runs, bundle.horizon, seed,
                        boundary=bundle.boundary, workers=workers,
                        overshoot_level=overshoot_level)


def cmd_certify(config: dict, seed: int, out: str, fmt: str) -> int:
    bundle, reports, _ = _bound_rows(config, seed)
    for manual in config.get("manual_bounds", []):
        from .bounds import BoundReport

        reports.append(BoundReport(manual.get("theorem", "manual"),
                                   manual["direction"], float(manual["value"])))
    level = None
    if not isinstance(bundle, BrownianBundle):
        level = bundle.threshold_level() if any(
            r.theorem.startswith("Lorden-") for r in reports) else None
    try:
        estimate = _simulate_bundle(bundle, config, seed, overshoot_level=level)
    except AllTruncatedError as exc:
        print(f"certify: {exc}", file=sys.stderr)
        return 3
    cert_rows = certify(reports, estimate)
    chash = config_hash(config)
    name = config.get("name", "scenario")
    rows = [{"scenario": name, "theorem": r.theorem, "direction": r.direction,
             "value": r.value, "applicable": r.applicable, "mc_mean": r.mc_mean,
             "mc_stderr": r.mc_stderr, "verdict": r.verdict,
             "config_hash": chash, "seed": seed} for r in cert_rows]
    write_report(rows, CSV_COLUMNS, out, fmt)
    failures = [r for r in cert_rows if r.verdict == "fail"]
    for r in failures:
        print(f"certify: FAIL {name}/{r.theorem} value={r.value:.6g} "
              f"mc={r.mc_mean:.6g}+-{r.mc_stderr:.3g}", file=sys.stderr)
    return 1 if failures else 0


_VALIDATOR_GFUNS = {
    "square": lambda z: float(np.sum(np.atleast_1d(z) ** 2)),
    "abs": lambda z: float(np.sum(np.abs(np.atleast_1d(z)))),
    "neg-square": lambda z: -float(np.sum(np.atleast_1d(z) ** 2)),
    "identity": lambda z: float(np.atleast_1d(z)[0]),
}

_CONVEX_MEAN_CASES = {
    "unit-square": {
        "halfspaces": [([1.0, 0.0], 1.0), ([-1.0, 0.0], 0.0),
                       ([0.0, 1.0], 1.0), ([0.0, -1.0], 0.0)],
        "box": ([0.0, 0.0], [1.0, 1.0]),
    },
    "triangle": {
        "halfspaces": [([-1.0, 0.0], 0.0), ([0.0, -1.0], 0.0), ([1.0, 1.0], 1.0)],
        "box": ([0.0, 0.0], [1.0, 1.0]),
    },
}


def _convex_mean_validator(item: dict, seed: int):
    case = item.get("case", "unit-square")
    samples = int(item.get("samples", 10_000))
    if case == "two-point":
        halfspaces = _CONVEX_MEAN_CASES["triangle"]["halfspaces"]
        verts = np.array([[1.0, 0.0], [0.0, 1.0]])

        def sampler(rng):
            return verts[rng.integers(0, 2)]

        return validate_convex_mean(halfspaces, sampler, samples, seed)
    if case == "random-polytope":
        rng = np.random.default_rng(item.get("case_seed", 42))
        normals = rng.normal(size=(5, 2))
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        halfspaces = [(normals[i].tolist(), 0.8) for i in range(5)]
        sampler = box_rejection_sampler(halfspaces, [-1.0, -1.0], [1.0, 1.0])
        return validate_convex_mean(halfspaces, sampler, samples, seed)
    data = _CONVEX_MEAN_CASES.get(case)
    if data is None:
        raise ConfigError(f"unknown convex-mean case {case!r}")
    sampler = box_rejection_sampler(data["halfspaces"], *data["box"])
    return validate_convex_mean(data["halfspaces"], sampler, samples, seed)


def _identity_scenario(item: dict):
    scenario = {}
    if "distribution" in item:
        scenario["spec"] = spec_from_config(item["distribution"])
    if "region" in item:
        scenario["region"] = region_from_config(item["region"])
    if "schedule" in item:
        scenario["schedule"] = schedule_from_config(item["schedule"])
    if "gfun" in item:
        scenario["gfun"] = _VALIDATOR_GFUNS[item["gfun"]]
    for key in ("p", "lam", "horizon", "boundary"):
        if key in item:
            scenario[key] = item[key]
    return scenario


def cmd_validate(config: dict, seed: int, out: str, fmt: str) -> int:
    chash = config_hash(config)
    name = config.get("name", "validation")
    rows = []
    for item in config.get("validators", []):
        which = item.get("which")
        if which is None:
            raise ConfigError("validator entries need the key 'which'")
        if which == "convex-mean":
            result = _convex_mean_validator(item, seed)
            margin = min(result.margins.values()) if result.margins else math.nan
        elif which == "perspective":
            gfun = _VALIDATOR_GFUNS[item.get("gfun", "square")]
            result = validate_perspective(gfun, int(item.get("trials", 10_000)),
                                          seed, dim=int(item.get("dim", 1)))
            margin = result.margins.get("worst_gap", math.nan)
        elif which in ("jensen-T3", "wald-T4-I", "wald-T4-II", "lp-norm",
                       "lorden-T6", "lorden-T7"):
            scenario = _identity_scenario(item)
            if which == "jensen-T3":
                scenario.setdefault("gfun", _VALIDATOR_GFUNS["square"])
                scenario["y_spec"] = (spec_from_config(item["y_distribution"])
                                      if "y_distribution" in item else mm.point_mass(1.0))
                scenario["z_spec"] = scenario.pop("spec")
            result = validate_identity(which, scenario,
                                       int(item.get("runs", 20_000)), seed)
            margin = result.margins.get("mean_gap", result.margins.get("mc_overshoot", math.nan))
        else:
            raise ConfigError(f"unknown validator tag {which!r}")
        rows.append({"scenario": name, "theorem": result.name, "direction": "check",
                     "value": margin, "applicable": True, "mc_mean": "",
                     "mc_stderr": "", "verdict": "pass" if result.passed else "fail",
                     "config_hash": chash, "seed": seed})
    write_report(rows, CSV_COLUMNS, out, fmt)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="stopbounds",
        description="Bounds on expected stopping times, certified by Monte Carlo")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("bound", "compute theorem bounds from a config"),
                            ("certify", "compute bounds and certify them against simulation"),
                            ("validate", "run the foundational-inequality validators")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to the experiment JSON config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--runs", type=int, default=None, help="override simulate.n_runs")
        p.add_argument("--out", default=None, help="report path (default: <config>.report.<fmt>)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        if args.runs is not None:
            config.setdefault("simulate", {})["n_runs"] = args.runs
        seed = args.seed if args.seed is not None else int(config.get("seed", 0))
        out = args.out or str(Path(args.config).with_suffix(f".report.{args.format}"))
        if args.command == "bound":
            return cmd_bound(config, seed, out, args.format)
        if args.command == "certify":
            return cmd_certify(config, seed, out, args.format)
        return cmd_validate(config, seed, out, args.format)
    except ConfigError as exc:
        print(f"stopbounds: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
