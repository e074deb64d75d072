"""
Scenario files: declare a domain, a source, a grid and a list of checks, run
the solver and the checks, and write the results to disk.

A scenario is a JSON object:

    {
      "name": "torch-1d",
      "domain": {"shape": "interval", "a": 0, "b": 1},
      "source": {"kind": "constant", "c": 1},
      "solver": "parabolic",
      "grid": {"h": 0.0078125, "dt": 1e-4, "T": 3.0, "save_every": 10},
      "checks": [{"kind": "parabolic", "name": "half", "params": {"alpha": 0.5, "p": 0.5}}],
      "seed": 0,
      "output_dir": "runs"
    }

Checks flagged "sharpness" are expected to fail; every other check is
expected to pass.
"""
import asyncio
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace
from functools import partial
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import scipy

from paraconcave.concavity import (
    ConcavityQuery,
    StructureRegion,
    check_parabolic_concavity,
    check_spatial_concavity,
    check_structure_condition,
    estimate_max_exponent,
    full_envelope,
    lambda_envelope,
)
from paraconcave.concavity.checks import CERTIFICATION_SAMPLES, DEFAULT_C_TOL, DEFAULT_SAMPLES
from paraconcave.domain import ConvexDomain
from paraconcave.energy import check_time_reparametrized, heat_energy
from paraconcave.errors import ParaconcaveError, ScenarioConfigError
from paraconcave.exponents import semilinear_exponents, sharpness_threshold
from paraconcave.fields import SpaceTimeField
from paraconcave.means import WeightVector, format_exponent, parse_exponent
from paraconcave.solver import (
    boundary_scaling_exponent,
    solve_parabolic,
    solve_semilinear_maximal,
    solve_steady,
    time_monotonicity_check,
)
from paraconcave.sources import SourceSpec

logger = logging.getLogger(__name__)

SOLVER_KINDS = ("parabolic", "semilinear_maximal", "steady")
CHECK_KINDS = (
    "spatial",
    "parabolic",
    "envelope",
    "energy",
    "structure",
    "boundary-exponent",
    "time-monotonicity",
    "max-exponent",
)
FIELD_FREE_CHECKS = ("structure",)
DEFAULT_EPS_SEQUENCE = (1e-2, 1e-3, 1e-4)
SHARPNESS_SLACK = 1e-12

SUMMARY_FILE = "summary.json"
REPORTS_FILE = "reports.jsonl"
CURVES_DIR = "curves"


@dataclass
class GridConfig:
    h: float
    dt: float = 1e-3
    T: float = 1.0
    save_every: int = 1

    def __post_init__(self):
        for name in ("h", "dt", "T"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ScenarioConfigError(f"grid.{name} must be a positive number, got {value!r}",
                                          key=("grid", name))
            setattr(self, name, float(value))
        if not (isinstance(self.save_every, int) and self.save_every >= 1):
            raise ScenarioConfigError(f"grid.save_every must be a positive integer, got {self.save_every!r}",
                                      key=("grid", "save_every"))


@dataclass
class CheckConfig:
    kind: str
    name: str = ""
    sharpness: bool = False
    params: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "name": self.name, "sharpness": self.sharpness, "params": dict(self.params)}


@dataclass
class ScenarioConfig:
    name: str
    domain: ConvexDomain
    source: SourceSpec
    grid: GridConfig
    solver: str = "parabolic"
    checks: List[CheckConfig] = field(default_factory=list)
    eps_sequence: Optional[List[float]] = None
    seed: int = 0
    output_dir: str = "runs"

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ScenarioConfigError("scenario must be a JSON object")
        unknown = sorted(set(data) - {f for f in cls.__dataclass_fields__})
        if unknown:
            raise ScenarioConfigError(f"unknown key {unknown[0]!r}", key=(unknown[0],))
        for key in ("name", "domain", "source", "grid"):
            if key not in data:
                raise ScenarioConfigError(f"missing required key {key!r}")

        name = data["name"]
        if not isinstance(name, str) or not name or "/" in name:
            raise ScenarioConfigError(f"name must be a non-empty string without '/', got {name!r}", key=("name",))
        with _located("domain"):
            domain = ConvexDomain.from_dict(data["domain"])
        with _located("source"):
            source = SourceSpec.from_dict(data["source"])
        with _located("grid"):
            grid = GridConfig(**data["grid"])

        solver = data.get("solver", "parabolic")
        if solver not in SOLVER_KINDS:
            raise ScenarioConfigError(f"solver must be one of {', '.join(SOLVER_KINDS)}, got {solver!r}",
                                      key=("solver",))
        if solver == "semilinear_maximal" and source.kind != "semilinear_power":
            raise ScenarioConfigError("semilinear_maximal needs a semilinear_power source", key=("source",))

        eps_sequence = data.get("eps_sequence")
        if eps_sequence is not None:
            if not (isinstance(eps_sequence, list) and all(isinstance(e, (int, float)) for e in eps_sequence)):
                raise ScenarioConfigError("eps_sequence must be a list of numbers", key=("eps_sequence",))
            eps_sequence = [float(e) for e in eps_sequence]

        seed = data.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ScenarioConfigError(f"seed must be a nonnegative integer, got {seed!r}", key=("seed",))
        output_dir = data.get("output_dir", "runs")
        if not isinstance(output_dir, str):
            raise ScenarioConfigError("output_dir must be a string", key=("output_dir",))

        raw_checks = data.get("checks", [])
        if not isinstance(raw_checks, list):
            raise ScenarioConfigError("checks must be a list", key=("checks",))
        checks = [_parse_check(raw, i) for i, raw in enumerate(raw_checks)]
        names = [c.name for c in checks]
        for i, check in enumerate(checks):
            if names.count(check.name) > 1:
                raise ScenarioConfigError(f"duplicate check name {check.name!r}", key=("checks", i, "name"))

        config = cls(name, domain, source, grid, solver, checks, eps_sequence, seed, output_dir)
        for i, check in enumerate(config.checks):
            _validate_hypotheses(config, check, i)
        return config

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "name": self.name,
            "domain": self.domain.to_dict(),
            "source": self.source.to_dict(),
            "solver": self.solver,
            "grid": asdict(self.grid),
            "checks": [c.to_dict() for c in self.checks],
            "seed": self.seed,
            "output_dir": self.output_dir,
        }
        if self.eps_sequence is not None:
            data["eps_sequence"] = list(self.eps_sequence)
        return data


@contextmanager
def _located(*key):
    """Re-raise library validation errors as ScenarioConfigError keyed to a section."""
    try:
        yield
    except ScenarioConfigError:
        raise
    except (ParaconcaveError, TypeError, ValueError) as e:
        raise ScenarioConfigError(f"{key[0]}: {e}", key=key) from None


def _number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _positive(value: Any) -> bool:
    return _number(value) and value > 0


def _nonnegative(value: Any) -> bool:
    return _number(value) and value >= 0


def _count(minimum: int) -> Callable[[Any], bool]:
    return lambda value: isinstance(value, int) and not isinstance(value, bool) and value >= minimum


def _point(value: Any) -> bool:
    return isinstance(value, list) and len(value) > 0 and all(_number(v) for v in value)


def _rho_range(value: Any) -> bool:
    return isinstance(value, list) and len(value) == 2 and all(_positive(v) for v in value) and value[0] < value[1]


ENVELOPE_METHODS = ("hull", "lambda")

# parameter -> (predicate, description)
PARAM_RULES: Dict[str, Tuple[Callable[[Any], bool], str]] = {
    "alpha": (_positive, "a positive number"),
    "t": (_nonnegative, "a nonnegative number"),
    "t_min": (_positive, "a positive number"),
    "tol": (_positive, "a positive number"),
    "tolerance": (_positive, "a positive number"),
    "rel_tol": (_positive, "a positive number"),
    "tol_p": (_positive, "a positive number"),
    "m": (_positive, "a positive number"),
    "p_lo": (_positive, "a positive number"),
    "p_hi": (_positive, "a positive number"),
    "expected": (_number, "a number"),
    "min_value": (_number, "a number"),
    "within": (_nonnegative, "a nonnegative number"),
    "n_samples": (_count(1), "a positive integer"),
    "n_levels": (_count(2), "an integer >= 2"),
    "workers": (_count(1), "a positive integer"),
    "seed": (_count(0), "a nonnegative integer"),
    "method": (lambda value: value in ENVELOPE_METHODS, "'hull' or 'lambda'"),
    "x_star": (_point, "a list of coordinates"),
    "y_star": (_point, "a list of coordinates"),
    "rho_range": (_rho_range, "two increasing positive numbers"),
}
KIND_RULES: Dict[Tuple[str, str], Tuple[Callable[[Any], bool], str]] = {
    ("time-monotonicity", "tolerance"): (_nonnegative, "a nonnegative number"),
}
CHECK_PARAMS: Dict[str, Tuple[str, ...]] = {
    "spatial": ("p", "t", "n_samples", "tol", "seed"),
    "parabolic": ("alpha", "p", "n_samples", "tolerance", "t_min", "seed", "workers"),
    "envelope": ("alpha", "p", "method", "lam", "n_levels", "rel_tol", "seed"),
    "energy": ("q", "m", "alpha", "tol", "t_min", "n_samples", "seed"),
    "structure": ("alpha", "p", "region", "n_samples", "tol", "seed"),
    "boundary-exponent": ("x_star", "y_star", "alpha", "rho_range", "n_samples", "expected", "within", "min_value"),
    "time-monotonicity": ("tolerance",),
    "max-exponent": ("alpha", "p_lo", "p_hi", "tol_p", "t_min", "n_samples", "seed", "expected", "within",
                     "min_value"),
}
REQUIRED_PARAMS: Dict[str, Tuple[str, ...]] = {
    "spatial": ("p",),
    "parabolic": ("p",),
    "envelope": ("p",),
    "energy": ("q",),
    "structure": ("p",),
    "boundary-exponent": ("x_star",),
    "max-exponent": ("p_lo", "p_hi"),
}
FITTED_CHECKS = ("boundary-exponent", "max-exponent")


def _check_params(kind: str, params: Dict[str, Any], index: int) -> None:
    """Validate check parameters before anything is solved."""
    where = ("checks", index, "params")
    unknown = sorted(set(params) - set(CHECK_PARAMS[kind]))
    if unknown:
        raise ScenarioConfigError(f"unknown {kind} parameter {unknown[0]!r}", key=where + (unknown[0],))
    for key in REQUIRED_PARAMS.get(kind, ()):
        if key not in params:
            raise ScenarioConfigError(f"{kind} check needs parameter {key!r}", key=where)
    for key, value in params.items():
        if key in ("p", "q"):
            with _located(*where, key):
                parse_exponent(value)
            continue
        if key == "lam":
            with _located(*where, key):
                if not isinstance(value, list):
                    raise TypeError(f"lam must be a list of weights, got {value!r}")
                WeightVector(tuple(value))
            continue
        if key == "region":
            with _located(*where, key):
                if not isinstance(value, dict):
                    raise TypeError(f"region must be an object, got {value!r}")
                StructureRegion(**value)
            continue
        predicate, description = KIND_RULES.get((kind, key), PARAM_RULES[key])
        if not predicate(value):
            raise ScenarioConfigError(f"{key} must be {description}, got {value!r}", key=where + (key,))
    if kind == "max-exponent" and not params["p_lo"] < params["p_hi"]:
        raise ScenarioConfigError("p_lo must be below p_hi", key=where + ("p_hi",))
    if kind in FITTED_CHECKS and "expected" not in params and "min_value" not in params:
        raise ScenarioConfigError(f"{kind} check needs 'expected' or 'min_value'", key=where)


def _parse_check(raw: Any, index: int) -> CheckConfig:
    if not isinstance(raw, dict):
        raise ScenarioConfigError(f"check {index} must be an object", key=("checks", index))
    kind = raw.get("kind")
    if kind not in CHECK_KINDS:
        raise ScenarioConfigError(f"check kind must be one of {', '.join(CHECK_KINDS)}, got {kind!r}",
                                  key=("checks", index, "kind"))
    unknown = sorted(set(raw) - {"kind", "name", "sharpness", "params"})
    if unknown:
        raise ScenarioConfigError(f"unknown check key {unknown[0]!r}", key=("checks", index, unknown[0]))
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ScenarioConfigError("params must be an object", key=("checks", index, "params"))
    _check_params(kind, params, index)
    sharpness = raw.get("sharpness", False)
    if not isinstance(sharpness, bool):
        raise ScenarioConfigError("sharpness must be true or false", key=("checks", index, "sharpness"))
    return CheckConfig(kind=kind, name=raw.get("name") or f"{kind}-{index}", sharpness=sharpness,
                       params=dict(params))


def declared_threshold(config: ScenarioConfig) -> Optional[float]:
    """Largest p with a parabolic concavity guarantee for the declared source, or None."""
    src = config.source
    if src.kind == "semilinear_power":
        return semilinear_exponents(src.gamma, config.domain.dimension)[0]
    q = src.spatial_concavity
    if q is None or q < 1.0 or src.is_semilinear:
        return None
    return sharpness_threshold(q, src.gamma)


def _validate_hypotheses(config: ScenarioConfig, check: CheckConfig, index: int) -> None:
    if check.kind != "parabolic":
        return
    if "p" not in check.params:
        raise ScenarioConfigError("parabolic check needs p", key=("checks", index, "params"))
    n_samples = check.params.get("n_samples", DEFAULT_SAMPLES)
    if not isinstance(n_samples, int) or n_samples < CERTIFICATION_SAMPLES:
        raise ScenarioConfigError(f"parabolic checks need n_samples >= {CERTIFICATION_SAMPLES}, got {n_samples!r}",
                                  key=("checks", index, "params", "n_samples"))
    if check.params.get("alpha", 0.5) != 0.5:
        return
    threshold = declared_threshold(config)
    p = parse_exponent(check.params["p"])
    if threshold is not None and p > threshold + SHARPNESS_SLACK and not check.sharpness:
        raise ScenarioConfigError(
            f"p={format_exponent(p)} exceeds the threshold {threshold:.6g} for this source; "
            f"flag the check with \"sharpness\": true", key=("checks", index, "params", "p"))


def _locate(text: str, key: Optional[Tuple]) -> Tuple[Optional[int], Optional[int]]:
    """Line and column of a key path in the source text, best effort."""
    if not key:
        return None, None
    pos, found = 0, None
    skip = 0
    for part in key:
        if isinstance(part, int):
            skip = part
            continue
        needle = f'"{part}"'
        at = text.find(needle, pos)
        for _ in range(skip):
            if at < 0:
                break
            at = text.find(needle, at + 1)
        skip = 0
        if at < 0:
            break
        found, pos = at, at + len(needle)
    if found is None:
        return None, None
    line = text.count("\n", 0, found) + 1
    column = found - (text.rfind("\n", 0, found) + 1) + 1
    return line, column


def loads(text: str, path: Optional[str] = None) -> ScenarioConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioConfigError(e.msg, path, e.lineno, e.colno) from None
    try:
        return ScenarioConfig.from_dict(data)
    except ScenarioConfigError as e:
        line, column = _locate(text, e.key)
        raise ScenarioConfigError(e.reason, path, line, column, key=e.key) from None


def load(path: Union[str, Path]) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioConfigError(f"cannot read scenario: {e.strerror}", str(path)) from None
    return loads(text, str(path))


def dumps(config: ScenarioConfig) -> str:
    return json.dumps(config.to_dict(), indent=2) + "\n"


@dataclass
class CheckResult:
    name: str
    kind: str
    sharpness: bool
    passed: bool
    report: Dict[str, Any] = field(default_factory=dict)
    curve: Optional[str] = None

    @property
    def as_predicted(self) -> bool:
        """Sharpness checks are predicted to fail, all others to pass."""
        return self.passed != self.sharpness

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["as_predicted"] = self.as_predicted
        return data


@dataclass
class RunRecord:
    config: Dict[str, Any]
    results: List[CheckResult] = field(default_factory=list)
    solver: Dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0
    versions: Dict[str, str] = field(default_factory=dict)
    output_dir: Optional[str] = None

    @property
    def passed(self) -> bool:
        return all(r.as_predicted for r in self.results)

    @property
    def deviations(self) -> List[str]:
        return [r.name for r in self.results if not r.as_predicted]

    def to_dict(self, include_timing: bool = True) -> Dict[str, Any]:
        data = {
            "config": self.config,
            "passed": self.passed,
            "deviations": self.deviations,
            "solver": self.solver,
            "results": [r.to_dict() for r in self.results],
            "versions": self.versions,
        }
        if include_timing:
            data["wall_time"] = self.wall_time
        return data


@dataclass
class _RunContext:
    config: ScenarioConfig
    u: Optional[SpaceTimeField]
    c_tol: float
    curves_dir: Optional[Path]


def _param(check: CheckConfig, key: str, default: Any = None, exponent: bool = False) -> Any:
    value = check.params.get(key, default)
    if value is None:
        raise ScenarioConfigError(f"check {check.name!r} needs parameter {key!r}")
    return parse_exponent(value) if exponent else value


def _seed(ctx: _RunContext, check: CheckConfig) -> int:
    return int(check.params.get("seed", ctx.config.seed))


def _run_spatial(ctx: _RunContext, check: CheckConfig) -> CheckResult:
    u = ctx.u
    report = check_spatial_concavity(
        u, float(check.params.get("t", u.T)), _param(check, "p", exponent=True),
        n_samples=int(check.params.get("n_samples", DEFAULT_SAMPLES)), tol=check.params.get("tol"),
        seed=_seed(ctx, check), c_tol=ctx.c_tol)
    return CheckResult(check.name, check.kind, check.sharpness, report.passed, report.to_dict())


def _run_parabolic(ctx: _RunContext, check: CheckConfig) -> CheckResult:
    u = ctx.u
    query = ConcavityQuery(
        alpha=float(check.params.get("alpha", 0.5)),
        p=_param(check, "p", exponent=True),
        n_samples=int(check.params.get("n_samples", DEFAULT_SAMPLES)),
        tolerance=check.params.get("tolerance"),
        seed=_seed(ctx, check),
        c_tol=ctx.c_tol,
        workers=int(check.params.get("workers", 1)),
    )
    report = check_parabolic_concavity(u, query, float(check.params.get("t_min", 20.0 * u.dt)))
    return CheckResult(check.name, check.kind, check.sharpness, report.passed, report.to_dict())


def _run_envelope(ctx: _RunContext, check: CheckConfig) -> CheckResult:
    alpha = float(check.params.get("alpha", 0.5))
    p = _param(check, "p", exponent=True)
    method = check.params.get("method", "hull")
    if method == "hull":
        result = full_envelope(ctx.u, alpha, p, **_subset(check.params, "n_levels"))
    else:
        lam = check.params.get("lam")
        weights = WeightVector(tuple(lam)) if lam else WeightVector.uniform(ctx.u.grid.dimension + 1)
        result = lambda_envelope(ctx.u, alpha, p, weights, seed=_seed(ctx, check), **_subset(check.params, "n_levels"))
    rel_tol = float(check.params.get("rel_tol", 0.02))
    report = {**result.to_dict(), "rel_tol": rel_tol}
    return CheckResult(check.name, check.kind, check.sharpness, result.passes(rel_tol), report)


def _run_energy(ctx: _RunContext, check: CheckConfig) -> CheckResult:
    curve = heat_energy(ctx.u, float(check.params.get("m", 1.0)))
    report = check_time_reparametrized(
        curve, float(check.params.get("alpha", 1.0)), _param(check, "q", exponent=True),
        tol=check.params.get("tol"), t_min=check.params.get("t_min"),
        n_samples=int(check.params.get("n_samples", DEFAULT_SAMPLES)), seed=_seed(ctx, check), c_tol=ctx.c_tol)
    path = None
    if ctx.curves_dir is not None:
        path = str(curve.to_csv(ctx.curves_dir / f"{check.name}.csv").relative_to(ctx.curves_dir.parent))
    return CheckResult(check.name, check.kind, check.sharpness, report.passed,
                       {**report.to_dict(), "curve": curve.to_dict()}, curve=path)


def _run_structure(ctx: _RunContext, check: CheckConfig) -> CheckResult:
    region = check.params.get("region")
    report = check_structure_condition(
        ctx.config.source, float(check.params.get("alpha", 0.5)), float(_param(check, "p", exponent=True)),
        region=StructureRegion(**region) if region else None,
        n_samples=int(check.params.get("n_samples", DEFAULT_SAMPLES)), tol=check.params.get("tol"),
        seed=_seed(ctx, check), domain=ctx.config.domain)
    return CheckResult(check.name, check.kind, check.sharpness, report.passed, report.to_dict())


def _within(value: float, check: CheckConfig) -> Tuple[bool, Dict[str, Any]]:
    """Compare a fitted number against expected +- within and/or a lower bound."""
    expected, within = check.params.get("expected"), check.params.get("within")
    lower = check.params.get("min_value")
    ok = True
    if expected is not None:
        ok = abs(value - float(expected)) <= float(within if within is not None else 0.0)
    if lower is not None:
        ok = ok and value >= float(lower)
    return ok, {"expected": expected, "within": within, "min_value": lower}


def _run_boundary_exponent(ctx: _RunContext, check: CheckConfig) -> CheckResult:
    rho_range = check.params.get("rho_range")
    fit = boundary_scaling_exponent(
        ctx.u, _param(check, "x_star"), check.params.get("y_star", check.params["x_star"]),
        float(check.params.get("alpha", 0.5)), rho_range=tuple(rho_range) if rho_range else None,
        n_samples=int(check.params.get("n_samples", 9)))
    ok, bounds = _within(fit.exponent, check)
    return CheckResult(check.name, check.kind, check.sharpness, ok, {**fit.to_dict(), **bounds})


def _run_time_monotonicity(ctx: _RunContext, check: CheckConfig) -> CheckResult:
    report = time_monotonicity_check(ctx.u, check.params.get("tolerance"))
    return CheckResult(check.name, check.kind, check.sharpness, report.passed, report.to_dict())


def _run_max_exponent(ctx: _RunContext, check: CheckConfig) -> CheckResult:
    alpha = float(check.params.get("alpha", 0.5))
    estimate = estimate_max_exponent(
        ctx.u, alpha, float(_param(check, "p_lo")), float(_param(check, "p_hi")),
        float(check.params.get("tol_p", 0.01)), t_min=check.params.get("t_min"),
        n_samples=int(check.params.get("n_samples", DEFAULT_SAMPLES)), seed=_seed(ctx, check), c_tol=ctx.c_tol)
    ok, bounds = _within(estimate, check)
    return CheckResult(check.name, check.kind, check.sharpness, ok,
                       {"kind": "max-exponent", "alpha": alpha, "estimate": estimate, **bounds})


def _subset(params: Dict[str, Any], *keys: str) -> Dict[str, Any]:
    return {k: params[k] for k in keys if k in params}


CHECK_RUNNERS: Dict[str, Callable[[_RunContext, CheckConfig], CheckResult]] = {
    "spatial": _run_spatial,
    "parabolic": _run_parabolic,
    "envelope": _run_envelope,
    "energy": _run_energy,
    "structure": _run_structure,
    "boundary-exponent": _run_boundary_exponent,
    "time-monotonicity": _run_time_monotonicity,
    "max-exponent": _run_max_exponent,
}


def solve_scenario(config: ScenarioConfig) -> SpaceTimeField:
    """Solve the scenario's problem; steady states are extended constantly to [0, T]."""
    g = config.grid
    if config.solver == "parabolic":
        return solve_parabolic(config.domain, config.source, g.h, g.dt, g.T, save_every=g.save_every)
    if config.solver == "semilinear_maximal":
        return solve_semilinear_maximal(config.domain, config.source.gamma, g.h, g.dt, g.T,
                                        config.eps_sequence or DEFAULT_EPS_SEQUENCE, save_every=g.save_every)
    steady = solve_steady(config.domain, config.source, g.h)
    u = steady.as_space_time(g.T)
    u.metadata.update({"residual": steady.residual, "iterations": steady.iterations})
    return u


def versions() -> Dict[str, str]:
    from paraconcave import __version__

    return {"paraconcave": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _json_metadata(metadata: Dict[str, Any]) -> Dict[str, Any]:
    return {k: v for k, v in metadata.items() if isinstance(v, (bool, int, float, str, list, type(None)))}


def run_scenario(
    config: Union[str, Path, ScenarioConfig],
    *,
    seed: Optional[int] = None,
    out: Optional[Union[str, Path]] = None,
    tolerance_scale: float = 1.0,
    write: bool = True,
) -> RunRecord:
    """
    Run every check of a scenario.

    Results are deterministic for a fixed seed. With write=True the run
    directory <out>/<name>/ receives summary.json, reports.jsonl (one result
    per line) and curves/<check>.csv for energy checks.
    """
    if not isinstance(config, ScenarioConfig):
        config = load(config)
    if seed is not None:
        config = replace(config, seed=seed)
    if not tolerance_scale > 0.0:
        raise ScenarioConfigError(f"tolerance scale must be positive, got {tolerance_scale}")

    started = time.perf_counter()
    run_dir = Path(out if out is not None else config.output_dir) / config.name
    curves_dir = run_dir / CURVES_DIR if write else None
    needs_field = any(c.kind not in FIELD_FREE_CHECKS for c in config.checks)
    u = solve_scenario(config) if needs_field else None
    ctx = _RunContext(config, u, DEFAULT_C_TOL * tolerance_scale, curves_dir)

    logger.info(f"Scenario {config.name}: {len(config.checks)} check(s)")
    results = []
    for check in config.checks:
        result = CHECK_RUNNERS[check.kind](ctx, check)
        status = "as predicted" if result.as_predicted else "DEVIATION"
        logger.info(f"  {check.name} ({check.kind}): {'pass' if result.passed else 'fail'}, {status}")
        results.append(result)

    record = RunRecord(
        config=config.to_dict(),
        results=results,
        solver=_json_metadata(u.metadata) if u is not None else {},
        wall_time=time.perf_counter() - started,
        versions=versions(),
        output_dir=str(run_dir) if write else None,
    )
    if write:
        write_record(record, run_dir)
    return record


def write_record(record: RunRecord, run_dir: Path) -> None:
    run_dir.mkdir(parents=True, exist_ok=True)
    with open(run_dir / SUMMARY_FILE, "w") as f:
        json.dump(record.to_dict(), f, indent=2)
    with open(run_dir / REPORTS_FILE, "w") as f:
        for result in record.results:
            f.write(json.dumps(result.to_dict(), sort_keys=True) + "\n")
    logger.info(f"Wrote {run_dir}")


@dataclass
class SuiteEntry:
    name: str
    path: str
    passed: bool
    deviations: List[str] = field(default_factory=list)
    error: Optional[str] = None
    record: Optional[Dict[str, Any]] = None
    wall_time: float = 0.0


@dataclass
class SuiteReport:
    entries: List[SuiteEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def table(self) -> List[str]:
        width = max([len(e.name) for e in self.entries] + [8])
        rows = [f"{'scenario':<{width}}  status"]
        for e in self.entries:
            if e.error is not None:
                status = f"ERROR  {e.error}"
            elif e.passed:
                status = "ok"
            else:
                status = f"DEVIATION  {', '.join(e.deviations)}"
            rows.append(f"{e.name:<{width}}  {status}")
        return rows

    def to_dict(self) -> Dict[str, Any]:
        return {"passed": self.passed, "entries": [asdict(e) for e in self.entries]}


def _run_isolated(path: str, seed: Optional[int], out: Optional[str], tolerance_scale: float) -> SuiteEntry:
    """Run one scenario; errors become part of the entry instead of stopping the suite."""
    try:
        record = run_scenario(path, seed=seed, out=out, tolerance_scale=tolerance_scale)
    except Exception as e:
        logger.error(f"Scenario {path} failed: {e}", exc_info=not isinstance(e, ParaconcaveError))
        return SuiteEntry(name=Path(path).stem, path=path, passed=False, error=str(e))
    return SuiteEntry(name=record.config["name"], path=path, passed=record.passed, deviations=record.deviations,
                      record=record.to_dict(include_timing=False), wall_time=record.wall_time)


async def _gather(paths: List[str], parallelism: int, **kwargs) -> List[SuiteEntry]:
    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        tasks = [loop.run_in_executor(pool, partial(_run_isolated, path, **kwargs)) for path in paths]
        return list(await asyncio.gather(*tasks))


def run_suite(
    directory: Union[str, Path],
    parallelism: int = 1,
    *,
    seed: Optional[int] = None,
    out: Optional[Union[str, Path]] = None,
    tolerance_scale: float = 1.0,
) -> SuiteReport:
    """Run every *.json scenario in directory, in name order, across parallelism processes."""
    if parallelism < 1:
        raise ScenarioConfigError(f"parallelism must be positive, got {parallelism}")
    paths = sorted(str(p) for p in Path(directory).glob("*.json"))
    if not paths:
        raise ScenarioConfigError(f"no scenario files in {directory}")
    kwargs = {"seed": seed, "out": None if out is None else str(out), "tolerance_scale": tolerance_scale}

    logger.info(f"Running {len(paths)} scenario(s) with parallelism {parallelism}")
    if parallelism == 1 or len(paths) == 1:
        entries = [_run_isolated(path, **kwargs) for path in paths]
    else:
        entries = asyncio.run(_gather(paths, parallelism, **kwargs))
    report = SuiteReport(entries)
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        with open(Path(out) / "suite.json", "w") as f:
            json.dump(report.to_dict(), f, indent=2)
    return report
