"""Scenario configuration, execution and report emission."""
from __future__ import annotations

import copy
import csv
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import boundedness as bd
from . import example_e as ee
from . import flats
from .biquotient import (
    PRESETS,
    BiquotientSpec,
    describe,
    holonomy_field,
    preset,
    random_horizontal_unit,
    random_vertical,
    route_discrepancy,
    spec_from_dict,
    verticality_residual,
)
from .report import CheckReport

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SELECTIONS = ("flats", "holonomy", "boundedness", "omega", "example-e")

# check id -> the statement it exercises
ANCHORS = {
    "holonomy-routes": "J'(t) = A(a'(t), J(t)) + T(J(t), a'(t)) solved by the closed-form Jacobi field",
    "holonomy-vertical": "holonomy Jacobi fields are everywhere vertical",
    "holonomy-T-term": "totally geodesic fibers: the T-term of J'(0) vanishes",
    "boundedness-audit": "every holonomy Jacobi field remains bounded in norm",
    "omega-subspace": "Omega = {v vertical : holonomy field of v is parallel}; Omega commutes with X",
    "omega-return": "Omega(t_i) -> Omega along times with gamma(t_i) -> e",
    "flat-search": "horizontal zero-curvature plane sigma = span{X, Y}, [X, Y] = 0",
    "flat-part1": "horizontal zero-curvature planes project to zero-curvature planes",
    "flat-part2": "zero-curvature planes exponentiate to flats: F = exp(sigma) is horizontal",
    "flat-holonomy-orthogonality": "J(t) stays orthogonal to Y(t) iff J'(0) is orthogonal to Y",
    "example-e-growth": "holonomy Jacobi fields grow unboundedly when int mubar(<gamma', X>) = infinity",
    "example-e-no-growth": "zero holonomy time along geodesics orthogonal to X",
    "example-e-lipschitz": "holonomy Lipschitz constants are unbounded (non-compact holonomy)",
    "example-e-group-law": "holonomy group isomorphic to R: flows compose additively in T",
    "example-e-cutoff": "mu vanishes for t <= 0, is positive elsewhere, and is smooth at 0",
}

DEFAULT_PARAMS: dict[str, Any] = {
    "seed": 0,
    "audits": 10,
    "holonomy_t": 50.0,
    "holonomy_samples": 201,
    "t_max": 500.0,
    "audit_samples": 2001,
    "restarts": 50,
    "grid_half_width": 5.0,
    "grid_points": 10,
    "orthogonality_t": 100.0,
    "orthogonality_samples": 401,
    "epsilon": [0.1, 0.01, 0.001],
    "recurrence_t_max": 100000.0,
    "omega_direction": None,
    "growth_t": 50.0,
    "growth_samples": 501,
    "lipschitz_T": 5.0,
}

_POSITIVE = ("audits", "holonomy_t", "holonomy_samples", "t_max", "audit_samples", "restarts",
             "grid_points", "orthogonality_t", "orthogonality_samples", "recurrence_t_max",
             "growth_t", "growth_samples", "lipschitz_T")


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    preset: str | None = "hopf"
    custom_spec: dict[str, Any] | None = None
    checks: tuple[str, ...] = SELECTIONS
    params: dict[str, Any] = field(default_factory=lambda: copy.deepcopy(DEFAULT_PARAMS))
    out_dir: str | None = None
    write_csv: bool = True

    def spec(self) -> BiquotientSpec:
        if self.custom_spec is not None:
            return spec_from_dict(self.custom_spec)
        return preset(self.preset)

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "preset": self.preset,
            "custom_spec": self.custom_spec,
            "checks": list(self.checks),
            "params": self.params,
            "output": {"dir": self.out_dir, "csv": self.write_csv},
        }


def _selection(checks: Any) -> tuple[str, ...]:
    if isinstance(checks, str):
        checks = [checks]
    out: list[str] = []
    for c in checks:
        if c == "all":
            return SELECTIONS
        if c not in SELECTIONS:
            raise ConfigError(f"unknown check {c!r}; choose from {SELECTIONS + ('all',)}")
        if c not in out:
            out.append(c)
    return tuple(c for c in SELECTIONS if c in out)


def config_from_dict(d: dict[str, Any]) -> ScenarioConfig:
    allowed = {"schema_version", "preset", "custom_spec", "checks", "params", "output"}
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}")
    params = copy.deepcopy(DEFAULT_PARAMS)
    user = d.get("params") or {}
    bad = set(user) - set(DEFAULT_PARAMS)
    if bad:
        raise ConfigError(f"unknown params: {sorted(bad)}")
    params.update(user)
    for k in _POSITIVE:
        if not isinstance(params[k], (int, float)) or params[k] <= 0:
            raise ConfigError(f"param {k!r} must be a positive number")
    if not isinstance(params["seed"], int) or params["seed"] < 0:
        raise ConfigError("seed must be a non-negative integer")
    eps = params["epsilon"]
    if not isinstance(eps, list) or not eps or any(not isinstance(e, (int, float)) or e <= 0 for e in eps):
        raise ConfigError("epsilon must be a non-empty list of positive numbers")
    output = d.get("output") or {}
    if set(output) - {"dir", "csv"}:
        raise ConfigError(f"unknown output keys: {sorted(set(output) - {'dir', 'csv'})}")
    custom = d.get("custom_spec")
    name = d.get("preset")
    if (custom is None) == (name is None):
        raise ConfigError("give exactly one of 'preset' and 'custom_spec'")
    if name is not None and name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}")
    cfg = ScenarioConfig(name, custom, _selection(d.get("checks", "all")), params,
                         output.get("dir"), bool(output.get("csv", True)))
    try:
        cfg.spec()
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"invalid custom_spec: {exc}") from exc
    return cfg


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return config_from_dict(data)


# individual scenario checks; each returns a list of CheckReports

def _rng(params: dict[str, Any], salt: int) -> np.random.Generator:
    return np.random.default_rng([params["seed"], salt])


def _holonomy_checks(spec: BiquotientSpec, p: dict[str, Any]) -> list[CheckReport]:
    rng = _rng(p, 1)
    ts = np.linspace(0.0, p["holonomy_t"], int(p["holonomy_samples"]))
    disc = vert = init = tterm = 0.0
    for _ in range(int(p["audits"])):
        g = spec.group.random_group_element(rng)
        X = random_horizontal_unit(spec, g, rng)
        v = random_vertical(spec, g, rng)
        f = holonomy_field(spec, g, v, X)
        disc = max(disc, route_discrepancy(f, ts) / max(1.0, v.norm()))
        vert = max(vert, verticality_residual(f, ts[:: max(1, len(ts) // 50)]) / max(1.0, v.norm()))
        init = max(init, float(np.abs(f.route_b(np.zeros(1))[0] - v.coords).max()))
        tterm = max(tterm, float(np.linalg.norm(f.t_term)) / max(1.0, v.norm()))
    out = [
        CheckReport("holonomy-routes", disc < 1e-8 and init < 1e-12,
                    {"max_route_discrepancy": disc, "max_initial_mismatch": init, "audits": int(p["audits"])},
                    {"max_route_discrepancy": 1e-8, "max_initial_mismatch": 1e-12}),
        CheckReport("holonomy-vertical", vert < 1e-8, {"max_horizontal_part": vert}, {"max_horizontal_part": 1e-8}),
    ]
    if "fibers totally geodesic" in spec.properties:
        out.append(CheckReport("holonomy-T-term", tterm < 1e-10, {"max_T_term": tterm}, {"max_T_term": 1e-10}))
    else:
        out.append(CheckReport("holonomy-T-term", True, {"max_T_term": tterm}, {}, status="recorded"))
    return out


def _boundedness_checks(spec: BiquotientSpec, p: dict[str, Any]) -> list[CheckReport]:
    rng = _rng(p, 2)
    worst: CheckReport | None = None
    agg = {"max_F0": 0.0, "max_abs_slope": 0.0, "max_sup_over_bound": 0.0, "omega_perp_derivative": 0.0}
    passed = True
    for _ in range(int(p["audits"])):
        g = spec.group.random_group_element(rng)
        X = random_horizontal_unit(spec, g, rng)
        r = bd.boundedness_audit(spec, g, X, p["t_max"], int(p["audit_samples"]))
        passed &= r.passed
        for k in agg:
            agg[k] = max(agg[k], r.measured[k])
        if worst is None or r.measured["max_abs_slope"] >= worst.measured["max_abs_slope"]:
            worst = r
    assert worst is not None
    return [CheckReport("boundedness-audit", passed, {**agg, "audits": int(p["audits"]), "T": p["t_max"]},
                        worst.tolerances, series=worst.series)]


def _omega_direction(spec: BiquotientSpec, p: dict[str, Any], g, rng) -> Any:
    from .liegroup import AlgebraElement

    if p["omega_direction"] is None:
        return random_horizontal_unit(spec, g, rng)
    x = np.asarray(p["omega_direction"], dtype=float)
    return AlgebraElement(spec.group, x / np.linalg.norm(x))


def _omega_checks(spec: BiquotientSpec, p: dict[str, Any]) -> list[CheckReport]:
    rng = _rng(p, 3)
    g = spec.group.identity()
    X = _omega_direction(spec, p, g, rng)
    om = bd.omega_subspace(spec, g, X)
    out = [CheckReport("omega-subspace", om.bracket_residual < 1e-9 and om.derivative_residual < 1e-9,
                       {"rank": om.rank, "bracket_residual": om.bracket_residual,
                        "derivative_residual": om.derivative_residual},
                       {"bracket_residual": 1e-9, "derivative_residual": 1e-9})]
    if om.rank == 0:
        out.append(CheckReport("omega-return", True, {"omega_rank": 0}, {}, status="vacuous"))
        return out
    reports = []
    for eps in p["epsilon"]:
        seq = bd.recurrence_times(X, float(eps), float(p["recurrence_t_max"]))
        reports.append(bd.omega_return(spec, g, X, seq, om))
    merged = {f"eps={r.measured.get('epsilon', e)}": r.measured for r, e in zip(reports, p["epsilon"])}
    passed = all(r.passed for r in reports)
    status = "pass" if passed else "/".join(sorted({r.status for r in reports if not r.passed}))
    out.append(CheckReport("omega-return", passed, merged,
                           {f"eps={e}": bd.RETURN_FACTOR * e for e in p["epsilon"]}, status=status))
    return out


def _flat_checks(spec: BiquotientSpec, p: dict[str, Any]) -> list[CheckReport]:
    g = spec.group.identity()
    if spec.horizontal_dim < 2:
        return [CheckReport("flat-search", True, {"horizontal_dim": spec.horizontal_dim}, {}, status="vacuous")]
    res = flats.search_horizontal_flat(spec, g, int(p["seed"]), int(p["restarts"]))
    measured = {"found": res.candidate is not None, "best_residual": res.best_residual,
                "restarts_used": res.restarts_used, "horizontal_dim": res.horizontal_dim,
                "certified_lower_bound": res.certified_lower_bound}
    if res.candidate is None:
        certified = res.certified_lower_bound is not None and res.certified_lower_bound > flats.ACCEPT_TOL
        return [CheckReport("flat-search", certified, measured, {"commutator_norm": flats.ACCEPT_TOL},
                            status="none-found-certified" if certified else "none-found-inconclusive")]
    c = res.candidate
    measured["X"] = c.X.coords.tolist()
    measured["Y"] = c.Y.coords.tolist()
    return [
        CheckReport("flat-search", True, measured, {"commutator_norm": flats.ACCEPT_TOL}),
        flats.verify_part1(spec, c),
        flats.verify_part2(spec, c, p["grid_half_width"], int(p["grid_points"])),
        flats.holonomy_orthogonality(spec, c, p["orthogonality_t"], int(p["orthogonality_samples"])),
    ]


def _example_e_checks(_: BiquotientSpec, p: dict[str, Any]) -> list[CheckReport]:
    growth = ee.holonomy_jacobi_growth(None, 0.0, p["growth_t"], int(p["growth_samples"]))
    flat = ee.holonomy_jacobi_growth(None, np.pi / 2, p["growth_t"], int(p["growth_samples"]))
    flat.check = "example-e-no-growth"
    T = float(p["lipschitz_T"])
    L = ee.lipschitz_estimate(None, T)
    lip = CheckReport("example-e-lipschitz", L >= 0.99 * np.exp(T),
                      {"T": T, "estimate": L, "ratio_to_exp_T": L / np.exp(T)}, {"ratio_to_exp_T": 0.99})
    thetas = np.linspace(-3.0, 3.0, 25)
    law = ee.group_law_residual(thetas, 1.3, 2.1)
    rev = abs(ee.holonomy_time(0.3, 7.0) + ee.holonomy_time(np.pi - 0.3, 7.0))
    group = CheckReport("example-e-group-law", law < ee.GROUP_LAW_TOL and rev == 0.0,
                        {"composition_residual": law, "reversal_residual": rev},
                        {"composition_residual": ee.GROUP_LAW_TOL})
    smooth = ee.mu_smoothness_residuals()
    odd = max(abs(ee.mu_bar(-s) + ee.mu_bar(s)) for s in np.linspace(0, 3, 31))
    cutoff = CheckReport("example-e-cutoff", max(smooth) < 1e-6 and odd == 0.0,
                         {"one_sided_differences": smooth, "odd_residual": odd},
                         {"one_sided_differences": 1e-6})
    return [growth, flat, lip, group, cutoff]


_RUNNERS: dict[str, Callable[[BiquotientSpec, dict[str, Any]], list[CheckReport]]] = {
    "holonomy": _holonomy_checks,
    "boundedness": _boundedness_checks,
    "omega": _omega_checks,
    "flats": _flat_checks,
    "example-e": _example_e_checks,
}


@dataclass
class ScenarioReport:
    config: ScenarioConfig
    spec_name: str
    records: list[dict[str, Any]]
    reports: list[CheckReport]

    @property
    def passed(self) -> bool:
        return all(r["passed"] for r in self.records)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "spec": self.spec_name,
            "config": self.config.to_dict(),
            "checks": self.records,
            "overall": "pass" if self.passed else "fail",
        }


def _plain(x: Any) -> Any:
    """Convert numpy scalars/arrays to JSON-native values; non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        f = float(x)
        return f if np.isfinite(f) else repr(f)
    return x


def run(config: ScenarioConfig) -> ScenarioReport:
    """Execute the selected checks in fixed order and collect their records."""
    spec = config.spec()
    records: list[dict[str, Any]] = []
    reports: list[CheckReport] = []
    for name in SELECTIONS:
        if name not in config.checks:
            continue
        t0 = time.perf_counter()
        try:
            results = _RUNNERS[name](spec, config.params)
        except Exception as exc:  # a crashing check is a failed check, the rest still run
            log.exception("check group %s crashed", name)
            results = [CheckReport(f"{name}-error", False, {"error": f"{type(exc).__name__}: {exc}"}, {},
                                   status="error")]
        wall = time.perf_counter() - t0
        for r in results:
            reports.append(r)
            records.append(_plain({
                "check": r.check,
                "group": name,
                "anchor": ANCHORS.get(r.check, ""),
                "passed": r.passed,
                "status": r.status,
                "measured": r.measured,
                "tolerances": r.tolerances,
                "wall_time_s": wall / len(results),
            }))
            log.info("%-30s %s", r.check, r.status)
    report = ScenarioReport(config, spec.name, records, reports)
    if config.out_dir:
        write_outputs(report, Path(config.out_dir))
    return report


def write_outputs(report: ScenarioReport, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    if not report.config.write_csv:
        return
    headers = {
        ("boundedness-audit", "growth"): ("t", "norm_J", "slope_window"),
        ("example-e-growth", "growth"): ("t", "theta", "norm_J"),
        ("example-e-no-growth", "growth"): ("t", "theta", "norm_J"),
        ("omega-return", "angles"): ("t", "max_angle", "vertical_defect"),
    }
    for r in report.reports:
        for key, arr in r.series.items():
            path = out / f"{r.check}_{key}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh)
                if (r.check, key) in headers:
                    w.writerow(headers[(r.check, key)])
                for row in np.atleast_2d(arr):
                    w.writerow([repr(float(v)) for v in row])


def list_presets() -> list[dict[str, Any]]:
    return [describe(PRESETS[name]()) for name in sorted(PRESETS)]


REPORT_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "liesub scenario report",
    "type": "object",
    "required": ["schema_version", "spec", "config", "checks", "overall"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "spec": {"type": "string"},
        "config": {"type": "object"},
        "overall": {"enum": ["pass", "fail"]},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["check", "group", "anchor", "passed", "status", "measured", "tolerances", "wall_time_s"],
                "properties": {
                    "check": {"type": "string"},
                    "group": {"enum": list(SELECTIONS)},
                    "anchor": {"type": "string"},
                    "passed": {"type": "boolean"},
                    "status": {"type": "string"},
                    "measured": {"type": "object"},
                    "tolerances": {"type": "object"},
                    "wall_time_s": {"type": "number", "minimum": 0},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}
