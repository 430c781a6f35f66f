"""Command-line front end: ``xdiff-sis <command> --config <path>``.

The config is a JSON document with ``model``, ``grid``, ``integrator``,
``initial``, ``sweep``, ``options`` and ``output`` blocks; see the README for
the schema. Each command prints one summary line and writes CSV and/or JSON
tables to the output directory. The exit status is 0 on success, 1 when a
solver fails or a checked property does not hold, and 2 for a bad config.
"""
import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import jsonschema
import numpy as np

from . import asymptotics, evolve, spectral, steady
from .domain import CoefficientSpec, Grid1D, ModelKind, ModelParams, evaluate_spec, integrate

logger = logging.getLogger(__name__)

COMMANDS = ("simulate", "r0", "eigen", "critical-di", "ee", "dfe2", "ee2",
            "limit-high-risk", "limit-sign-changing", "persistence2",
            "lyapunov-check", "decay-check")
SWEEPABLE = ("simulate", "r0", "eigen", "ee", "ee2", "dfe2")
SWEEP_PARAMETERS = ("d_S", "d_I", "chi", "N")
DEFAULT_DS_LIST = (1e-1, 1e-2, 1e-3, 1e-4)

_NUMBER = {"type": "number"}
_COEFFICIENT = {
    "oneOf": [
        _NUMBER,
        {"type": "object", "minProperties": 1, "maxProperties": 1,
         "additionalProperties": False,
         "properties": {
             "constant": _NUMBER,
             "affine": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2},
             "cosine": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 3},
             "samples": {"type": "array", "items": _NUMBER, "minItems": 1},
         }},
    ]
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "d_S", "d_I", "chi", "beta", "gamma"],
            "properties": {
                "kind": {"enum": ["conserved", "source"]},
                "d_S": _NUMBER, "d_I": _NUMBER, "chi": _NUMBER,
                "beta": _COEFFICIENT, "gamma": _COEFFICIENT,
                "N": _NUMBER, "Lambda": _COEFFICIENT,
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "x_left": _NUMBER, "x_right": _NUMBER,
                "n_cells": {"type": "integer"},
            },
        },
        "integrator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_end": _NUMBER, "dt_init": _NUMBER, "dt_min": _NUMBER,
                "dt_max": _NUMBER, "safety": _NUMBER, "growth": _NUMBER,
                "positivity_retries": {"type": "integer"},
                "steady_tol": _NUMBER, "max_steps": {"type": "integer"},
            },
        },
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "S": _COEFFICIENT, "I": _COEFFICIENT,
                "normalize": {"type": "boolean"},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "parameter": {"enum": list(SWEEP_PARAMETERS)},
                "values": {"type": "array", "items": _NUMBER, "minItems": 1},
                "workers": {"type": "integer", "minimum": 1},
            },
        },
        "options": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "ds_list": {"type": "array", "items": _NUMBER, "minItems": 1},
                "tol_one": _NUMBER,
                "final_tol": _NUMBER,
                "extrapolate": {"type": "boolean"},
                "bracket": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2},
                "mass_tol": _NUMBER,
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string"},
                "formats": {"type": "array", "items": {"enum": ["csv", "json"]},
                            "uniqueItems": True},
                "record_every": {"type": "integer", "minimum": 1},
            },
        },
    },
}


class ConfigError(ValueError):
    """The config is malformed or physically invalid; ``path`` names the key."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass
class ExperimentConfig:
    command: str
    params: ModelParams
    grid: Grid1D
    integrator: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)
    sweep: dict = None
    options: dict = field(default_factory=dict)
    directory: str = "output"
    formats: tuple = ("csv", "json")
    record_every: int = 1
    seed: int = 0


def _spec_from_json(value, positive=True):
    if isinstance(value, (int, float)):
        return CoefficientSpec.constant(value, positive=positive)
    (kind, args), = value.items()
    if kind == "constant":
        return CoefficientSpec.constant(args, positive=positive)
    if kind == "affine":
        return CoefficientSpec.affine(*args, positive=positive)
    if kind == "cosine":
        return CoefficientSpec.cosine(*args, positive=positive)
    return CoefficientSpec.samples(args, positive=positive)


def _error_path(err):
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = [k for k in err.validator_value if k not in err.instance]
        if missing:
            parts.append(missing[0])
    elif err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        if extra:
            parts.append(extra[0])
    return ".".join(parts)


def _model_path(message):
    # validity messages start with the offending field name
    head = message.split(" ", 1)[0]
    known = ("d_S", "d_I", "chi", "N", "Lambda", "beta", "gamma")
    return f"model.{head}" if head in known else "model"


def parse_config(text, command=None, seed=None):
    """Validate a JSON config and build an :class:`ExperimentConfig`.

    ``command`` (from the command line) must agree with a ``command`` key in
    the document, if both are present. Schema violations raise
    :class:`ConfigError` naming the offending key path, e.g. ``model.gamma``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON ({exc})") from exc
    validator = jsonschema.Draft7Validator(SCHEMA)
    err = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if err is not None:
        raise ConfigError(err.message, _error_path(err))

    cmd = command or doc.get("command")
    if cmd is None:
        raise ConfigError("no command given", "command")
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}", "command")
    if command and doc.get("command", command) != command:
        raise ConfigError(f"config is for {doc['command']!r}, not {command!r}", "command")

    m = doc["model"]
    kind = ModelKind(m["kind"])
    if kind is ModelKind.CONSERVED and "N" not in m:
        raise ConfigError("'N' is a required property for the conserved model", "model.N")
    if kind is ModelKind.SOURCE and "Lambda" not in m:
        raise ConfigError("'Lambda' is a required property for the source model",
                          "model.Lambda")
    try:
        params = ModelParams(
            kind, m["d_S"], m["d_I"], m["chi"], _spec_from_json(m["beta"]),
            _spec_from_json(m["gamma"]), N=m.get("N"),
            Lambda=_spec_from_json(m["Lambda"]) if "Lambda" in m else None)
    except ValueError as exc:
        raise ConfigError(str(exc), _model_path(str(exc))) from exc

    g = doc.get("grid", {})
    try:
        grid = Grid1D(g.get("x_left", 0.0), g.get("x_right", 1.0), g.get("n_cells", 256))
        params.fields(grid)
    except ValueError as exc:
        msg = str(exc)
        path = "grid" if ("n_cells" in msg or "x_right" in msg) else _model_path(msg)
        raise ConfigError(msg, path) from exc

    out = doc.get("output", {})
    integrator = dict(doc.get("integrator", {}))
    if cmd in ("simulate", "lyapunov-check", "decay-check") and "t_end" not in integrator:
        raise ConfigError("'t_end' is a required property", "integrator.t_end")
    sweep = doc.get("sweep")
    if sweep is not None and "values" in sweep and "parameter" not in sweep:
        raise ConfigError("'parameter' is a required property", "sweep.parameter")
    return ExperimentConfig(
        command=cmd, params=params, grid=grid, integrator=integrator,
        initial=doc.get("initial", {}), sweep=sweep, options=doc.get("options", {}),
        directory=out.get("directory", "output"),
        formats=tuple(out.get("formats", ["csv", "json"])),
        record_every=out.get("record_every", 1),
        seed=int(seed if seed is not None else doc.get("seed", 0)))


# ---------------------------------------------------------------- results


@dataclass
class Result:
    """What a command produced: a summary line, a verdict and tables."""

    summary: str
    passed: bool = True
    tables: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    return value


def write_table(directory, name, header, rows, formats):
    """Write ``rows`` as ``name.csv`` (17 significant digits, LF) and/or ``name.json``."""
    paths = []
    if "csv" in formats:
        path = os.path.join(directory, f"{name}.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        paths.append(path)
    if "json" in formats:
        path = os.path.join(directory, f"{name}.json")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump({"columns": list(header), "rows": _jsonable(rows)}, fh, indent=1)
            fh.write("\n")
        paths.append(path)
    return paths


def _profile(grid, S, I):
    return (("x", "S", "I"), list(zip(grid.centers, S, I)))


# ---------------------------------------------------------------- commands


def _integrator(cfg, **overrides):
    kw = dict(cfg.integrator)
    kw.setdefault("record_every", cfg.record_every)
    kw.update(overrides)
    return evolve.IntegratorConfig(**kw)


def _initial(cfg):
    p, grid = cfg.params, cfg.grid
    x = grid.centers
    bump = 1.0 + np.cos(np.pi * (x - grid.x_left) / grid.measure)
    init = cfg.initial
    if p.kind is ModelKind.CONSERVED:
        S_default = np.full(grid.n_cells, p.N / grid.measure)
        I_default = 0.1 * p.N / grid.measure * bump
    else:
        lam = evaluate_spec(p.Lambda, grid, "Lambda")
        S_default = lam.copy()
        I_default = 0.1 * float(np.mean(lam)) * bump
    S0 = (evaluate_spec(_spec_from_json(init["S"], positive=False), grid, "initial.S")
          if "S" in init else S_default)
    I0 = (evaluate_spec(_spec_from_json(init["I"], positive=False), grid, "initial.I")
          if "I" in init else I_default)
    if p.kind is ModelKind.CONSERVED and init.get("normalize", True):
        total = integrate(S0 + I0, grid)
        if not total > 0:
            raise ValueError("initial data has zero mass")
        S0 = S0 * (p.N / total)
        I0 = I0 * (p.N / total)
        # absorb the rounding of the rescale into S so the mass is N to round-off
        S0 = S0 + (p.N - integrate(S0 + I0, grid)) / grid.measure
    return S0, I0


def _constant_ratio(params, grid):
    beta, gamma, _ = params.fields(grid)
    r = beta / gamma
    if params.kind is ModelKind.CONSERVED and np.ptp(r) <= 1e-14 * r[0] and r[0] > 1:
        return float(r[0])
    return None


def _lyapunov_ref(params, grid):
    r = _constant_ratio(params, grid)
    if r is None:
        return None
    m = params.N / grid.measure
    return m / r, (r - 1.0) * m / r


def _trajectory_table(record):
    arr = record.as_arrays()
    lyap = arr["lyapunov"] if arr["lyapunov"].size else np.full(arr["times"].size, np.nan)
    rows = list(zip(arr["times"], arr["mass"], arr["sup_I"], lyap, arr["dirichlet_w"]))
    return (("t", "mass", "sup_I", "lyapunov", "dirichlet_w"), rows)


def _simulate(cfg, store_fields=False, lyapunov=True, **overrides):
    S0, I0 = _initial(cfg)
    ref = _lyapunov_ref(cfg.params, cfg.grid) if lyapunov else None
    icfg = _integrator(cfg, store_fields=store_fields, **overrides)
    record, state = evolve.simulate(cfg.params, cfg.grid, S0, I0, icfg, lyapunov_ref=ref)
    return S0, I0, record, state


def cmd_simulate(cfg):
    _, _, record, state = _simulate(cfg)
    data = {"t_final": state.t, "accepted_steps": record.accepted_steps,
            "rejected_steps": record.rejected_steps, "steady": record.steady,
            "sup_I_final": float(np.max(state.I)), "mass_final": integrate(state.S + state.I, cfg.grid),
            "max_mass_error": record.max_mass_error}
    passed = True
    if cfg.params.kind is ModelKind.SOURCE:
        data["mass_bound_violations"] = record.mass_bound_violations
        passed = record.mass_bound_violations == 0
    summary = (f"simulate: t={state.t:.6g} steps={record.accepted_steps} "
               f"mass={data['mass_final']:.12g} sup_I={data['sup_I_final']:.6e} "
               f"steady={record.steady}")
    tables = {"trajectory": _trajectory_table(record),
              "profile": _profile(cfg.grid, state.S, state.I)}
    return Result(summary, passed, tables, data)


def cmd_r0(cfg):
    p = cfg.params
    beta, gamma, _ = p.fields(cfg.grid)
    res = spectral.basic_reproduction_number(p.d_I, beta, gamma, cfg.grid, seed=cfg.seed)
    return Result(f"R0 = {res.r0:.9f}", True,
                  {"r0_maximizer": (("x", "phi"), list(zip(cfg.grid.centers, res.maximizer)))},
                  {"r0": res.r0, "iterations": res.iterations, "residual": res.residual})


def cmd_eigen(cfg):
    p = cfg.params
    beta, gamma, _ = p.fields(cfg.grid)
    res = spectral.principal_eigenpair(p.d_I, beta, gamma, cfg.grid, seed=cfg.seed)
    return Result(f"lambda* = {res.lambda_star:.12g}", True,
                  {"eigenfunction": (("x", "phi"), list(zip(cfg.grid.centers, res.phi_star)))},
                  {"lambda_star": res.lambda_star, "iterations": res.iterations,
                   "residual": res.residual})


def cmd_critical_di(cfg):
    beta, gamma, _ = cfg.params.fields(cfg.grid)
    d = spectral.critical_diffusion(beta, gamma, cfg.grid, cfg.options.get("bracket"),
                                    seed=cfg.seed)
    return Result(f"d_I* = {d:.12g}", True, {}, {"d_I_star": d})


def cmd_ee(cfg):
    prof = steady.solve_endemic_model1(cfg.params, cfg.grid)
    N = cfg.params.N
    passed = prof.pde_residual <= 1e-8 and prof.mass_residual <= 1e-8 * N
    summary = (f"ee: kappa={prof.kappa:.12g} pde_residual={prof.pde_residual:.3e} "
               f"mass_residual={prof.mass_residual:.3e} {'PASS' if passed else 'FAIL'}")
    return Result(summary, passed, {"profile": _profile(cfg.grid, prof.S, prof.I)},
                  {"kappa": prof.kappa, "pde_residual": prof.pde_residual,
                   "mass_residual": prof.mass_residual})


def cmd_dfe2(cfg):
    p = cfg.params
    if p.kind is not ModelKind.SOURCE:
        raise ValueError("dfe2 needs the source model")
    _, _, lam = p.fields(cfg.grid)
    S = steady.solve_dfe_model2(p.d_S, lam, cfg.grid)
    mass_gap = abs(integrate(S, cfg.grid) - integrate(lam, cfg.grid))
    return Result(f"dfe2: min S={np.min(S):.12g} max S={np.max(S):.12g} "
                  f"|int S - int Lambda|={mass_gap:.3e}", True,
                  {"profile": _profile(cfg.grid, S, np.zeros_like(S))},
                  {"mass_gap": mass_gap})


def cmd_ee2(cfg):
    prof = steady.solve_endemic_model2(cfg.params, cfg.grid)
    passed = prof.mass_residual <= cfg.options.get("mass_tol", 1e-6)
    summary = (f"ee2: min I={np.min(prof.I):.12g} pde_residual={prof.pde_residual:.3e} "
               f"|int S - int Lambda|={prof.mass_residual:.3e} {'PASS' if passed else 'FAIL'}")
    return Result(summary, passed, {"profile": _profile(cfg.grid, prof.S, prof.I)},
                  {"pde_residual": prof.pde_residual, "mass_residual": prof.mass_residual})


def _workers(cfg):
    if cfg.sweep and "workers" in cfg.sweep:
        return cfg.sweep["workers"]
    return os.cpu_count() or 1


def cmd_limit_high_risk(cfg):
    opt = cfg.options
    rep = asymptotics.verify_high_risk_limit(
        cfg.params, opt.get("ds_list", DEFAULT_DS_LIST), cfg.grid,
        final_tol=opt.get("final_tol", 1e-2), workers=_workers(cfg))
    summary = (f"limit-high-risk: {len(rep.rows)} points, final gap={rep.final_gap:.3e}, "
               f"monotone={rep.monotone} {'PASS' if rep.passed else 'FAIL'}")
    return Result(summary, rep.passed,
                  {"limit_high_risk": (("d_S", "sup_gap", "kappa"), rep.rows)},
                  {"I_star": rep.limit.I_star, "final_gap": rep.final_gap,
                   "monotone": rep.monotone})


def cmd_limit_sign_changing(cfg):
    opt = cfg.options
    lim, rep = asymptotics.sign_changing_limit(
        cfg.params, opt.get("ds_list", DEFAULT_DS_LIST), cfg.grid,
        opt.get("tol_one", 1e-3), extrapolate=opt.get("extrapolate", True),
        workers=_workers(cfg))
    failed = [k for k, ok in rep.checks.items() if not ok]
    summary = (f"limit-sign-changing: M={lim.M:.6g} kappa/d_S->{rep.ratio_extrapolated:.6g} "
               f"|J+|={lim.J_plus.size} "
               + ("PASS" if not failed else "FAIL " + ",".join(failed)))
    tables = {
        "sign_changing": (("d_S", "kappa", "sup_I", "kappa_over_d_S"), rep.rows),
        "limit_profile": (("x", "Itilde_star", "S_star"),
                          list(zip(cfg.grid.centers, lim.Itilde_star, lim.S_star))),
    }
    return Result(summary, rep.passed, tables,
                  {"M": lim.M, "ratio": rep.ratio_extrapolated, "checks": rep.checks,
                   "J_plus": lim.J_plus, "H_minus": lim.H_minus})


def cmd_persistence2(cfg):
    opt = cfg.options
    rep = asymptotics.model2_persistence_sweep(
        cfg.params, opt.get("ds_list", DEFAULT_DS_LIST), cfg.grid,
        mass_tol=opt.get("mass_tol", 1e-6), workers=_workers(cfg))
    summary = (f"persistence2: eta={rep.eta:.6g} min I along sweep="
               f"{min(r[1] for r in rep.rows):.6g} {'PASS' if rep.passed else 'FAIL'}")
    return Result(summary, rep.passed,
                  {"persistence2": (("d_S", "min_I", "mass_gap"), rep.rows)},
                  {"eta": rep.eta})


def lyapunov_monotone(values, start=10, tol=1e-10):
    """True when ``values[k+1] <= values[k] + tol`` for every ``k >= start``."""
    v = np.asarray(values, dtype=float)[start:]
    return bool(np.all(np.diff(v) <= tol))


def cmd_lyapunov_check(cfg):
    p = cfg.params
    r = _constant_ratio(p, cfg.grid)
    if r is None:
        raise ValueError("lyapunov-check needs the conserved model with beta = r*gamma, r > 1")
    _, _, record, state = _simulate(cfg, record_every=1)
    chi0 = evolve.chi0_estimate(r, p.d_S, p.d_I, max(record.sup_I))
    monotone = lyapunov_monotone(record.lyapunov)
    asserted = p.chi < 0.5 * chi0
    passed = monotone or not asserted
    verdict = "PASS" if passed else "FAIL"
    if not asserted:
        verdict += " (chi >= chi0/2, monotonicity not asserted)"
    summary = (f"lyapunov-check: V_final={record.lyapunov[-1]:.3e} chi0~{chi0:.6g} "
               f"monotone={monotone} {verdict}")
    return Result(summary, passed, {"trajectory": _trajectory_table(record)},
                  {"chi0_estimate": chi0, "monotone": monotone, "asserted": asserted})


def cmd_decay_check(cfg):
    p = cfg.params
    beta, gamma, _ = p.fields(cfg.grid)
    eig = spectral.principal_eigenpair(p.d_I, beta, gamma, cfg.grid, seed=cfg.seed)
    S0, I0, record, state = _simulate(cfg, store_fields=True, lyapunov=False)
    rep = evolve.decay_envelope_check(record, eig.lambda_star, eig.phi_star, I0)
    summary = (f"decay-check: lambda*={eig.lambda_star:.6g} M={rep.M:.6g} "
               f"worst ratio={rep.worst_ratio:.9f} at t={rep.worst_time:.6g} "
               f"{'PASS' if rep.passed else 'FAIL'}")
    return Result(summary, rep.passed, {"trajectory": _trajectory_table(record)},
                  {"lambda_star": eig.lambda_star, "M": rep.M,
                   "worst_ratio": rep.worst_ratio, "worst_time": rep.worst_time})


HANDLERS = {
    "simulate": cmd_simulate, "r0": cmd_r0, "eigen": cmd_eigen,
    "critical-di": cmd_critical_di, "ee": cmd_ee, "dfe2": cmd_dfe2, "ee2": cmd_ee2,
    "limit-high-risk": cmd_limit_high_risk,
    "limit-sign-changing": cmd_limit_sign_changing,
    "persistence2": cmd_persistence2, "lyapunov-check": cmd_lyapunov_check,
    "decay-check": cmd_decay_check,
}


def _sweep_point(cfg, value):
    params = cfg.params.replace(**{cfg.sweep["parameter"]: value})
    return HANDLERS[cfg.command](replace(cfg, params=params))


def _run_sweep(cfg):
    values = [float(v) for v in cfg.sweep["values"]]
    workers = min(_workers(cfg), len(values))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, [cfg] * len(values), values))
    else:
        results = [_sweep_point(cfg, v) for v in values]
    name = cfg.sweep["parameter"]
    tables = {}
    for k, res in enumerate(results):
        for tname, table in res.tables.items():
            tables[f"{tname}_{k:03d}"] = table
    scalar_keys = sorted(k for k, v in results[0].data.items()
                         if isinstance(v, (int, float, np.floating, np.integer))
                         and not isinstance(v, bool))
    rows = [[v] + [res.data[k] for k in scalar_keys] for v, res in zip(values, results)]
    tables["sweep"] = ((name, *scalar_keys), rows)
    passed = all(r.passed for r in results)
    summary = (f"{cfg.command} sweep over {name}: {len(values)} points "
               f"{'PASS' if passed else 'FAIL'}; last: {results[-1].summary}")
    return Result(summary, passed, tables,
                  {"parameter": name, "values": values,
                   "points": [r.data for r in results]})


def execute(cfg):
    """Run the configured command and return its :class:`Result` (no file output)."""
    if cfg.sweep and "values" in cfg.sweep:
        if cfg.command not in SWEEPABLE:
            raise ValueError(f"command {cfg.command!r} does not take a sweep block")
        return _run_sweep(cfg)
    return HANDLERS[cfg.command](cfg)


def run(cfg, stdout=None):
    """Execute ``cfg``, write its outputs and print the summary; return the exit status."""
    stdout = stdout or sys.stdout
    result = execute(cfg)
    os.makedirs(cfg.directory, exist_ok=True)
    for name, (header, rows) in result.tables.items():
        write_table(cfg.directory, name, header, rows, cfg.formats)
    summary_path = os.path.join(cfg.directory, "summary.json")
    with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable({"command": cfg.command, "seed": cfg.seed,
                             "passed": result.passed, "summary": result.summary,
                             "data": result.data}), fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(result.summary, file=stdout)
    return 0 if result.passed else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="xdiff-sis",
        description="Cross-diffusion SIS models: simulation, thresholds, equilibria.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--out", help="output directory (overrides output.directory)")
    parser.add_argument("--seed", type=int, help="seed for randomized start vectors")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        cfg = parse_config(text, command=args.command, seed=args.seed)
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        cfg = replace(cfg, directory=args.out)
    try:
        return run(cfg)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"error in {cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
