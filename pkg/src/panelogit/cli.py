"""Command-line front end.

Verbs: ``simulate | identify | bound-functional | check-theta | reproduce``.
Runs are driven by a JSON config (schema-validated); command-line flags
override config fields.  Exit codes: 0 success, 2 input error, 3 empty
identified set, 4 inadmissible functional.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import jsonschema

from . import reproduce as _repro
from ._util import dump_json
from .dgp import DiscreteMixture, PopulationProbs, population_probs, simulate_panel
from .equalities import solve_closed_forms, solve_numeric
from .functionals import FunctionalSpec, InadmissibleFunctionalError, eta_vector, \
    functional_bounds, functional_point_value
from .idset import MisspecifiedModelError, filter_roots, free_parameters, \
    grid_identify, sharp_bounds_T2
from .inequalities import build_H, moment_vector, theta_membership
from .model import AR1, ModelSpec, Theta, UnsupportedModelError, build_representation

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_EMPTY_SET = 3
EXIT_INADMISSIBLE = 4

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["model"],
    "additionalProperties": False,
    "properties": {
        "model": {
            "type": "object",
            "required": ["T"],
            "properties": {
                "family": {"enum": ["ar1", "ar2"]},
                "T": {"type": "integer", "minimum": 2},
                "covariates": {"enum": ["none", "series", "time_trend", "time_dummies"]},
                "support_x": {"type": "array"},
                "y0": {"enum": [0, 1]},
                "y_minus1": {"enum": [0, 1]},
            },
        },
        "theta": {
            "type": "object",
            "properties": {"beta": {}, "gamma": {}},
        },
        "dgp": {
            "type": "object",
            "required": ["cells"],
            "properties": {
                "theta": {
                    "type": "object",
                    "properties": {"beta": {}, "gamma": {}},
                },
                "cells": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["alphas", "weights"],
                        "properties": {
                            "x_index": {"type": "integer", "minimum": 0},
                            "y0": {"enum": [0, 1]},
                            "alphas": {"type": "array", "items": {"type": "number"}},
                            "weights": {"type": "array", "items": {"type": "number", "minimum": 0}},
                        },
                    },
                }
            },
        },
        "probs_file": {"type": "string"},
        "simulate": {
            "type": "object",
            "properties": {"n": {"type": "integer", "minimum": 1}},
        },
        "identify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["auto", "roots", "grid", "bounds_t2"]},
                "box": {"type": "array"},
                "step": {"type": "number", "exclusiveMinimum": 0},
                "eq_tol": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "slack": {"type": "number", "minimum": 0},
            },
        },
        "functionals": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": ["ame", "posterior_mean_a", "counterfactual_no_dynamics"]},
                    "x_tilde_period": {"type": "integer", "minimum": 2},
                    "history": {"type": "array", "items": {"enum": [0, 1]}},
                    "x_index": {"type": "integer", "minimum": 0},
                    "y0": {"enum": [0, 1]},
                },
            },
        },
        "out_dir": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
    },
}


class InputError(Exception):
    pass


def _load_config(path: str) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise InputError(f"invalid config: {exc.message}") from exc
    return cfg


def _spec_from(cfg: dict) -> ModelSpec:
    m = dict(cfg["model"])
    m.setdefault("family", AR1)
    m["support_x"] = tuple(tuple(tuple(v) if isinstance(v, list) else v for v in x)
                           for x in m.get("support_x", []))
    try:
        return ModelSpec(**m)
    except (ValueError, UnsupportedModelError) as exc:
        raise InputError(str(exc)) from exc


def _parse_theta(t: dict) -> Theta:
    beta = t.get("beta")
    if beta is None:
        raise InputError("theta.beta is required")
    gamma = t.get("gamma", [])
    return Theta(tuple(np.atleast_1d(beta)), tuple(np.atleast_1d(gamma)) if gamma else ())


def _theta_from(cfg: dict) -> Theta:
    if "theta" not in cfg:
        raise InputError("config has no 'theta'")
    return _parse_theta(cfg["theta"])


def _dgp_theta_from(cfg: dict) -> Theta:
    """The data-generating theta: dgp.theta when present, else the top-level
    theta (so check-theta can probe candidates away from the truth)."""
    if "dgp" in cfg and "theta" in cfg["dgp"]:
        return _parse_theta(cfg["dgp"]["theta"])
    return _theta_from(cfg)


def _mixtures_from(cfg: dict, spec: ModelSpec) -> dict:
    if "dgp" not in cfg:
        raise InputError("config has no 'dgp' (mixtures per cell)")
    out = {}
    for cell in cfg["dgp"]["cells"]:
        key = (int(cell.get("x_index", 0)), int(cell.get("y0", spec.y0)))
        try:
            out[key] = DiscreteMixture(tuple(cell["alphas"]), tuple(cell["weights"]))
        except ValueError as exc:
            raise InputError(f"bad mixture for cell {key}: {exc}") from exc
    return out


def _probs_from(cfg: dict, spec: ModelSpec) -> PopulationProbs:
    if "probs_file" in cfg:
        try:
            return PopulationProbs.from_json(Path(cfg["probs_file"]).read_text())
        except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
            raise InputError(f"cannot read probs_file: {exc}") from exc
    theta = _dgp_theta_from(cfg)
    return population_probs(spec, theta, _mixtures_from(cfg, spec))


def _outdir(cfg: dict, args) -> Path:
    out = Path(args.out or cfg.get("out_dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_box(text: str):
    try:
        return [tuple(float(v) for v in part.split(":")) for part in text.split(",")]
    except ValueError as exc:
        raise InputError(f"cannot parse box {text!r} (expected lo:hi,lo:hi,...)") from exc


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    spec = _spec_from(cfg)
    theta = _dgp_theta_from(cfg)
    mixtures = _mixtures_from(cfg, spec)
    out = _outdir(cfg, args)
    population = population_probs(spec, theta, mixtures)
    (out / "population.csv").write_text(population.to_csv())
    (out / "population.json").write_text(population.to_json() + "\n")
    written = ["population.csv", "population.json"]
    if "simulate" in cfg:
        seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        emp = simulate_panel(spec, theta, mixtures, int(cfg["simulate"]["n"]), seed)
        (out / "empirical.csv").write_text(emp.to_csv())
        written.append("empirical.csv")
    print(f"wrote {', '.join(written)} to {out}")
    return EXIT_OK


def _identify(cfg, args, spec, probs):
    icfg = dict(cfg.get("identify", {}))
    mode = icfg.get("mode", "auto")
    step = args.grid_step if args.grid_step is not None else icfg.get("step", 0.01)
    box = _parse_box(args.box) if args.box else icfg.get("box")
    eq_tol = icfg.get("eq_tol")
    slack = icfg.get("slack", 0.0)

    if mode == "bounds_t2" or (mode == "auto" and spec.family == AR1
                               and spec.T == 2 and spec.covariates == "none"):
        return sharp_bounds_T2(probs.cell(0, spec.y0)), None
    if mode == "grid":
        if box is None:
            raise InputError("grid identification needs a box")
        ids = grid_identify(probs, box, step, eq_tol=eq_tol, slack=slack)
        return ids, ids.grid
    try:
        roots = solve_closed_forms(probs) if mode == "auto" else \
            solve_numeric(probs, box=box, step=step)
    except UnsupportedModelError as exc:
        raise InputError(f"{exc}; use identify.mode='grid' with a box") from exc
    if any("beta2" not in r.params and probs.spec.family == "ar2" for r in roots.roots):
        raise InputError("two-lag equality pins beta1 only; use identify.mode='grid'")
    return filter_roots(roots, probs, eq_tol=eq_tol, slack=slack), roots


def cmd_identify(args) -> int:
    cfg = _load_config(args.config)
    spec = _spec_from(cfg)
    probs = _probs_from(cfg, spec)
    out = _outdir(cfg, args)
    ids, extra = _identify(cfg, args, spec, probs)
    (out / "identified_set.json").write_text(dump_json(ids.to_json_dict()))
    written = ["identified_set.json"]
    if ids.kind == "grid":
        (out / "region.csv").write_text(ids.grid.to_csv())
        written.append("region.csv")
    elif extra is not None:
        (out / "roots.csv").write_text(extra.to_csv())
        written.append("roots.csv")
    print(f"wrote {', '.join(written)} to {out}")
    return EXIT_OK


def cmd_bound_functional(args) -> int:
    cfg = _load_config(args.config)
    spec = _spec_from(cfg)
    probs = _probs_from(cfg, spec)
    out = _outdir(cfg, args)
    requests = cfg.get("functionals")
    if not requests:
        raise InputError("config has no 'functionals'")
    ids, _ = _identify(cfg, args, spec, probs)
    results = []
    for req in requests:
        fspec = FunctionalSpec(
            kind=req["kind"],
            x_tilde_period=req.get("x_tilde_period"),
            history=tuple(req["history"]) if "history" in req else None,
        )
        xi = int(req.get("x_index", 0))
        y0 = int(req.get("y0", spec.y0))
        xvals = spec.x_values(xi)
        entry = {"kind": fspec.kind, "x_index": xi, "y0": y0,
                 "x": None if xvals is None else [list(v) for v in xvals]}
        if fspec.x_tilde_period is not None:
            entry["x_tilde_period"] = fspec.x_tilde_period
        if fspec.history is not None:
            entry["history"] = list(fspec.history)
        if ids.kind == "point":
            theta = ids.members[0]
            rep = build_representation(spec, theta, x_index=xi, y0=y0)
            r = moment_vector(rep, build_H(rep), probs.cell(xi, y0))
            entry["point"] = functional_point_value(fspec, rep, r)
            entry["eta"] = [float(v) for v in eta_vector(fspec, rep).eta]
            entry["r"] = [float(v) for v in r.r]
        else:
            lb, ub = functional_bounds(fspec, probs, ids, x_index=xi, y0=y0)
            entry["bounds"] = [lb, ub]
        results.append(entry)
    (out / "functionals.json").write_text(dump_json(results))
    print(f"wrote functionals.json to {out}")
    return EXIT_OK


def cmd_check_theta(args) -> int:
    cfg = _load_config(args.config)
    spec = _spec_from(cfg)
    theta = _theta_from(cfg)
    probs = _probs_from(cfg, spec)
    out = _outdir(cfg, args)
    icfg = cfg.get("identify", {})
    res = theta_membership(theta, probs, eq_tol=icfg.get("eq_tol"),
                           slack=icfg.get("slack", 0.0))
    doc = {
        "theta": theta.as_dict(),
        "is_member": bool(res.is_member),
        "eq_residual": res.eq_residual,
        "cells": {
            f"x{xi},y0={y0}": json.loads(rep.to_json())
            for (xi, y0), rep in sorted(res.reports.items())
        },
    }
    (out / "membership.json").write_text(dump_json(doc))
    print(f"theta is {'IN' if res.is_member else 'OUT OF'} the identified set; "
          f"wrote membership.json to {out}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    if args.example not in _repro.CATALOG:
        print(f"unknown example {args.example!r}; available: "
              f"{', '.join(sorted(_repro.CATALOG))}", file=sys.stderr)
        return EXIT_INPUT
    out = Path(args.out or f"out-{args.example}")
    out.mkdir(parents=True, exist_ok=True)
    checks = _repro.CATALOG[args.example](out)
    failed = 0
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        failed += not ok
    print(f"{len(checks) - failed}/{len(checks)} checks passed; artifacts in {out}")
    return EXIT_OK if failed == 0 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="panelogit",
        description="Sharp identified sets for dynamic panel logit models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="simulation seed (overrides config)")
        p.add_argument("--grid-step", type=float, dest="grid_step",
                       help="grid step (overrides config)")
        p.add_argument("--box", help="search box lo:hi,lo:hi,... (overrides config)")

    for name, fn in (("simulate", cmd_simulate), ("identify", cmd_identify),
                     ("bound-functional", cmd_bound_functional),
                     ("check-theta", cmd_check_theta)):
        p = sub.add_parser(name)
        add_common(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("reproduce")
    p.add_argument("example", help="catalogued example id")
    p.add_argument("--out", help="output directory")
    p.set_defaults(fn=cmd_reproduce)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MisspecifiedModelError as exc:
        print(f"empty identified set: {exc}", file=sys.stderr)
        return EXIT_EMPTY_SET
    except InadmissibleFunctionalError as exc:
        print(f"inadmissible functional: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE


if __name__ == "__main__":
    sys.exit(main())
