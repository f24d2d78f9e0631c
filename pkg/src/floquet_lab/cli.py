"""Command-line front end: ``floquet-lab <command> --config <path>``.

Exit codes: 0 ok, 2 config error, 3 hypothesis violation (Lambda0 <= 0),
4 invariant failure.
"""

import argparse
import copy
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .artifacts import ArtifactWriter, config_hash
from .errors import (
    CoefficientError,
    ConfigError,
    ExprError,
    FloquetError,
    GridError,
    HypothesisError,
    MeasureError,
)
from .geometry import (
    IndicatorFn,
    lambda0_sign_report,
    lambda_value,
    maximize_lambda,
    trace_xi,
)
from .operator import build_grid, make_coefficients
from .spectral import band_functions
from .synthesis import (
    BlochFamily,
    envelope_fit,
    envelope_violation,
    make_measure,
    residual_norm,
    synthesize,
)
from .verify import DEFAULT_TOLERANCES, run_suite

log = logging.getLogger("floquet_lab")

COMMANDS = ("bands", "lambda", "xi", "synth", "verify")
EXIT_OK, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_INVARIANT = 0, 2, 3, 4


def load_config(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        config = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    return config


def validate_config(config):
    for key in ("dimension", "grid", "a"):
        if key not in config:
            raise ConfigError(f"config is missing {key!r}")
    if config["dimension"] not in (1, 2):
        raise ConfigError(f"dimension unsupported: {config['dimension']}")
    grid = config["grid"]
    if not isinstance(grid, list) or len(grid) != config["dimension"]:
        raise ConfigError("grid must list one size per dimension")
    for key, value in config.get("tolerances", {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {key!r}")
        if key != "hessian_max_eig" and not (isinstance(value, (int, float)) and value > 0):
            raise ConfigError(f"tolerance {key!r} must be positive")


def apply_overrides(config, grid=None, tol=None, seed=None):
    config = copy.deepcopy(config)
    if grid is not None:
        config["grid"] = [grid] * config.get("dimension", 1)
    if tol is not None:
        config.setdefault("tolerances", {})["tol_pos"] = tol
    if seed is not None:
        config["seed"] = seed
    return config


def build_operator(config):
    try:
        grid = build_grid(config["dimension"], config["grid"])
        return make_coefficients(
            {"a": config["a"], "b": config.get("b", 0.0), "c": config.get("c", 0.0)}, grid
        )
    except (GridError, CoefficientError, ExprError) as exc:
        raise ConfigError(str(exc)) from exc


def _linspace(spec, default):
    spec = spec or default
    if isinstance(spec, dict):
        return np.linspace(spec["min"], spec["max"], int(spec["count"]))
    return np.asarray(spec, dtype=float)


def _directions(n, count):
    if n == 1:
        return [np.array([1.0]), np.array([-1.0])]
    theta = 2 * np.pi * np.arange(count) / count
    return [np.array([np.cos(t), np.sin(t)]) for t in theta]


# -- commands -----------------------------------------------------------------


def cmd_bands(coeffs, config, tols, out):
    block = config.get("bands", {})
    n = coeffs.n
    path = block.get("path")
    if path is None or isinstance(path, dict):
        path = path or {}
        start = np.asarray(path.get("from", [-np.pi] * n), dtype=float)
        stop = np.asarray(path.get("to", [np.pi] * n), dtype=float)
        count = int(path.get("count", 41))
        path = start[None, :] + np.linspace(0, 1, count)[:, None] * (stop - start)[None, :]
    bands = band_functions(coeffs, path, int(block.get("count", 4)))
    out.csv_from("bands.csv", bands.to_csv)
    return EXIT_OK


def cmd_lambda(coeffs, config, tols, out):
    block = config.get("lambda", {})
    n = coeffs.n
    axis = _linspace(block.get("xi"), {"min": -2.0, "max": 2.0, "count": 21})
    if n == 1:
        pts = axis[:, None]
    else:
        X, Y = np.meshgrid(axis, axis, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
    rows = [list(p) + [lambda_value(coeffs, p)] for p in pts]
    out.csv("lambda_grid.csv", [f"xi_{l + 1}" for l in range(n)] + ["lambda"], rows)
    lambda0, xi_star = maximize_lambda(coeffs)
    report = lambda0_sign_report(coeffs, tol_pos=tols["tol_pos"])
    out.json("lambda0.json", {"lambda0": lambda0, "xi_star": xi_star, "sign_report": report})
    return EXIT_OK


def _trace(coeffs, config, tols):
    block = config.get("xi", {})
    return trace_xi(coeffs, int(block.get("nodes", 64)), tol_pos=tols["tol_pos"])


def cmd_xi(coeffs, config, tols, out):
    block = config.get("xi", {})
    surface = _trace(coeffs, config, tols)
    n = coeffs.n
    rows = [[node.param, *node.xi, node.pair.lam] for node in surface.nodes]
    out.csv("xi_surface.csv", ["param"] + [f"xi_{l + 1}" for l in range(n)] + ["lambda_residual"], rows)
    nodes = []
    for node in surface.nodes:
        rec = {"param": node.param, "xi": node.xi, "radius": node.radius, "lambda": node.pair.lam}
        if block.get("include_eigenfunctions", False):
            rec["p"] = node.pair.p.ravel()
        nodes.append(rec)
    out.json(
        "xi_surface.json",
        {
            "center": surface.center,
            "lambda0": surface.lambda0,
            "hull_vertices": surface.hull_vertices,
            "convex": surface.is_convex(),
            "nodes": nodes,
        },
    )
    h = IndicatorFn(surface, refine=bool(block.get("refine_indicator", False)))
    dirs = _directions(n, int(block.get("directions", 32)))
    out.csv("indicator.csv", [f"omega_{l + 1}" for l in range(n)] + ["h"],
            [[*w, h(w)] for w in dirs])
    worst = float(np.max(np.abs(surface.residuals())))
    if worst > tols["xi_residual"] or not surface.is_convex():
        log.error("traced surface fails its invariants (residual %.3e)", worst)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_synth(coeffs, config, tols, out):
    block = config.get("synth", {})
    surface = _trace(coeffs, config, tols)
    family = BlochFamily(surface)
    n = coeffs.n
    try:
        mu = make_measure(block.get("measure", {"density": 1.0}), surface)
        u = synthesize(family, mu)
    except MeasureError as exc:
        raise ConfigError(str(exc)) from exc
    pts_spec = block.get("points", {"lower": [-2.0] * n, "upper": [2.0] * n, "count": 9})
    if isinstance(pts_spec, dict):
        axes = [np.linspace(lo, hi, int(pts_spec["count"]))
                for lo, hi in zip(pts_spec["lower"], pts_spec["upper"])]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    else:
        pts = np.asarray(pts_spec, dtype=float).reshape(-1, n)
    out.csv_from("solution.csv", lambda fh: u.write_csv(fh, pts))

    h = IndicatorFn(surface, refine=bool(block.get("refine_indicator", False)))
    radii = _linspace(block.get("radii"), {"min": 5.0, "max": 50.0, "count": 46})
    rays = block.get("rays")
    rays = _directions(n, 8) if rays is None else [np.asarray(r, float) / np.linalg.norm(r) for r in rays]
    fits = envelope_fit(u, h, rays, radii)
    dense = np.linspace(0.0, radii[-1], 8 * len(radii) + 1)[1:] - 0.013
    sound = True
    for fit in fits:
        if not fit["skipped"]:
            fit["max_excess"] = envelope_violation(u, fit, dense)
            fit["sound"] = fit["max_excess"] <= 1e-6
            sound &= fit["sound"]
    out.json("envelope.json", {"declared_order": u.order, "fits": fits, "sound": sound})

    box = block.get("residual_box", {"lower": [-1.0] * n, "upper": [1.0] * n, "spacing": 0.05})
    r1 = residual_norm(coeffs, u, box["lower"], box["upper"], box["spacing"])
    r2 = residual_norm(coeffs, u, box["lower"], box["upper"], box["spacing"] / 2)
    out.json("residual.json", {
        "spacing": [box["spacing"], box["spacing"] / 2],
        "relative_residual": [r1, r2],
        "ratio": r1 / r2,
    })
    return EXIT_OK if sound else EXIT_INVARIANT


def cmd_verify(coeffs, config, tols, out):
    block = config.get("verify", {})
    seed = int(config.get("seed", block.get("seed", 0)))
    results = run_suite(coeffs, seed=seed, tolerances=tols,
                       tube_samples=int(block.get("tube_samples", 200)))
    failed = [r["name"] for r in results if r["passed"] is False]
    out.json("verify.json", {"seed": seed, "properties": results, "failed": failed,
                             "all_passed": not failed})
    return EXIT_INVARIANT if failed else EXIT_OK


HANDLERS = {
    "bands": cmd_bands,
    "lambda": cmd_lambda,
    "xi": cmd_xi,
    "synth": cmd_synth,
    "verify": cmd_verify,
}


def run(config, command, out_dir):
    """Run ``command`` on an already-loaded config. Returns the exit code."""
    if command not in HANDLERS:
        log.error("unknown command %r", command)
        return EXIT_CONFIG
    try:
        validate_config(config)
        coeffs = build_operator(config)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    tols = dict(DEFAULT_TOLERANCES)
    tols.update(config.get("tolerances", {}))
    out = ArtifactWriter(Path(out_dir), config_hash(config), tols)
    try:
        return HANDLERS[command](coeffs, config, tols, out)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except HypothesisError as exc:
        log.error("%s", exc)
        return EXIT_HYPOTHESIS
    except FloquetError as exc:
        log.error("invariant failure: %s", exc)
        return EXIT_INVARIANT


def main(argv=None):
    parser = argparse.ArgumentParser(prog="floquet-lab", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the JSON run config")
    parser.add_argument("--out", default="out", help="output directory (default: ./out)")
    parser.add_argument("--grid", type=int, help="override every grid size")
    parser.add_argument("--tol", type=float, help="override tol_pos, the Lambda0 > 0 threshold")
    parser.add_argument("--seed", type=int, help="seed for randomised checks (default 0)")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    config = apply_overrides(config, grid=args.grid, tol=args.tol, seed=args.seed)
    code = run(config, args.command, args.out)
    if code == EXIT_OK:
        log.info("%s finished", args.command)
    return code


if __name__ == "__main__":
    sys.exit(main())
