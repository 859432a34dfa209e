"""Command-line front end.

Subcommands: simulate, sweep, optimize, validate, flowfield. All outputs
are deterministic: the same config bytes produce the same CSV/JSON bytes.
CSV cells use 16 significant digits in scientific notation, comma
delimiter, LF line endings, UTF-8.

Exit codes: 0 success, 2 config error, 3 model-validity error,
4 integration-accuracy error, 5 verification-criterion failure.
"""

from __future__ import annotations

import argparse
import copy
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, acceptance, sim
from .config import Experiment, load_config, parse_experiment, parse_flow, parse_sweep, parse_swimmer
from .errors import AccuracyError, ConfigError, DomainError, ValidityError
from .model import (
    ControlPoint,
    _stokes_dilation_velocity,
    radius_of_volume,
    two_sphere_flow,
)
from .quadrature import golden_section_minimize
from .stroke import RectangleStroke, optimal_leg_split, rectangle_leg_coefficients


def _fmt(x):
    """Full-precision scientific notation for CSV cells."""
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.15e}"


def _json_ready(obj):
    """Recursively make an object JSON-safe (inf/nan become null)."""
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _write_json(path, obj):
    text = json.dumps(_json_ready(obj), sort_keys=True, indent=2, allow_nan=False)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(cell) for cell in row) + "\n")


def _outdir(args):
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _load_experiment(args) -> Experiment:
    raw = load_config(args.config)
    exp = parse_experiment(raw)
    return exp.with_overrides(
        fidelity=args.fidelity, rel_tol=args.tolerance, samples=args.samples
    )


def _ratio(measured, predicted):
    if predicted == 0 or not (math.isfinite(measured) and math.isfinite(predicted)):
        return None
    return measured / predicted


def _predictions_for(exp: Experiment, extras, result):
    cfg = exp.swimmer
    predictions = []
    ratios = {}
    if "rectangle" in extras:
        rect = extras["rectangle"]
        p_disp = sim.predict_large_stroke_displacement(cfg, rect)
        p_energy = sim.predict_rectangle_energy(cfg, rect)
        p_drag = sim.predict_drag_large_stroke(cfg, rect)
        predictions = [p_disp, p_energy, p_drag]
        ratios = {
            p_disp.name: _ratio(result.displacement, p_disp.value),
            p_energy.name: _ratio(result.energy, p_energy.value),
            p_drag.name: _ratio(result.drag, p_drag.value),
        }
    elif "loop" in extras:
        loop = extras["loop"]
        center = loop["center"]
        p_disp = sim.predict_small_stroke_displacement(
            cfg, center, loop["d_log_v"], loop["d_ell"]
        )
        predictions = [p_disp]
        ratios = {p_disp.name: _ratio(result.displacement, p_disp.value)}
        if loop["d_log_v"] > 0:
            a_mean = radius_of_volume(center.v)
            p_drag = sim.predict_drag_small_stroke(cfg, a_mean, loop["d_log_v"])
            predictions.append(p_drag)
            ratios[p_drag.name] = _ratio(result.drag, p_drag.value)
    return predictions, ratios


def _summary_dict(exp: Experiment, extras, result, period):
    predictions, ratios = _predictions_for(exp, extras, result)
    return {
        "toolkit_version": __version__,
        "fidelity": result.fidelity.value,
        "period": period,
        "displacement": result.displacement,
        "energy": result.energy,
        "drag": result.drag,
        "drag_diverged": result.drag_diverged,
        "predictions": [
            {"name": p.name, "value": p.value, "conditions": p.conditions}
            for p in predictions
        ],
        "prediction_ratios": ratios,
        "validity": {
            "reynolds": result.validity.reynolds,
            "eps": result.validity.eps,
            "far_field_ok": result.validity.far_field_ok,
            "warnings": list(result.validity.warnings),
        },
        "config": exp.normalized(),
    }


def _trajectory_rows(samples):
    for i in range(len(samples.t)):
        yield (
            samples.t[i],
            samples.ell[i],
            samples.v[i],
            samples.a1[i],
            samples.a2[i],
            samples.displacement[i],
            samples.power[i],
            samples.energy[i],
        )


def cmd_simulate(args):
    exp = _load_experiment(args)
    stroke, extras = exp.build_stroke()
    result = sim.integrate(
        exp.swimmer, stroke, quad=exp.quad, n_samples=exp.outputs["samples"]
    )
    out = _outdir(args)
    traj_path = os.path.join(out, exp.outputs["trajectory"])
    _write_csv(
        traj_path,
        ["t", "ell", "v", "a1", "a2", "X", "P", "E_cum"],
        _trajectory_rows(result.samples),
    )
    summary_path = os.path.join(out, exp.outputs["summary"])
    _write_json(summary_path, _summary_dict(exp, extras, result, stroke.period))
    print(
        f"displacement={result.displacement:.9e} energy={result.energy:.9e} "
        f"drag={result.drag:.9e} -> {summary_path}"
    )
    return 0


_SWEEP_METRICS = [
    "displacement",
    "energy",
    "drag",
    "ratio_displacement_large_stroke",
    "ratio_energy_asymptotic",
    "ratio_drag_4as",
    "ratio_displacement_curvature",
    "ratio_drag_small",
]


def _set_config_path(raw, dotted, value):
    keys = dotted.split(".")
    node = raw
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(dotted, "path does not address an object field")
    node[keys[-1]] = value


def _sweep_point(task):
    raw, axes_items = task
    point = copy.deepcopy(raw)
    point.pop("sweep", None)
    for dotted, value in axes_items:
        _set_config_path(point, dotted, value)
    row = {key: value for key, value in axes_items}
    try:
        exp = parse_experiment(point)
        stroke, extras = exp.build_stroke()
        result = sim.integrate(
            exp.swimmer, stroke, quad=exp.quad, n_samples=exp.outputs["samples"]
        )
        _, ratios = _predictions_for(exp, extras, result)
        row["displacement"] = result.displacement
        row["energy"] = result.energy
        row["drag"] = result.drag
        row["ratio_displacement_large_stroke"] = ratios.get("large-stroke-displacement")
        row["ratio_energy_asymptotic"] = ratios.get("rectangle-energy")
        row["ratio_drag_4as"] = ratios.get("large-stroke-drag")
        row["ratio_displacement_curvature"] = ratios.get("small-stroke-displacement")
        row["ratio_drag_small"] = ratios.get("small-stroke-drag")
        row["error"] = ""
    except Exception as exc:  # per-point failure: record, keep sweeping
        for metric in _SWEEP_METRICS:
            row.setdefault(metric, None)
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_sweep(args):
    raw = load_config(args.config)
    sweep = parse_sweep(raw)
    # Base config must parse before sweeping.
    base = copy.deepcopy(raw)
    base.pop("sweep", None)
    if args.fidelity:
        _set_config_path(base, "swimmer.fidelity", args.fidelity)
    if args.tolerance:
        _set_config_path(base, "quadrature.rel_tol", args.tolerance)
    if args.samples:
        _set_config_path(base, "outputs.samples", args.samples)
    parse_experiment(base)

    axes = sweep["axes"]
    names = list(axes)
    if not names:
        grid = []
    elif sweep["mode"] == "zip":
        length = len(axes[names[0]])
        grid = [tuple((n, axes[n][i]) for n in names) for i in range(length)]
    else:
        grid = [
            tuple(zip(names, combo))
            for combo in itertools.product(*(axes[n] for n in names))
        ]
    if len(grid) > sweep["cap"]:
        raise ConfigError(
            "sweep.axes", f"grid has {len(grid)} points, exceeding cap {sweep['cap']}"
        )

    tasks = [(base, items) for items in grid]
    if args.jobs and args.jobs > 1 and tasks:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks, chunksize=8))
    else:
        rows = [_sweep_point(t) for t in tasks]

    header = names + _SWEEP_METRICS + ["error"]
    out = _outdir(args)
    path = os.path.join(out, "sweep.csv")
    _write_csv(path, header, ([row[h] for h in header] for row in rows))
    print(f"{len(rows)} grid points -> {path}")
    return 0


def cmd_optimize(args):
    exp = _load_experiment(args)
    if exp.stroke_kind != "rectangle":
        raise ConfigError(
            "stroke.type", "optimize supports rectangle strokes only"
        )
    cfg = exp.swimmer
    sp = exp.stroke_params
    timing = exp.timing
    if timing["mode"] == "explicit":
        period = 2.0 * (timing["T_ell"] + timing["T_v"])
    else:
        period = timing["period"]

    probe = RectangleStroke.create(cfg, sp["ell_s"], sp["ell_L"], sp["v_s"], 1.0, 1.0)
    t_ell, t_v = optimal_leg_split(cfg, probe, period)
    c_ell, c_v = rectangle_leg_coefficients(cfg, probe)

    def energy_of(t):
        return 2.0 * c_ell / t + 2.0 * c_v / (period / 2.0 - t)

    t_star = golden_section_minimize(
        energy_of, 1e-9 * period, (period / 2.0) * (1.0 - 1e-9)
    )
    rect_opt = RectangleStroke.create(cfg, sp["ell_s"], sp["ell_L"], sp["v_s"], t_ell, t_v)
    rect_eq = RectangleStroke.create(
        cfg, sp["ell_s"], sp["ell_L"], sp["v_s"], period / 4.0, period / 4.0
    )
    e_opt, _ = sim.rectangle_energy_closed_form(cfg, rect_opt)
    e_eq, _ = sim.rectangle_energy_closed_form(cfg, rect_eq)
    x = sim.rectangle_displacement_closed_form(cfg, rect_opt)
    drag = sim.drag_coefficient(period, e_opt, cfg.mu, x)
    summary = {
        "toolkit_version": __version__,
        "fidelity": cfg.fidelity.value,
        "period": period,
        "T_ell": t_ell,
        "T_v": t_v,
        "coefficients": {"C_ell": c_ell, "C_v": c_v},
        "golden_section": {
            "T_ell": t_star,
            "rel_deviation": abs(t_ell - t_star) / t_star,
        },
        "energy_optimal": e_opt,
        "energy_equal_split": e_eq,
        "displacement": x,
        "drag": drag,
        "prediction_drag_4as": sim.predict_drag_large_stroke(cfg, rect_opt).value,
        "config": exp.normalized(),
    }
    out = _outdir(args)
    path = os.path.join(out, exp.outputs["summary"])
    _write_json(path, summary)
    print(
        f"T_ell={t_ell:.9e} T_v={t_v:.9e} energy={e_opt:.9e} "
        f"(equal split {e_eq:.9e}) -> {path}"
    )
    return 0


def cmd_validate(args):
    ids = None
    if args.criteria:
        try:
            ids = sorted({int(tok) for tok in args.criteria.split(",") if tok.strip()})
        except ValueError:
            raise ConfigError("criteria", f"expected comma-separated integers, got {args.criteria!r}")
    try:
        results = acceptance.run(ids)
    except KeyError as exc:
        raise ConfigError("criteria", str(exc))
    all_passed = all(r.passed for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} criterion {r.cid}: {r.title} ({r.seconds:.2f} s)")
        for c in r.checks:
            mark = "ok" if c.passed else "FAIL"
            print(f"  [{mark}] {c.name}: measured={c.measured:.9g}"
                  + (f" ({c.note})" if c.note else ""))
    if args.out:
        report = {
            "toolkit_version": __version__,
            "all_passed": all_passed,
            "criteria": [
                {
                    "id": r.cid,
                    "title": r.title,
                    "passed": r.passed,
                    "seconds": r.seconds,
                    "checks": [
                        {
                            "name": c.name,
                            "passed": c.passed,
                            "measured": c.measured,
                            "target": c.target,
                            "tolerance": c.tolerance,
                            "note": c.note,
                        }
                        for c in r.checks
                    ],
                }
                for r in results
            ],
        }
        os.makedirs(args.out, exist_ok=True)
        _write_json(os.path.join(args.out, "validate.json"), report)
    return 0 if all_passed else 5


def _grid_axis(lo, hi, n):
    if n == 1:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def cmd_flowfield(args):
    raw = load_config(args.config)
    swimmer = parse_swimmer(raw)
    flow, grid = parse_flow(raw)
    xs = _grid_axis(grid["min"][0], grid["max"][0], grid["shape"][0])
    ys = _grid_axis(grid["min"][1], grid["max"][1], grid["shape"][1])
    zs = _grid_axis(grid["min"][2], grid["max"][2], grid["shape"][2])
    points = np.array([(x, y, z) for x in xs for y in ys for z in zs])

    if flow["mode"] == "single":
        a = flow["a"]
        f = np.array(flow["f"])
        radii = np.linalg.norm(points, axis=1)
        inside = radii < a
        vel = np.zeros_like(points)
        ok = ~inside
        if np.any(ok):
            vel[ok] = _stokes_dilation_velocity(
                swimmer.mu, a, f, flow["v_dot"], points[ok]
            )
    else:
        p = ControlPoint(ell=flow["ell"], v=flow["v"])
        vel, inside = two_sphere_flow(
            swimmer, p, flow["ell_dot"], flow["v_dot"], points
        )

    out = _outdir(args)
    path = os.path.join(out, "flowfield.csv")
    rows = (
        (
            points[i, 0],
            points[i, 1],
            points[i, 2],
            vel[i, 0],
            vel[i, 1],
            vel[i, 2],
            int(inside[i]),
        )
        for i in range(len(points))
    )
    _write_csv(path, ["x", "y", "z", "ux", "uy", "uz", "masked"], rows)
    print(f"{len(points)} grid points -> {path}")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="bisphere",
        description="Two-bladder low-Reynolds swimmer: simulate strokes, sweep "
        "parameters, optimize timing, validate the model, export flow fields.",
    )
    parser.add_argument("--version", action="version", version=f"bisphere {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default=None, help="output directory (default .)")
        p.add_argument(
            "--fidelity",
            choices=["leading", "refined"],
            default=None,
            help="override swimmer.fidelity",
        )
        p.add_argument(
            "--tolerance", type=float, default=None, help="override quadrature.rel_tol"
        )
        p.add_argument(
            "--samples", type=int, default=None, help="override outputs.samples"
        )
        p.add_argument(
            "--jobs", type=int, default=1, help="parallel workers (sweep only)"
        )

    p_sim = sub.add_parser("simulate", help="integrate one stroke; write trajectory + summary")
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="run a parameter grid; write sweep.csv")
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_opt = sub.add_parser("optimize", help="optimal leg-time split for a rectangle stroke")
    common(p_opt)
    p_opt.set_defaults(func=cmd_optimize)

    p_val = sub.add_parser("validate", help="run the built-in verification suite")
    common(p_val, needs_config=False)
    p_val.add_argument(
        "--criteria", default=None, help="comma-separated criterion ids (default all)"
    )
    p_val.set_defaults(func=cmd_validate)

    p_flow = sub.add_parser("flowfield", help="sample the flow field on a grid")
    common(p_flow)
    p_flow.set_defaults(func=cmd_flowfield)

    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValidityError as exc:
        print(f"model-validity error: {exc}", file=sys.stderr)
        return 3
    except AccuracyError as exc:
        print(
            f"integration-accuracy error: {exc} "
            f"(value ~ {exc.value_estimate:.6e}, error ~ {exc.error_estimate:.3e})",
            file=sys.stderr,
        )
        return 4


if __name__ == "__main__":
    sys.exit(main())
