"""Declarative experiment configs (JSON) and their validation.

The config is also the serialization format for strokes: the stroke
section names one of the closed geometry families with plain numeric
parameters, so a config echoed into a report reproduces the run exactly.

Schema (defaults in parentheses):

    swimmer:    mu, rho, v0, fidelity ("leading"), v_margin (1e-6)
    stroke:     type = rectangle | small_loop | polyline
                rectangle:  ell_s, ell_L, v_s
                small_loop: ell, d_log_v, d_ell, v (v0/2), shape ("rectangle")
                polyline:   points = [[ell, v], ...]
    timing:     mode = explicit | optimal | equal | durations
                explicit:  T_ell, T_v          (rectangle)
                optimal:   period              (rectangle, small_loop)
                equal:     period              (any type)
                durations: durations = [...]   (polyline)
    quadrature: rel_tol (1e-10), max_depth (28)
    outputs:    samples (200), trajectory ("trajectory.csv"),
                summary ("summary.json")

Optional top-level sections: "sweep" (cmd_sweep) and "flow"/"grid"
(cmd_flowfield). Unknown keys anywhere are rejected with the field path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .errors import ConfigError
from .model import ControlPoint, Fidelity, SwimmerConfig
from .quadrature import QuadratureSettings
from .stroke import (
    RectangleStroke,
    Stroke,
    build_polyline,
    build_rectangle,
    build_small_loop,
    optimal_leg_split,
)

_MISSING = object()


def _join(path, key):
    return f"{path}.{key}" if path else key


def _as_dict(value, path):
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected an object, got {type(value).__name__}")
    return value


def _section(raw, path, key, required=True):
    if key not in raw:
        if required:
            raise ConfigError(_join(path, key), "missing required section")
        return {}
    return _as_dict(raw[key], _join(path, key))


def _check_keys(d, path, allowed):
    for key in d:
        if key not in allowed:
            raise ConfigError(_join(path, key), "unknown field")


def _number(d, path, key, default=_MISSING):
    if key not in d:
        if default is _MISSING:
            raise ConfigError(_join(path, key), "missing required field")
        return default
    val = d[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(_join(path, key), f"expected a number, got {val!r}")
    return float(val)


def _integer(d, path, key, default=_MISSING):
    if key not in d:
        if default is _MISSING:
            raise ConfigError(_join(path, key), "missing required field")
        return default
    val = d[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(_join(path, key), f"expected an integer, got {val!r}")
    return val


def _string(d, path, key, default=_MISSING, choices=None):
    if key not in d:
        if default is _MISSING:
            raise ConfigError(_join(path, key), "missing required field")
        return default
    val = d[key]
    if not isinstance(val, str):
        raise ConfigError(_join(path, key), f"expected a string, got {val!r}")
    if choices is not None and val not in choices:
        raise ConfigError(
            _join(path, key), f"must be one of {sorted(choices)}, got {val!r}"
        )
    return val


@dataclass(frozen=True)
class Experiment:
    """Parsed and validated experiment description."""

    swimmer: SwimmerConfig
    stroke_kind: str
    stroke_params: dict
    timing: dict
    quad: QuadratureSettings
    outputs: dict

    def with_overrides(self, fidelity=None, rel_tol=None, samples=None):
        exp = self
        if fidelity is not None:
            exp = replace(exp, swimmer=replace(exp.swimmer, fidelity=Fidelity(fidelity)))
        if rel_tol is not None:
            exp = replace(exp, quad=replace(exp.quad, rel_tol=rel_tol))
        if samples is not None:
            exp = replace(exp, outputs={**exp.outputs, "samples": samples})
        return exp

    def normalized(self):
        """Canonical config dict; parse(normalized()) is the identity."""
        return {
            "swimmer": {
                "mu": self.swimmer.mu,
                "rho": self.swimmer.rho,
                "v0": self.swimmer.v0,
                "fidelity": self.swimmer.fidelity.value,
                "v_margin": self.swimmer.v_margin,
            },
            "stroke": {"type": self.stroke_kind, **self.stroke_params},
            "timing": dict(self.timing),
            "quadrature": {
                "rel_tol": self.quad.rel_tol,
                "max_depth": self.quad.max_depth,
            },
            "outputs": dict(self.outputs),
        }

    def build_stroke(self):
        """Instantiate (stroke, extras); extras carries the rectangle or
        loop record needed by the predictors."""
        cfg = self.swimmer
        kind = self.stroke_kind
        timing = self.timing
        extras = {}
        if kind == "rectangle":
            sp = self.stroke_params
            if timing["mode"] == "explicit":
                t_ell, t_v = timing["T_ell"], timing["T_v"]
            else:
                period = timing["period"]
                if timing["mode"] == "optimal":
                    probe = RectangleStroke.create(
                        cfg, sp["ell_s"], sp["ell_L"], sp["v_s"], 1.0, 1.0
                    )
                    t_ell, t_v = optimal_leg_split(cfg, probe, period)
                else:  # equal
                    t_ell = t_v = period / 4.0
            rect = RectangleStroke.create(
                cfg, sp["ell_s"], sp["ell_L"], sp["v_s"], t_ell, t_v
            )
            extras["rectangle"] = rect
            return build_rectangle(cfg, rect.ell_s, rect.ell_L, rect.v_s, t_ell, t_v), extras
        if kind == "small_loop":
            sp = self.stroke_params
            center = ControlPoint(ell=sp["ell"], v=sp["v"])
            loop = build_small_loop(
                cfg,
                center,
                sp["d_log_v"],
                sp["d_ell"],
                timing["period"],
                shape=sp["shape"],
                timing=timing["mode"],
            )
            extras["loop"] = {"center": center, **sp}
            return loop, extras
        # polyline
        sp = self.stroke_params
        if timing["mode"] == "durations":
            return (
                build_polyline(cfg, sp["points"], durations=timing["durations"]),
                extras,
            )
        return build_polyline(cfg, sp["points"], period=timing["period"]), extras


def parse_experiment(raw, path="") -> Experiment:
    raw = _as_dict(raw, path or "config")
    _check_keys(raw, path, {"swimmer", "stroke", "timing", "quadrature", "outputs",
                            "sweep", "flow", "grid"})
    swimmer = parse_swimmer(raw, path)
    stroke_kind, stroke_params = _parse_stroke(raw, swimmer, path)
    timing = _parse_timing(raw, stroke_kind, path)
    quad = _parse_quadrature(raw, path)
    outputs = _parse_outputs(raw, path)
    return Experiment(
        swimmer=swimmer,
        stroke_kind=stroke_kind,
        stroke_params=stroke_params,
        timing=timing,
        quad=quad,
        outputs=outputs,
    )


def parse_swimmer(raw, path="") -> SwimmerConfig:
    p = _join(path, "swimmer")
    d = _section(raw, path, "swimmer")
    _check_keys(d, p, {"mu", "rho", "v0", "fidelity", "v_margin"})
    mu = _number(d, p, "mu")
    rho = _number(d, p, "rho", 0.0)
    v0 = _number(d, p, "v0")
    fidelity = _string(d, p, "fidelity", "leading", choices={"leading", "refined"})
    v_margin = _number(d, p, "v_margin", 1e-6)
    if mu <= 0:
        raise ConfigError(_join(p, "mu"), "must be positive")
    if rho < 0:
        raise ConfigError(_join(p, "rho"), "must be nonnegative")
    if v0 <= 0:
        raise ConfigError(_join(p, "v0"), "must be positive")
    if not (0.0 < v_margin < 0.5):
        raise ConfigError(_join(p, "v_margin"), "must lie in (0, 0.5)")
    return SwimmerConfig(mu=mu, rho=rho, v0=v0, fidelity=Fidelity(fidelity),
                         v_margin=v_margin)


def _parse_stroke(raw, swimmer, path):
    p = _join(path, "stroke")
    d = _section(raw, path, "stroke")
    kind = _string(d, p, "type", choices={"rectangle", "small_loop", "polyline"})
    if kind == "rectangle":
        _check_keys(d, p, {"type", "ell_s", "ell_L", "v_s"})
        ell_s = _number(d, p, "ell_s")
        ell_L = _number(d, p, "ell_L")
        v_s = _number(d, p, "v_s")
        if not ell_s > 0:
            raise ConfigError(_join(p, "ell_s"), "must be positive")
        if not ell_L > ell_s:
            raise ConfigError(_join(p, "ell_L"), "must exceed stroke.ell_s")
        if not 0 < v_s:
            raise ConfigError(_join(p, "v_s"), "must be positive")
        if not v_s < swimmer.v0 / 2.0:
            raise ConfigError(
                _join(p, "v_s"),
                f"must be less than swimmer.v0/2 = {swimmer.v0 / 2.0} so that "
                "the small bladder is the small one",
            )
        return kind, {"ell_s": ell_s, "ell_L": ell_L, "v_s": v_s}
    if kind == "small_loop":
        _check_keys(d, p, {"type", "ell", "v", "d_log_v", "d_ell", "shape"})
        ell = _number(d, p, "ell")
        v = _number(d, p, "v", swimmer.v0 / 2.0)
        d_log_v = _number(d, p, "d_log_v")
        d_ell = _number(d, p, "d_ell")
        shape = _string(d, p, "shape", "rectangle", choices={"rectangle", "ellipse"})
        if not ell > 0:
            raise ConfigError(_join(p, "ell"), "must be positive")
        if not 0 < v < swimmer.v0:
            raise ConfigError(_join(p, "v"), f"must lie in (0, {swimmer.v0})")
        if d_log_v < 0 or d_ell < 0:
            raise ConfigError(_join(p, "d_log_v"), "loop sides must be nonnegative")
        return kind, {
            "ell": ell,
            "v": v,
            "d_log_v": d_log_v,
            "d_ell": d_ell,
            "shape": shape,
        }
    _check_keys(d, p, {"type", "points"})
    points = d.get("points")
    if not isinstance(points, list) or len(points) < 3:
        raise ConfigError(_join(p, "points"), "expected a list of at least 3 [ell, v] pairs")
    parsed = []
    for i, pt in enumerate(points):
        if (
            not isinstance(pt, list)
            or len(pt) != 2
            or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in pt)
        ):
            raise ConfigError(f"{p}.points[{i}]", "expected an [ell, v] number pair")
        parsed.append([float(pt[0]), float(pt[1])])
    return kind, {"points": parsed}


def _parse_timing(raw, stroke_kind, path):
    p = _join(path, "timing")
    d = _section(raw, path, "timing")
    mode = _string(d, p, "mode", choices={"explicit", "optimal", "equal", "durations"})
    allowed_modes = {
        "rectangle": {"explicit", "optimal", "equal"},
        "small_loop": {"optimal", "equal"},
        "polyline": {"equal", "durations"},
    }[stroke_kind]
    if mode not in allowed_modes:
        raise ConfigError(
            _join(p, "mode"),
            f"mode {mode!r} not supported for {stroke_kind} strokes "
            f"(allowed: {sorted(allowed_modes)})",
        )
    if mode == "explicit":
        _check_keys(d, p, {"mode", "T_ell", "T_v"})
        t_ell = _number(d, p, "T_ell")
        t_v = _number(d, p, "T_v")
        if t_ell <= 0 or t_v <= 0:
            raise ConfigError(_join(p, "T_ell"), "leg durations must be positive")
        return {"mode": mode, "T_ell": t_ell, "T_v": t_v}
    if mode == "durations":
        _check_keys(d, p, {"mode", "durations"})
        durations = d.get("durations")
        if not isinstance(durations, list) or not durations:
            raise ConfigError(_join(p, "durations"), "expected a nonempty list")
        vals = []
        for i, t in enumerate(durations):
            if isinstance(t, bool) or not isinstance(t, (int, float)) or t <= 0:
                raise ConfigError(f"{p}.durations[{i}]", "must be a positive number")
            vals.append(float(t))
        return {"mode": mode, "durations": vals}
    _check_keys(d, p, {"mode", "period"})
    period = _number(d, p, "period")
    if period <= 0:
        raise ConfigError(_join(p, "period"), "must be positive")
    return {"mode": mode, "period": period}


def _parse_quadrature(raw, path):
    d = raw.get("quadrature", {})
    p = _join(path, "quadrature")
    d = _as_dict(d, p)
    _check_keys(d, p, {"rel_tol", "max_depth"})
    rel_tol = _number(d, p, "rel_tol", 1e-10)
    max_depth = _integer(d, p, "max_depth", 28)
    if not (0.0 < rel_tol < 1.0):
        raise ConfigError(_join(p, "rel_tol"), "must lie in (0, 1)")
    if max_depth < 1:
        raise ConfigError(_join(p, "max_depth"), "must be >= 1")
    return QuadratureSettings(rel_tol=rel_tol, max_depth=max_depth)


def _parse_outputs(raw, path):
    d = raw.get("outputs", {})
    p = _join(path, "outputs")
    d = _as_dict(d, p)
    _check_keys(d, p, {"samples", "trajectory", "summary"})
    samples = _integer(d, p, "samples", 200)
    if samples < 2:
        raise ConfigError(_join(p, "samples"), "must be >= 2")
    return {
        "samples": samples,
        "trajectory": _string(d, p, "trajectory", "trajectory.csv"),
        "summary": _string(d, p, "summary", "summary.json"),
    }


def parse_sweep(raw, path=""):
    """The sweep section: axes over numeric config fields."""
    p = _join(path, "sweep")
    d = _section(raw, path, "sweep")
    _check_keys(d, p, {"mode", "axes", "cap"})
    mode = _string(d, p, "mode", "product", choices={"product", "zip"})
    cap = _integer(d, p, "cap", 100_000)
    axes_raw = _section(d, p, "axes")
    if not axes_raw:
        return {"mode": mode, "cap": cap, "axes": {}}
    axes = {}
    for key, values in axes_raw.items():
        kp = f"{p}.axes.{key}"
        if not isinstance(values, list):
            raise ConfigError(kp, "expected a list of numbers")
        vals = []
        for i, v in enumerate(values):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{kp}[{i}]", "expected a number")
            vals.append(float(v))
        axes[key] = vals
    if mode == "zip":
        lengths = {len(v) for v in axes.values()}
        if len(lengths) > 1:
            raise ConfigError(
                _join(p, "axes"), "zip mode requires equal-length axes"
            )
    return {"mode": mode, "cap": cap, "axes": axes}


def parse_flow(raw, path=""):
    """The flow and grid sections for cmd_flowfield."""
    p_flow = _join(path, "flow")
    d = _section(raw, path, "flow")
    mode = _string(d, p_flow, "mode", choices={"single", "pair"})
    if mode == "single":
        _check_keys(d, p_flow, {"mode", "a", "f", "v_dot"})
        a = _number(d, p_flow, "a")
        if a <= 0:
            raise ConfigError(_join(p_flow, "a"), "must be positive")
        f_raw = d.get("f", [0.0, 0.0, 0.0])
        if not isinstance(f_raw, list) or len(f_raw) != 3:
            raise ConfigError(_join(p_flow, "f"), "expected a 3-vector")
        flow = {
            "mode": mode,
            "a": a,
            "f": [float(c) for c in f_raw],
            "v_dot": _number(d, p_flow, "v_dot", 0.0),
        }
    else:
        _check_keys(d, p_flow, {"mode", "ell", "v", "ell_dot", "v_dot"})
        flow = {
            "mode": mode,
            "ell": _number(d, p_flow, "ell"),
            "v": _number(d, p_flow, "v"),
            "ell_dot": _number(d, p_flow, "ell_dot", 0.0),
            "v_dot": _number(d, p_flow, "v_dot", 0.0),
        }

    p_grid = _join(path, "grid")
    g = _section(raw, path, "grid")
    _check_keys(g, p_grid, {"min", "max", "shape"})
    lo = g.get("min")
    hi = g.get("max")
    shape = g.get("shape")
    for name, val in (("min", lo), ("max", hi)):
        if not isinstance(val, list) or len(val) != 3 or any(
            isinstance(c, bool) or not isinstance(c, (int, float)) for c in val
        ):
            raise ConfigError(_join(p_grid, name), "expected a 3-vector of numbers")
    if (
        not isinstance(shape, list)
        or len(shape) != 3
        or any(isinstance(c, bool) or not isinstance(c, int) for c in shape)
    ):
        raise ConfigError(_join(p_grid, "shape"), "expected three integers")
    if any(n < 1 for n in shape):
        raise ConfigError(_join(p_grid, "shape"), "grid resolution must be >= 1 per axis")
    grid = {
        "min": [float(c) for c in lo],
        "max": [float(c) for c in hi],
        "shape": list(shape),
    }
    return flow, grid


def load_config(config_path):
    try:
        with open(config_path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {config_path}")
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}")
