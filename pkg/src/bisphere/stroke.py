"""Closed strokes in the (ell, v) control plane.

A Stroke is an ordered tuple of timed Segments whose geometries come from
a closed set of primitives, so strokes serialize exactly:

* line in (ell, v)
* line in (ell, x) with x = arcsin(sqrt(v/v0)), the chart in which the
  volume-transfer cost has a constant coefficient
* polyline in (ell, v)
* ellipse arc in (ell, log v)

Each segment carries a duration and a speed profile. ConstantControlSpeed
traverses the parameter uniformly; ConstantMetricSpeed warps time so the
instantaneous power is constant along the segment, which is the
energy-optimal traversal of a fixed path in fixed time.

Displacement depends only on the traced path (a geometric phase), so the
builders fix orientation conventions explicitly: the canonical rectangle
extends ell while the left bladder is large, which makes the net
displacement positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Union

from .errors import DomainError
from .model import (
    ControlPoint,
    ControlVelocity,
    SwimmerConfig,
    power,
    radius_of_volume,
    sphere_state,
)
from .quadrature import QuadratureSettings, adaptive_quad

CLOSURE_RTOL = 1e-12


class SpeedProfile(str, Enum):
    CONSTANT_CONTROL = "constant-control"
    CONSTANT_METRIC = "constant-metric"


# ---------------------------------------------------------------------------
# geometry primitives


@dataclass(frozen=True)
class LineLV:
    """Straight segment in the (ell, v) plane."""

    ell_start: float
    v_start: float
    ell_end: float
    v_end: float

    def at(self, s):
        return (self.ell_start + (self.ell_end - self.ell_start) * s,
                self.v_start + (self.v_end - self.v_start) * s)

    def velocity(self, s):
        return (self.ell_end - self.ell_start, self.v_end - self.v_start)

    def reversed(self):
        return LineLV(self.ell_end, self.v_end, self.ell_start, self.v_start)

    def smooth_spans(self):
        return ((0.0, 1.0),)


@dataclass(frozen=True)
class LineLX:
    """Straight segment in the (ell, x) chart, x = arcsin(sqrt(v/vtotal)).

    Uniform traversal of this geometry is constant x_dot, the optimal
    profile for volume transfer. vtotal is stored so the segment is
    self-contained for evaluation and serialization.
    """

    vtotal: float
    ell_start: float
    x_start: float
    ell_end: float
    x_end: float

    def at(self, s):
        x = self.x_start + (self.x_end - self.x_start) * s
        return (self.ell_start + (self.ell_end - self.ell_start) * s,
                self.vtotal * math.sin(x) ** 2)

    def velocity(self, s):
        x = self.x_start + (self.x_end - self.x_start) * s
        dx = self.x_end - self.x_start
        return (self.ell_end - self.ell_start,
                self.vtotal * math.sin(2.0 * x) * dx)

    def reversed(self):
        return LineLX(self.vtotal, self.ell_end, self.x_end,
                      self.ell_start, self.x_start)

    def smooth_spans(self):
        return ((0.0, 1.0),)


@dataclass(frozen=True)
class Polyline:
    """Piecewise-linear path in (ell, v); equal parameter share per edge."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.points) < 2:
            raise DomainError("polyline needs at least two points")
        object.__setattr__(
            self, "points", tuple((float(l), float(v)) for l, v in self.points)
        )

    def _edge(self, s):
        n = len(self.points) - 1
        i = min(int(s * n), n - 1)
        return i, s * n - i

    def at(self, s):
        i, t = self._edge(s)
        (l0, v0), (l1, v1) = self.points[i], self.points[i + 1]
        return (l0 + (l1 - l0) * t, v0 + (v1 - v0) * t)

    def velocity(self, s):
        i, _ = self._edge(s)
        n = len(self.points) - 1
        (l0, v0), (l1, v1) = self.points[i], self.points[i + 1]
        return ((l1 - l0) * n, (v1 - v0) * n)

    def reversed(self):
        return Polyline(tuple(reversed(self.points)))

    def smooth_spans(self):
        n = len(self.points) - 1
        return tuple((i / n, (i + 1) / n) for i in range(n))


@dataclass(frozen=True)
class EllipseArc:
    """Arc of an ellipse in the (ell, log v) chart.

    (log v, ell)(theta) = (log_v_center + a_log_v cos theta,
                           ell_center  + a_ell   sin theta)

    with theta from theta0 to theta1. Increasing theta over a full turn is
    the positive orientation (counterclockwise in (log v, ell)).
    """

    ell_center: float
    log_v_center: float
    a_ell: float
    a_log_v: float
    theta0: float
    theta1: float

    def _theta(self, s):
        return self.theta0 + (self.theta1 - self.theta0) * s

    def at(self, s):
        th = self._theta(s)
        return (self.ell_center + self.a_ell * math.sin(th),
                math.exp(self.log_v_center + self.a_log_v * math.cos(th)))

    def velocity(self, s):
        th = self._theta(s)
        dth = self.theta1 - self.theta0
        v = math.exp(self.log_v_center + self.a_log_v * math.cos(th))
        return (self.a_ell * math.cos(th) * dth,
                -v * self.a_log_v * math.sin(th) * dth)

    def reversed(self):
        return replace(self, theta0=self.theta1, theta1=self.theta0)

    def smooth_spans(self):
        return ((0.0, 1.0),)


Geometry = Union[LineLV, LineLX, Polyline, EllipseArc]


@dataclass(frozen=True)
class Segment:
    geometry: Geometry
    duration: float
    profile: SpeedProfile = SpeedProfile.CONSTANT_CONTROL

    def __post_init__(self):
        if not (self.duration > 0.0) or not math.isfinite(self.duration):
            raise DomainError(f"segment duration must be positive, got {self.duration}")
        if not isinstance(self.profile, SpeedProfile):
            object.__setattr__(self, "profile", SpeedProfile(self.profile))

    def start(self):
        return self.geometry.at(0.0)

    def end(self):
        return self.geometry.at(1.0)


@dataclass(frozen=True)
class Stroke:
    """A closed, timed path in control space."""

    segments: tuple[Segment, ...]

    def __post_init__(self):
        if not self.segments:
            raise DomainError("a stroke needs at least one segment")
        object.__setattr__(self, "segments", tuple(self.segments))
        pts = [seg.start() for seg in self.segments] + [self.segments[-1].end()]
        scale_l = max(abs(l) for l, _ in pts) or 1.0
        scale_v = max(abs(v) for _, v in pts) or 1.0
        chain = list(self.segments) + [self.segments[0]]
        for i in range(len(self.segments)):
            l_end, v_end = chain[i].end()
            l_next, v_next = chain[i + 1].start()
            if abs(l_end - l_next) > CLOSURE_RTOL * scale_l or (
                abs(v_end - v_next) > CLOSURE_RTOL * scale_v
            ):
                raise DomainError(
                    f"stroke is not closed at segment {i}: "
                    f"({l_end}, {v_end}) -> ({l_next}, {v_next})"
                )

    @property
    def period(self):
        return sum(seg.duration for seg in self.segments)


# ---------------------------------------------------------------------------
# shape coordinate


def shape_coordinate(cfg: SwimmerConfig, v):
    """x = arcsin(sqrt(v/v0)); satisfies 4 v0 x_dot^2 = (1/v1 + 1/v2) v_dot^2."""
    if not (0.0 < v < cfg.v0):
        raise DomainError(f"v must lie strictly inside (0, {cfg.v0}), got {v}")
    return math.asin(math.sqrt(v / cfg.v0))


# ---------------------------------------------------------------------------
# rectangle strokes


@dataclass(frozen=True)
class RectangleStroke:
    """Rectangle ell_s <= ell <= ell_L, v_s <= v <= v_L with per-leg times.

    T_ell and T_v are the durations of one horizontal (ell) leg and one
    vertical (v) leg; the full period is 2 (T_ell + T_v).
    """

    ell_s: float
    ell_L: float
    v_s: float
    v_L: float
    T_ell: float
    T_v: float

    @property
    def period(self):
        return 2.0 * (self.T_ell + self.T_v)

    @classmethod
    def create(cls, cfg: SwimmerConfig, ell_s, ell_L, v_s, T_ell, T_v):
        """Validated constructor; v_L is pinned to v0 - v_s."""
        v_L = cfg.v0 - v_s
        rect = cls(ell_s=ell_s, ell_L=ell_L, v_s=v_s, v_L=v_L, T_ell=T_ell, T_v=T_v)
        _validate_rectangle(cfg, rect)
        return rect


def _validate_rectangle(cfg: SwimmerConfig, rect: RectangleStroke):
    if not (rect.ell_s < rect.ell_L):
        raise DomainError(
            f"need ell_s < ell_L, got ell_s={rect.ell_s}, ell_L={rect.ell_L}"
        )
    if not (rect.v_s < rect.v_L):
        raise DomainError(
            f"need v_s < v_L = v0 - v_s, got v_s={rect.v_s} with v0={cfg.v0}"
        )
    if abs(rect.v_s + rect.v_L - cfg.v0) > 1e-12 * cfg.v0:
        raise DomainError("rectangle volumes must satisfy v_s + v_L = v0")
    if not (rect.T_ell > 0.0 and rect.T_v > 0.0):
        raise DomainError("leg durations must be positive")
    for ell in (rect.ell_s, rect.ell_L):
        for v in (rect.v_s, rect.v_L):
            sphere_state(cfg, ControlPoint(ell=ell, v=v))  # overlap + band


def build_rectangle(cfg: SwimmerConfig, ell_s, ell_L, v_s, T_ell, T_v) -> Stroke:
    """Canonical four-leg rectangle, positively oriented.

    Legs: (ell_s, v_L) -> (ell_L, v_L) -> (ell_L, v_s) -> (ell_s, v_s) ->
    (ell_s, v_L). The ell legs run at constant ell_dot, the v legs at
    constant x_dot; both are the per-leg optimal profiles.
    """
    rect = RectangleStroke.create(cfg, ell_s, ell_L, v_s, T_ell, T_v)
    return rectangle_to_stroke(cfg, rect)


def rectangle_to_stroke(cfg: SwimmerConfig, rect: RectangleStroke) -> Stroke:
    x_s = shape_coordinate(cfg, rect.v_s)
    x_L = shape_coordinate(cfg, rect.v_L)
    segs = (
        Segment(LineLV(rect.ell_s, rect.v_L, rect.ell_L, rect.v_L), rect.T_ell),
        Segment(LineLX(cfg.v0, rect.ell_L, x_L, rect.ell_L, x_s), rect.T_v),
        Segment(LineLV(rect.ell_L, rect.v_s, rect.ell_s, rect.v_s), rect.T_ell),
        Segment(LineLX(cfg.v0, rect.ell_s, x_s, rect.ell_s, x_L), rect.T_v),
    )
    return Stroke(segments=segs)


# ---------------------------------------------------------------------------
# small loops


def build_small_loop(
    cfg: SwimmerConfig,
    center: ControlPoint,
    d_log_v,
    d_ell,
    period,
    shape="rectangle",
    timing="optimal",
) -> Stroke:
    """Small positively oriented loop around `center`.

    The loop covers signed area d_log_v * d_ell in the (log v, ell) chart:
    a rectangle with sides d_log_v (in log v) and d_ell (in ell), or an
    area-matched ellipse (semi-axes scaled by 2/sqrt(pi)).

    timing: "optimal" splits the period over the legs proportionally to
    the square root of each leg's energy coefficient; "equal" gives every
    leg the same duration. A loop with one zero side degenerates to a
    self-retracing back-and-forth path (zero area).
    """
    if not (period > 0.0):
        raise DomainError(f"period must be positive, got {period}")
    if d_log_v < 0.0 or d_ell < 0.0:
        raise DomainError("loop sides must be nonnegative; use reverse() to flip")
    if d_log_v == 0.0 and d_ell == 0.0:
        raise DomainError("loop must have at least one nonzero side")
    if timing not in ("optimal", "equal"):
        raise DomainError(f"unknown timing policy {timing!r}")

    if shape == "ellipse":
        scale = 2.0 / math.sqrt(math.pi)  # matches rectangle area
        geo = EllipseArc(
            ell_center=center.ell,
            log_v_center=math.log(center.v),
            a_ell=0.5 * d_ell * scale,
            a_log_v=0.5 * d_log_v * scale,
            theta0=0.0,
            theta1=2.0 * math.pi,
        )
        loop = Stroke(segments=(Segment(geo, period, SpeedProfile.CONSTANT_METRIC),))
        _check_loop_points(cfg, loop)
        return loop
    if shape != "rectangle":
        raise DomainError(f"unknown loop shape {shape!r}")

    v_lo = center.v * math.exp(-0.5 * d_log_v)
    v_hi = center.v * math.exp(+0.5 * d_log_v)
    ell_lo = center.ell - 0.5 * d_ell
    ell_hi = center.ell + 0.5 * d_ell

    if d_log_v == 0.0:
        legs = [
            Segment(LineLV(ell_lo, center.v, ell_hi, center.v), 1.0),
            Segment(LineLV(ell_hi, center.v, ell_lo, center.v), 1.0),
        ]
    elif d_ell == 0.0:
        x_lo = shape_coordinate(cfg, v_lo)
        x_hi = shape_coordinate(cfg, v_hi)
        legs = [
            Segment(LineLX(cfg.v0, center.ell, x_hi, center.ell, x_lo), 1.0),
            Segment(LineLX(cfg.v0, center.ell, x_lo, center.ell, x_hi), 1.0),
        ]
    else:
        x_lo = shape_coordinate(cfg, v_lo)
        x_hi = shape_coordinate(cfg, v_hi)
        # Same traversal pattern as the big rectangle: extend ell at high v.
        legs = [
            Segment(LineLV(ell_lo, v_hi, ell_hi, v_hi), 1.0),
            Segment(LineLX(cfg.v0, ell_hi, x_hi, ell_hi, x_lo), 1.0),
            Segment(LineLV(ell_hi, v_lo, ell_lo, v_lo), 1.0),
            Segment(LineLX(cfg.v0, ell_lo, x_lo, ell_lo, x_hi), 1.0),
        ]

    if timing == "equal":
        durations = [period / len(legs)] * len(legs)
    else:
        costs = [segment_cost_coefficient(cfg, seg) for seg in legs]
        durations = allocate_durations(costs, period)
    loop = Stroke(
        segments=tuple(
            Segment(seg.geometry, t, seg.profile) for seg, t in zip(legs, durations)
        )
    )
    _check_loop_points(cfg, loop)
    return loop


def _check_loop_points(cfg, stroke, n=16):
    for seg in stroke.segments:
        for i in range(n + 1):
            ell, v = seg.geometry.at(i / n)
            sphere_state(cfg, ControlPoint(ell=ell, v=v))


# ---------------------------------------------------------------------------
# stroke surgery


def reverse(stroke: Stroke) -> Stroke:
    """Traverse the same path backwards; an involution."""
    return Stroke(
        segments=tuple(
            Segment(seg.geometry.reversed(), seg.duration, seg.profile)
            for seg in reversed(stroke.segments)
        )
    )


def reparametrize(stroke: Stroke, new_period) -> Stroke:
    """Uniformly rescale all durations to reach new_period; geometry untouched."""
    if not (new_period > 0.0):
        raise DomainError(f"new period must be positive, got {new_period}")
    factor = new_period / stroke.period
    return Stroke(
        segments=tuple(
            Segment(seg.geometry, seg.duration * factor, seg.profile)
            for seg in stroke.segments
        )
    )


def mirror(stroke: Stroke, vtotal) -> Stroke:
    """Relabel the bladders: v -> vtotal - v along the whole stroke.

    Supported for line and polyline geometries (the relabeled ellipse arc
    leaves the (ell, log v) primitive family).
    """
    segs = []
    for seg in stroke.segments:
        g = seg.geometry
        if isinstance(g, LineLV):
            g2 = LineLV(g.ell_start, vtotal - g.v_start, g.ell_end, vtotal - g.v_end)
        elif isinstance(g, LineLX):
            half_pi = math.pi / 2.0
            g2 = LineLX(g.vtotal, g.ell_start, half_pi - g.x_start,
                        g.ell_end, half_pi - g.x_end)
        elif isinstance(g, Polyline):
            g2 = Polyline(tuple((l, vtotal - v) for l, v in g.points))
        else:
            raise DomainError("mirror is not defined for ellipse-arc geometry")
        segs.append(Segment(g2, seg.duration, seg.profile))
    return Stroke(segments=tuple(segs))


def build_polyline(cfg: SwimmerConfig, points, period=None, durations=None) -> Stroke:
    """Closed polyline stroke; one LineLV segment per edge.

    Either a total period (split equally) or per-edge durations.
    """
    pts = [(float(l), float(v)) for l, v in points]
    if len(pts) < 3:
        raise DomainError("a closed polyline needs at least 3 points")
    if abs(pts[0][0] - pts[-1][0]) > 1e-12 or abs(pts[0][1] - pts[-1][1]) > 1e-12:
        pts.append(pts[0])
    n = len(pts) - 1
    if durations is None:
        if period is None or not (period > 0.0):
            raise DomainError("polyline needs a positive period or durations")
        durations = [period / n] * n
    if len(durations) != n:
        raise DomainError(f"expected {n} durations, got {len(durations)}")
    for l, v in pts:
        sphere_state(cfg, ControlPoint(ell=l, v=v))
    segs = tuple(
        Segment(LineLV(pts[i][0], pts[i][1], pts[i + 1][0], pts[i + 1][1]), d)
        for i, d in enumerate(durations)
    )
    return Stroke(segments=segs)


# ---------------------------------------------------------------------------
# chart area and energy coefficients


def chart_area(stroke: Stroke, settings: QuadratureSettings | None = None):
    """Signed area of the stroke in the (log v, ell) chart.

    Computed as the loop integral of log v d ell; for the canonical
    rectangle this is exact (constant integrand per leg).
    """
    st = settings or QuadratureSettings(rel_tol=1e-13)
    total = 0.0
    for seg in stroke.segments:
        g = seg.geometry
        for s0, s1 in g.smooth_spans():
            def f(s):
                _, v = g.at(s)
                dl, _ = g.velocity(s)
                return math.log(v) * dl

            val, _ = adaptive_quad(f, s0, s1, st)
            total += val
    return total


def segment_cost_coefficient(cfg: SwimmerConfig, seg: Segment, settings=None):
    """Energy coefficient C of a segment: its energy when traversed in
    time T is C / T.

    ConstantMetricSpeed: C = (integral of sqrt(g) ds)^2 with g the power
    at unit parameter speed; ConstantControlSpeed: C = integral of g ds.
    The metric value never exceeds the control value (Cauchy-Schwarz).
    """
    st = settings or QuadratureSettings()
    g = seg.geometry

    def gval(s):
        ell, v = g.at(s)
        dl, dv = g.velocity(s)
        return power(cfg, ControlPoint(ell=ell, v=v), ControlVelocity(dl, dv))

    total = 0.0
    if seg.profile is SpeedProfile.CONSTANT_METRIC:
        for s0, s1 in g.smooth_spans():
            val, _ = adaptive_quad(lambda s: math.sqrt(gval(s)), s0, s1, st)
            total += val
        return total * total
    for s0, s1 in g.smooth_spans():
        val, _ = adaptive_quad(gval, s0, s1, st)
        total += val
    return total


def allocate_durations(costs, period):
    """Minimize sum(C_i / T_i) subject to sum(T_i) = period: T_i ~ sqrt(C_i)."""
    roots = [math.sqrt(max(c, 0.0)) for c in costs]
    norm = sum(roots)
    if norm == 0.0:
        return [period / len(costs)] * len(costs)
    if any(r == 0.0 for r in roots):
        raise DomainError(
            "cannot optimally allocate time to a zero-cost leg alongside "
            "nonzero-cost legs; use equal timing"
        )
    return [period * r / norm for r in roots]


def rectangle_leg_coefficients(cfg: SwimmerConfig, rect: RectangleStroke):
    """Per-leg energy coefficients (C_ell, C_v) of the canonical rectangle.

    C_ell = 6 pi mu (a_s a_L / (a_s + a_L)) (ell_L - ell_s)^2, identical
    for both ell legs by exchange symmetry of the harmonic mean;
    C_v = (16 mu / 3) v0 (x_L - x_s)^2 for the constant-x_dot volume legs.
    """
    a_s = radius_of_volume(rect.v_s)
    a_L = radius_of_volume(rect.v_L)
    harm = a_s * a_L / (a_s + a_L)
    c_ell = 6.0 * math.pi * cfg.mu * harm * (rect.ell_L - rect.ell_s) ** 2
    dx = shape_coordinate(cfg, rect.v_L) - shape_coordinate(cfg, rect.v_s)
    c_v = (16.0 * cfg.mu / 3.0) * cfg.v0 * dx**2
    return c_ell, c_v


def optimal_leg_split(cfg: SwimmerConfig, rect: RectangleStroke, tau):
    """Energy-optimal per-leg durations (T_ell, T_v) for total period tau.

    With per-leg energies C/T the optimum allocates time proportionally to
    sqrt(C) under 2 (T_ell + T_v) = tau.
    """
    if not (tau > 0.0):
        raise DomainError(f"period must be positive, got {tau}")
    c_ell, c_v = rectangle_leg_coefficients(cfg, rect)
    t_ell, t_v = allocate_durations([c_ell, c_v], tau / 2.0)
    return t_ell, t_v
