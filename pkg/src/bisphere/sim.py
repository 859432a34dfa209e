"""Stroke integration, closed-form rectangle oracles and asymptotic predictors.

Displacement is integrated as a rate-independent line integral over the
path in control space; energy is accumulated per segment as C/T with C
the segment cost coefficient. This makes the geometric-phase invariance
of the displacement exact by construction and decouples path shape from
timing.

The closed forms and predictors in this module are leading-model
quantities. integrate() honors cfg.fidelity, so refined runs should be
compared against leading oracles only qualitatively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import (
    ControlPoint,
    ControlVelocity,
    Fidelity,
    SwimmerConfig,
    ValidityReport,
    displacement_rate,
    power,
    radius_of_volume,
    sphere_state,
    validity,
)
from .quadrature import QuadratureSettings, adaptive_quad, composite_simpson
from .stroke import (
    RectangleStroke,
    SpeedProfile,
    Stroke,
    rectangle_leg_coefficients,
    segment_cost_coefficient,
)

SIX_PI = 6.0 * math.pi


@dataclass(frozen=True)
class TrajectorySamples:
    """Diagnostic time series along one stroke (numpy arrays, equal length)."""

    t: np.ndarray
    ell: np.ndarray
    v: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    displacement: np.ndarray
    power: np.ndarray
    energy: np.ndarray


@dataclass(frozen=True)
class StrokeResult:
    """Net outcome of one stroke.

    drag is tau * energy / (6 pi mu displacement^2); when the displacement
    is indistinguishable from zero the drag genuinely diverges and is
    reported as +inf with drag_diverged set.
    """

    displacement: float
    energy: float
    drag: float
    drag_diverged: bool
    samples: TrajectorySamples
    validity: ValidityReport
    fidelity: Fidelity


def drag_coefficient(tau, energy, mu, displacement):
    """tau * E / (6 pi mu X^2): length-dimensioned inefficiency measure.

    Normalized so that dragging a sphere of radius a scores a.
    """
    return tau * energy / (SIX_PI * mu * displacement**2)


def _segment_displacement(cfg, seg, settings):
    """Line integral of the displacement 1-form along one segment."""
    g = seg.geometry
    total = 0.0
    err = 0.0
    for s0, s1 in g.smooth_spans():
        def integrand(s):
            ell, v = g.at(s)
            dl, dv = g.velocity(s)
            return displacement_rate(
                cfg, ControlPoint(ell=ell, v=v), ControlVelocity(dl, dv)
            )

        val, e = adaptive_quad(integrand, s0, s1, settings)
        total += val
        err += e
    return total, err


class _SegmentSampler:
    """Evaluates state, time rates and cumulative steps along one segment."""

    def __init__(self, cfg, seg):
        self.cfg = cfg
        self.seg = seg
        self.metric = seg.profile is SpeedProfile.CONSTANT_METRIC
        if self.metric:
            self.length = self._sqrt_power_integral(0.0, 1.0, adaptive=True)
        else:
            self.length = None

    def _power_at(self, s):
        ell, v = self.seg.geometry.at(s)
        dl, dv = self.seg.geometry.velocity(s)
        return power(self.cfg, ControlPoint(ell=ell, v=v), ControlVelocity(dl, dv))

    def _sqrt_power_integral(self, sa, sb, adaptive=False):
        f = lambda s: math.sqrt(self._power_at(s))
        if adaptive:
            total = 0.0
            for s0, s1 in self.seg.geometry.smooth_spans():
                val, _ = adaptive_quad(f, s0, s1, QuadratureSettings(rel_tol=1e-12))
                total += val
            return total
        return composite_simpson(f, sa, sb, 4)

    def state(self, s):
        """(ell, v, ell_dot, v_dot) with true time rates at parameter s."""
        g = self.seg.geometry
        ell, v = g.at(s)
        dl, dv = g.velocity(s)
        if self.metric:
            gv = self._power_at(s)
            sdot = 0.0 if gv == 0.0 else self.length / (self.seg.duration * math.sqrt(gv))
        else:
            sdot = 1.0 / self.seg.duration
        return ell, v, dl * sdot, dv * sdot

    def step(self, sa, sb):
        """(dt, dX, dE) accumulated over the parameter interval [sa, sb]."""
        g = self.seg.geometry

        def dxds(s):
            ell, v = g.at(s)
            dl, dv = g.velocity(s)
            return displacement_rate(
                self.cfg, ControlPoint(ell=ell, v=v), ControlVelocity(dl, dv)
            )

        dx = composite_simpson(dxds, sa, sb, 4)
        if self.metric:
            dlen = self._sqrt_power_integral(sa, sb)
            if self.length > 0:
                dt = self.seg.duration * dlen / self.length
                de = (self.length / self.seg.duration) * dlen
            else:
                dt = self.seg.duration * (sb - sa)
                de = 0.0
        else:
            dt = self.seg.duration * (sb - sa)
            de = composite_simpson(self._power_at, sa, sb, 4) / self.seg.duration
        return dt, dx, de


class _ValidityTracker:
    def __init__(self):
        self.reynolds = 0.0
        self.eps = 0.0
        self.far_ok = True
        self.warnings = {}

    def update(self, rep: ValidityReport):
        self.reynolds = max(self.reynolds, rep.reynolds)
        self.eps = max(self.eps, rep.eps)
        self.far_ok = self.far_ok and rep.far_field_ok
        for w in rep.warnings:
            self.warnings.setdefault(w.split(":")[0], w)

    def report(self):
        return ValidityReport(
            reynolds=self.reynolds,
            eps=self.eps,
            far_field_ok=self.far_ok,
            warnings=tuple(self.warnings[k] for k in sorted(self.warnings)),
        )


def _sample_trajectory(cfg, stroke, n_samples):
    """Sampled (t, state, power, cumulative X and E) along the stroke.

    Cumulative columns use fixed-order panels between sample points; the
    headline displacement and energy come from the adaptive integrals.
    """
    n_samples = max(int(n_samples), 2 * len(stroke.segments) + 1)
    tau = stroke.period
    rows_t = [0.0]
    rows_x = [0.0]
    rows_e = [0.0]
    rows_ell = []
    rows_v = []
    rows_a1 = []
    rows_a2 = []
    rows_p = []
    tracker = _ValidityTracker()

    def push_state(sampler, s):
        ell, v, ldot, vdot = sampler.state(s)
        p = ControlPoint(ell=ell, v=v)
        w = ControlVelocity(ldot, vdot)
        st = sphere_state(cfg, p)
        rows_ell.append(ell)
        rows_v.append(v)
        rows_a1.append(st.a1)
        rows_a2.append(st.a2)
        rows_p.append(power(cfg, p, w))
        tracker.update(validity(cfg, p, w))

    samplers = [_SegmentSampler(cfg, seg) for seg in stroke.segments]
    push_state(samplers[0], 0.0)
    for sampler in samplers:
        seg = sampler.seg
        n_seg = max(2, round(n_samples * seg.duration / tau))
        for s0, s1 in seg.geometry.smooth_spans():
            n_span = max(1, round(n_seg * (s1 - s0)))
            for i in range(n_span):
                sa = s0 + (s1 - s0) * i / n_span
                sb = s0 + (s1 - s0) * (i + 1) / n_span
                dt, dx, de = sampler.step(sa, sb)
                rows_t.append(rows_t[-1] + dt)
                rows_x.append(rows_x[-1] + dx)
                rows_e.append(rows_e[-1] + de)
                push_state(sampler, sb)

    samples = TrajectorySamples(
        t=np.array(rows_t),
        ell=np.array(rows_ell),
        v=np.array(rows_v),
        a1=np.array(rows_a1),
        a2=np.array(rows_a2),
        displacement=np.array(rows_x),
        power=np.array(rows_p),
        energy=np.array(rows_e),
    )
    return samples, tracker.report()


def integrate(cfg: SwimmerConfig, stroke: Stroke, quad=None, n_samples=200) -> StrokeResult:
    """Displacement, dissipated energy and drag of one closed stroke.

    quad: QuadratureSettings (default relative tolerance 1e-10).
    n_samples: resolution of the diagnostic trajectory.
    """
    settings = quad or QuadratureSettings()
    x_total = 0.0
    x_err = 0.0
    energy = 0.0
    for seg in stroke.segments:
        dx, de = _segment_displacement(cfg, seg, settings)
        x_total += dx
        x_err += de
        energy += segment_cost_coefficient(cfg, seg, settings) / seg.duration

    samples, worst = _sample_trajectory(cfg, stroke, n_samples)

    tau = stroke.period
    # Below ~10x the accumulated quadrature error the sign of X is noise;
    # the drag integral genuinely diverges there.
    x_floor = 10.0 * max(x_err, 1e-15 * _path_scale(stroke))
    if abs(x_total) <= x_floor:
        drag = math.inf
        diverged = True
    else:
        drag = drag_coefficient(tau, energy, cfg.mu, x_total)
        diverged = False
    return StrokeResult(
        displacement=x_total,
        energy=energy,
        drag=drag,
        drag_diverged=diverged,
        samples=samples,
        validity=worst,
        fidelity=cfg.fidelity,
    )


def _path_scale(stroke):
    scale = 0.0
    for seg in stroke.segments:
        l0, _ = seg.start()
        l1, _ = seg.end()
        scale = max(scale, abs(l0), abs(l1))
    return scale or 1.0


# ---------------------------------------------------------------------------
# closed-form rectangle oracles


def rectangle_displacement_closed_form(cfg: SwimmerConfig, rect: RectangleStroke):
    """Exact leading-model displacement of the canonical rectangle.

    X = (a_L - a_s)/(a_L + a_s) (ell_L - ell_s)
        + (v_L - v_s)/(4 pi) (1/ell_s^2 - 1/ell_L^2)

    obtained by antidifferentiating the displacement 1-form leg by leg
    (radii constant on ell legs, ell constant on v legs).
    """
    a_s = radius_of_volume(rect.v_s)
    a_L = radius_of_volume(rect.v_L)
    geometric = (a_L - a_s) / (a_L + a_s) * (rect.ell_L - rect.ell_s)
    pump = (rect.v_L - rect.v_s) / (4.0 * math.pi) * (
        1.0 / rect.ell_s**2 - 1.0 / rect.ell_L**2
    )
    return geometric + pump


def rectangle_energy_closed_form(cfg: SwimmerConfig, rect: RectangleStroke):
    """Exact leading-model dissipated energy of the canonical rectangle.

    Returns (total, (C1, C2, C3, C4)) with one coefficient per leg in
    traversal order; each leg dissipates C/T over its duration.
    """
    c_ell, c_v = rectangle_leg_coefficients(cfg, rect)
    coefficients = (c_ell, c_v, c_ell, c_v)
    total = 2.0 * c_ell / rect.T_ell + 2.0 * c_v / rect.T_v
    return total, coefficients


# ---------------------------------------------------------------------------
# asymptotic predictors


@dataclass(frozen=True)
class Prediction:
    """A predicted quantity with the numeric margins of its assumptions."""

    name: str
    value: float
    conditions: dict[str, float]


def predict_small_stroke_displacement(cfg, center: ControlPoint, d_log_v, d_ell):
    """Small-loop displacement: one sixth of the (log v, ell) loop area.

    Stated for near-equal bladders; the center imbalance and slenderness
    are reported as condition margins.
    """
    st = sphere_state(cfg, center)
    eps = st.eps(center.ell)
    return Prediction(
        name="small-stroke-displacement",
        value=d_log_v * d_ell / 6.0,
        conditions={
            "eps": eps,
            "eps_cubed": eps**3,
            "center_imbalance": abs(2.0 * center.v / cfg.v0 - 1.0),
            "d_log_v": d_log_v,
        },
    )


def predict_large_stroke_displacement(cfg, rect: RectangleStroke):
    """Rectangle displacement ignoring the O(eps^3) volume-pump term."""
    a_s = radius_of_volume(rect.v_s)
    a_L = radius_of_volume(rect.v_L)
    eps = a_L / rect.ell_s
    return Prediction(
        name="large-stroke-displacement",
        value=(a_L - a_s) / (a_L + a_s) * (rect.ell_L - rect.ell_s),
        conditions={"eps": eps, "eps_cubed": eps**3},
    )


def predict_rectangle_energy(cfg, rect: RectangleStroke):
    """Asymptotic rectangle dissipation 6 pi mu 2 a_s ell_L^2 / T_ell.

    Valid when ell_L^2 >> ell_s^2 and ell_L/a_s >> sqrt(v_L/v_s); the
    eps^2 margin uses eps = a_s/ell_L, the relevant small parameter here.
    """
    a_s = radius_of_volume(rect.v_s)
    eps = a_s / rect.ell_L
    return Prediction(
        name="rectangle-energy",
        value=SIX_PI * cfg.mu * 2.0 * a_s * rect.ell_L**2 / rect.T_ell,
        conditions={
            "ell_ratio_sq": (rect.ell_s / rect.ell_L) ** 2,
            "aspect_margin": math.sqrt(rect.v_L / rect.v_s) * a_s / rect.ell_L,
            "correction": eps**2 * (rect.v_L / rect.v_s) * (rect.T_ell / rect.T_v),
        },
    )


def predict_drag_large_stroke(cfg, rect: RectangleStroke):
    """Optimally timed large-rectangle drag: four small-bladder radii.

    Beating a dragged sphere of the large radius needs a_s = a_L/4, i.e.
    shuttling 63/64 of the volume each stroke; the achieved shuttle
    fraction is reported as a condition.
    """
    a_s = radius_of_volume(rect.v_s)
    energy_pred = predict_rectangle_energy(cfg, rect)
    conditions = dict(energy_pred.conditions)
    conditions["shuttle_fraction"] = 1.0 - rect.v_s / rect.v_L
    return Prediction(name="large-stroke-drag", value=4.0 * a_s, conditions=conditions)


def predict_drag_small_stroke(cfg, a, d_log_v):
    """Small-stroke drag 72 a / (d log v)^2 for near-equal bladders.

    Assumes the loop spends essentially the whole period on the ell legs
    (per-leg time tau/2 in the cheap-volume-leg limit) and comparable
    relative extents in ell and v.
    """
    return Prediction(
        name="small-stroke-drag",
        value=72.0 * a / d_log_v**2,
        conditions={"d_log_v": d_log_v},
    )


def three_sphere_small_stroke(eps, d_log_l2, d_l1):
    """Published small-cycle displacement of the three-linked-spheres
    swimmer, 0.7 eps per unit loop area; comparator only, no three-sphere
    hydrodynamics here."""
    return 0.7 * eps * d_log_l2 * d_l1


def reference_drags(a):
    """Benchmark drags for a body of radius a: direct dragging, the
    theoretical surface-wave swimmer bound, and flagellar model estimates."""
    if not (a > 0.0):
        raise DomainError(f"radius must be positive, got {a}")
    return [
        ("dragged-sphere", a),
        ("stone-samuel-bound", 4.0 * a / 3.0),
        ("flagellar-models", 100.0 * a),
    ]
