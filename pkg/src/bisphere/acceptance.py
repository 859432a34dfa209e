"""Built-in verification suite.

Each criterion re-derives a quantitative claim of the model from an
independent route (random-state algebra, spherical quadrature, adaptive
stroke integration, golden-section search) and checks it at a pinned
tolerance. `bisphere validate` runs these in-process and reports
machine-readable pass/fail per criterion; the pytest suite wraps the same
functions.

Criterion 10 includes a displacement-per-body-length band check that is
mathematically unattainable in the leading-order model: for any valid
rectangle X < ell_L - ell_s/3 < ell_L (the geometric term is bounded by
ell_L - ell_s and the volume-pump term by 2 a_L^3 / (3 ell_s^2) with
a_L < ell_s). It is evaluated and reported honestly rather than loosened.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import sim
from .model import (
    ControlPoint,
    ControlVelocity,
    SwimmerConfig,
    dilation_power,
    displacement_rate,
    radius_of_volume,
    rod_force,
    sphere_state,
    sphere_velocities,
    volume_of_radius,
)
from .model import _stokes_dilation_velocity
from .quadrature import golden_section_minimize
from .sim import integrate, rectangle_energy_closed_form
from .stroke import (
    RectangleStroke,
    allocate_durations,
    build_rectangle,
    build_small_loop,
    chart_area,
    mirror,
    optimal_leg_split,
    reparametrize,
    reverse,
)

RNG_SEED = 20260810

# Shared asymptotic sequence for the energy and drag criteria:
# (a_s/a_L, a_L/ell_L) pairs with ell_s = 0.02 ell_L.
ASYMPTOTIC_SEQUENCE = ((0.12, 0.008), (0.06, 0.004), (0.03, 0.002), (0.015, 0.001))

# Matching loop for the small-stroke drag check: slenderness 0.05 at the
# center, d_log_v = 0.1, elongated in ell (d_ell = 0.3 ell) so the volume
# legs stay cheap, optimally timed (each ell leg then takes ~tau/2).
SMALL_DRAG_EPS = 0.05
SMALL_DRAG_D_LOG_V = 0.1
SMALL_DRAG_D_ELL_FACTOR = 0.3


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    target: float
    tolerance: float
    note: str = ""


@dataclass(frozen=True)
class CriterionResult:
    cid: int
    title: str
    checks: tuple[CheckResult, ...]
    seconds: float

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


def _check_le(name, measured, bound, note=""):
    return CheckResult(
        name=name,
        passed=bool(measured <= bound),
        measured=float(measured),
        target=0.0,
        tolerance=float(bound),
        note=note,
    )


def _check_close(name, measured, target, rel_tol, note=""):
    err = abs(measured - target) / max(abs(target), 1e-300)
    return CheckResult(
        name=name,
        passed=bool(err <= rel_tol),
        measured=float(measured),
        target=float(target),
        tolerance=float(rel_tol),
        note=note or f"relative error {err:.3e}",
    )


def _check_true(name, condition, measured, note=""):
    return CheckResult(
        name=name,
        passed=bool(condition),
        measured=float(measured),
        target=1.0,
        tolerance=0.0,
        note=note,
    )


def _random_state(rng):
    v0 = rng.uniform(0.5, 50.0)
    v = rng.uniform(0.05, 0.95) * v0
    mu = rng.uniform(0.1, 10.0)
    cfg = SwimmerConfig(mu=mu, rho=0.0, v0=v0)
    a1 = radius_of_volume(v)
    a2 = radius_of_volume(v0 - v)
    ell = (a1 + a2) * 10.0 ** rng.uniform(0.35, 2.0)
    p = ControlPoint(ell=ell, v=v)
    w = ControlVelocity(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0))
    return cfg, p, w


def criterion_1():
    """Leading displacement identity and the dilation-power identity."""
    rng = np.random.default_rng(RNG_SEED)
    worst_disp = 0.0
    worst_dil = 0.0
    for _ in range(1000):
        cfg, p, w = _random_state(rng)
        st = sphere_state(cfg, p)
        lead = displacement_rate(cfg, p, w)
        f = rod_force(cfg, p, w.ell_dot)
        u1, u2 = sphere_velocities(cfg, p, f, w.v_dot)
        comp = 0.5 * (u1 + u2)
        # relative to the magnitudes the composition route actually sums
        scale = max(abs(lead), 0.5 * (abs(u1) + abs(u2)))
        worst_disp = max(worst_disp, abs(lead - comp) / max(scale, 1e-300))

        metric_term = (
            6.0
            * math.pi
            * cfg.mu
            * (2.0 / (9.0 * math.pi))
            * (1.0 / st.v1 + 1.0 / st.v2)
            * w.v_dot**2
        )
        both = dilation_power(cfg, st.v1, w.v_dot) + dilation_power(
            cfg, st.v2, -w.v_dot
        )
        if metric_term > 0.0:
            worst_dil = max(worst_dil, abs(both - metric_term) / metric_term)
    return "algebraic identities (1000 random states)", [
        _check_le("displacement-rate identity max rel err", worst_disp, 1e-12),
        _check_le("dilation-power identity max rel err", worst_dil, 1e-12),
    ]


def _sphere_quadrature(n_theta=16, n_phi=8):
    """Nodes and weights integrating over the unit sphere (Gauss-Legendre
    in cos(theta) x uniform in phi; >= 64 nodes)."""
    mu_nodes, mu_weights = np.polynomial.legendre.leggauss(n_theta)
    phis = 2.0 * math.pi * np.arange(n_phi) / n_phi
    w_phi = 2.0 * math.pi / n_phi
    dirs = []
    weights = []
    for m, wm in zip(mu_nodes, mu_weights):
        s = math.sqrt(1.0 - m * m)
        for phi in phis:
            dirs.append((s * math.cos(phi), s * math.sin(phi), m))
            weights.append(wm * w_phi)
    return np.array(dirs), np.array(weights)


def criterion_2():
    """Mass flux, surface velocity and incompressibility of the flow field."""
    mu = 1.3
    a = 1.0
    f = np.array([0.4, -0.3, 0.8])
    v_dot = 2.7
    dirs, weights = _sphere_quadrature()
    checks = []

    worst_flux = 0.0
    for r in (a, 2.0 * a, 10.0 * a):
        pts = r * dirs
        u = _stokes_dilation_velocity(mu, a, f, v_dot, pts)
        flux = float(np.sum(weights * np.sum(u * dirs, axis=1)) * r * r)
        worst_flux = max(worst_flux, abs(flux - v_dot) / abs(v_dot))
    checks.append(
        _check_le(
            "volume flux rel err at r in {a, 2a, 10a}", worst_flux, 1e-8,
            note=f"{dirs.shape[0]} quadrature nodes",
        )
    )

    worst_surf = 0.0
    for d in dirs[:: max(1, len(dirs) // 16)]:
        x = a * d
        u = _stokes_dilation_velocity(mu, a, f, v_dot, x[np.newaxis, :])[0]
        expected = f / (6.0 * math.pi * mu * a) + v_dot / (4.0 * math.pi * a * a) * d
        worst_surf = max(
            worst_surf,
            float(np.linalg.norm(u - expected) / np.linalg.norm(expected)),
        )
    checks.append(_check_le("surface velocity rel err", worst_surf, 1e-12))

    worst_div = 0.0
    rng = np.random.default_rng(RNG_SEED + 2)
    for _ in range(24):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        r = rng.uniform(2.0, 12.0) * a
        x = r * d
        h = 1e-4 * r
        div = 0.0
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            up = _stokes_dilation_velocity(mu, a, f, v_dot, (x + e)[np.newaxis, :])[0]
            dn = _stokes_dilation_velocity(mu, a, f, v_dot, (x - e)[np.newaxis, :])[0]
            div += (up[k] - dn[k]) / (2.0 * h)
        u = _stokes_dilation_velocity(mu, a, f, v_dot, x[np.newaxis, :])[0]
        worst_div = max(worst_div, abs(div) * r / float(np.linalg.norm(u)))
    checks.append(
        _check_le("divergence (relative, central differences)", worst_div, 1e-5)
    )
    return "flow-field physics", checks


def criterion_3():
    """Small-loop displacement approaches one sixth of the chart area."""
    a = 1.0
    cfg = SwimmerConfig.nondimensional(v0=2.0 * volume_of_radius(a))
    devs = []
    ratios = {}
    for eps in (0.1, 0.05, 0.025):
        center = ControlPoint(ell=a / eps, v=cfg.v0 / 2.0)
        loop = build_small_loop(cfg, center, 0.1, 2.0, period=1.0, timing="equal")
        res = integrate(cfg, loop, n_samples=16)
        area = chart_area(loop)
        pred = sim.predict_small_stroke_displacement(cfg, center, 0.1, 2.0)
        ratio = res.displacement / pred.value
        ratios[eps] = ratio
        devs.append(abs(ratio - 1.0))
        if abs(area - 0.2) > 1e-12:
            raise AssertionError(f"loop area drifted: {area}")
    d1 = (ratios[0.1] - 1.0) - (ratios[0.05] - 1.0)
    d2 = (ratios[0.05] - 1.0) - (ratios[0.025] - 1.0)
    shrink = d1 / d2 if d2 != 0 else math.inf
    return "small-stroke curvature coefficient 1/6", [
        _check_le("|ratio - 1| at eps = 0.05", devs[1], 0.02),
        _check_true(
            "deviation decreases under eps halving",
            devs[0] > devs[1] > devs[2],
            devs[2],
            note=f"devs {devs[0]:.2e} > {devs[1]:.2e} > {devs[2]:.2e}",
        ),
        _check_true(
            "deviation differences shrink ~8x per halving (cubic)",
            6.0 <= shrink <= 10.0,
            shrink,
            note=f"difference ratio {shrink:.2f}",
        ),
    ]


def criterion_4():
    """Rectangle displacement deviates from its predictor by c eps^3."""
    a_L = 1.0
    v_L = volume_of_radius(a_L)
    v_s = v_L / 64.0
    cfg = SwimmerConfig.nondimensional(v0=v_L + v_s)
    eps_values = (0.2, 0.1, 0.05, 0.025)
    devs = []
    worst_cf = 0.0
    for eps in eps_values:
        ell_s = a_L / eps
        ell_L = 10.0 * ell_s
        rect = RectangleStroke.create(cfg, ell_s, ell_L, v_s, 1.0, 1.0)
        stroke = build_rectangle(cfg, ell_s, ell_L, v_s, 1.0, 1.0)
        res = integrate(cfg, stroke, n_samples=16)
        pred = sim.predict_large_stroke_displacement(cfg, rect)
        devs.append(abs(res.displacement / pred.value - 1.0))
        cf = sim.rectangle_displacement_closed_form(cfg, rect)
        worst_cf = max(worst_cf, abs(res.displacement / cf - 1.0))
    coeffs = [d / e**3 for d, e in zip(devs, eps_values)]
    c_fit = sum(coeffs) / len(coeffs)
    envelope_ok = all(d <= 1.05 * c_fit * e**3 for d, e in zip(devs, eps_values))
    spread = max(coeffs) / min(coeffs)
    return "large-stroke displacement, O(eps^3) envelope", [
        _check_true(
            "deviation bounded by fitted c eps^3",
            envelope_ok and c_fit > 0.0,
            c_fit,
            note=f"fitted c = {c_fit:.4f}",
        ),
        _check_le("envelope coefficient spread (max/min)", spread, 1.1),
        _check_le("quadrature vs closed form rel err", worst_cf, 1e-9),
    ]


def _asymptotic_rectangles():
    for rho, eps_L in ASYMPTOTIC_SEQUENCE:
        a_L = 1.0
        v_L = volume_of_radius(a_L)
        v_s = volume_of_radius(rho * a_L)
        cfg = SwimmerConfig.nondimensional(v0=v_L + v_s)
        ell_L = a_L / eps_L
        ell_s = 0.02 * ell_L
        probe = RectangleStroke.create(cfg, ell_s, ell_L, v_s, 1.0, 1.0)
        t_ell, t_v = optimal_leg_split(cfg, probe, tau=1.0)
        yield cfg, RectangleStroke.create(cfg, ell_s, ell_L, v_s, t_ell, t_v)


def criterion_5():
    """Closed-form rectangle energy approaches 12 pi mu a_s ell_L^2 / T_ell."""
    ratios = []
    for cfg, rect in _asymptotic_rectangles():
        total, _ = rectangle_energy_closed_form(cfg, rect)
        ratios.append(total / sim.predict_rectangle_energy(cfg, rect).value)
    monotone = all(b > a for a, b in zip(ratios, ratios[1:]))
    return "rectangle energy asymptotics", [
        _check_true(
            "ratio approaches 1 monotonically",
            monotone and all(r < 1.0 for r in ratios),
            ratios[-1],
            note="ratios " + ", ".join(f"{r:.4f}" for r in ratios),
        ),
        _check_le("final |ratio - 1|", abs(ratios[-1] - 1.0), 0.10),
    ]


def criterion_6():
    """Optimally timed drag approaches 4 a_s; the a_s = a_L/4 numbers."""
    ratios = []
    for cfg, rect in _asymptotic_rectangles():
        stroke = build_rectangle(
            cfg, rect.ell_s, rect.ell_L, rect.v_s, rect.T_ell, rect.T_v
        )
        res = integrate(cfg, stroke, n_samples=16)
        ratios.append(res.drag / sim.predict_drag_large_stroke(cfg, rect).value)
    monotone = all(b < a for a, b in zip(ratios, ratios[1:]))
    checks = [
        _check_true(
            "drag/(4 a_s) decreases monotonically toward 1",
            monotone and all(r > 1.0 for r in ratios),
            ratios[-1],
            note="ratios " + ", ".join(f"{r:.4f}" for r in ratios),
        ),
        _check_le("final |drag/(4 a_s) - 1|", abs(ratios[-1] - 1.0), 0.10),
    ]

    a_L = 1.0
    v_L = volume_of_radius(a_L)
    v_s = v_L / 64.0  # a_s = a_L / 4
    cfg = SwimmerConfig.nondimensional(v0=v_L + v_s)
    rect = RectangleStroke.create(cfg, 20.0, 200.0, v_s, 1.0, 1.0)
    pred = sim.predict_drag_large_stroke(cfg, rect)
    checks.append(
        _check_close("a_s = a_L/4 gives predicted drag a_L", pred.value, a_L, 1e-12)
    )
    checks.append(
        _check_true(
            "shuttled volume fraction is exactly 63/64",
            pred.conditions["shuttle_fraction"] == 63.0 / 64.0,
            pred.conditions["shuttle_fraction"],
        )
    )
    return "large-stroke drag limit 4 a_s", checks


def criterion_7():
    """Numeric drag of the matching small loop against 72 a/(d log v)^2."""
    a = 1.0
    cfg = SwimmerConfig.nondimensional(v0=2.0 * volume_of_radius(a))
    ell = a / SMALL_DRAG_EPS
    center = ControlPoint(ell=ell, v=cfg.v0 / 2.0)
    d_ell = SMALL_DRAG_D_ELL_FACTOR * ell
    loop = build_small_loop(
        cfg, center, SMALL_DRAG_D_LOG_V, d_ell, period=1.0, timing="optimal"
    )
    res = integrate(cfg, loop, n_samples=16)
    pred = sim.predict_drag_small_stroke(cfg, a, SMALL_DRAG_D_LOG_V)
    scaled = res.drag * SMALL_DRAG_D_LOG_V**2 / a
    t_ell_frac = loop.segments[0].duration / loop.period
    return "small-stroke drag coefficient 72", [
        _check_close(
            "drag (d log v)^2 / a",
            scaled,
            72.0,
            0.05,
            note=(
                f"loop: eps={SMALL_DRAG_EPS}, d_log_v={SMALL_DRAG_D_LOG_V}, "
                f"d_ell={d_ell:.1f}; optimal timing puts {t_ell_frac:.3f} tau "
                "on each ell leg"
            ),
        ),
    ]


def criterion_8():
    """Closed-form time allocation against golden-section minimization."""
    tau = 2.0
    worst = 0.0
    for ratio in (0.01, 0.1, 1.0, 10.0, 100.0):
        c_ell = ratio
        c_v = 1.0
        t_ell, t_v = allocate_durations([c_ell, c_v], tau / 2.0)

        def energy(t):
            return 2.0 * c_ell / t + 2.0 * c_v / (tau / 2.0 - t)

        t_star = golden_section_minimize(energy, 1e-9 * tau, tau / 2.0 * (1 - 1e-9))
        worst = max(worst, abs(t_ell - t_star) / t_star)

    cfg = SwimmerConfig.nondimensional(v0=65.0)
    rect = RectangleStroke.create(cfg, 5.0, 50.0, 1.0, 1.0, 1.0)
    t_ell, t_v = optimal_leg_split(cfg, rect, tau)
    from .stroke import rectangle_leg_coefficients

    c_ell, c_v = rectangle_leg_coefficients(cfg, rect)

    def energy(t):
        return 2.0 * c_ell / t + 2.0 * c_v / (tau / 2.0 - t)

    t_star = golden_section_minimize(energy, 1e-9 * tau, tau / 2.0 * (1 - 1e-9))
    worst_rect = abs(t_ell - t_star) / t_star
    return "optimal timing vs golden-section search", [
        _check_le("max rel deviation across C ratios", worst, 1e-3),
        _check_le("rectangle split rel deviation", worst_rect, 1e-3),
    ]


def criterion_9():
    """Geometric-phase and scaling invariances of integrate()."""
    cfg = SwimmerConfig.nondimensional(v0=65.0)
    stroke = build_rectangle(cfg, 5.0, 50.0, 1.0, 1.0, 2.0)
    base = integrate(cfg, stroke, n_samples=16)
    checks = []

    fast = integrate(cfg, reparametrize(stroke, 3.7 * stroke.period), n_samples=16)
    checks.append(
        _check_le(
            "displacement invariant under reparametrization",
            abs(fast.displacement / base.displacement - 1.0),
            1e-10,
        )
    )
    checks.append(
        _check_le(
            "drag invariant under period rescaling",
            abs(fast.drag / base.drag - 1.0),
            1e-10,
        )
    )
    rev = integrate(cfg, reverse(stroke), n_samples=16)
    checks.append(
        _check_le(
            "displacement negated under reversal",
            abs(rev.displacement + base.displacement) / abs(base.displacement),
            1e-10,
        )
    )
    checks.append(
        _check_le(
            "energy preserved under reversal",
            abs(rev.energy / base.energy - 1.0),
            1e-12,
        )
    )
    mirrored = integrate(cfg, mirror(stroke, cfg.v0), n_samples=16)
    checks.append(
        _check_le(
            "displacement negated under bladder relabeling",
            abs(mirrored.displacement + base.displacement) / abs(base.displacement),
            1e-10,
        )
    )
    thick = SwimmerConfig(mu=6.25, rho=0.0, v0=65.0)
    viscous = integrate(thick, stroke, n_samples=16)
    checks.append(
        _check_le(
            "drag independent of viscosity",
            abs(viscous.drag / base.drag - 1.0),
            1e-12,
        )
    )
    return "geometric-phase properties", checks


def criterion_10():
    """Comparator formulas, reference drags, and the body-length band."""
    checks = []
    checks.append(
        _check_close(
            "three-sphere comparator at eps = 0.1, unit area",
            sim.three_sphere_small_stroke(0.1, 1.0, 1.0),
            0.07,
            1e-14,
        )
    )
    refs = dict(sim.reference_drags(1.0))
    checks.append(
        _check_true(
            "reference drags {a, 4a/3, 100a}",
            refs["dragged-sphere"] == 1.0
            and abs(refs["stone-samuel-bound"] - 4.0 / 3.0) < 1e-15
            and refs["flagellar-models"] == 100.0,
            refs["stone-samuel-bound"],
        )
    )

    a_L = 1.0
    v_L = volume_of_radius(a_L)
    v_s = volume_of_radius(0.3 * a_L)
    cfg = SwimmerConfig.nondimensional(v0=v_L + v_s)
    rect = RectangleStroke.create(cfg, 20.0, 200.0, v_s, 1.0, 1.0)
    pred = sim.predict_drag_large_stroke(cfg, rect)
    bound = dict(sim.reference_drags(a_L))["stone-samuel-bound"]
    checks.append(
        _check_true(
            "a_s < a_L/3 beats the surface-wave bound at radius a_L",
            pred.value < bound,
            pred.value,
            note=f"4 a_s = {pred.value:.3f} < (4/3) a_L = {bound:.3f}",
        )
    )

    best = 0.0
    best_desc = ""
    for radius_ratio in (4.0, 8.0, 16.0):
        for ell_frac in (0.02, 0.1, 0.3):
            v_L = volume_of_radius(1.0)
            v_s = v_L / radius_ratio**3
            cfg = SwimmerConfig.nondimensional(v0=v_L + v_s)
            ell_L = 40.0
            ell_s = max(ell_frac * ell_L, 1.3)
            rect = RectangleStroke.create(cfg, ell_s, ell_L, v_s, 1.0, 1.0)
            x = sim.rectangle_displacement_closed_form(cfg, rect)
            if x / ell_L > best:
                best = x / ell_L
                best_desc = f"a_L/a_s={radius_ratio}, ell_s/ell_L={ell_frac}"
    in_band = 1.0 <= best <= 1.5
    checks.append(
        CheckResult(
            name="displacement of 1 to 1.5 body lengths (body = ell_L)",
            passed=in_band,
            measured=best,
            target=1.0,
            tolerance=0.5,
            note=(
                f"best X/ell_L = {best:.3f} ({best_desc}); unattainable in the "
                "leading model, where X < ell_L - ell_s/3 for every valid "
                "rectangle"
            ),
        )
    )
    return "comparators and sanity band", checks


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
}


def run(criteria=None):
    """Run the selected criteria (all by default) and collect results."""
    results = []
    for cid in sorted(criteria or CRITERIA):
        if cid not in CRITERIA:
            raise KeyError(f"unknown criterion id {cid}")
        start = time.perf_counter()
        title, checks = CRITERIA[cid]()
        results.append(
            CriterionResult(
                cid=cid,
                title=title,
                checks=tuple(checks),
                seconds=time.perf_counter() - start,
            )
        )
    return results
