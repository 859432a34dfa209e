"""Hydrodynamic core of the two-bladder swimmer.

The swimmer is a pair of spherical bladders of radii a1, a2 joined by a
thin rod of length ell (center to center). The bladders exchange
incompressible fluid so their total volume v0 is conserved; the controls
are (ell, v) with v the volume of the left bladder. Everything here is
Stokes flow at separations large compared with the radii.

Conventions used throughout the package:

* The swimming axis points from sphere 1 (left, volume v) to sphere 2
  (right). Displacements, center velocities and forces are signed scalars
  along that axis.
* ``f`` is the axial rod force applied to sphere 1; sphere 2 receives
  ``-f``. Extending the rod (ell_dot > 0) therefore gives f < 0: the rod
  pushes the left sphere leftward and the right sphere rightward.
* The single-sphere flow solution is normalized so that a dilating sphere
  exports volume flux exactly v_dot and a dragged sphere surface moves at
  f/(6*pi*mu*a). Tests pin both properties.
* ``leading`` fidelity inverts the rod-force relation with the harmonic
  mean of the radii only; ``refined`` keeps the 1/(2*ell) cross terms in
  the inversion, i.e. the force denominator becomes 1/a1 + 1/a2 - 3/ell.

All functions are pure; no shared mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, ValidityError

FOUR_PI = 4.0 * math.pi

# Warning thresholds for the validity diagnostics. The model itself only
# requires "much less than one"; these cutoffs are where we start telling
# the user about it.
REYNOLDS_WARN = 0.1
SLENDERNESS_WARN = 0.2
FAR_FIELD_WARN = 0.1

_cbrt = getattr(math, "cbrt", lambda x: x ** (1.0 / 3.0))


class Fidelity(str, Enum):
    LEADING = "leading"
    REFINED = "refined"


@dataclass(frozen=True)
class SwimmerConfig:
    """Fluid and swimmer constants.

    mu: ambient dynamic viscosity [Pa s], mu > 0.
    rho: fluid density [kg/m^3], used only by the Reynolds diagnostics.
    v0: conserved total bladder volume [m^3].
    fidelity: whether the O(a/ell) rod-force correction is retained.
    v_margin: hard band keeping each bladder volume in
        [v_margin*v0, (1-v_margin)*v0]; the dilation power diverges like
        1/v so we refuse rather than regularize.
    """

    mu: float
    rho: float
    v0: float
    fidelity: Fidelity = Fidelity.LEADING
    v_margin: float = 1e-6

    def __post_init__(self):
        if not (self.mu > 0.0) or not math.isfinite(self.mu):
            raise DomainError(f"mu must be positive and finite, got {self.mu}")
        if self.rho < 0.0 or not math.isfinite(self.rho):
            raise DomainError(f"rho must be nonnegative and finite, got {self.rho}")
        if not (self.v0 > 0.0) or not math.isfinite(self.v0):
            raise DomainError(f"v0 must be positive and finite, got {self.v0}")
        if not (0.0 < self.v_margin < 0.5):
            raise DomainError(f"v_margin must lie in (0, 0.5), got {self.v_margin}")
        if not isinstance(self.fidelity, Fidelity):
            object.__setattr__(self, "fidelity", Fidelity(self.fidelity))

    @classmethod
    def nondimensional(cls, v0, fidelity=Fidelity.LEADING, v_margin=1e-6):
        """Unit-viscosity, inertialess preset used for reproduction runs."""
        return cls(mu=1.0, rho=0.0, v0=v0, fidelity=fidelity, v_margin=v_margin)


@dataclass(frozen=True)
class ControlPoint:
    """A point (ell, v) in control space: rod length and left volume."""

    ell: float
    v: float


@dataclass(frozen=True)
class ControlVelocity:
    """Control rates (d ell/dt, d v/dt)."""

    ell_dot: float
    v_dot: float

    def __post_init__(self):
        if not (math.isfinite(self.ell_dot) and math.isfinite(self.v_dot)):
            raise DomainError("control rates must be finite")


@dataclass(frozen=True)
class SphereState:
    """Radii and volumes of both bladders at one control point."""

    a1: float
    a2: float
    v1: float
    v2: float

    def eps(self, ell):
        """Slenderness parameter max(a1, a2)/ell of the superposition."""
        return max(self.a1, self.a2) / ell


@dataclass(frozen=True)
class FlowSample:
    """Fluid velocity at a field point, both as 3-vectors [m], [m/s]."""

    position: np.ndarray
    velocity: np.ndarray


@dataclass(frozen=True)
class ValidityReport:
    """Diagnostics only; never alters results.

    reynolds: rho * max(a) * |Xdot| / mu.
    eps: max(a)/ell.
    far_field_ok: ell * |Xdot| small against mu/rho (always true for rho=0).
    """

    reynolds: float
    eps: float
    far_field_ok: bool
    warnings: tuple[str, ...]


def radius_of_volume(v):
    """Radius of a sphere of volume v; exact inverse of volume_of_radius."""
    if not (v > 0.0):
        raise DomainError(f"volume must be positive, got {v}")
    return _cbrt(3.0 * v / FOUR_PI)


def volume_of_radius(a):
    if not (a > 0.0):
        raise DomainError(f"radius must be positive, got {a}")
    return FOUR_PI / 3.0 * a**3


def sphere_state(cfg: SwimmerConfig, p: ControlPoint) -> SphereState:
    """Split v0 into the two bladders at p and check model validity.

    Raises ValidityError if either volume leaves the allowed band or the
    spheres would overlap at separation p.ell.
    """
    lo = cfg.v_margin * cfg.v0
    hi = (1.0 - cfg.v_margin) * cfg.v0
    if not (lo <= p.v <= hi):
        raise ValidityError(
            f"left volume {p.v} outside allowed band [{lo}, {hi}] "
            f"(v_margin={cfg.v_margin})"
        )
    v1 = p.v
    v2 = cfg.v0 - p.v
    a1 = radius_of_volume(v1)
    a2 = radius_of_volume(v2)
    if p.ell <= a1 + a2:
        raise ValidityError(
            f"spheres overlap: ell={p.ell} <= a1+a2={a1 + a2}"
        )
    return SphereState(a1=a1, a2=a2, v1=v1, v2=v2)


def flow_field(cfg: SwimmerConfig, a, f, v_dot, x) -> FlowSample:
    """Velocity of the fluid around one dragged, dilating sphere.

    Superposition of the Stokes solution for a sphere of radius ``a``
    dragged by the force 3-vector ``f`` and a point source of strength
    ``v_dot``, evaluated at position ``x`` from the sphere center:

        u(x) = [ (3 + a^2/r^2) f + 3 (1 - a^2/r^2) (f.xhat) xhat ]
               / (24 pi mu r)  +  v_dot xhat / (4 pi r^2)

    The normalization gives volume flux exactly v_dot through any
    enclosing sphere and surface velocity f/(6 pi mu a) + radial dilation.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    if x.shape != (3,) or f.shape != (3,):
        raise DomainError("f and x must be 3-vectors")
    if not (a > 0.0):
        raise DomainError(f"radius must be positive, got {a}")
    r = float(np.linalg.norm(x))
    if r < a * (1.0 - 1e-12):
        raise DomainError(f"field point inside the sphere: |x|={r} < a={a}")
    u = _stokes_dilation_velocity(cfg.mu, a, f, v_dot, x[np.newaxis, :])[0]
    return FlowSample(position=x, velocity=u)


def _stokes_dilation_velocity(mu, a, f, v_dot, points):
    """Vectorized core of flow_field over an (n, 3) array of positions."""
    r2 = np.sum(points * points, axis=1)
    r = np.sqrt(r2)
    xhat = points / r[:, None]
    a2_over_r2 = (a * a) / r2
    f_dot_xhat = xhat @ f
    stokes = (
        (3.0 + a2_over_r2)[:, None] * f
        + (3.0 * (1.0 - a2_over_r2) * f_dot_xhat)[:, None] * xhat
    ) / (24.0 * math.pi * mu * r)[:, None]
    source = (v_dot / (FOUR_PI * r2))[:, None] * xhat
    return stokes + source


def two_sphere_flow(cfg: SwimmerConfig, p: ControlPoint, ell_dot, v_dot, points):
    """Superposed flow of the full swimmer at lab-frame points.

    Sphere centers sit at -ell/2 and +ell/2 on the x axis. The rod force
    follows from ell_dot at the configured fidelity; the left bladder
    dilates at +v_dot, the right at -v_dot.

    Returns (velocities, inside) where inside flags points lying within
    either sphere; velocities are zeroed there.
    """
    st = sphere_state(cfg, p)
    f = rod_force(cfg, p, ell_dot)
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    c1 = np.array([-0.5 * p.ell, 0.0, 0.0])
    c2 = np.array([+0.5 * p.ell, 0.0, 0.0])
    f1 = np.array([f, 0.0, 0.0])
    f2 = np.array([-f, 0.0, 0.0])
    rel1 = pts - c1
    rel2 = pts - c2
    inside = (np.linalg.norm(rel1, axis=1) < st.a1) | (
        np.linalg.norm(rel2, axis=1) < st.a2
    )
    ok = ~inside
    vel = np.zeros_like(pts)
    if np.any(ok):
        vel[ok] = _stokes_dilation_velocity(
            cfg.mu, st.a1, f1, v_dot, rel1[ok]
        ) + _stokes_dilation_velocity(cfg.mu, st.a2, f2, -v_dot, rel2[ok])
    return vel, inside


def sphere_velocities(cfg: SwimmerConfig, p: ControlPoint, f, v_dot):
    """Axial center velocities (U1, U2) under rod force f and transfer v_dot.

    f acts on sphere 1 and -f on sphere 2 (see module conventions). Each
    center moves by its own Stokes drag plus the far field of the other
    sphere's drag and dilation:

        2 pi U1 = +(f/mu) (1/(3 a1) - 1/(2 ell)) + v_dot / (2 ell^2)
        2 pi U2 = -(f/mu) (1/(3 a2) - 1/(2 ell)) + v_dot / (2 ell^2)

    The 1/(2 ell) cross terms are retained at both fidelities; the
    fidelity switch only affects how rod_force inverts these relations.
    """
    st = sphere_state(cfg, p)
    cross = 1.0 / (2.0 * p.ell)
    pump = v_dot / (2.0 * p.ell**2)
    u1 = (+(f / cfg.mu) * (1.0 / (3.0 * st.a1) - cross) + pump) / (2.0 * math.pi)
    u2 = (-(f / cfg.mu) * (1.0 / (3.0 * st.a2) - cross) + pump) / (2.0 * math.pi)
    return u1, u2


def _rod_mobility_denominator(cfg: SwimmerConfig, st: SphereState, ell):
    """1/a1 + 1/a2, minus 3/ell when the refined correction is kept."""
    den = 1.0 / st.a1 + 1.0 / st.a2
    if cfg.fidelity is Fidelity.REFINED:
        den -= 3.0 / ell
        if den <= 0.0:
            raise ValidityError(
                "refined rod-force denominator 1/a1 + 1/a2 - 3/ell is not "
                f"positive at ell={ell}; spheres are far too close for the "
                "refined inversion"
            )
    return den


def rod_force(cfg: SwimmerConfig, p: ControlPoint, ell_dot):
    """Axial force the rod applies to sphere 1 to achieve ell_dot.

    leading:  f = -6 pi mu ell_dot / (1/a1 + 1/a2)
    refined:  f = -6 pi mu ell_dot / (1/a1 + 1/a2 - 3/ell)

    Both come from inverting ell_dot = U2 - U1.
    """
    st = sphere_state(cfg, p)
    return -6.0 * math.pi * cfg.mu * ell_dot / _rod_mobility_denominator(cfg, st, p.ell)


def displacement_rate(cfg: SwimmerConfig, p: ControlPoint, w: ControlVelocity):
    """Velocity of the swimmer midpoint, Xdot = (U1 + U2)/2.

    At leading fidelity this is the closed form

        Xdot = ((a1 - a2)/(a1 + a2) ell_dot + v_dot/(2 pi ell^2)) / 2

    which is algebraically identical to composing sphere_velocities with
    the leading rod force. The refined path evaluates the composition.
    """
    st = sphere_state(cfg, p)
    if cfg.fidelity is Fidelity.LEADING:
        geo = (st.a1 - st.a2) / (st.a1 + st.a2) * w.ell_dot
        pump = w.v_dot / (2.0 * math.pi * p.ell**2)
        return 0.5 * (geo + pump)
    f = rod_force(cfg, p, w.ell_dot)
    u1, u2 = sphere_velocities(cfg, p, f, w.v_dot)
    return 0.5 * (u1 + u2)


def power(cfg: SwimmerConfig, p: ControlPoint, w: ControlVelocity):
    """Dissipated power for control rates w at point p.

        P = 6 pi mu [ ell_dot^2 / D + (2/(9 pi)) (1/v1 + 1/v2) v_dot^2 ]

    with D = 1/a1 + 1/a2 at leading fidelity (the rod power -f ell_dot)
    and D = 1/a1 + 1/a2 - 3/ell at refined fidelity. There is no
    ell_dot*v_dot cross term: exchanging the spheres flips ell_dot but
    not the dissipation, so the metric is even in ell_dot.
    """
    st = sphere_state(cfg, p)
    rod = w.ell_dot**2 / _rod_mobility_denominator(cfg, st, p.ell)
    dilation = (2.0 / (9.0 * math.pi)) * (1.0 / st.v1 + 1.0 / st.v2) * w.v_dot**2
    return 6.0 * math.pi * cfg.mu * (rod + dilation)


def surface_stress(cfg: SwimmerConfig, a, v_dot):
    """Normal stress on the surface of a sphere dilating at rate v_dot."""
    if not (a > 0.0):
        raise DomainError(f"radius must be positive, got {a}")
    return cfg.mu * v_dot / (math.pi * a**3)


def dilation_power(cfg: SwimmerConfig, v, v_dot):
    """Power needed to dilate one bladder of volume v at rate v_dot.

    sigma * v_dot = 4 mu v_dot^2 / (3 v). Summed over both bladders (rates
    +v_dot and -v_dot) this reproduces the dilation term of power().
    """
    if not (v > 0.0):
        raise DomainError(f"volume must be positive, got {v}")
    return 4.0 * cfg.mu * v_dot**2 / (3.0 * v)


def validity(cfg: SwimmerConfig, p: ControlPoint, w: ControlVelocity) -> ValidityReport:
    """Reynolds, slenderness and far-field diagnostics at one state."""
    st = sphere_state(cfg, p)
    a_max = max(st.a1, st.a2)
    speed = abs(displacement_rate(cfg, p, w))
    reynolds = cfg.rho * a_max * speed / cfg.mu
    eps = st.eps(p.ell)
    warnings = []
    if reynolds > REYNOLDS_WARN:
        warnings.append(
            f"reynolds: R={reynolds:.3g} exceeds {REYNOLDS_WARN}; inertia is not negligible"
        )
    if eps > SLENDERNESS_WARN:
        warnings.append(
            f"slenderness: max(a)/ell={eps:.3g} exceeds {SLENDERNESS_WARN}; "
            "superposition error is O(eps)"
        )
    far_field_ok = True
    if cfg.rho > 0.0:
        far_field_ok = p.ell * speed <= FAR_FIELD_WARN * cfg.mu / cfg.rho
        if not far_field_ok:
            warnings.append(
                f"far-field: ell*|Xdot|={p.ell * speed:.3g} is not small against "
                f"mu/rho={cfg.mu / cfg.rho:.3g}"
            )
    return ValidityReport(
        reynolds=reynolds, eps=eps, far_field_ok=far_field_ok, warnings=tuple(warnings)
    )
