"""Two-bladder low-Reynolds swimmer toolkit.

Simulates closed strokes in the (ell, v) control plane: net displacement,
dissipated energy, drag efficiency, stroke timing optimization, and the
flow field of the dragged, dilating spheres.
"""

from .errors import AccuracyError, ConfigError, DomainError, ValidityError
from .model import (
    ControlPoint,
    ControlVelocity,
    Fidelity,
    FlowSample,
    SphereState,
    SwimmerConfig,
    ValidityReport,
    dilation_power,
    displacement_rate,
    flow_field,
    power,
    radius_of_volume,
    rod_force,
    sphere_state,
    sphere_velocities,
    surface_stress,
    two_sphere_flow,
    validity,
    volume_of_radius,
)
from .quadrature import QuadratureSettings, adaptive_quad, composite_simpson
from .sim import (
    Prediction,
    StrokeResult,
    TrajectorySamples,
    drag_coefficient,
    integrate,
    predict_drag_large_stroke,
    predict_drag_small_stroke,
    predict_large_stroke_displacement,
    predict_rectangle_energy,
    predict_small_stroke_displacement,
    rectangle_displacement_closed_form,
    rectangle_energy_closed_form,
    reference_drags,
    three_sphere_small_stroke,
)
from .stroke import (
    EllipseArc,
    LineLV,
    LineLX,
    Polyline,
    RectangleStroke,
    Segment,
    SpeedProfile,
    Stroke,
    build_polyline,
    build_rectangle,
    build_small_loop,
    chart_area,
    mirror,
    optimal_leg_split,
    reparametrize,
    reverse,
    shape_coordinate,
)

__version__ = "0.1.0"
