"""Adaptive quadrature and 1-d minimization used by the stroke integrator.

Kept dependency-free on purpose: the integrands are cheap scalar
callables and the acceptance suite pins an empirical convergence order,
which is easiest to guarantee with an integrator we control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import AccuracyError, DomainError


@dataclass(frozen=True)
class QuadratureSettings:
    """Error control for adaptive integration.

    rel_tol: target relative error of each integral.
    abs_tol: absolute error floor (protects integrals near zero).
    max_depth: maximum bisection depth before giving up.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-300
    max_depth: int = 28

    def __post_init__(self):
        if not (0.0 < self.rel_tol < 1.0):
            raise DomainError(f"rel_tol must be in (0, 1), got {self.rel_tol}")
        if self.abs_tol < 0.0:
            raise DomainError(f"abs_tol must be nonnegative, got {self.abs_tol}")
        if self.max_depth < 1:
            raise DomainError(f"max_depth must be >= 1, got {self.max_depth}")


def _simpson(fa, fm, fb, h):
    return h / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_quad(f, a, b, settings: QuadratureSettings | None = None):
    """Integrate f on [a, b] by adaptive Simpson bisection.

    Each interval is accepted when the Richardson error estimate
    |S2 - S1|/15 meets its share of the tolerance; the extrapolated value
    S2 + (S2 - S1)/15 is accumulated. Returns (value, error_estimate).

    Raises AccuracyError when max_depth is hit before the tolerance,
    carrying the value and error achieved so far.
    """
    st = settings or QuadratureSettings()
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("integration limits must be finite")
    if a == b:
        return 0.0, 0.0

    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = _simpson(fa, fm, fb, b - a)
    # Tolerance scale frozen up front from the coarse estimate; refined
    # intervals receive a share proportional to their width.
    scale = max(st.abs_tol, st.rel_tol * abs(whole), 1e-300)

    total = 0.0
    err_total = 0.0
    bad = []  # intervals that ran out of depth
    stack = [(a, b, fa, fm, fb, whole, 0)]
    while stack:
        x0, x1, f0, fmid, f1, s_whole, depth = stack.pop()
        xm = 0.5 * (x0 + x1)
        xlm = 0.5 * (x0 + xm)
        xrm = 0.5 * (xm + x1)
        flm = f(xlm)
        frm = f(xrm)
        s_left = _simpson(f0, flm, fmid, xm - x0)
        s_right = _simpson(fmid, frm, f1, x1 - xm)
        err = (s_left + s_right - s_whole) / 15.0
        local_tol = scale * (x1 - x0) / (b - a)
        if abs(err) <= local_tol or depth >= st.max_depth:
            total += s_left + s_right + err
            err_total += abs(err)
            if abs(err) > local_tol:
                bad.append((x0, x1, err))
        else:
            stack.append((x0, xm, f0, flm, fmid, s_left, depth + 1))
            stack.append((xm, x1, fmid, frm, f1, s_right, depth + 1))
    if bad:
        raise AccuracyError(
            f"quadrature tolerance not reached on {len(bad)} interval(s) at "
            f"max_depth={st.max_depth}; achieved error ~{err_total:.3e}",
            value_estimate=total,
            error_estimate=err_total,
        )
    return total, err_total


def composite_simpson(f, a, b, n):
    """Plain composite Simpson rule with n panels (n >= 1).

    Nominal fourth-order convergence; the test suite measures the order
    empirically with this function.
    """
    if n < 1:
        raise DomainError(f"panel count must be >= 1, got {n}")
    h = (b - a) / n
    total = 0.0
    for i in range(n):
        x0 = a + i * h
        total += _simpson(f(x0), f(x0 + 0.5 * h), f(x0 + h), h)
    return total


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_minimize(f, lo, hi, rel_tol=1e-12, max_iter=400):
    """Scalar minimizer of a unimodal f on [lo, hi] by golden-section search.

    Used as the independent check of the closed-form time allocation.
    Returns the abscissa of the minimum.
    """
    if not (hi > lo):
        raise DomainError("need hi > lo")
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= rel_tol * (abs(a) + abs(b)) / 2.0:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)
