"""Right-hand sides of the patch contour equations.

Every nonlocal integral here has the form

    T(f)(g) = int_{-pi}^{pi} (f(g) - f(g - e)) / |x(g) - x(g - e)| de.

It is split into a flat-kernel part handled exactly in Fourier space,
(1/|x'(g)|) L(f), and a bounded remainder.  The remainder kernel
1/|x - x'| - 1/(|x'| |e|) is not periodic in e (it kinks at e = +-pi), so it is
further written as a periodic piece, integrated by the trapezoidal rule, plus
(1/|x'|)(1/(2|sin(e/2)|) - 1/|e|), which is again a Fourier multiplier.

Off the constant-speed gauge the periodic remainder behaves like
f' (x'.x'')/(2|x'|^3) |e| near e = 0; the trapezoidal rule misses exactly
h^2/6 of that term, which is added back so the quadrature stays fourth order.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .contour import GAUGE_TOL_EVOLVE, Curve, GaugeState, speed_deviation
from .errors import (
    GaugeError,
    NearBoundaryError,
    QuadratureConsistencyError,
    ReparameterizationError,
)
from .spectral import (
    _vals,
    _wrap_like,
    antideriv_from,
    coefficients,
    d_log,
    deriv,
    interp,
    norm,
    op_chord,
    upsample,
)

__all__ = [
    "nonlocal_transport",
    "resnick_velocity",
    "normal_velocity",
    "normal_velocity_check",
    "lambda_gauge",
    "gauged_velocity",
    "phi_rhs",
    "gauge_shift_rhs",
    "offcurve_velocity",
    "commutator_residual",
]

NORMAL_CONSISTENCY_TOL = 1e-6


def _curve(x) -> Curve:
    return x.curve if isinstance(x, GaugeState) else x


def nonlocal_transport(f, x):
    """T(f) along the curve ``x`` for a scalar (n,) or stacked (m, n) field."""
    curve = _curve(x)
    v = np.asarray(_vals(f), dtype=float)
    s = curve.speed
    # op_chord = op_L + exact multiplier of the flat-kernel correction
    singular = op_chord(v) / s
    rem = kernels.transport_remainder(curve.pos, s, v.reshape(-1, v.shape[-1])).reshape(v.shape)
    h = 2.0 * np.pi / curve.n
    kink = (curve.tangent * deriv(curve.pos, 2)).sum(axis=0) / (2.0 * s**3)
    rem += (h * h / 6.0) * deriv(v, 1) * kink
    return _wrap_like(f, singular + rem)


def resnick_velocity(x):
    """x_t = T(x') : the tangentially well-defined contour velocity."""
    curve = _curve(x)
    return nonlocal_transport(curve.tangent, curve)


def normal_velocity_check(x, w=None):
    """Normal velocity x_t . x'^perp by two independent code paths.

    (a) the dot product of the Resnick velocity with x'^perp;
    (b) -int x'^perp(g) . x'(g - e) / |x - x'| de, assembled pointwise with the
        same kernel split (the diagonal term drops because x'^perp . x' = 0).
    Returns (a, relative discrepancy between the two).
    """
    curve = _curve(x)
    if w is None:
        w = resnick_velocity(curve)
    perp = curve.normal
    a = (np.asarray(w) * perp).sum(axis=0)
    b = (perp * op_chord(curve.tangent)).sum(axis=0) / curve.speed
    b = b + kernels.normal_remainder(curve.pos, curve.speed, curve.tangent, perp)
    # same h^2/6 kink term, written for the dotted integrand -perp . x'(g - e)
    d2 = deriv(curve.pos, 2)
    h = 2.0 * np.pi / curve.n
    b = b + (h * h / 6.0) * (perp * d2).sum(axis=0) * (curve.tangent * d2).sum(axis=0) / (2.0 * curve.speed**3)
    scale = max(np.abs(w).max() * curve.speed.max(), np.finfo(float).tiny)
    return a, float(np.abs(a - b).max() / scale)


def normal_velocity(x, tol: float = NORMAL_CONSISTENCY_TOL):
    vn, disc = normal_velocity_check(x)
    if disc > tol:
        raise QuadratureConsistencyError(f"normal-velocity forms disagree (relative {disc:.2e})")
    return vn


def _lambda_from_velocity(curve, w):
    g = (curve.tangent * deriv(w, 1)).sum(axis=0) / curve.speed**2
    # ((g + pi)/2pi) int g - int_{-pi}^{g} g  ==  minus the mean-free primitive, pinned at -pi
    return -antideriv_from(g - g.mean())


def lambda_gauge(x, w=None, tol: float = GAUGE_TOL_EVOLVE):
    """Tangential coefficient keeping |x'| independent of gamma; lambda(-pi) = 0."""
    curve = _curve(x)
    if not isinstance(x, GaugeState):
        dev = speed_deviation(curve)
        if dev > tol:
            raise GaugeError(f"lambda requires constant speed; deviation {dev:.3e} > {tol:.1e}")
    if w is None:
        w = resnick_velocity(curve)
    return _lambda_from_velocity(curve, np.asarray(w))


def gauged_velocity(x, tol: float = GAUGE_TOL_EVOLVE, return_lambda: bool = False):
    curve = _curve(x)
    w = resnick_velocity(curve)
    lam = lambda_gauge(x, w=w, tol=tol)
    v = w + lam * curve.tangent
    if return_lambda:
        return v, lam
    return v


def phi_rhs(psi, x, lam=None, floor: float = 0.0, tol: float = GAUGE_TOL_EVOLVE):
    """Time derivative of phi = id + psi transported along the gauged curve.

    phi_t = T(phi') + lambda phi'.  Only the periodic part ``psi`` is stored;
    T annihilates the constant 1 in phi' = 1 + psi'.
    """
    curve = _curve(x)
    p = np.asarray(_vals(psi), dtype=float)
    dphi = 1.0 + deriv(p, 1)
    if dphi.min() <= floor:
        j = int(np.argmin(dphi))
        raise ReparameterizationError(f"d phi / d gamma = {dphi[j]:.3e} <= {floor:g} at node {j}")
    if lam is None:
        lam = lambda_gauge(x, tol=tol)
    out = nonlocal_transport(deriv(p, 1), curve) + np.asarray(lam) * dphi
    return _wrap_like(psi, out)


def gauge_shift_rhs(a: float, t: float, lam) -> float:
    """a'(t) = lambda(-pi - a(t), t), evaluating the interpolant with periodic wrap."""
    point = (-np.pi - a + np.pi) % (2.0 * np.pi) - np.pi
    return float(interp(lam, np.array([point]))[0])


def offcurve_velocity(p, x, dtheta: float = np.pi, upsample_factor=None, max_upsample: int = 64):
    """Velocity -(dtheta/2pi) int x'(g) / |p - x(g)| dg at points off the curve.

    The trapezoidal rule needs the quadrature spacing to be small against the
    distance to the curve: points closer than 10x the largest chord spacing are
    rejected.  With ``upsample_factor=None`` the curve is refined by
    trigonometric interpolation (powers of two up to ``max_upsample``) until
    every point clears that bound.
    """
    curve = _curve(x)
    pts = np.atleast_2d(np.asarray(p, dtype=float))
    base = curve.pos
    tree_d = _distance_to_nodes(pts, upsample(base, 8))
    factors = [upsample_factor] if upsample_factor else [2**i for i in range(int(np.log2(max_upsample)) + 1)]
    for factor in factors:
        fine = base if factor == 1 else upsample(base, factor)
        spacing = np.hypot(*(fine - np.roll(fine, 1, axis=1))).max()
        if np.all(tree_d > 10.0 * spacing):
            break
    else:
        raise NearBoundaryError(
            f"point within {tree_d.min():.2e} of the curve; needs > 10x chord spacing "
            f"({10.0 * spacing:.2e}) even after {factor}x refinement"
        )
    tangent = deriv(fine, 1)
    u = -(dtheta / (2.0 * np.pi)) * kernels.offcurve_sum(pts, fine, tangent)
    return u[0] if np.ndim(p) == 1 else u


def _distance_to_nodes(pts, fine):
    d = np.hypot(pts[:, 0:1] - fine[0][None, :], pts[:, 1:2] - fine[1][None, :])
    return d.min(axis=1)


def commutator_residual(g, f):
    """Commutator of d_log d/dg with multiplication by g, and the two bound factors.

    Returns (lhs, factor1, factor2) with
    lhs = ||d_log(d(g f)) - g d_log(d f)||_L2,
    factor1 = ||coeffs of dg||_l1 * ||d_log f||_L2,
    factor2 = ||d_log dg||_L2 * ||coeffs of f||_l1.
    """
    g = np.asarray(_vals(g), dtype=float)
    f = np.asarray(_vals(f), dtype=float)
    lhs = norm(d_log(deriv(g * f, 1)) - g * d_log(deriv(f, 1)), "L2")
    dg = deriv(g, 1)
    factor1 = np.abs(coefficients(dg)).sum() * norm(d_log(f), "L2")
    factor2 = norm(d_log(dg), "L2") * np.abs(coefficients(f)).sum()
    return float(lhs), float(factor1), float(factor2)
