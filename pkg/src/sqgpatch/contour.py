"""Closed planar curves: geometry, the arc-chord functional and reparameterization."""
from __future__ import annotations

from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .errors import GaugeError, NumericalFailure, SelfIntersectionError
from .spectral import VectorField, antideriv_from, deriv, grid, interp, upsample

__all__ = [
    "Curve",
    "GaugeState",
    "arc_chord",
    "arc_chord_sup",
    "gauge_residuals",
    "speed_deviation",
    "arclength_normalize",
    "invert_reparam",
    "curve_distance",
    "circle",
    "ellipse",
    "perturbed_circle",
    "area",
    "write_snapshot",
    "read_snapshot",
    "GAUGE_TOL_INIT",
    "GAUGE_TOL_EVOLVE",
]

GAUGE_TOL_INIT = 1e-6
GAUGE_TOL_EVOLVE = 1e-3
NEWTON_MAXITER = 50
NEWTON_TOL = 1e-12


class Curve:
    """Closed curve x(gamma) sampled on ``grid(n)``; ``pos`` has shape (2, n)."""

    def __init__(self, pos):
        pos = np.array(pos, dtype=float)
        if pos.ndim != 2 or pos.shape[0] != 2:
            raise ValueError("curve positions must have shape (2, n)")
        grid(pos.shape[1])
        if not np.all(np.isfinite(pos)):
            raise ValueError("curve positions must be finite")
        pos.setflags(write=False)
        self.pos = pos
        if self.speed.min() <= 0.0:
            raise ValueError("curve is not immersed: |d x / d gamma| vanishes")

    @classmethod
    def from_field(cls, field: VectorField):
        return cls(field.values)

    @property
    def n(self) -> int:
        return self.pos.shape[1]

    @property
    def field(self) -> VectorField:
        return VectorField.from_array(self.pos)

    @cached_property
    def tangent(self) -> np.ndarray:
        return deriv(self.pos, 1)

    @cached_property
    def normal(self) -> np.ndarray:
        """Unnormalized normal (-dx2, dx1); points inward on counterclockwise curves."""
        t = self.tangent
        return np.stack([-t[1], t[0]])

    @cached_property
    def speed(self) -> np.ndarray:
        t = self.tangent
        return np.hypot(t[0], t[1])

    @cached_property
    def length(self) -> float:
        return float(self.speed.mean() * 2.0 * np.pi)

    def __repr__(self):
        return f"Curve(n={self.n}, length={self.length:.6g})"


class GaugeState:
    """A curve whose speed |dx/dgamma| is constant in gamma to within ``tol``."""

    def __init__(self, curve: Curve, tol: float = GAUGE_TOL_INIT):
        self.curve = curve
        self.tol = tol
        dev = speed_deviation(curve)
        if dev > tol:
            raise GaugeError(f"speed deviation {dev:.3e} exceeds gauge tolerance {tol:.1e}")
        r1, _ = gauge_residuals(curve)
        scale = curve.speed.max() * np.hypot(*deriv(curve.pos, 2)).max()
        if r1 > tol * max(scale, np.finfo(float).tiny):
            raise GaugeError(f"residual x''.x' = {r1:.3e} exceeds gauge tolerance")

    @property
    def pos(self):
        return self.curve.pos

    @property
    def n(self):
        return self.curve.n

    def __repr__(self):
        return f"GaugeState({self.curve!r}, tol={self.tol:.1e})"


def _as_curve(c) -> Curve:
    return c.curve if isinstance(c, GaugeState) else c


def speed_deviation(curve) -> float:
    """sup | |x'| - l/2pi | relative to l/2pi."""
    curve = _as_curve(curve)
    mean = curve.speed.mean()
    return float(np.abs(curve.speed - mean).max() / mean)


def arc_chord(curve):
    """Return (sup F, table) where table[j, m] = F(gamma_j, eta_m), eta_m = -pi + 2pi m/n.

    The eta = 0 column holds 1/|x'(gamma_j)|.
    """
    curve = _as_curve(curve)
    table = kernels.arc_chord_table(curve.pos, curve.speed)
    if not np.all(np.isfinite(table)):
        j, m = np.argwhere(~np.isfinite(table))[0]
        raise SelfIntersectionError(f"curve self-intersects: nodes {j} and {(j - (m - curve.n // 2)) % curve.n} coincide")
    return float(table.max()), table


def arc_chord_sup(curve) -> float:
    curve = _as_curve(curve)
    sup = kernels.arc_chord_sup(curve.pos, curve.speed)
    if not np.isfinite(sup):
        raise SelfIntersectionError("curve self-intersects: coincident nodes")
    return float(sup)


def gauge_residuals(curve):
    """(sup |x''.x'|, sup |x'''.x' + |x''|^2|); both vanish for a constant-speed curve."""
    curve = _as_curve(curve)
    d1 = curve.tangent
    d2 = deriv(curve.pos, 2)
    d3 = deriv(curve.pos, 3)
    r1 = np.abs((d2 * d1).sum(axis=0)).max()
    r2 = np.abs((d3 * d1).sum(axis=0) + (d2 * d2).sum(axis=0)).max()
    return float(r1), float(r2)


def invert_reparam(psi, targets=None):
    """Solve gamma + psi(gamma) = xi for each target xi.

    ``psi`` holds the periodic part of a strictly increasing map on the grid.
    Safeguarded Newton on the trigonometric interpolant; bisection whenever a
    Newton step leaves the bracket.
    """
    psi = np.asarray(psi, dtype=float)
    n = psi.size
    xi = grid(n).nodes if targets is None else np.asarray(targets, dtype=float)
    # grid max underestimates the interpolant's sup; widen the bracket
    bound = 1.5 * np.abs(psi).max() + 1e-3
    lo = xi - bound
    hi = xi + bound
    g = np.array(xi, dtype=float)
    dpsi = deriv(psi, 1)
    for _ in range(NEWTON_MAXITER):
        r = g + interp(psi, g) - xi
        pos = r > 0
        hi = np.where(pos, g, hi)
        lo = np.where(pos, lo, g)
        slope = 1.0 + interp(dpsi, g)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(slope > 0, r / slope, np.inf)
        g_new = g - step
        outside = ~((g_new > lo) & (g_new < hi))
        g_new = np.where(outside, 0.5 * (lo + hi), g_new)
        done = np.abs(g_new - g) <= NEWTON_TOL
        g = g_new
        if np.all(done):
            return g
    bad = int(np.argmax(np.abs(g + interp(psi, g) - xi)))
    raise NumericalFailure(f"reparameterization inverse did not converge at node {bad}")


def arclength_normalize(curve, tol: float = GAUGE_TOL_INIT, return_map: bool = False):
    """Resample ``curve`` so that |x'| is constant, keeping x(-pi) fixed.

    phi(g) = -pi + (2pi/l) int_{-pi}^{g} |x'|; the new curve is x(phi^{-1}(grid)).
    With ``return_map`` the nodes phi^{-1}(grid) are returned as well.
    """
    curve = _as_curve(curve)
    s = curve.speed
    n = curve.n
    nodes = grid(n).nodes
    psi = (2.0 * np.pi / curve.length) * antideriv_from(s) - np.pi - nodes
    sigma = invert_reparam(psi)
    new = Curve(interp(curve.pos, sigma))
    state = GaugeState(new, tol=tol)
    if return_map:
        return state, sigma
    return state


def _nearest_on_curve(points, coeff_curve, t0, iters=8):
    """Refine parameters t (seeded by t0) minimizing |B(t) - p| on the interpolant of B."""
    t = np.array(t0, dtype=float)
    for _ in range(iters):
        b = interp(coeff_curve, t)
        b1 = interp(coeff_curve, t, order=1)
        b2 = interp(coeff_curve, t, order=2)
        r = b - points.T
        g = (r * b1).sum(axis=0)
        hess = (b1 * b1).sum(axis=0) + (r * b2).sum(axis=0)
        hess = np.where(hess > 0, hess, (b1 * b1).sum(axis=0))
        t = t - g / hess
    b = interp(coeff_curve, t)
    return np.hypot(*(b - points.T))


def _directed_hausdorff(a_pts, b_pos, factor):
    fine = upsample(b_pos, factor)
    tree = cKDTree(fine.T)
    dist, idx = tree.query(a_pts)
    t0 = grid(fine.shape[1]).nodes[idx]
    refined = _nearest_on_curve(a_pts, b_pos, t0)
    return float(np.minimum(dist, refined).max())


def curve_distance(c1, c2, factor: int = 8) -> float:
    """Symmetric Hausdorff distance between two closed curves as point sets.

    Both curves are upsampled ``factor`` times by trigonometric interpolation;
    each sample's nearest neighbour on the other (upsampled) curve is then
    refined by Newton iteration on that curve's interpolant.
    """
    c1, c2 = _as_curve(c1), _as_curve(c2)
    a = upsample(c1.pos, factor).T
    b = upsample(c2.pos, factor).T
    return max(_directed_hausdorff(a, c2.pos, factor), _directed_hausdorff(b, c1.pos, factor))


def area(curve) -> float:
    """Signed enclosed area (1/2) int (x1 x2' - x2 x1'); positive when counterclockwise."""
    curve = _as_curve(curve)
    x, t = curve.pos, curve.tangent
    return float(0.5 * (x[0] * t[1] - x[1] * t[0]).mean() * 2.0 * np.pi)


def circle(R: float = 1.0, n: int = 256, center=(0.0, 0.0)) -> GaugeState:
    if not R > 0:
        raise ValueError("circle radius must be positive")
    g = grid(n).nodes
    pos = np.stack([center[0] + R * np.cos(g), center[1] + R * np.sin(g)])
    return GaugeState(Curve(pos))


def ellipse(a: float = 1.0, b: float = 0.5, n: int = 256) -> GaugeState:
    if not (a > 0 and b > 0):
        raise ValueError("ellipse semi-axes must be positive")
    g = grid(n).nodes
    return arclength_normalize(Curve(np.stack([a * np.cos(g), b * np.sin(g)])))


def perturbed_circle(eps: float = 0.1, m: int = 3, n: int = 256) -> GaugeState:
    """Polar curve r = 1 + eps cos(m gamma), arclength-normalized."""
    if not 0 <= eps < 1:
        raise ValueError("perturbation amplitude must lie in [0, 1)")
    if int(m) != m or m < 0:
        raise ValueError("perturbation mode must be a non-negative integer")
    g = grid(n).nodes
    r = 1.0 + eps * np.cos(m * g)
    return arclength_normalize(Curve(np.stack([r * np.cos(g), r * np.sin(g)])))


def write_snapshot(path, t: float, curve) -> None:
    curve = _as_curve(curve)
    g = grid(curve.n).nodes
    rows = np.column_stack([g, curve.pos[0], curve.pos[1]])
    header = f"t={t!r} n={curve.n}"
    np.savetxt(path, rows, fmt="%.17g", header=header, comments="# ")


def read_snapshot(path):
    """Load a snapshot written by :func:`write_snapshot`; returns (t, Curve)."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline()
    if not header.startswith("#"):
        raise ValueError(f"{path}: missing '# t=<time> n=<nodes>' header")
    fields = dict(item.split("=", 1) for item in header[1:].split())
    t, n = float(fields["t"]), int(fields["n"])
    rows = np.loadtxt(path, comments="#", ndmin=2)
    if rows.shape != (n, 3):
        raise ValueError(f"{path}: expected {n} rows of 'gamma x1 x2', got shape {rows.shape}")
    if not np.allclose(rows[:, 0], grid(n).nodes, atol=1e-12):
        raise ValueError(f"{path}: gamma column does not match the uniform grid")
    curve = Curve(rows[:, 1:].T)
    if area(curve) <= 0:
        raise ValueError(f"{path}: curve is clockwise (negative area)")
    return t, curve
