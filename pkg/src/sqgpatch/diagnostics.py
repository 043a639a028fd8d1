"""Per-step diagnostic records and trajectory comparisons."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .contour import Curve, arc_chord_sup, arclength_normalize, area, curve_distance, gauge_residuals, invert_reparam, speed_deviation
from .dynamics import lambda_gauge
from .errors import ReparameterizationError
from .spectral import deriv, grid, interp, norm

__all__ = [
    "DiagRecord",
    "make_record",
    "write_diag_csv",
    "TwinComparison",
    "twin_compare",
    "fit_growth_rate",
    "EquivalenceSeries",
    "equivalence_compare",
    "h1_perturbation",
]


@dataclass(frozen=True)
class DiagRecord:
    t: float
    step: int
    x_l2: float
    x_h1: float
    x_h3: float
    x_h3log: float
    lambda_h3log: float | None
    arc_chord_sup: float
    r1: float
    r2: float
    length: float
    area: float
    speed_dev: float
    gauge_drift: float
    min_dphi: float | None
    a: float | None

    def finite(self) -> bool:
        return all(v is None or math.isfinite(v) for v in asdict(self).values())


def make_record(state, gauged: bool = False, arc_sup: float | None = None) -> DiagRecord:
    curve: Curve = state.curve
    centered = curve.pos - curve.pos.mean(axis=1, keepdims=True)
    lam_norm = None
    if gauged:
        lam_norm = norm(lambda_gauge(curve, tol=np.inf), "HkLog", k=3)
    r1, r2 = gauge_residuals(curve)
    min_dphi = None
    if state.psi is not None:
        min_dphi = float((1.0 + deriv(state.psi, 1)).min())
    return DiagRecord(
        t=float(state.t),
        step=int(state.step),
        x_l2=norm(centered, "L2"),
        x_h1=norm(centered, "Hk", k=1),
        x_h3=norm(centered, "Hk", k=3),
        x_h3log=norm(centered, "HkLog", k=3),
        lambda_h3log=lam_norm,
        arc_chord_sup=arc_chord_sup(curve) if arc_sup is None else float(arc_sup),
        r1=r1,
        r2=r2,
        length=curve.length,
        area=area(curve),
        speed_dev=speed_deviation(curve),
        gauge_drift=float(state.gauge_drift),
        min_dphi=min_dphi,
        a=None if state.a is None else float(state.a),
    )


DIAG_FIELDS = [f.name for f in fields(DiagRecord)]


def write_diag_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DIAG_FIELDS)
        for rec in records:
            row = asdict(rec)
            writer.writerow(["" if row[k] is None else repr(row[k]) for k in DIAG_FIELDS])


def _snapshots(traj):
    return traj.snapshots if hasattr(traj, "snapshots") else list(traj)


@dataclass
class TwinComparison:
    times: np.ndarray
    z_l2: np.ndarray
    z_h1: np.ndarray
    growth_rate: float | None  # None when z vanishes identically

    @property
    def degenerate(self) -> bool:
        return self.growth_rate is None

    def bound(self) -> np.ndarray:
        """||z(0)||_H1 exp(C t), the Gronwall envelope with the fitted constant."""
        return self.z_h1[0] * np.exp(self.growth_rate * (self.times - self.times[0]))


def fit_growth_rate(times, values) -> float | None:
    """Largest centered difference of log(values); endpoints only enter as stencil ends."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if np.all(values == 0.0):
        return None
    if times.size < 3:
        raise ValueError("growth-rate fit needs at least three snapshots")
    # stencils touching an exact zero (e.g. shared initial data) carry no rate
    ok = (values[2:] > 0) & (values[:-2] > 0)
    if not ok.any():
        return None
    logs = np.log(np.where(values > 0, values, 1.0))
    rates = (logs[2:] - logs[:-2]) / (times[2:] - times[:-2])
    return float(rates[ok].max())


def twin_compare(traj_x, traj_y) -> TwinComparison:
    """Norms of z = x - y per shared snapshot and the fitted Gronwall constant."""
    sx, sy = _snapshots(traj_x), _snapshots(traj_y)
    if len(sx) != len(sy):
        raise ValueError(f"trajectories have {len(sx)} and {len(sy)} snapshots")
    times, l2, h1 = [], [], []
    for a, b in zip(sx, sy):
        if a.curve.n != b.curve.n:
            raise ValueError(f"grid mismatch: n={a.curve.n} vs n={b.curve.n}")
        if not math.isclose(a.t, b.t, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError(f"snapshot times differ: {a.t} vs {b.t}")
        z = a.curve.pos - b.curve.pos
        times.append(a.t)
        l2.append(norm(z, "L2"))
        h1.append(norm(z, "Hk", k=1))
    times, l2, h1 = np.array(times), np.array(l2), np.array(h1)
    return TwinComparison(times, l2, h1, fit_growth_rate(times, h1))


@dataclass
class EquivalenceSeries:
    times: np.ndarray
    hausdorff: np.ndarray
    pointwise: np.ndarray  # max |x_gauged(phi^{-1}) - x_resnick| at matching parameters


def equivalence_compare(traj_resnick, traj_phi) -> EquivalenceSeries:
    """Compare a Resnick run with a gauged run mapped back through phi^{-1}."""
    sr, sg = _snapshots(traj_resnick), _snapshots(traj_phi)
    if len(sr) != len(sg):
        raise ValueError(f"trajectories have {len(sr)} and {len(sg)} snapshots")
    times, dist, point = [], [], []
    for r, g in zip(sr, sg):
        if g.psi is None:
            raise ValueError("gauged trajectory carries no reparameterization phi")
        if not math.isclose(r.t, g.t, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError(f"snapshot times differ: {r.t} vs {g.t}")
        dphi = 1.0 + deriv(g.psi, 1)
        if dphi.min() <= 0.0:
            raise ReparameterizationError(f"phi is not monotone at t={g.t} (min phi' = {dphi.min():.3e})")
        sigma = invert_reparam(g.psi)
        mapped = Curve(interp(g.curve.pos, sigma))
        times.append(r.t)
        dist.append(curve_distance(mapped, r.curve))
        point.append(float(np.hypot(*(mapped.pos - r.curve.pos)).max()))
    return EquivalenceSeries(np.array(times), np.array(dist), np.array(point))


def h1_perturbation(curve, eps: float, seed: int, modes: int = 8, tol: float = 1e-6):
    """Curve displaced by a seeded random field on Fourier modes 1..``modes``.

    The result is re-normalized to arclength, so it stays in the
    constant-speed gauge, and the displacement is rescaled so that the final
    difference from ``curve`` has H1 norm ``eps``.
    """
    curve = curve.curve if hasattr(curve, "curve") else curve
    rng = np.random.default_rng(seed)
    g = grid(curve.n).nodes
    k = np.arange(1, modes + 1)
    basis_c, basis_s = np.cos(np.outer(k, g)), np.sin(np.outer(k, g))
    pert = np.stack([rng.standard_normal(modes) @ basis_c + rng.standard_normal(modes) @ basis_s for _ in range(2)])
    pert *= eps / norm(pert, "Hk", k=1)
    # normalization alters z(0) at first order; one rescale makes ||z(0)||_H1 = eps to O(eps^2)
    first = arclength_normalize(Curve(curve.pos + pert), tol=tol)
    pert *= eps / norm(first.pos - curve.pos, "Hk", k=1)
    return arclength_normalize(Curve(curve.pos + pert), tol=tol)
