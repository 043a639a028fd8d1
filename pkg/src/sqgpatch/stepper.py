"""Explicit RK4 time integration of the three contour formulations."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .contour import (
    Curve,
    GaugeState,
    arc_chord_sup,
    arclength_normalize,
    speed_deviation,
)
from .diagnostics import make_record
from .dynamics import gauge_shift_rhs, gauged_velocity, phi_rhs, resnick_velocity
from .errors import GaugeError, NonFiniteError, NumericalFailure, ReparameterizationError, SelfIntersectionError, SqgError
from .spectral import chord_multiplier, deriv, grid, interp

__all__ = [
    "FORMULATIONS",
    "ABORT_REASONS",
    "SimConfig",
    "SimState",
    "Trajectory",
    "formulation_rhs",
    "rk4_step",
    "stable_dt",
    "initial_state",
    "run",
]

log = logging.getLogger(__name__)

FORMULATIONS = ("resnick", "gauged", "gauged_with_phi")
ABORT_REASONS = ("arc_chord", "nan", "gauge", "phi", "numerical")


@dataclass(frozen=True)
class SimConfig:
    n: int = 256
    t_end: float = 0.1
    dt: float | None = 1e-3
    cfl: float = 0.25
    formulation: str = "resnick"
    resample_every: int = 16
    snapshot_every: int = 10
    arc_chord_factor: float = 100.0
    gauge_tol: float = 1e-3
    phi_floor: float = 1e-6

    def __post_init__(self):
        # messages lead with the field name; the CLI maps them to config paths
        try:
            grid(self.n)
        except ValueError as exc:
            raise ValueError(f"n {exc}") from None
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}, got {self.formulation!r}")
        for name in ("t_end", "cfl", "arc_chord_factor", "gauge_tol", "phi_floor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.resample_every < 0:
            raise ValueError("resample_every must be >= 0")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")

    @property
    def gauged(self) -> bool:
        return self.formulation != "resnick"


@dataclass(frozen=True)
class SimState:
    t: float
    curve: Curve
    psi: np.ndarray | None = None
    a: float | None = None
    step: int = 0
    gauge_drift: float = 0.0  # speed deviation before any resampling at this step

    @property
    def pos(self):
        return self.curve.pos


@dataclass
class Trajectory:
    config: SimConfig
    snapshots: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    abort_reason: str | None = None
    abort_message: str | None = None

    @property
    def completed(self) -> bool:
        return self.abort_reason is None

    @property
    def final(self) -> SimState:
        return self.snapshots[-1]


def initial_state(config: SimConfig, initial) -> SimState:
    curve = initial.curve if isinstance(initial, GaugeState) else initial
    if curve.n != config.n:
        raise ValueError(f"initial curve has n={curve.n}, config expects n={config.n}")
    if config.gauged:
        GaugeState(curve, tol=config.gauge_tol)
    psi = np.zeros(config.n) if config.formulation == "gauged_with_phi" else None
    a = 0.0 if config.gauged else None
    return SimState(t=0.0, curve=curve, psi=psi, a=a)


def formulation_rhs(config: SimConfig):
    """Return rhs(t, pos, psi, a) -> (d pos, d psi, d a) for the configured formulation."""

    def rhs(t, pos, psi, a):
        try:
            curve = Curve(pos)
        except ValueError as exc:
            raise NumericalFailure(str(exc)) from exc
        if config.formulation == "resnick":
            return resnick_velocity(curve), None, None
        v, lam = gauged_velocity(curve, tol=config.gauge_tol, return_lambda=True)
        da = gauge_shift_rhs(a, t, lam)
        dpsi = None
        if psi is not None:
            dpsi = phi_rhs(psi, curve, lam=lam, floor=config.phi_floor)
        return v, dpsi, da

    return rhs


def _axpy(base, k, c):
    if base is None:
        return None
    return base + c * k


def rk4_step(state: SimState, dt: float, config: SimConfig, rhs=None) -> SimState:
    """One classical RK4 step of the coupled (x, phi, a) system, then gauge upkeep.

    Curve and phi advance together, so every stage re-evaluates lambda(x).
    For gauged formulations the curve is re-normalized to arclength every
    ``resample_every`` steps, with phi composed through the resampling map.
    """
    f = rhs or formulation_rhs(config)
    t, x, p, a = state.t, state.curve.pos, state.psi, state.a
    k1 = f(t, x, p, a)
    k2 = f(t + dt / 2, x + dt / 2 * k1[0], _axpy(p, k1[1], dt / 2), _axpy(a, k1[2], dt / 2))
    k3 = f(t + dt / 2, x + dt / 2 * k2[0], _axpy(p, k2[1], dt / 2), _axpy(a, k2[2], dt / 2))
    k4 = f(t + dt, x + dt * k3[0], _axpy(p, k3[1], dt), _axpy(a, k3[2], dt))

    def combine(base, i):
        if base is None:
            return None
        return base + dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])

    new_x, new_p, new_a = combine(x, 0), combine(p, 1), combine(a, 2)
    if not np.all(np.isfinite(new_x)) or (new_p is not None and not np.all(np.isfinite(new_p))):
        raise NonFiniteError(f"non-finite state after step {state.step + 1}")
    try:
        curve = Curve(new_x)
    except ValueError as exc:
        raise NumericalFailure(str(exc)) from exc
    drift = speed_deviation(curve)
    step = state.step + 1
    if config.gauged and config.resample_every and step % config.resample_every == 0:
        if drift > config.gauge_tol:
            raise GaugeError(f"speed deviation {drift:.3e} exceeded {config.gauge_tol:.1e} before resampling")
        gauge, sigma = arclength_normalize(curve, tol=config.gauge_tol, return_map=True)
        curve = gauge.curve
        if new_p is not None:
            # phi_new(alpha) = phi(sigma(alpha)); store its periodic part
            new_p = sigma + interp(new_p, sigma) - grid(config.n).nodes
    return SimState(t=t + dt, curve=curve, psi=new_p, a=None if new_a is None else float(new_a), step=step, gauge_drift=drift)


def stable_dt(curve: Curve, velocity, config: SimConfig) -> float:
    """Adaptive step: advective CFL bound, capped by the RK4 limit of the k log k dispersion."""
    n = config.n
    vmax = float(np.hypot(*velocity).max())
    advective = config.cfl * (2.0 * np.pi / n) / max(vmax, 1e-300)
    kmax = n // 2 - 1
    dispersive = 2.5 * curve.speed.min() / (kmax * chord_multiplier(n)[kmax])
    return min(advective, dispersive)


def _check_abort(state, config, arc_sup, arc_limit):
    if not math.isfinite(arc_sup) or arc_sup > arc_limit:
        raise SelfIntersectionError(f"arc-chord sup {arc_sup:.4g} exceeds threshold {arc_limit:.4g}")
    if config.gauged and state.gauge_drift > config.gauge_tol:
        raise GaugeError(f"speed deviation {state.gauge_drift:.3e} exceeds {config.gauge_tol:.1e}")
    if state.psi is not None:
        dmin = float((1.0 + deriv(state.psi, 1)).min())
        if dmin <= config.phi_floor:
            raise ReparameterizationError(f"min d phi / d gamma = {dmin:.3e} <= floor {config.phi_floor:g}")


def run(config: SimConfig, initial, rhs=None, callback=None) -> Trajectory:
    """Integrate to ``config.t_end`` or until an abort condition fires.

    Snapshots are kept every ``snapshot_every`` steps plus the initial and
    final states; a :class:`DiagRecord` is recorded after every step.
    ``callback(state, record)`` is invoked for every recorded step.
    """
    traj = Trajectory(config=config)
    state = initial_state(config, initial)
    arc0 = arc_chord_sup(state.curve)
    arc_limit = config.arc_chord_factor * arc0
    rec = make_record(state, gauged=config.gauged, arc_sup=arc0)
    traj.snapshots.append(state)
    traj.diagnostics.append(rec)
    if callback:
        callback(state, rec)
    if config.dt is not None:
        kmax = config.n // 2 - 1
        limit = 2.5 * state.curve.speed.min() / (kmax * chord_multiplier(config.n)[kmax])
        if config.dt > limit:
            log.warning("dt=%g exceeds the RK4 dispersive stability estimate %.3g", config.dt, limit)
    f = rhs or formulation_rhs(config)
    eps_t = 1e-12 * config.t_end
    try:
        while state.t < config.t_end - eps_t:
            if config.dt is not None:
                target = min(config.t_end, (state.step + 1) * config.dt)
                dt = target - state.t
            else:
                v = f(state.t, state.curve.pos, state.psi, state.a)[0]
                dt = min(stable_dt(state.curve, v, config), config.t_end - state.t)
            state = rk4_step(state, dt, config, rhs=f)
            if config.dt is not None:
                state = replace(state, t=target)
            arc = arc_chord_sup(state.curve)
            rec = make_record(state, gauged=config.gauged, arc_sup=arc)
            traj.diagnostics.append(rec)
            if callback:
                callback(state, rec)
            if not rec.finite():
                raise NonFiniteError(f"non-finite diagnostics at t={state.t:.6g}")
            _check_abort(state, config, arc, arc_limit)
            if state.step % config.snapshot_every == 0:
                traj.snapshots.append(state)
    except SqgError as exc:
        traj.abort_reason = exc.reason
        traj.abort_message = str(exc)
        log.info("run aborted at t=%.6g: %s (%s)", state.t, exc.reason, exc)
    if traj.snapshots[-1] is not state:
        traj.snapshots.append(state)
    return traj
