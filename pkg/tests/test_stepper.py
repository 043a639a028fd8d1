import logging

import numpy as np
import pytest

from sqgpatch.contour import Curve, area, curve_distance
from sqgpatch.errors import NumericalFailure
from sqgpatch.spectral import grid
from sqgpatch.stepper import SimConfig, initial_state, rk4_step, run


def naive_ellipse(n):
    g = grid(n).nodes
    return Curve(np.stack([np.cos(g), 0.5 * np.sin(g)]))


def dumbbell(n=128, gap=0.3):
    g = grid(n).nodes
    r = 1.0 - (1.0 - gap) * np.cos(g) ** 2
    return Curve(np.stack([1.5 * np.cos(g), r * np.sin(g)]))


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs, field",
        [
            ({"dt": 0.0}, "dt"),
            ({"t_end": -1.0}, "t_end"),
            ({"formulation": "euler"}, "formulation"),
            ({"gauge_tol": 0.0}, "gauge_tol"),
            ({"arc_chord_factor": -1.0}, "arc_chord_factor"),
            ({"phi_floor": 0.0}, "phi_floor"),
            ({"n": 14}, "n"),
            ({"snapshot_every": 0}, "snapshot_every"),
            ({"resample_every": -1}, "resample_every"),
        ],
    )
    def test_rejects(self, kwargs, field):
        with pytest.raises(ValueError) as info:
            SimConfig(**kwargs)
        assert str(info.value).split()[0] == field

    def test_initial_gauge_required(self):
        with pytest.raises(Exception) as info:
            initial_state(SimConfig(n=128, formulation="gauged"), naive_ellipse(128))
        assert info.value.reason == "gauge"

    def test_grid_mismatch(self, unit_circle):
        with pytest.raises(ValueError):
            initial_state(SimConfig(n=128), unit_circle)


class TestStep:
    def test_circle_one_step(self, unit_circle):
        cfg = SimConfig(n=256)
        dt = 1e-3
        s = rk4_step(initial_state(cfg, unit_circle), dt, cfg)
        r = np.hypot(*s.curve.pos)
        assert np.abs(r - 1.0).max() < 1e-10
        # rigid rotation of the parameterization by the tangential speed 4
        g = grid(256).nodes
        assert np.abs(s.curve.pos - np.stack([np.cos(g + 4 * dt), np.sin(g + 4 * dt)])).max() < 1e-10
        assert s.t == dt and s.step == 1

    def test_zero_velocity_stub(self, ellipse128):
        cfg = SimConfig(n=128, formulation="gauged_with_phi")
        stub = lambda t, x, p, a: (np.zeros_like(x), np.zeros_like(p), 0.0)
        s0 = initial_state(cfg, ellipse128)
        s = s0
        for _ in range(3):
            s = rk4_step(s, 1e-2, cfg, rhs=stub)
        assert np.array_equal(s.curve.pos, s0.curve.pos)
        assert np.array_equal(s.psi, s0.psi) and s.a == 0.0

    @pytest.mark.parametrize("formulation", ["resnick", "gauged"])
    def test_fourth_order_richardson(self, ellipse128, formulation):
        cfg = SimConfig(n=128, formulation=formulation, resample_every=0)
        s0 = initial_state(cfg, ellipse128)

        def advance(dt, steps):
            s = s0
            for _ in range(steps):
                s = rk4_step(s, dt, cfg)
            return s.curve.pos

        H = 2e-3
        y1, y2, y4 = advance(H, 1), advance(H / 2, 2), advance(H / 4, 4)
        ratio = np.abs(y1 - y2).max() / np.abs(y2 - y4).max()
        assert ratio >= 12

    def test_non_finite_raises(self, unit_circle):
        cfg = SimConfig(n=256)
        stub = lambda t, x, p, a: (np.full_like(x, np.nan), None, None)
        with pytest.raises(Exception) as info:
            rk4_step(initial_state(cfg, unit_circle), 1e-3, cfg, rhs=stub)
        assert info.value.reason == "nan"

    def test_resampling_restores_gauge_and_composes_phi(self, ellipse128):
        cfg = SimConfig(n=128, formulation="gauged_with_phi", resample_every=1)
        # tangential stub: slides the parameterization without moving the set
        g = grid(128).nodes
        slide = 0.3 * np.sin(g)

        def stub(t, x, p, a):
            c = Curve(x)
            return slide * c.tangent, slide * (1.0 + 0 * p), 0.0

        s = rk4_step(initial_state(cfg, ellipse128), 1e-3, cfg, rhs=stub)
        assert s.gauge_drift > 1e-5
        assert s.curve.speed.std() / s.curve.speed.mean() < 1e-8
        assert curve_distance(s.curve, ellipse128) < 1e-9


class TestRun:
    def test_circle_conservation(self, unit_circle):
        traj = run(SimConfig(n=256, t_end=0.1, dt=1e-3, snapshot_every=25), unit_circle)
        assert traj.completed
        assert [round(s.t, 12) for s in traj.snapshots] == [0.0, 0.025, 0.05, 0.075, 0.1]
        assert len(traj.diagnostics) == 101
        a0, a1 = traj.diagnostics[0].area, traj.diagnostics[-1].area
        assert abs(a1 - a0) / a0 < 1e-6
        assert np.abs(np.hypot(*traj.final.curve.pos) - 1).max() < 1e-10

    def test_trimmed_last_step(self, unit_circle):
        traj = run(SimConfig(n=256, t_end=0.0105, dt=1e-3, snapshot_every=100), unit_circle)
        assert traj.final.t == 0.0105
        assert traj.final.step == 11

    def test_gauged_with_phi_keeps_phi_monotone(self, ellipse128):
        traj = run(SimConfig(n=128, t_end=0.05, dt=1e-3, formulation="gauged_with_phi"), ellipse128)
        assert traj.completed
        assert min(r.min_dphi for r in traj.diagnostics) > 0
        assert all(r.lambda_h3log is not None and r.a is not None for r in traj.diagnostics)

    def test_gauge_drift_below_tolerance(self, ellipse128):
        traj = run(SimConfig(n=128, t_end=0.05, dt=1e-3, formulation="gauged"), ellipse128)
        assert traj.completed
        assert max(r.gauge_drift for r in traj.diagnostics) < 1e-3

    def test_deterministic(self, ellipse128):
        cfg = SimConfig(n=128, t_end=0.02, dt=1e-3, formulation="gauged_with_phi", snapshot_every=5)
        a, b = run(cfg, ellipse128), run(cfg, ellipse128)
        for sa, sb in zip(a.snapshots, b.snapshots):
            assert np.array_equal(sa.curve.pos, sb.curve.pos) and np.array_equal(sa.psi, sb.psi)
        assert a.diagnostics == b.diagnostics

    def test_arc_chord_abort(self):
        c = dumbbell()

        def squeeze(t, x, p, a):
            # pulls the two sides of the neck together
            return np.stack([np.zeros(x.shape[1]), -np.sign(x[1]) * np.exp(-4 * x[0] ** 2)]), None, None

        traj = run(SimConfig(n=128, t_end=1.0, dt=1e-3, arc_chord_factor=20.0), c, rhs=squeeze)
        assert traj.abort_reason == "arc_chord"
        assert traj.final.t < 1.0
        assert traj.diagnostics[-1].arc_chord_sup > 20 * traj.diagnostics[0].arc_chord_sup

    def test_nan_abort(self, unit_circle):
        calls = []

        def stub(t, x, p, a):
            calls.append(t)
            v = np.zeros_like(x)
            if len(calls) > 8:
                v[:] = np.nan
            return v, None, None

        traj = run(SimConfig(n=256, t_end=0.1, dt=1e-3), unit_circle, rhs=stub)
        assert traj.abort_reason == "nan"
        assert traj.final.step == 2

    def test_gauge_abort(self, ellipse128):
        # without resampling the Resnick tangential flow destroys the gauge
        cfg = SimConfig(n=128, t_end=0.1, dt=1e-3, formulation="gauged", resample_every=0, gauge_tol=1e-3)
        g = grid(128).nodes

        def stub(t, x, p, a):
            c = Curve(x)
            return 2.0 * np.sin(g) * c.tangent, None, 0.0

        traj = run(cfg, ellipse128, rhs=stub)
        assert traj.abort_reason == "gauge"

    def test_phi_abort(self, ellipse128):
        cfg = SimConfig(n=128, t_end=0.1, dt=1e-3, formulation="gauged_with_phi", phi_floor=0.9999)
        traj = run(cfg, ellipse128)
        assert traj.abort_reason == "phi"
        assert "d phi" in traj.abort_message

    def test_numerical_failure_maps_to_reason(self, unit_circle):
        def stub(t, x, p, a):
            raise NumericalFailure("boom")

        traj = run(SimConfig(n=256, t_end=0.01), unit_circle, rhs=stub)
        assert traj.abort_reason == "numerical"
        assert traj.final.t == 0.0

    def test_adaptive_step(self, ellipse128):
        traj = run(SimConfig(n=128, t_end=0.01, dt=None, cfl=0.25), ellipse128)
        assert traj.completed
        assert traj.final.t == pytest.approx(0.01, abs=1e-14)

    def test_stability_warning(self, unit_circle, caplog):
        with caplog.at_level(logging.WARNING, logger="sqgpatch.stepper"):
            run(SimConfig(n=256, t_end=0.004, dt=2e-3), unit_circle)
        assert "stability" in caplog.text

    def test_self_convergence(self):
        finals = {}
        for n, dt in ((32, 4e-3), (64, 2e-3), (128, 1e-3)):
            traj = run(SimConfig(n=n, t_end=0.1, dt=dt, snapshot_every=1000), naive_ellipse(n))
            assert traj.completed
            finals[n] = traj.final.curve
        coarse = curve_distance(finals[32], finals[64])
        fine = curve_distance(finals[64], finals[128])
        assert fine < coarse

    def test_accepts_plain_state_area(self, ellipse128):
        traj = run(SimConfig(n=128, t_end=0.02, dt=1e-3), ellipse128)
        assert abs(area(traj.final.curve) - np.pi * 0.5) < 1e-8
