import csv
import math

import numpy as np
import pytest

from sqgpatch.contour import circle
from sqgpatch.diagnostics import (
    DIAG_FIELDS,
    DiagRecord,
    equivalence_compare,
    fit_growth_rate,
    h1_perturbation,
    make_record,
    twin_compare,
    write_diag_csv,
)
from sqgpatch.errors import ReparameterizationError
from sqgpatch.spectral import grid, norm
from sqgpatch.stepper import SimConfig, SimState, run


@pytest.fixture(scope="module")
def ellipse_pair():
    from sqgpatch.contour import ellipse

    e = ellipse(1.0, 0.5, 128)
    kw = dict(n=128, t_end=0.04, dt=1e-3, snapshot_every=10)
    return run(SimConfig(formulation="resnick", **kw), e), run(SimConfig(formulation="gauged_with_phi", **kw), e)


class TestRecord:
    def test_circle_values(self, unit_circle):
        rec = make_record(SimState(0.0, unit_circle.curve), gauged=True)
        assert rec.length == pytest.approx(2 * np.pi)
        assert rec.area == pytest.approx(np.pi)
        assert rec.x_l2 == pytest.approx(np.sqrt(2 * np.pi))
        assert rec.arc_chord_sup == pytest.approx(np.pi / 2)
        # roundoff weighted by |k|^3
        assert rec.lambda_h3log < 1e-6
        assert rec.min_dphi is None and rec.a is None
        assert rec.finite()

    def test_norms_nested(self, ellipse128):
        rec = make_record(SimState(0.0, ellipse128.curve))
        assert rec.x_l2 <= rec.x_h1 <= rec.x_h3

    def test_finite_detects_nan(self, unit_circle):
        rec = make_record(SimState(0.0, unit_circle.curve))
        assert not DiagRecord(**{**rec.__dict__, "r1": math.nan}).finite()

    def test_csv(self, tmp_path, ellipse_pair):
        _, tp = ellipse_pair
        p = tmp_path / "diag.csv"
        write_diag_csv(p, tp.diagnostics)
        with p.open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == DIAG_FIELDS
        assert len(rows) == len(tp.diagnostics) + 1
        assert float(rows[-1][0]) == pytest.approx(0.04)
        # floats written with full precision
        assert float(rows[1][DIAG_FIELDS.index("length")]) == tp.diagnostics[0].length


class TestGrowthRate:
    def test_exponential(self):
        t = np.linspace(0, 1, 11)
        assert fit_growth_rate(t, 1e-6 * np.exp(2.5 * t)) == pytest.approx(2.5, rel=1e-10)

    def test_ignores_endpoint_rates(self):
        t = np.linspace(0, 1, 6)
        v = np.exp(t)
        v[-1] *= 100.0  # only enters through the last centered stencil
        assert fit_growth_rate(t[:-1], v[:-1]) == pytest.approx(1.0)

    def test_degenerate(self):
        assert fit_growth_rate([0, 1, 2], [0, 0, 0]) is None

    def test_zero_start_skipped(self):
        t = np.linspace(0, 1, 6)
        v = np.exp(t)
        v[0] = 0.0
        assert fit_growth_rate(t, v) == pytest.approx(1.0)

    def test_needs_three_snapshots(self):
        with pytest.raises(ValueError):
            fit_growth_rate([0, 1], [1, 2])


class TestTwin:
    def test_identical(self, ellipse_pair):
        tr, _ = ellipse_pair
        cmp = twin_compare(tr, tr)
        assert cmp.degenerate
        assert np.all(cmp.z_h1 == 0)

    def test_symmetric_and_nested(self, ellipse_pair):
        tr, tp = ellipse_pair
        a, b = twin_compare(tr, tp), twin_compare(tp, tr)
        assert np.array_equal(a.z_h1, b.z_h1) and np.array_equal(a.z_l2, b.z_l2)
        assert np.all(a.z_l2 <= a.z_h1)

    def test_mismatched_grids(self, ellipse_pair):
        tr, _ = ellipse_pair
        other = run(SimConfig(n=64, t_end=0.04, dt=1e-3, snapshot_every=10), circle(1.0, 64))
        with pytest.raises(ValueError, match="grid"):
            twin_compare(tr, other)

    def test_mismatched_snapshot_count(self, ellipse_pair):
        tr, tp = ellipse_pair
        with pytest.raises(ValueError):
            twin_compare(tr.snapshots[:-1], tp.snapshots)

    def test_perturbation_size_and_gauge(self, ellipse128):
        y = h1_perturbation(ellipse128, 1e-6, seed=11)
        assert norm(y.pos - ellipse128.pos, "Hk", k=1) == pytest.approx(1e-6, rel=1e-6)
        assert y.curve.speed.std() / y.curve.speed.mean() < 1e-6

    def test_perturbation_seeded(self, ellipse128):
        a = h1_perturbation(ellipse128, 1e-6, seed=3)
        b = h1_perturbation(ellipse128, 1e-6, seed=3)
        c = h1_perturbation(ellipse128, 1e-6, seed=4)
        assert np.array_equal(a.pos, b.pos)
        assert not np.array_equal(a.pos, c.pos)

    def test_twin_bound(self, ellipse128):
        cfg = SimConfig(n=128, t_end=0.03, dt=1e-3, formulation="gauged", snapshot_every=5)
        tx = run(cfg, ellipse128)
        ty = run(cfg, h1_perturbation(ellipse128, 1e-6, seed=1))
        cmp = twin_compare(tx, ty)
        assert np.isfinite(cmp.growth_rate)
        assert np.all(cmp.z_h1 <= cmp.bound() * (1 + 1e-9))


class TestEquivalence:
    def test_initial_distance_zero(self, ellipse_pair):
        s = equivalence_compare(*ellipse_pair)
        assert s.hausdorff[0] < 1e-14
        assert s.hausdorff.max() < 1e-6

    def test_circle(self):
        c = circle(1.0, 128)
        kw = dict(n=128, t_end=0.05, dt=1e-3, snapshot_every=10)
        s = equivalence_compare(
            run(SimConfig(formulation="resnick", **kw), c), run(SimConfig(formulation="gauged_with_phi", **kw), c)
        )
        assert s.hausdorff.max() < 1e-10

    def test_requires_phi(self, ellipse_pair):
        tr, _ = ellipse_pair
        with pytest.raises(ValueError, match="phi"):
            equivalence_compare(tr, tr)

    def test_non_monotone_phi(self, ellipse_pair):
        tr, tp = ellipse_pair
        bad = [SimState(s.t, s.curve, psi=1.5 * np.sin(grid(128).nodes), a=0.0) for s in tp.snapshots]
        with pytest.raises(ReparameterizationError):
            equivalence_compare(tr, bad)
