"""Thermal step evaluation, bounds, and the regularity audits."""

import numpy as np
import pytest

from powerhedge.production import (
    AssumptionReport,
    NegativeRegime,
    PiecewiseConcave,
    PlantStepData,
    check_assumptions,
    check_production_map,
    production_bound,
    thermal_output,
    thermal_slope_audit,
)

PLANT_E = PlantStepData(0.5, 10.0, 5.0,
                        PiecewiseConcave(((0.0, -100.0), (5.0, -10.0), (10.0, -2.0))))
SPOT = 8.0


class TestThermalOutput:
    def test_idle_pays_fixed_costs(self):
        assert thermal_output(PLANT_E, SPOT, 0.0) == (-5.0, -100.0)

    def test_interior_injection(self):
        assert thermal_output(PLANT_E, SPOT, 5.0) == (15.0, -10.0)

    def test_overflow_to_storage(self):
        assert thermal_output(PLANT_E, SPOT, 14.0) == (35.0, 2.0)

    def test_negative_regime_rejected(self):
        with pytest.raises(NegativeRegime):
            thermal_output(PLANT_E, SPOT, -0.1)

    def test_beyond_capacity_exact(self):
        r1_cap, r2_cap = thermal_output(PLANT_E, SPOT, PLANT_E.capacity)
        for beta in (10.0, 11.0, 50.0, 1e6):
            r1, r2 = thermal_output(PLANT_E, SPOT, beta)
            assert r1 == r1_cap
            assert r2 - beta == r2_cap - PLANT_E.capacity


class TestProductionBound:
    def test_cash_bound(self):
        assert production_bound(PLANT_E, SPOT)[0] == 45.0

    def test_fuel_bound(self):
        assert production_bound(PLANT_E, SPOT)[1] == 100.0

    def test_huge_injection_within_bound(self):
        r1, r2 = thermal_output(PLANT_E, SPOT, 1e6)
        assert abs(r2 - 1e6) == pytest.approx(12.0)
        assert abs(r2 - 1e6) <= production_bound(PLANT_E, SPOT)[1]

    def test_bound_dominates_sampled(self):
        rng = np.random.default_rng(0)
        k1, k2 = production_bound(PLANT_E, SPOT)
        for beta in rng.uniform(0.0, 40.0, size=10_000):
            r1, r2 = thermal_output(PLANT_E, SPOT, beta)
            assert abs(r1) <= k1 + 1e-9
            assert abs(r2 - beta) <= k2 + 1e-9


class TestAudits:
    def test_plant_e_passes(self):
        report = check_assumptions(PLANT_E, SPOT, 1000)
        assert report.ok

    def test_convex_maintenance_fails_concavity(self):
        bent = PlantStepData(0.5, 10.0, 5.0,
                             PiecewiseConcave(((0.0, -10.0), (5.0, -9.0), (10.0, -1.0))))
        report = check_assumptions(bent, SPOT, 2000)
        assert not report.concavity.ok
        assert report.concavity.witness is not None
        a, b, lam = report.concavity.witness
        mid = np.array(thermal_output(bent, SPOT, lam * a + (1 - lam) * b))
        chord = lam * np.array(thermal_output(bent, SPOT, a)) \
            + (1 - lam) * np.array(thermal_output(bent, SPOT, b))
        assert np.any(mid - chord < -1e-9)

    def test_quadratic_cash_output_fails_boundedness(self):
        report = check_production_map(
            lambda beta: (beta * beta, beta), bound=(45.0, 100.0),
            kinks=[0.0], span=10.0, samples=500)
        assert not report.boundedness.ok
        assert report.boundedness.witness is not None

    def test_jump_fails_continuity(self):
        report = check_production_map(
            lambda beta: (0.0 if beta < 5.0 else 1.0, beta),
            bound=(10.0, 10.0), kinks=[5.0], span=10.0, samples=50)
        assert not report.continuity.ok

    def test_sample_count_validated(self):
        with pytest.raises(ValueError):
            check_assumptions(PLANT_E, SPOT, 0)

    def test_slope_audit_clean_for_plant_e(self):
        assert thermal_slope_audit(PLANT_E, SPOT) == []

    def test_slope_audit_flags_negative_spot(self):
        assert thermal_slope_audit(PLANT_E, -1.0)

    def test_report_aggregates(self):
        report = check_assumptions(PLANT_E, SPOT, 10)
        assert isinstance(report, AssumptionReport)
        assert report.ok == (report.concavity.ok and report.boundedness.ok
                             and report.continuity.ok)


class TestShapeProperties:
    def test_monotone_and_concave_in_injection(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            a, b = np.sort(rng.uniform(0.0, 30.0, size=2))
            lam = rng.uniform()
            fa = np.array(thermal_output(PLANT_E, SPOT, a))
            fb = np.array(thermal_output(PLANT_E, SPOT, b))
            fm = np.array(thermal_output(PLANT_E, SPOT, lam * a + (1 - lam) * b))
            assert fb[0] >= fa[0] - 1e-9                      # cash nondecreasing
            assert np.all(fm >= lam * fa + (1 - lam) * fb - 1e-9)

    def test_maintenance_interpolation(self):
        c = PLANT_E.maintenance
        assert c.value(0.0) == -100.0
        assert c.value(2.5) == pytest.approx(-55.0)
        assert c.value(7.5) == pytest.approx(-6.0)
        assert c.value(10.0) == -2.0

    def test_degenerate_capacity_zero(self):
        tiny = PlantStepData(0.5, 0.0, 1.0, PiecewiseConcave(((0.0, -3.0),)))
        assert tiny.issues() == []
        assert thermal_output(tiny, SPOT, 7.0) == (-1.0, 4.0)
        assert production_bound(tiny, SPOT) == (1.0, 3.0)

    def test_piecewise_issue_listing(self):
        bad = PiecewiseConcave(((0.0, -10.0), (5.0, -12.0), (10.0, -1.0)))
        issues = bad.issues()
        assert any("increasing" in msg for msg in issues)
