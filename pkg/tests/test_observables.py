import math
import unittest

import numpy as np

from mondcli import interp
from mondcli.eos import E0_AT_INFINITY, E0_ZERO, AUTO, fluid, polytrope, polytropic_fluid
from mondcli.errors import DomainError
from mondcli.observables import (
    CONVERGENT,
    DIVERGENT_LOG,
    PhysicalUnits,
    asymptotic_fits,
    compute_observables,
    effective_potential_scan,
    field_energy,
    jeans_scan,
    reconstruct_potential,
    resolve_convention,
    rotation_curve,
    vacuum_tail_integral,
)
from mondcli.solver import SolveConfig, extend_tail, integrate
from mondcli.zeta import ZetaModel


def compact(model, k, decades=6.0, y0=1.0):
    sol = integrate(SolveConfig(y0=y0), polytrope(k), ZetaModel(model))
    return extend_tail(sol, sol.R * 10.0 ** decades)


class PotentialTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.half = compact(interp.simple(0.5), 0.0)
        cls.full = compact(interp.simple(1.0), 1.0)

    def test_auto_convention(self):
        self.assertEqual(E0_AT_INFINITY, resolve_convention(self.half, AUTO))
        self.assertEqual(E0_ZERO, resolve_convention(self.full, AUTO))
        with self.assertRaises(DomainError):
            resolve_convention(self.half, "bogus")

    def test_e0_zero_is_minus_y(self):
        potential = reconstruct_potential(self.full, E0_ZERO)
        self.assertEqual(0.0, potential.E0)
        np.testing.assert_array_equal(-self.full.y, potential.U)

    def test_e0_at_infinity_fails_in_genuine_mond(self):
        with self.assertRaises(DomainError):
            reconstruct_potential(self.full, E0_AT_INFINITY)
        with self.assertRaises(DomainError):
            vacuum_tail_integral(self.full.zeta, self.full.M, self.full.R)

    def test_potential_decays_as_power_law(self):
        potential = reconstruct_potential(self.half, E0_AT_INFINITY)
        self.assertLess(potential.E0, 0.0)
        self.assertTrue(np.all(potential.U < 0.0))
        fits = asymptotic_fits(self.half, potential)
        self.assertAlmostEqual(-1.0 / 3.0, fits["potential_exponent"], delta=1e-2)

    def test_logarithmic_potential_in_genuine_mond(self):
        potential = reconstruct_potential(self.full, E0_ZERO)
        fits = asymptotic_fits(self.full, potential)
        self.assertAlmostEqual(1.0, fits["potential_log_slope"] / math.sqrt(self.full.M), delta=1e-3)
        self.assertAlmostEqual(-1.0, fits["uprime_exponent"], delta=1e-3)


class RotationCurveTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.sol = integrate(SolveConfig(y0=1.0), polytrope(1.0), ZetaModel(interp.simple(1.0)))

    def test_velocity_vanishes_at_centre(self):
        curve = rotation_curve(self.sol)
        self.assertEqual(0.0, curve.v[0])
        self.assertTrue(np.all(curve.v >= 0.0))

    def test_tully_fisher(self):
        curve = rotation_curve(self.sol)
        self.assertAlmostEqual(1.0, curve.tully_fisher_ratio, delta=1e-3)
        self.assertAlmostEqual(self.sol.M ** 0.25, curve.v_flat, delta=1e-3 * curve.v_flat)

    def test_no_flat_velocity_below_genuine_mond(self):
        sol = integrate(SolveConfig(y0=1.0), polytrope(0.0), ZetaModel(interp.simple(0.5)))
        curve = rotation_curve(sol)
        self.assertIsNone(curve.v_flat)
        self.assertIsNone(curve.tully_fisher_ratio)


class FieldEnergyTests(unittest.TestCase):
    def test_genuine_mond_is_log_divergent(self):
        sol = compact(interp.simple(1.0), 1.0)
        report = field_energy(sol, sol.R * 1e6)
        self.assertEqual(DIVERGENT_LOG, report.classification)
        self.assertEqual(DIVERGENT_LOG, report.summary_value)
        self.assertTrue(all(b > a for a, b in zip(report.decade_values, report.decade_values[1:])))

    def test_sub_critical_alpha_converges_at_predicted_rate(self):
        sol = compact(interp.simple(0.5), 1.0)
        report = field_energy(sol, sol.R * 1e6)
        self.assertEqual(CONVERGENT, report.classification)
        self.assertEqual(report.value, report.summary_value)
        # 增量逐十倍缩小 10^{-(1-α)/(1+α)}
        ratio = float(np.mean(report.ratios[-2:]))
        self.assertAlmostEqual(1.0, ratio / 10.0 ** (-1.0 / 3.0), delta=0.1)

    def test_short_grid_is_rejected(self):
        sol = integrate(SolveConfig(y0=1.0), polytrope(1.0), ZetaModel(interp.simple(1.0)))
        with self.assertRaises(DomainError):
            field_energy(sol, sol.R * 10.0)
        with self.assertRaises(DomainError):
            field_energy(extend_tail(sol, sol.R * 100.0), sol.R * 100.0)


class JeansTests(unittest.TestCase):
    def test_single_critical_point(self):
        sol = compact(interp.simple(1.0), 1.0, decades=3.0)
        scans = jeans_scan(sol)
        self.assertEqual(20, len(scans))
        for scan in scans:
            with self.subTest(L=scan.L):
                self.assertLessEqual(scan.critical_points, 1)
                self.assertTrue(scan.h_increasing)
        self.assertTrue(any(scan.r_L is not None for scan in scans))

    def test_angular_momentum_must_be_positive(self):
        sol = compact(interp.simple(1.0), 1.0, decades=1.0)
        with self.assertRaises(DomainError):
            effective_potential_scan(sol, 0.0)


class GenuineMondStatesTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.states = [
            ((k, y0), compact(interp.simple(1.0), k, decades=3.0, y0=y0))
            for k in (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)
            for y0 in (0.1, 1.0, 10.0)
        ]

    def test_tully_fisher_for_every_state(self):
        for (k, y0), sol in self.states:
            with self.subTest(k=k, y0=y0):
                ratio = rotation_curve(sol).tully_fisher_ratio
                self.assertGreaterEqual(ratio, 0.999)
                self.assertLessEqual(ratio, 1.001)

    def test_jeans_monotonicity_for_every_state(self):
        for (k, y0), sol in self.states:
            scans = jeans_scan(sol)
            self.assertEqual(20, len(scans))
            for scan in scans:
                with self.subTest(k=k, y0=y0, L=scan.L):
                    self.assertLessEqual(scan.critical_points, 1)
                    self.assertTrue(scan.h_increasing)



class ObservableSetTests(unittest.TestCase):
    def test_summary_keys(self):
        sol = compact(interp.simple(0.5), 0.0, decades=4.0)
        observables = compute_observables(sol)
        summary = observables.summary()
        for key in ("E0", "cutoff_convention", "S", "v_flat", "asymptotics", "jeans_h_increasing"):
            self.assertIn(key, summary)
        self.assertEqual(E0_AT_INFINITY, summary["cutoff_convention"])
        self.assertTrue(observables.jeans_ok())
        self.assertIsNone(summary["central_pressure"])

    def test_fluid_reports_central_pressure(self):
        ansatz = fluid(polytropic_fluid(1.0, K=0.5))
        sol = integrate(SolveConfig(y0=1.0), ansatz, ZetaModel(interp.simple(1.0)))
        observables = compute_observables(sol, with_jeans=False)
        self.assertAlmostEqual(0.5 * sol.rho[0] ** 2, observables.central_pressure, places=12)
        self.assertEqual([], observables.jeans)


class PhysicalUnitsTests(unittest.TestCase):
    def test_galactic_scale(self):
        units = PhysicalUnits(1e11)
        converted = units.convert(R=1.0, M=2.0, v_flat=1.0)
        self.assertAlmostEqual(10.78, converted["R_kpc"], delta=0.02)
        self.assertAlmostEqual(2e11, converted["M_msun"], delta=1.0)
        self.assertAlmostEqual(199.8, converted["v_flat_km_s"], delta=0.5)

    def test_missing_values_stay_missing(self):
        converted = PhysicalUnits(1.0).convert(None, None, None)
        self.assertIsNone(converted["R_kpc"])
        self.assertIsNone(converted["v_flat_km_s"])


if __name__ == "__main__":
    unittest.main()
