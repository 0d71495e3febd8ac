import math
import tempfile
import unittest
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from mondcli import eos
from mondcli.errors import DomainError


class ConstantTests(unittest.TestCase):
    def test_c_l_at_zero(self):
        self.assertAlmostEqual(2.0 ** 2.5 * math.pi, eos.c_l_constant(0.0), places=12)
        self.assertAlmostEqual(17.7715, eos.c_l_constant(0.0), places=4)

    def test_c_l_at_one(self):
        self.assertAlmostEqual(2.0 ** 2.5 * math.pi * 4.0 / 3.0, eos.c_l_constant(1.0), places=12)

    def test_c_l_domain(self):
        with self.assertRaises(DomainError):
            eos.c_l_constant(-0.5)


class PolytropeTests(unittest.TestCase):
    def test_vanishes_without_energy(self):
        self.assertEqual(0.0, eos.g_polytrope(0.0, 0.0, 0.0))
        self.assertEqual(0.0, eos.g_polytrope(0.0, 0.0, -2.0))

    def test_isotropic_values(self):
        c0 = eos.c_l_constant(0.0)
        self.assertAlmostEqual(c0 * 2.0 / 3.0, eos.g_polytrope(0.0, 0.0, 1.0), places=12)
        self.assertAlmostEqual(c0 * 4.0 / 15.0, eos.g_polytrope(1.0, 0.0, 1.0), places=12)

    def test_matches_energy_integral(self):
        k, l, y = 1.5, 0.5, 2.0
        c_l = eos.c_l_constant(l)
        integral, _ = quad(lambda eta: eta ** k * (y - eta) ** (l + 0.5), 0.0, y, epsabs=0.0, epsrel=1e-12)
        self.assertAlmostEqual(1.0, eos.g_polytrope(k, l, y) / (c_l * integral), delta=1e-10)

    def test_parameter_domain(self):
        with self.assertRaises(DomainError):
            eos.polytrope(-1.0)
        with self.assertRaises(DomainError):
            eos.polytrope(1.0, l=-0.6)


class MaxwellianTests(unittest.TestCase):
    def test_values(self):
        self.assertAlmostEqual(15.7496, eos.g_maxwellian(0.0), places=4)
        self.assertAlmostEqual((2.0 * math.pi) ** 1.5 * math.e, eos.g_maxwellian(1.0), places=10)
        self.assertLess(eos.g_maxwellian(-50.0), 1e-19)

    def test_overflow_guard(self):
        with self.assertRaises(DomainError):
            eos.g_maxwellian(800.0)

    def test_has_no_cutoff(self):
        ansatz = eos.maxwellian()
        self.assertFalse(ansatz.has_cutoff)
        with self.assertRaises(DomainError):
            eos.AnsatzModel(kind=eos.MAXWELLIAN, cutoff_convention=eos.E0_AT_INFINITY)


class PhiTableTests(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmpdir.cleanup)

    def write(self, name, eta, phi) -> Path:
        path = Path(self.tmpdir.name) / name
        np.savetxt(path, np.column_stack([eta, phi]))
        return path

    def test_sampled_power_law_matches_polytrope(self):
        k = 1.0
        eta = np.geomspace(1e-4, 1e4, 161)
        table = eos.load_phi_table(self.write("phi.txt", eta, eta ** k), kappa=k)
        for l in (0.0, 1.0):
            for y in (0.3, 1.0, 5.0):
                with self.subTest(l=l, y=y):
                    expected = eos.g_polytrope(k, l, y)
                    self.assertAlmostEqual(1.0, eos.g_from_phi(table, k, l, y) / expected, delta=1e-7)

    def test_zero_energy_gives_zero(self):
        eta = np.geomspace(1e-3, 10.0, 50)
        table = eos.load_phi_table(self.write("phi.txt", eta, eta), kappa=1.0)
        self.assertEqual(0.0, eos.g_from_phi(table, 1.0, 0.0, 0.0))

    def test_compact_profile_grows_like_half_integer_power(self):
        eta = np.linspace(0.01, 1.0, 100)
        phi = np.maximum(1.0 - eta, 0.0)
        table = eos.load_phi_table(self.write("compact.txt", eta, phi), kappa=0.0)
        self.assertEqual(1.0, table.support_end)
        g4 = eos.g_from_phi(table, 0.0, 0.0, 1e4)
        g6 = eos.g_from_phi(table, 0.0, 0.0, 1e6)
        self.assertAlmostEqual(10.0, g6 / g4, delta=1e-3)

    def test_kappa_must_match(self):
        eta = np.geomspace(1e-3, 10.0, 50)
        table = eos.load_phi_table(self.write("phi.txt", eta, eta), kappa=1.0)
        with self.assertRaises(DomainError):
            eos.g_from_phi(table, 0.5, 0.0, 1.0)

    def test_rejects_invalid_samples(self):
        with self.assertRaises(DomainError):
            eos.PhiTable(eta=(1.0, 0.5), phi=(1.0, 1.0), kappa=0.0)
        with self.assertRaises(DomainError):
            eos.PhiTable(eta=(0.5, 1.0), phi=(0.0, 1.0), kappa=0.0)


class FluidTests(unittest.TestCase):
    def test_inverse_enthalpy_round_trip(self):
        fluid_eos = eos.polytropic_fluid(2.0)
        self.assertAlmostEqual(1.0, eos.g_fluid(fluid_eos, fluid_eos.Q(1.0)), places=12)
        self.assertEqual(0.0, eos.g_fluid(fluid_eos, 0.0))
        self.assertEqual(0.0, eos.g_fluid(fluid_eos, -1.0))

    def test_quadrature_path_matches_closed_form(self):
        exact = eos.polytropic_fluid(1.5, K=2.0)
        numeric = eos.FluidEOS(P=exact.P, Pprime=exact.Pprime, name="numeric")
        for rho in (1e-3, 0.7, 40.0):
            with self.subTest(rho=rho):
                self.assertAlmostEqual(1.0, numeric.Q(rho) / exact.Q(rho), delta=1e-8)
        for y in (0.05, 1.0, 20.0):
            with self.subTest(y=y):
                self.assertAlmostEqual(1.0, numeric.Q_inverse(y) / exact.Q_inverse(y), delta=1e-8)

    def test_assumption_checks(self):
        good = eos.polytropic_fluid(3.0)
        self.assertTrue(all(c.passed for c in good.check_assumptions()))

        # P = ρ: ∫ P′/s diverges at 0
        isothermal = eos.FluidEOS(P=lambda rho: rho, Pprime=lambda rho: 1.0, name="isothermal")
        failed = {c.name for c in isothermal.check_assumptions() if not c.passed}
        self.assertIn("eos[isothermal].q_finite_at_zero", failed)
        with self.assertRaises(DomainError):
            eos.fluid(isothermal)

    def test_pressure_profile(self):
        ansatz = eos.fluid(eos.polytropic_fluid(1.0, K=0.5))
        self.assertAlmostEqual(0.5 * 4.0, ansatz.pressure(2.0), places=12)
        self.assertEqual(0.0, ansatz.pressure(0.0))
        with self.assertRaises(DomainError):
            eos.polytrope(1.0).pressure(1.0)

    def test_rejects_bad_parameters(self):
        with self.assertRaises(DomainError):
            eos.polytropic_fluid(0.0)
        with self.assertRaises(DomainError):
            eos.polytropic_fluid(1.0, K=-1.0)


class AnsatzTests(unittest.TestCase):
    def test_exponent_fit_near_zero(self):
        fit = eos.g_exponent_fit(eos.polytrope(1.0, 0.5))
        self.assertAlmostEqual(3.0, fit.exponent, places=8)
        self.assertGreater(fit.prefactor, 0.0)

    def test_phi_table_ansatz_uses_table(self):
        eta = np.geomspace(1e-4, 1e4, 161)
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "phi.txt"
            np.savetxt(path, np.column_stack([eta, eta]))
            table = eos.load_phi_table(path, 1.0)
        ansatz = eos.phi_table_ansatz(table)
        self.assertEqual(1.0, ansatz.kappa)
        self.assertEqual(eos.g_from_phi(table, 1.0, 0.0, 0.5), ansatz.g(0.5))
        self.assertEqual(0.0, ansatz.g(-0.5))

    def test_build_ansatz_requires_k(self):
        with self.assertRaises(DomainError) as ctx:
            eos.build_ansatz("polytrope")
        self.assertIn("ansatz.k", str(ctx.exception))

    def test_build_ansatz_dispatch(self):
        self.assertEqual("polytrope(k=1, l=0)", eos.build_ansatz("polytrope", k=1.0).label)
        self.assertEqual(eos.MAXWELLIAN, eos.build_ansatz("maxwellian").label)
        self.assertTrue(eos.build_ansatz("fluid", eos_n=2.0).label.startswith("fluid("))
        with self.assertRaises(DomainError):
            eos.build_ansatz("fluid")


if __name__ == "__main__":
    unittest.main()
