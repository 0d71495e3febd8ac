import math
import tempfile
import unittest
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from mondcli import interp
from mondcli.errors import DomainError


def write_table(path: Path, tau, mu) -> Path:
    np.savetxt(path, np.column_stack([tau, mu]), header="tau mu")
    return path


class MuTests(unittest.TestCase):
    def test_newtonian_mu_is_one(self):
        self.assertEqual(1.0, interp.mu_eval(interp.newtonian(), 5.0))

    def test_simple_alpha_one_at_unit_tau(self):
        self.assertAlmostEqual(0.5, interp.mu_eval(interp.simple(1.0), 1.0), places=15)

    def test_standard_newtonian_limit(self):
        self.assertAlmostEqual(1.0, interp.mu_eval(interp.standard(), 1e8), delta=1e-8)

    def test_deep_limits_for_bundled_models(self):
        for model in (interp.simple(0.25), interp.simple(0.5), interp.simple(1.0), interp.standard()):
            with self.subTest(model=model.label):
                self.assertAlmostEqual(1.0, model.mu(1e-8) / 1e-8 ** model.alpha, delta=1e-4)
                self.assertAlmostEqual(1.0, model.mu(1e8), delta=1e-4)

    def test_negative_tau_is_rejected(self):
        with self.assertRaises(DomainError):
            interp.simple(1.0).mu(-1.0)
        with self.assertRaises(DomainError):
            interp.simple(1.0).mu(float("nan"))

    def test_alpha_outside_unit_interval_is_rejected(self):
        with self.assertRaises(DomainError):
            interp.simple(1.5)
        with self.assertRaises(DomainError):
            interp.InterpolationModel(kind=interp.NEWTONIAN, alpha=0.5)
        with self.assertRaises(DomainError):
            interp.InterpolationModel(kind="bogus", alpha=0.5)

    def test_simple_alpha_zero_behaves_as_newtonian(self):
        model = interp.simple(0.0)
        self.assertTrue(model.is_newtonian)
        self.assertEqual(1.0, model.mu(1e-6))


class MuPrimeTests(unittest.TestCase):
    def test_newtonian_derivative_is_zero(self):
        self.assertEqual(0.0, interp.mu_prime_eval(interp.newtonian(), 2.0))

    def test_simple_alpha_one_derivative(self):
        self.assertAlmostEqual(0.25, interp.mu_prime_eval(interp.simple(1.0), 1.0), places=15)

    def test_derivative_matches_finite_difference(self):
        h = 1e-6
        for model in (interp.standard(), interp.simple(0.5), interp.simple(0.3)):
            for tau in (0.01, 1.0, 30.0):
                with self.subTest(model=model.label, tau=tau):
                    fd = (model.mu(tau + h) - model.mu(tau - h)) / (2.0 * h)
                    self.assertAlmostEqual(fd, model.mu_prime(tau), delta=1e-6 * max(1.0, abs(fd)))

    def test_derivative_requires_positive_tau(self):
        with self.assertRaises(DomainError):
            interp.simple(0.5).mu_prime(0.0)


class FTests(unittest.TestCase):
    def test_newtonian_F_is_identity(self):
        self.assertAlmostEqual(3.0, interp.F_eval(interp.newtonian(), 3.0), places=14)

    def test_F_at_zero(self):
        for model in (interp.newtonian(), interp.simple(0.5), interp.simple(1.0), interp.standard()):
            self.assertEqual(0.0, model.F(0.0))

    def test_simple_alpha_one_closed_form(self):
        expected = 2.0 * math.log(2.0) - 1.0
        self.assertAlmostEqual(expected, interp.F_eval(interp.simple(1.0), 1.0), places=13)
        brute, _ = quad(lambda s: math.sqrt(s) / (1.0 + math.sqrt(s)), 0.0, 1.0, epsabs=0.0, epsrel=1e-12)
        self.assertAlmostEqual(brute, expected, places=11)

    def test_general_alpha_matches_direct_quadrature(self):
        model = interp.simple(0.5)
        for tau in (1e-3, 1.0, 50.0):
            with self.subTest(tau=tau):
                brute, _ = quad(lambda s: model.mu(math.sqrt(s)), 0.0, tau, epsabs=0.0, epsrel=1e-11, limit=200)
                self.assertAlmostEqual(1.0, model.F(tau) / brute, delta=1e-8)

    def test_standard_closed_form_matches_quadrature(self):
        model = interp.standard()
        brute, _ = quad(lambda s: model.mu(math.sqrt(s)), 0.0, 4.0, epsabs=0.0, epsrel=1e-12)
        self.assertAlmostEqual(brute, model.F(4.0), places=10)

    def test_large_tau_limit(self):
        for model in (interp.simple(0.5), interp.simple(1.0), interp.standard()):
            with self.subTest(model=model.label):
                self.assertAlmostEqual(1.0, model.F(1e8) / 1e8, delta=1e-3)

    def test_small_tau_limit(self):
        for model in (interp.simple(0.5), interp.simple(1.0), interp.standard()):
            alpha = model.alpha
            with self.subTest(model=model.label):
                ratio = model.F(1e-8) * 1e-4 ** (-2.0 - alpha)
                self.assertAlmostEqual(2.0 / (2.0 + alpha), ratio, delta=1e-3)


class TableTests(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmpdir.cleanup)
        self.tau = np.geomspace(1e-6, 1e6, 121)
        self.reference = interp.simple(0.5)

    def good_table(self) -> Path:
        mu = [self.reference.mu(float(t)) for t in self.tau]
        return write_table(Path(self.tmpdir.name) / "mu.txt", self.tau, mu)

    def test_table_reproduces_sampled_model(self):
        model = interp.from_table(self.good_table(), 0.5)
        self.assertEqual(interp.TABLE, model.kind)
        for tau in (3e-5, 0.7, 2.0, 4e4):
            with self.subTest(tau=tau):
                self.assertAlmostEqual(self.reference.mu(tau), model.mu(tau), delta=5e-4)
        self.assertAlmostEqual(0.5, model.table_alpha_estimate(), delta=1e-3)

    def test_table_passes_assumption_checks(self):
        model = interp.from_table(self.good_table(), 0.5)
        records = model.check_assumptions()
        self.assertTrue(all(r.passed for r in records), [r for r in records if not r.passed])
        self.assertIn(f"interp[{model.label}].composite_increasing", [r.name for r in records])

    def test_declared_alpha_is_cross_checked(self):
        with self.assertRaises(DomainError) as ctx:
            interp.from_table(self.good_table(), 1.0)
        self.assertIn("20%", str(ctx.exception))

    def test_non_monotone_composite_is_rejected(self):
        mu = np.array([self.reference.mu(float(t)) for t in self.tau])
        mu[60:64] *= 0.05
        path = write_table(Path(self.tmpdir.name) / "bad.txt", self.tau, mu)
        with self.assertRaises(DomainError):
            interp.from_table(path, 0.5)
        model = interp.from_table(path, 0.5, strict=False)
        self.assertFalse(model.composite_is_increasing())

    def test_malformed_tables(self):
        path = Path(self.tmpdir.name) / "three.txt"
        np.savetxt(path, np.ones((4, 3)))
        with self.assertRaises(DomainError):
            interp.from_table(path, 0.5)
        with self.assertRaises(DomainError):
            interp.from_table(Path(self.tmpdir.name) / "missing.txt", 0.5)

    def test_build_interp_dispatch(self):
        self.assertEqual(interp.NEWTONIAN, interp.build_interp("newtonian").kind)
        self.assertEqual(0.5, interp.build_interp("simple", 0.5).alpha)
        self.assertEqual(interp.STANDARD, interp.build_interp("standard").kind)
        with self.assertRaises(DomainError):
            interp.build_interp("table", 0.5)


if __name__ == "__main__":
    unittest.main()
