import math
import unittest

import numpy as np

from mondcli import interp
from mondcli.errors import BracketError, DomainError
from mondcli.roots import expand_bracket, safeguarded_newton
from mondcli.zeta import (
    CLOSED_FORM,
    SAFEGUARDED_NEWTON,
    ZetaCache,
    ZetaModel,
    jeans_monotonicity_margin,
    round_trip_error,
    zeta_deep_exponent_check,
    zeta_eval,
    zeta_prime_eval,
    zeta_sq_lipschitz_bound,
)


BUNDLED = (interp.newtonian(), interp.simple(0.5), interp.simple(1.0), interp.standard())


class RootToolTests(unittest.TestCase):
    def test_expand_bracket_grows_both_sides(self):
        lo, hi = expand_bracket(lambda x: x - 10.0, 0.0, 1.0)
        self.assertLessEqual(lo, 10.0)
        self.assertGreaterEqual(hi, 10.0)

    def test_expand_bracket_gives_up(self):
        with self.assertRaises(BracketError):
            expand_bracket(lambda x: 1.0, 0.0, 1.0, max_expansions=5)

    def test_safeguarded_newton_converges(self):
        root = safeguarded_newton(lambda x: (x * x - 2.0, 2.0 * x), 0.0, 2.0, ftol=1e-14)
        self.assertAlmostEqual(math.sqrt(2.0), root, places=13)


class ZetaEvalTests(unittest.TestCase):
    def test_newtonian_is_identity(self):
        self.assertEqual(2.0, zeta_eval(ZetaModel(interp.newtonian()), 2.0))

    def test_simple_alpha_one_closed_form(self):
        self.assertAlmostEqual(1.0 + math.sqrt(3.0), zeta_eval(ZetaModel(interp.simple(1.0)), 2.0), places=13)

    def test_zero_maps_to_zero(self):
        for model in BUNDLED:
            self.assertEqual(0.0, ZetaModel(model).eval(0.0))

    def test_negative_sigma_is_rejected(self):
        with self.assertRaises(DomainError):
            ZetaModel(interp.simple(0.5)).eval(-1e-3)

    def test_inversion_strategy(self):
        self.assertEqual(CLOSED_FORM, ZetaModel(interp.standard()).inversion)
        self.assertEqual(CLOSED_FORM, ZetaModel(interp.simple(1.0)).inversion)
        self.assertEqual(SAFEGUARDED_NEWTON, ZetaModel(interp.simple(0.5)).inversion)

    def test_round_trip_on_log_grid(self):
        for model in BUNDLED + (interp.simple(0.2),):
            with self.subTest(model=model.label):
                self.assertLess(round_trip_error(ZetaModel(model)), 1e-10)

    def test_inverse_relation_holds(self):
        zeta = ZetaModel(interp.simple(0.5))
        for sigma in np.geomspace(1e-12, 1e12, 25):
            tau = zeta.eval(float(sigma))
            self.assertAlmostEqual(1.0, tau * zeta.interp.mu(tau) / sigma, delta=1e-11)

    def test_monotone_increasing(self):
        for model in BUNDLED:
            zeta = ZetaModel(model)
            values = [zeta.eval(float(s)) for s in np.geomspace(1e-10, 1e10, 81)]
            self.assertTrue(all(b > a for a, b in zip(values, values[1:])), model.label)

    def test_underflow_branch(self):
        zeta = ZetaModel(interp.simple(1.0))
        self.assertAlmostEqual(1e-160, zeta.eval(1e-320), delta=1e-162)

    def test_cache_reuses_last_root(self):
        zeta = ZetaModel(interp.simple(0.5))
        cache = ZetaCache()
        plain = [zeta.eval(s) for s in (1e-3, 1.1e-3, 1.2e-3)]
        cached = [zeta.eval(s, cache) for s in (1e-3, 1.1e-3, 1.2e-3)]
        self.assertEqual(2, cache.hits)
        for a, b in zip(plain, cached):
            self.assertAlmostEqual(a, b, delta=2e-12 * a)


class ZetaPrimeTests(unittest.TestCase):
    def test_matches_finite_difference(self):
        for model in BUNDLED:
            zeta = ZetaModel(model)
            for sigma in (1e-3, 1.0, 1e3):
                with self.subTest(model=model.label, sigma=sigma):
                    h = 1e-6 * sigma
                    fd = (zeta.eval(sigma + h) - zeta.eval(sigma - h)) / (2.0 * h)
                    self.assertAlmostEqual(1.0, zeta_prime_eval(zeta, sigma) / fd, delta=5e-6)

    def test_derivative_at_zero(self):
        self.assertEqual(1.0, ZetaModel(interp.newtonian()).prime(0.0))
        self.assertEqual(math.inf, ZetaModel(interp.simple(1.0)).prime(0.0))


class AsymptoticTests(unittest.TestCase):
    def test_newtonian_has_no_deviation(self):
        report = zeta_deep_exponent_check(ZetaModel(interp.newtonian()))
        self.assertEqual(0.0, report.deep_deviation)
        self.assertEqual(0.0, report.far_deviation)

    def test_simple_deep_branch(self):
        report = zeta_deep_exponent_check(ZetaModel(interp.simple(1.0)))
        self.assertLess(report.deep_samples[0], 1e-2)
        self.assertLess(report.deep_deviation, 1e-2)

    def test_standard_far_branch(self):
        report = zeta_deep_exponent_check(ZetaModel(interp.standard()))
        self.assertLess(report.far_samples[-1], 1e-4)

    def test_square_is_lipschitz_with_expected_bound(self):
        for model in BUNDLED:
            with self.subTest(model=model.label):
                self.assertTrue(zeta_sq_lipschitz_bound(ZetaModel(model)).passed)

    def test_jeans_margin_is_positive(self):
        for model in BUNDLED:
            with self.subTest(model=model.label):
                margin = jeans_monotonicity_margin(ZetaModel(model))
                self.assertTrue(margin.passed, margin)


if __name__ == "__main__":
    unittest.main()
