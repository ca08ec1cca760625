import unittest

import numpy as np

from kgtx.services.core import PhysicsParams
from kgtx.services.dispersion import (Band, asymptote_check, cauchy_riemann_residual, classify_band,
                                      coefficient_table, coefficient_values, dispersion_k,
                                      reflection_coeff, reflection_phase, s_composite,
                                      s_piecewise, transmission_coeff)
from kgtx.services.errors import BranchCutError


class TestCompositeRoot(unittest.TestCase):
    def setUp(self):
        self.params = PhysicsParams(1.0, 1.0, 5.0)

    def test_matches_piecewise_definition(self):
        omegas = np.linspace(-10.0, 10.0, 1000)
        np.testing.assert_allclose(s_composite(omegas, self.params),
                                   s_piecewise(omegas, self.params), rtol=0, atol=1e-12)

    def test_real_line_cases(self):
        self.assertAlmostEqual(s_composite(0.0, self.params), 2j)
        self.assertAlmostEqual(s_composite(3.0, self.params), np.sqrt(5.0))
        self.assertAlmostEqual(s_composite(-3.0, self.params), -np.sqrt(5.0))

    def test_cut_points_rejected(self):
        with self.assertRaises(BranchCutError):
            s_composite(2.0 - 0.5j, self.params)
        # the branch point itself is fine
        self.assertAlmostEqual(s_composite(2.0, self.params), 0.0)

    def test_analytic_in_upper_half_plane(self):
        z = np.linspace(-6.0, 6.0, 25) + 1j * 0.75
        self.assertLess(cauchy_riemann_residual(self.params, z), 1e-6)

    def test_dispersion_k(self):
        self.assertAlmostEqual(dispersion_k(1, 0.0, self.params), 1.0)
        self.assertAlmostEqual(dispersion_k(2, 9.0, self.params), 2j)
        with self.assertRaises(ValueError):
            dispersion_k(1, -1.0, self.params)


class TestCoefficients(unittest.TestCase):
    def setUp(self):
        self.params = PhysicsParams(1.0, 1.0, 5.0)

    def test_total_reflection_in_tunneling_band(self):
        band = np.linspace(-1.999, 1.999, 401)
        np.testing.assert_allclose(np.abs(reflection_coeff(band, self.params)), 1.0, atol=1e-12)

    def test_transmission_is_one_plus_reflection(self):
        omegas = np.linspace(-8.0, 8.0, 1000)
        np.testing.assert_allclose(reflection_coeff(omegas, self.params) + 1.0,
                                   transmission_coeff(omegas, self.params), atol=1e-12)

    def test_values_at_zero_and_cutoff(self):
        self.assertAlmostEqual(reflection_coeff(0.0, self.params), -1.0)
        self.assertAlmostEqual(transmission_coeff(0.0, self.params), 0.0)
        self.assertAlmostEqual(reflection_coeff(2.0, self.params), 1.0)

    def test_bands(self):
        self.assertIs(classify_band(1.0, self.params), Band.TUNNELING)
        self.assertIs(classify_band(-2.0, self.params), Band.EDGE)
        self.assertIs(classify_band(3.0, self.params), Band.PROPAGATING)
        pairs = coefficient_values(self.params, [0.0, 3.0])
        self.assertEqual(pairs[0][0].as_dict()['band'], 'tunneling')
        self.assertAlmostEqual(pairs[0][0].as_dict()['re'], -1.0)

    def test_table_rows(self):
        table = coefficient_table(self.params, np.linspace(-4.0, 4.0, 9))
        rows = table.rows()
        self.assertEqual(rows.shape, (9, 5))
        np.testing.assert_allclose(rows[:, 0], np.linspace(-4.0, 4.0, 9))

    def test_asymptotics(self):
        cut = self.params.cutoff
        report = asymptote_check(self.params, cut * np.geomspace(1.0, 1e3, 12),
                                 np.linspace(0.2, np.pi - 0.2, 7))
        self.assertTrue(report.passed)
        self.assertLessEqual(report.max_modulus, 10.0)
        for value in report.angle_limits.values():
            self.assertAlmostEqual(abs(value - 1.0), 0.0, places=3)

    def test_asymptote_argument_checks(self):
        with self.assertRaises(ValueError):
            asymptote_check(self.params, [2.0, 1.0], [1.0])
        with self.assertRaises(ValueError):
            asymptote_check(self.params, [1.0, 2.0], [0.0])

    def test_reflection_phase(self):
        omegas = np.linspace(-1.9, 1.9, 201)
        phase = reflection_phase(self.params, omegas)
        self.assertEqual(phase.phase.shape, omegas.shape)
        self.assertTrue(np.all(np.isfinite(phase.delay)))
        with self.assertRaises(ValueError):
            reflection_phase(self.params, omegas[::-1])


if __name__ == '__main__':
    unittest.main()
