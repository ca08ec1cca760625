import unittest

import numpy as np

from kgtx.services.profiles import BumpProfile, ModulatedBump, ProfileSum


class TestBumpProfile(unittest.TestCase):
    def setUp(self):
        self.bump = BumpProfile(amplitude=2.0, center=1.5, width=0.4)

    def test_support_and_peak(self):
        np.testing.assert_allclose(self.bump.support, (1.1, 1.9))
        self.assertEqual(float(self.bump(1.5)), 2.0)
        self.assertEqual(float(self.bump(1.0)), 0.0)

    def test_derivatives_match_differences(self):
        x = np.linspace(1.0, 2.0, 4001)
        h = x[1] - x[0]
        np.testing.assert_allclose(self.bump.derivative(x, 1), np.gradient(self.bump(x), h), atol=1e-3)
        # the third derivative jumps at the support edges
        inner = np.abs(x - 1.5) < 0.36
        second = np.gradient(self.bump.derivative(x, 1), h)
        np.testing.assert_allclose(self.bump.derivative(x, 2)[inner], second[inner], atol=1e-2)

    def test_transform_matches_quadrature(self):
        z = np.concatenate((np.linspace(-60.0, 60.0, 41), 1j * np.linspace(0.0, 20.0, 5),
                            np.linspace(-5.0, 5.0, 5) - 3j))
        exact = self.bump.transform(z)
        numeric = self.bump.transform_by_quadrature(z)
        np.testing.assert_allclose(exact, numeric, rtol=1e-9, atol=1e-12)

    def test_transform_at_zero_is_the_integral(self):
        # A * w * 32/35
        self.assertAlmostEqual(self.bump.transform(0.0).real, 2.0 * 0.4 * 32.0 / 35.0, places=12)

    def test_scalar_in_scalar_out(self):
        self.assertIsInstance(self.bump.transform(3.0), complex)

    def test_width_must_be_positive(self):
        with self.assertRaises(ValueError):
            BumpProfile(1.0, 1.0, 0.0)


class TestModulatedBump(unittest.TestCase):
    def test_transform_peaks_near_wavenumber(self):
        packet = ModulatedBump(1.0, 25.0, 20.0, wavenumber=1.0)
        omega = np.linspace(-3.0, 3.0, 601)
        magnitude = np.abs(packet.transform(omega))
        self.assertAlmostEqual(abs(omega[np.argmax(magnitude)]), 1.0, places=1)

    def test_transform_matches_quadrature(self):
        packet = ModulatedBump(0.5, 2.0, 0.8, wavenumber=7.0)
        z = np.linspace(-20.0, 20.0, 17) + 0.5j
        np.testing.assert_allclose(packet.transform(z), packet.transform_by_quadrature(z),
                                   rtol=1e-9, atol=1e-12)

    def test_second_derivative(self):
        packet = ModulatedBump(1.0, 2.0, 0.8, wavenumber=5.0)
        x = np.linspace(1.0, 3.0, 8001)
        h = x[1] - x[0]
        inner = np.abs(x - 2.0) < 0.72
        second = np.gradient(packet.derivative(x, 1), h)
        np.testing.assert_allclose(packet.derivative(x, 2)[inner], second[inner], atol=1e-2)
        with self.assertRaises(ValueError):
            packet.derivative(x, 3)


class TestProfileSum(unittest.TestCase):
    def test_linear_combination(self):
        a = BumpProfile(1.0, 1.5, 0.4)
        b = BumpProfile(-0.5, 3.0, 0.5)
        total = ProfileSum(((2.0, a), (1.0, b)))
        np.testing.assert_allclose(total.support, (1.1, 3.5))
        x = np.linspace(0.0, 4.0, 101)
        np.testing.assert_allclose(total(x), 2.0 * a(x) + b(x))
        z = np.linspace(-10.0, 10.0, 11)
        np.testing.assert_allclose(total.transform(z), 2.0 * a.transform(z) + b.transform(z))


if __name__ == '__main__':
    unittest.main()
