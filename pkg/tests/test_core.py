import unittest

import numpy as np

from kgtx.services.core import (BranchField, BranchGrid, PhysicsParams, branch_sqrt,
                                fourier_forward, fourier_inverse, integrate, panel_rule,
                                quad_panels)
from kgtx.services.errors import QuadratureError, WindowError
from kgtx.services.profiles import BumpProfile


class TestPhysicsParams(unittest.TestCase):
    def test_reference_values(self):
        params = PhysicsParams(1.0, 1.0, 5.0)
        self.assertEqual(params.k, 2.0)
        self.assertEqual(params.cutoff, 2.0)
        self.assertEqual(params.a(2), 5.0)

    def test_step_must_be_upward(self):
        with self.assertRaisesRegex(ValueError, "a2 must exceed a1"):
            PhysicsParams(1.0, 2.0, 2.0)
        with self.assertRaises(ValueError):
            PhysicsParams(0.0, 1.0, 2.0)
        with self.assertRaises(ValueError):
            PhysicsParams(1.0, float('nan'), 2.0)

    def test_uniform_allows_equal_coefficients(self):
        params = PhysicsParams.without_step(2.0, 3.0)
        self.assertEqual(params.k, 0.0)
        with self.assertRaises(ValueError):
            PhysicsParams(1.0, 1.0, 2.0, uniform=True)


class TestBranchField(unittest.TestCase):
    def setUp(self):
        self.grid = BranchGrid(0.25, 9)

    def test_grid_geometry(self):
        self.assertEqual(self.grid.extent, 2.0)
        self.assertAlmostEqual(float(self.grid.weights.sum()), 2.0)
        self.assertEqual(BranchGrid.covering(0.25, 1.9).n, 9)

    def test_node_values_must_agree(self):
        u1 = np.ones(9)
        u2 = np.zeros(9)
        with self.assertRaisesRegex(ValueError, "node"):
            BranchField(self.grid, u1, u2)

    def test_arrays_are_read_only(self):
        field = BranchField.zeros(self.grid)
        with self.assertRaises(ValueError):
            field.u1[3] = 1.0

    def test_global_layout(self):
        u1 = np.arange(9, dtype=float)
        u2 = -np.arange(9, dtype=float)
        field = BranchField(self.grid, u1, u2)
        x, u = field.to_global()
        self.assertEqual(x[0], -2.0)
        self.assertEqual(x[-1], 2.0)
        np.testing.assert_array_equal(u[:8], -np.arange(8, 0, -1))
        back = BranchField.from_global(self.grid, u)
        np.testing.assert_array_equal(back.u2, u2)

    def test_flux_residual_of_mirror_symmetric_data(self):
        x = self.grid.x
        u = np.cos(x)
        field = BranchField(self.grid, u, u)
        # one-sided derivatives are equal and small, their sum is O(h^2)
        self.assertLess(abs(field.flux_residual()), 0.1)


class TestComplexPrimitives(unittest.TestCase):
    def test_branch_sqrt_window(self):
        self.assertAlmostEqual(branch_sqrt(-1.0), 1j)
        self.assertAlmostEqual(branch_sqrt(4.0), 2.0)
        # argument -pi/2 stays on the principal side of the window
        z = branch_sqrt(-1j)
        self.assertAlmostEqual(z, np.exp(-0.25j * np.pi))
        self.assertIsInstance(branch_sqrt(2.0), complex)

    def test_branch_sqrt_squares_back(self):
        rng = np.random.default_rng(7)
        z = 1e3 * rng.uniform(0.0, 1.0, 10_000) * np.exp(2j * np.pi * rng.uniform(0.0, 1.0, 10_000))
        error = np.abs(branch_sqrt(z) ** 2 - z)
        self.assertTrue(np.all(error <= 1e-12 * np.abs(z)), float(np.max(error / np.abs(z))))

    def test_parseval(self):
        bump = BumpProfile(1.0, 2.0, 0.7)
        x = np.linspace(0.0, 4.0, 2049)
        values = bump(x)
        spectrum = fourier_forward(values, x)
        d_omega = 2.0 * np.pi / (x.size * spectrum.h)
        space = np.sum(values ** 2) * spectrum.h
        frequency = np.sum(np.abs(spectrum.values) ** 2) * d_omega / (2.0 * np.pi)
        self.assertAlmostEqual(frequency / space, 1.0, places=8)

    def test_fourier_matches_closed_form(self):
        bump = BumpProfile(1.0, 0.0, 0.5)
        x = np.linspace(-4.0, 4.0, 1025)
        spectrum = fourier_forward(bump(x), x)
        low = np.abs(spectrum.omega) < 20
        np.testing.assert_allclose(spectrum.values[low], bump.transform(spectrum.omega[low]),
                                   atol=1e-8)
        np.testing.assert_allclose(fourier_inverse(spectrum).real, bump(x), atol=1e-12)

    def test_window_edge_rejected(self):
        x = np.linspace(0.0, 1.0, 65)
        with self.assertRaises(WindowError):
            fourier_forward(np.ones_like(x), x)


class TestPanelQuadrature(unittest.TestCase):
    def test_polynomial_exact(self):
        result = quad_panels(lambda w: w ** 3, [0.0, 1.0], 3.0, n_per_panel=4)
        self.assertAlmostEqual(result.value.real, 81.0 / 4.0, places=11)

    def test_exponential_tail(self):
        result = quad_panels(lambda w: np.exp(-w), [0.0], 50.0)
        self.assertLess(abs(result.value - 1.0), 1e-12)

    def test_graded_rule_handles_square_root_kink(self):
        rule = panel_rule([0.0, 1.0], 2.0, n_per_panel=16, grading=12)
        value = integrate(rule, np.sqrt(np.abs(rule.nodes - 1.0))).value.real
        self.assertAlmostEqual(value, 4.0 / 3.0, places=9)

    def test_rule_is_sorted_and_reaches_top(self):
        rule = panel_rule([-3.0, -1.0, 0.0, 1.0], 3.0, n_per_panel=8, max_width=0.5, grading=3)
        self.assertTrue(np.all(np.diff(rule.nodes) > 0))
        self.assertAlmostEqual(float(rule.weights.sum()), 6.0, places=12)

    def test_non_finite_sample_names_frequency(self):
        rule = panel_rule([0.0], 1.0, n_per_panel=4)
        values = np.ones(rule.nodes.size)
        values[2] = np.nan
        with self.assertRaises(QuadratureError) as ctx:
            integrate(rule, values)
        self.assertAlmostEqual(ctx.exception.omega, rule.nodes[2])

    def test_breakpoints_must_be_sorted(self):
        with self.assertRaises(ValueError):
            panel_rule([1.0, 0.0], 2.0)


if __name__ == '__main__':
    unittest.main()
