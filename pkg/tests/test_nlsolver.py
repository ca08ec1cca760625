import math
import unittest
from unittest.mock import patch

import numpy as np
from scipy.integrate import trapezoid

from kgtx.services import nlsolver
from kgtx.services.core import BranchField, BranchGrid, PhysicsParams
from kgtx.services.errors import AdmissibilityError, CFLViolation, InstabilityError, NewtonDivergence
from kgtx.services.nonlinearity import build_nonlinearity
from kgtx.services.profiles import BumpProfile, ProfileSum
from kgtx.services.spectral import InitialDatum, TransmissionSolution

PARAMS = PhysicsParams(1.0, 1.0, 5.0)
BUMP = BumpProfile(1.0, 1.5, 0.4)


def grid_for(h, T=1.0):
    return BranchGrid.covering(h, BUMP.support[1] + T + 10.0 * h)


def relative_l2(values, reference):
    return float(np.linalg.norm(values - reference) / np.linalg.norm(reference))


class TestNodeAndStart(unittest.TestCase):
    def test_node_value(self):
        self.assertAlmostEqual(nlsolver.node_value([1.0, 0.0], [0.0, 0.0]), 4.0 / 6.0)
        self.assertEqual(nlsolver.node_value([0.0, 0.0], [0.0, 0.0]), 0.0)
        # equal branches: the one-sided derivative vanishes
        self.assertAlmostEqual(nlsolver.node_value([1.0, 1.0], [1.0, 1.0]), 1.0)
        with self.assertRaises(ValueError):
            nlsolver.node_value([1.0], [1.0])

    def test_cfl_violation_carries_step(self):
        with self.assertRaises(CFLViolation) as ctx:
            nlsolver.check_cfl(PARAMS, 0.02, 0.01, step=7)
        self.assertEqual(ctx.exception.step, 7)
        self.assertAlmostEqual(nlsolver.check_cfl(PARAMS, 0.005, 0.01), 0.5)

    def test_taylor_start(self):
        grid = grid_for(1.0 / 256)
        field = BranchField.from_profiles(grid, BUMP)
        dt = 0.5 * grid.h
        state = nlsolver.start(field, build_nonlinearity('none'), PARAMS, dt)
        x = grid.x
        expected = BUMP(x) + 0.5 * dt * dt * (BUMP.derivative(x, 2) - PARAMS.a1 * BUMP(x))
        np.testing.assert_allclose(state.current.u1[1:-1], expected[1:-1], atol=1e-6)
        self.assertIs(state.previous, field)
        self.assertEqual(state.step_index, 1)

    def test_pair_must_share_grid(self):
        with self.assertRaises(ValueError):
            nlsolver.SolverState(0.1, BranchField.zeros(BranchGrid(0.1, 5)),
                                 BranchField.zeros(BranchGrid(0.1, 6)), 0.1)


class TestRun(unittest.TestCase):
    def test_zero_field_stays_zero(self):
        grid = BranchGrid(1.0 / 32, 65)
        run = nlsolver.run(BranchField.zeros(grid), build_nonlinearity('cubic', 1.0), PARAMS, grid, 0.5)
        self.assertEqual(run.final().field.max_abs(), 0.0)
        self.assertTrue(all(r.total == 0.0 for r in run.energies))

    def test_snapshots_and_metadata(self):
        calls = []
        run = nlsolver.run(InitialDatum(BUMP), build_nonlinearity('none'), PARAMS, grid_for(1.0 / 32),
                           1.0, snapshot_times=[0.0, 0.5, 1.0],
                           monitor=lambda state, report: calls.append(state.step_index))
        self.assertEqual(run.times, [0.0, 0.5, 1.0])
        self.assertEqual(run.metadata['steps'], len(calls))
        self.assertEqual(calls[-1], run.metadata['steps'])
        self.assertFalse(run.metadata['override'])

    def test_short_grid_rejected(self):
        with self.assertRaises(ValueError):
            nlsolver.run(InitialDatum(BUMP), build_nonlinearity('none'), PARAMS,
                         BranchGrid.covering(1.0 / 32, 2.0), 1.0)

    def test_inadmissible_rejected_unless_overridden(self):
        spec = build_nonlinearity('focusing', 1.0)
        with self.assertRaises(AdmissibilityError):
            nlsolver.run(InitialDatum(BUMP), spec, PARAMS, grid_for(1.0 / 32), 0.25)
        run = nlsolver.run(InitialDatum(BUMP), spec, PARAMS, grid_for(1.0 / 32), 0.25,
                           allow_inadmissible=True)
        self.assertTrue(run.metadata['override'])

    def test_amplitude_guard(self):
        with self.assertRaises(InstabilityError) as ctx:
            nlsolver.run(InitialDatum(BUMP), build_nonlinearity('none'), PARAMS, grid_for(1.0 / 32),
                         1.0, amplitude_factor=0.5)
        self.assertEqual(ctx.exception.step, 1)

    def test_matches_closed_form(self):
        h = 1.0 / 128
        run = nlsolver.run(InitialDatum(BUMP), build_nonlinearity('none'), PARAMS, grid_for(h), 1.0)
        final = run.final().field
        reference = TransmissionSolution(InitialDatum(BUMP), PARAMS).field(1.0, final.grid)
        self.assertLess(relative_l2(final.to_global()[1], reference.to_global()[1]), 1e-2)

    def test_linear_run_is_linear_in_datum(self):
        other = BumpProfile(0.5, 1.3, 0.2)
        combined = ProfileSum(((2.0, BUMP), (-3.0, other)))
        spec = build_nonlinearity('none')
        grid = grid_for(1.0 / 64, 0.5)
        finals = [nlsolver.run(InitialDatum(p), spec, PARAMS, grid, 0.5).final().field.to_global()[1]
                  for p in (BUMP, other, combined)]
        self.assertLess(relative_l2(finals[2], 2.0 * finals[0] - 3.0 * finals[1]), 1e-10)

    def test_failed_newton_becomes_divergence(self):
        with patch('kgtx.services.nlsolver.newton', side_effect=RuntimeError("no point converged")):
            with self.assertRaises(NewtonDivergence) as ctx:
                nlsolver.run(InitialDatum(BUMP), build_nonlinearity('cubic', 1.0), PARAMS,
                             grid_for(1.0 / 32, 0.25), 0.25, scheme='conserving')
        self.assertEqual(ctx.exception.step, 2)
        self.assertIn('no point converged', str(ctx.exception))


class TestNodeFlux(unittest.TestCase):
    def test_conserving_flux_residual_is_second_order(self):
        # datum next to the node so the wave crosses it before T
        bump = BumpProfile(1.0, 0.5, 0.4)
        spec = build_nonlinearity('cubic', 1.0)
        times = [0.125, 0.25, 0.375, 0.5]
        residuals = []
        for h in (1.0 / 64, 1.0 / 128, 1.0 / 256):
            grid = BranchGrid.covering(h, bump.support[1] + 0.5 + 10.0 * h)
            run = nlsolver.run(InitialDatum(bump), spec, PARAMS, grid, 0.5, scheme='conserving',
                               snapshot_times=times)
            residuals.append(max(abs(s.field.flux_residual()) for s in run.snapshots))
        orders = [math.log2(coarse / fine) for coarse, fine in zip(residuals, residuals[1:])]
        self.assertGreaterEqual(min(orders), 1.9, orders)


class TestEnergy(unittest.TestCase):
    def test_static_energy_matches_quadrature(self):
        spec = build_nonlinearity('cubic', 1.0)
        grid = grid_for(1.0 / 512)
        report = nlsolver.field_energy(BranchField.from_profiles(grid, BUMP), spec, PARAMS)
        x = np.linspace(1.1, 1.9, 20001)
        u = BUMP(x)
        expected = (0.5 * trapezoid(BUMP.derivative(x, 1) ** 2, x) + 0.5 * trapezoid(u ** 2, x)
                    + 0.25 * trapezoid(u ** 4, x))
        self.assertEqual(report.parts['kinetic'], 0.0)
        self.assertAlmostEqual(report.total / expected, 1.0, places=4)
        self.assertGreaterEqual(report.parts['nonlinear'], 0.0)

    def test_zero_energy(self):
        grid = BranchGrid(0.1, 11)
        report = nlsolver.field_energy(BranchField.zeros(grid), build_nonlinearity('cubic'), PARAMS)
        self.assertEqual(report.total, 0.0)

    def test_conserving_scheme_keeps_energy(self):
        spec = build_nonlinearity('cubic', 1.0)
        run = nlsolver.run(InitialDatum(BUMP), spec, PARAMS, grid_for(1.0 / 64), 1.0,
                           scheme='conserving')
        base = run.energies[0].total
        drift = max(abs(r.total - base) for r in run.energies) / base
        self.assertLessEqual(drift, 1e-9)
        self.assertEqual(run.metadata['scheme'], 'conserving')

    def test_leapfrog_energy_and_norm_bound(self):
        spec = build_nonlinearity('cubic', 1.0)
        run = nlsolver.run(InitialDatum(BUMP), spec, PARAMS, grid_for(1.0 / 64), 1.0)
        base = run.energies[0].total
        drift = max(abs(r.total - base) for r in run.energies) / base
        self.assertLessEqual(drift, 1e-3)
        e0 = run.metadata['E0']
        self.assertLessEqual(max(0.5 * r.norm_sq for r in run.energies), 1.01 * e0)
        self.assertTrue(all(r.parts['nonlinear'] >= 0.0 for r in run.energies))


class TestReversal(unittest.TestCase):
    def test_leapfrog_retraces_cubic_run(self):
        spec = build_nonlinearity('cubic', 1.0)
        run = nlsolver.run(InitialDatum(BUMP), spec, PARAMS, grid_for(1.0 / 32), 1.0)
        initial = run.snapshots[0].field
        back = nlsolver.reverse(run.final_state, spec, PARAMS, run.metadata['steps'] - 1)
        self.assertLess(relative_l2(back.to_global()[1], initial.to_global()[1]), 1e-8)


if __name__ == '__main__':
    unittest.main()
