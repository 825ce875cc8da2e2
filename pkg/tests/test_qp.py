#!/usr/bin/env python
"""
Tests for signal restrictions, the QP solver and the damped step.
"""
import os
import sys
import unittest

import numpy as np
from scipy import sparse

# Add parent directory to path to import robustdicke
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from robustdicke.core.dynamics import build_generators
from robustdicke.core.exceptions import InfeasibleConstraintsError
from robustdicke.core.types import (
    AmplitudeState, ControlPulse, ParameterBox, RateMode, SignalRestrictions, SpinNetwork, TargetKind
)
from robustdicke.moments.kernel import MomentKernel, initial_moments
from robustdicke.optimization.objective import realify_residual, residual, residual_mask, sensitivity
from robustdicke.optimization.qp import (
    ADMMQPSolver, LinearConstraints, build_step_constraints, kkt_residuals, qp_step
)
from robustdicke.optimization.restrictions import ChannelLimits, RestrictionChecker
from robustdicke.optimization.targets import build_target


KKT_TOL = 1e-8


def box_constraints(n, lower, upper):
    return LinearConstraints(sparse.identity(n, format='csr'), np.full(n, lower), np.full(n, upper))


class RestrictionTests(unittest.TestCase):
    """Tests for the restriction checker."""

    def test_literal_limits(self):
        checker = RestrictionChecker(SignalRestrictions(rate_min=-2.0, rate_max=2.0))
        limits = checker.limits('x', 4, 0.5)
        self.assertEqual((limits.lower, limits.upper), (0.0, 40.0))
        self.assertTrue(np.isinf(limits.diff_upper[0]))
        np.testing.assert_allclose(limits.diff_upper[1:], [2.0, 1.0])
        np.testing.assert_allclose(limits.diff_lower[1:], [-2.0, -1.0])

    def test_constant_limits(self):
        checker = RestrictionChecker(SignalRestrictions.symmetric(0.0, 40.0, RateMode.CONSTANT, 3.0))
        limits = checker.limits('z', 3, 0.1)
        np.testing.assert_allclose(limits.diff_upper, [0.3, 0.3])

    def test_check_pulse(self):
        checker = RestrictionChecker(SignalRestrictions.symmetric(0.0, 40.0, RateMode.CONSTANT, 1.0))
        compliant, violations = checker.check_pulse(ControlPulse([0.0, 0.05, 0.1], [1.0, 1.0, 1.0], 0.1))
        self.assertTrue(compliant)
        self.assertEqual(violations, {})

        compliant, violations = checker.check_pulse(ControlPulse([0.0, 0.5, 50.0], [1.0, 1.0, -1.0], 0.1))
        self.assertFalse(compliant)
        self.assertEqual(violations['amplitude_x'], [2])
        self.assertEqual(violations['rate_x'], [0, 1])
        self.assertEqual(violations['amplitude_z'], [2])
        self.assertEqual(violations['rate_z'], [1])

    def test_clip(self):
        checker = RestrictionChecker(SignalRestrictions(u_max_x=5.0, u_min_z=-1.0, u_max_z=1.0))
        clipped = checker.clip(ControlPulse([-1.0, 7.0], [-3.0, 0.5], 0.1))
        np.testing.assert_array_equal(clipped.ux, [0.0, 5.0])
        np.testing.assert_array_equal(clipped.uz, [-1.0, 0.5])

    def test_infeasible_samples(self):
        checker = RestrictionChecker(SignalRestrictions())
        limits = ChannelLimits(0.0, 1.0, np.array([1.0, 1.0]), np.array([2.0, 2.0]))
        self.assertEqual(checker.infeasible_samples(limits, 3), [2])
        self.assertEqual(checker.infeasible_samples(ChannelLimits(1.0, 0.0, np.zeros(1), np.zeros(1)), 2), [0, 1])
        self.assertEqual(checker.infeasible_samples(limits, 0), [])

    def test_symmetric_rates_are_feasible(self):
        checker = RestrictionChecker(SignalRestrictions.symmetric(0.0, 40.0, RateMode.CONSTANT, 1e-6))
        checker.ensure_feasible(900, 0.01)

    def test_asymmetric_literal_limits(self):
        checker = RestrictionChecker(SignalRestrictions(rate_min=-1.0, rate_max=4.0))
        limits = checker.limits('x', 4, 0.5)
        self.assertTrue(np.isinf(limits.diff_lower[0]) and limits.diff_lower[0] < 0)
        np.testing.assert_allclose(limits.diff_lower[1:], [-1.0, -0.5])
        np.testing.assert_allclose(limits.diff_upper[1:], [4.0, 2.0])

    def test_rate_bounds_validation(self):
        with self.assertRaises(ValueError):
            SignalRestrictions(rate_min=2.0, rate_max=1.0)
        with self.assertRaises(ValueError):
            SignalRestrictions(rate_max=np.inf)
        with self.assertRaises(ValueError):
            SignalRestrictions.symmetric(0.0, 40.0, rate_value=0.0)

    def test_ensure_feasible_raises(self):
        # a forced rise of 0.5 per sample overruns u_max_x = 1 at the fourth sample
        restrictions = SignalRestrictions(u_max_x=1.0, rate_mode=RateMode.CONSTANT, rate_min=5.0, rate_max=10.0)
        checker = RestrictionChecker(restrictions)
        with self.assertRaises(InfeasibleConstraintsError) as ctx:
            checker.ensure_feasible(4, 0.1)
        self.assertEqual(ctx.exception.channel, 'x')
        self.assertEqual(ctx.exception.indices, [3])
        self.assertIn('u_x', str(ctx.exception))
        checker.ensure_feasible(3, 0.1)


class SolverTests(unittest.TestCase):
    """Tests for the ADMM solver with active-set polish."""

    def setUp(self):
        self.rng = np.random.default_rng(13)
        self.solver = ADMMQPSolver()

    def _spd(self, n):
        b = self.rng.normal(size=(n, n))
        return b.T @ b + np.eye(n)

    def test_unconstrained_limit(self):
        hessian = self._spd(12)
        gradient = self.rng.normal(size=12)
        result = self.solver.solve(hessian, gradient, box_constraints(12, -1e6, 1e6))
        self.assertEqual(result.status, 'unconstrained')
        np.testing.assert_allclose(result.x, np.linalg.solve(hessian, -gradient), atol=1e-10)
        np.testing.assert_array_equal(result.y, np.zeros(12))

    def test_no_constraint_rows(self):
        hessian = self._spd(4)
        gradient = self.rng.normal(size=4)
        empty = LinearConstraints(sparse.csr_matrix((0, 4)), np.zeros(0), np.zeros(0))
        result = self.solver.solve(hessian, gradient, empty)
        self.assertEqual(result.status, 'unconstrained')
        self.assertLess(result.kkt_residual, 1e-10)

    def test_separable_box(self):
        diag = np.arange(1.0, 13.0)
        center = self.rng.uniform(-3, 3, 12)
        result = self.solver.solve(np.diag(diag), -diag * center, box_constraints(12, -1.0, 1.0))
        np.testing.assert_allclose(result.x, np.clip(center, -1.0, 1.0), atol=1e-8)
        self.assertLessEqual(result.kkt_residual, KKT_TOL)
        # multipliers are non-positive at lower bounds and non-negative at upper bounds
        self.assertTrue(np.all(result.y[center < -1.0] < 0))
        self.assertTrue(np.all(result.y[center > 1.0] > 0))

    def test_coupled_box(self):
        hessian = self._spd(12)
        gradient = 10.0 * self.rng.normal(size=12)
        constraints = box_constraints(12, -0.5, 0.5)
        result = self.solver.solve(hessian, gradient, constraints)
        self.assertIn(result.status, ('polished', 'unconstrained'))
        self.assertLessEqual(result.primal_residual, KKT_TOL)
        self.assertLessEqual(result.kkt_residual, KKT_TOL)
        self.assertEqual(kkt_residuals(hessian, gradient, constraints, result.x, result.y)[0],
                         result.stationarity)

    def test_difference_rows(self):
        n = 6
        diff = sparse.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n), format='csr')
        matrix = sparse.vstack([sparse.identity(n, format='csr'), diff], format='csr')
        constraints = LinearConstraints(matrix, np.concatenate([np.full(n, -5.0), np.full(n - 1, -0.2)]),
                                        np.concatenate([np.full(n, 5.0), np.full(n - 1, 0.2)]))
        gradient = np.array([3.0, -3.0, 3.0, -3.0, 3.0, -3.0])
        result = self.solver.solve(np.eye(n), gradient, constraints)
        self.assertLessEqual(constraints.violation(result.x), KKT_TOL)
        self.assertEqual(result.status, 'polished')
        self.assertLessEqual(result.kkt_residual, KKT_TOL)

    def test_deterministic(self):
        hessian = self._spd(8)
        gradient = 5.0 * self.rng.normal(size=8)
        first = self.solver.solve(hessian, gradient, box_constraints(8, -0.3, 0.3))
        second = ADMMQPSolver().solve(hessian, gradient, box_constraints(8, -0.3, 0.3))
        np.testing.assert_array_equal(first.x, second.x)
        np.testing.assert_array_equal(first.y, second.y)


class StepTests(unittest.TestCase):
    """Tests for the damped Gauss-Newton step."""

    def setUp(self):
        net = SpinNetwork(2)
        self.kernel = MomentKernel(build_generators(net), ParameterBox(0.1, 0.0), 2, 0)
        self.m0 = initial_moments(AmplitudeState.ground(net), 2, 0)
        self.target = build_target(TargetKind.W, net)
        self.pulse = ControlPulse(np.full(5, 5.0), np.full(5, 5.0), 0.05)
        self.sens, self.final = sensitivity(self.pulse, self.kernel, self.m0)

    def test_constraint_layout(self):
        literal = build_step_constraints(self.pulse, SignalRestrictions())
        self.assertEqual(literal.matrix.shape, (16, 10))
        constant = build_step_constraints(self.pulse, SignalRestrictions(rate_mode=RateMode.CONSTANT))
        self.assertEqual(constant.matrix.shape, (18, 10))
        np.testing.assert_allclose(constant.lower[:5], -5.0)
        np.testing.assert_allclose(constant.upper[:5], 35.0)

    def test_unconstrained_gauss_newton_step(self):
        damping = 0.5
        result = qp_step(self.final, self.sens, self.target, self.pulse, SignalRestrictions(), damping)
        r = realify_residual(residual(self.final, self.target))
        jac = self.sens.realified(residual_mask(self.target, self.final))
        expected = np.linalg.solve(jac.T @ jac + damping * np.eye(10), -jac.T @ r)
        self.assertEqual(result.status, 'unconstrained')
        np.testing.assert_allclose(result.x, expected, atol=1e-10)

    def test_large_damping_shrinks_step(self):
        small = qp_step(self.final, self.sens, self.target, self.pulse, SignalRestrictions(), 1e-2)
        large = qp_step(self.final, self.sens, self.target, self.pulse, SignalRestrictions(), 1e8)
        self.assertLess(np.linalg.norm(large.x), 1e-6)
        self.assertLess(np.linalg.norm(large.x), np.linalg.norm(small.x))

    def test_step_respects_restrictions(self):
        restrictions = SignalRestrictions(u_min_x=4.9, u_max_x=5.1, u_min_z=4.9, u_max_z=5.1,
                                          rate_mode=RateMode.CONSTANT, rate_min=-1.0, rate_max=1.0)
        result = qp_step(self.final, self.sens, self.target, self.pulse, restrictions, 1e-3)
        stepped = self.pulse.with_stacked(self.pulse.stacked + result.x)
        compliant, _ = RestrictionChecker(restrictions, tolerance=1e-5).check_pulse(stepped)
        self.assertTrue(compliant)

    def test_rejects_non_positive_damping(self):
        with self.assertRaises(ValueError):
            qp_step(self.final, self.sens, self.target, self.pulse, SignalRestrictions(), 0.0)


if __name__ == '__main__':
    unittest.main()
