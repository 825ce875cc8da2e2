#!/usr/bin/env python
"""
Tests for the invariant checks behind the verify command.
"""
import os
import sys
import unittest

import numpy as np

# Add parent directory to path to import robustdicke
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from robustdicke.cli.verification import (
    UNITARITY_DRAWS, UNITARITY_TOL, check_unitarity, run_checks
)
from robustdicke.utils.config import parse_config


FULL_HORIZON = "n_particles: 5\ntarget_kind: W\n"


class UnitarityCheckTests(unittest.TestCase):
    """Tests for the random-draw norm check."""

    def test_full_horizon_draws(self):
        cfg = parse_config(FULL_HORIZON)
        result = check_unitarity(cfg, np.random.default_rng(0))
        self.assertEqual(result.name, 'unitarity')
        self.assertEqual(result.tolerance, 1e-9)
        self.assertTrue(result.passed, result)
        self.assertLessEqual(result.value, UNITARITY_TOL)
        self.assertEqual(result.detail, f"{UNITARITY_DRAWS} draws over 900 steps")

    def test_two_parameter_box(self):
        cfg = parse_config(FULL_HORIZON + "delta_xi: 0.1\ndelta_zeta: 0.1\nhorizon: 1.0\n")
        result = check_unitarity(cfg, np.random.default_rng(5), n_draws=10)
        self.assertTrue(result.passed, result)
        self.assertEqual(result.detail, "10 draws over 100 steps")

    def test_draws_follow_seed(self):
        cfg = parse_config(FULL_HORIZON + "horizon: 0.5\n")
        first = check_unitarity(cfg, np.random.default_rng(3), n_draws=5)
        second = check_unitarity(cfg, np.random.default_rng(3), n_draws=5)
        self.assertEqual(first.value, second.value)


class ReportTests(unittest.TestCase):
    """Tests for the assembled report."""

    def test_report_layout(self):
        cfg = parse_config(FULL_HORIZON + "horizon: 0.5\ndt: 0.05\n")
        report = run_checks(cfg)
        self.assertEqual(report['passed'], all(check['passed'] for check in report['checks']))
        for check in report['checks']:
            self.assertEqual(set(check), {'name', 'passed', 'value', 'tolerance', 'detail'})


if __name__ == '__main__':
    unittest.main()
