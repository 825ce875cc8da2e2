#!/usr/bin/env python
"""
Tests for the command line interface.
"""
import logging
import os
import sys
import tempfile
import unittest

import numpy as np
import pandas as pd

# Add parent directory to path to import robustdicke
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from robustdicke.cli.commands import EXIT_INPUT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK
from robustdicke.cli.main import main, parse_args
from robustdicke.core.types import ControlPulse
from robustdicke.utils.config import load_config, parse_config
from robustdicke.utils.io import read_json, read_pulse, write_pulse


SMALL_CONFIG = """\
n_particles: 2
target_kind: W
delta_xi: 0.1
delta_zeta: 0.0
moment_order_xi: 3
horizon: 0.5
dt: 0.05
u_init_x: 2.0
u_init_z: 2.0
eval_grid_nx: 3
eval_grid_nz: 3
max_outer_iters: 3
log_level: WARNING
"""


class CLITests(unittest.TestCase):
    """Tests for the design, simulate and verify commands."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = os.path.join(self.tmp.name, 'out')

    def tearDown(self):
        root = logging.getLogger()
        for handler in root.handlers[:]:
            root.removeHandler(handler)
            handler.close()
        self.tmp.cleanup()

    def _config(self, text=SMALL_CONFIG, name='run.yaml'):
        path = os.path.join(self.tmp.name, name)
        with open(path, 'w') as f:
            f.write(text)
        return path

    def _pulse(self, pulse):
        path = os.path.join(self.tmp.name, 'pulse_in.csv')
        write_pulse(pulse, path)
        return path

    def test_parse_args(self):
        args = parse_args(['simulate', '--config', 'run.yaml', '--pulse', 'p.csv', '--log-level', 'DEBUG'])
        self.assertEqual((args.command, args.config, args.pulse, args.log_level),
                         ('simulate', 'run.yaml', 'p.csv', 'DEBUG'))
        self.assertIsNone(args.out)
        with self.assertRaises(SystemExit):
            parse_args(['simulate', '--config', 'run.yaml'])

    def test_simulate_zero_pulse(self):
        pulse = self._pulse(ControlPulse.constant(0.0, 0.0, 0.5, 0.05))
        code = main(['simulate', '--config', self._config(), '--pulse', pulse, '--out', self.out])
        self.assertEqual(code, EXIT_OK)
        summary = read_json(os.path.join(self.out, 'summary.json'))
        self.assertAlmostEqual(summary['mean_fidelity'], 0.0, places=12)
        self.assertEqual(summary['I_ux'], 0.0)
        fid = pd.read_csv(os.path.join(self.out, 'fidelity_map.csv'))
        self.assertEqual(len(fid), 3)
        self.assertTrue(os.path.exists(os.path.join(self.out, 'populations.csv')))
        self.assertTrue(os.path.exists(os.path.join(self.out, 'simulate.log')))

    def test_simulate_constant_pulse_effort(self):
        text = SMALL_CONFIG.replace('horizon: 0.5\ndt: 0.05', 'horizon: 9.0\ndt: 0.01')
        pulse = self._pulse(ControlPulse.constant(3.0, 3.0, 9.0, 0.01))
        code = main(['simulate', '--config', self._config(text), '--pulse', pulse, '--out', self.out])
        self.assertEqual(code, EXIT_OK)
        summary = read_json(os.path.join(self.out, 'summary.json'))
        self.assertAlmostEqual(summary['I_ux'], 27.0, places=12)
        self.assertAlmostEqual(summary['I_duz'], 0.0, places=12)
        self.assertLessEqual(summary['max_fidelity'], 1.0)

    def test_simulate_rejects_mismatched_pulse(self):
        pulse = self._pulse(ControlPulse.constant(0.0, 0.0, 1.0, 0.05))
        code = main(['simulate', '--config', self._config(), '--pulse', pulse, '--out', self.out])
        self.assertEqual(code, EXIT_INPUT_ERROR)

    def test_bad_config(self):
        path = self._config(SMALL_CONFIG + 'unknown_key: 1\n')
        self.assertEqual(main(['design', '--config', path, '--out', self.out]), EXIT_INPUT_ERROR)
        self.assertEqual(main(['verify', '--config', os.path.join(self.tmp.name, 'missing.yaml')]),
                         EXIT_INPUT_ERROR)

    def test_design(self):
        code = main(['design', '--config', self._config(), '--out', self.out])
        self.assertIn(code, (EXIT_OK, EXIT_NOT_CONVERGED))
        for name in ('config.yaml', 'pulse.csv', 'history.csv', 'fidelity_map.csv', 'populations.csv',
                     'summary.json', 'design.log'):
            self.assertTrue(os.path.exists(os.path.join(self.out, name)), name)
        self.assertFalse(os.path.exists(os.path.join(self.out, 'moments_final.csv')))

        self.assertEqual(load_config(os.path.join(self.out, 'config.yaml')), parse_config(SMALL_CONFIG))
        pulse = read_pulse(os.path.join(self.out, 'pulse.csv'), 0.05, 10)
        self.assertTrue(np.all((pulse.ux >= 0.0) & (pulse.ux <= 40.0)))
        history = pd.read_csv(os.path.join(self.out, 'history.csv'))
        accepted = history[history['accepted']]['objective'].to_numpy()
        self.assertTrue(np.all(np.diff(accepted) < 0))

    def test_design_is_reproducible(self):
        config = self._config(SMALL_CONFIG + 'export_moments: true\n')
        other = os.path.join(self.tmp.name, 'other')
        main(['design', '--config', config, '--out', self.out])
        main(['design', '--config', config, '--out', other])
        for name in ('pulse.csv', 'history.csv', 'moments_final.csv', 'fidelity_map.csv'):
            with open(os.path.join(self.out, name), 'rb') as a, open(os.path.join(other, name), 'rb') as b:
                self.assertEqual(a.read(), b.read(), name)

    def test_simulate_reproduces_design_summary(self):
        config = self._config()
        main(['design', '--config', config, '--out', self.out])
        replay = os.path.join(self.tmp.name, 'replay')
        code = main(['simulate', '--config', config, '--pulse', os.path.join(self.out, 'pulse.csv'),
                     '--out', replay])
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(read_json(os.path.join(replay, 'summary.json')),
                         read_json(os.path.join(self.out, 'summary.json')))
        with open(os.path.join(self.out, 'fidelity_map.csv'), 'rb') as a, \
                open(os.path.join(replay, 'fidelity_map.csv'), 'rb') as b:
            self.assertEqual(a.read(), b.read())

    def test_verify(self):
        code = main(['verify', '--config', self._config(), '--out', self.out])
        report = read_json(os.path.join(self.out, 'verification_report.json'))
        self.assertEqual(code, EXIT_OK if report['passed'] else EXIT_NOT_CONVERGED)
        names = [check['name'] for check in report['checks']]
        for name in ('unitarity', 'realified_propagation', 'legendre_orthogonality', 'jacobi_coupling',
                     'duality_exact', 'duality_gap', 'duality_order_sweep', 'sensitivity_gradient', 'qp_kkt'):
            self.assertIn(name, names)
        checks = {check['name']: check for check in report['checks']}
        for name in ('unitarity', 'legendre_orthogonality', 'jacobi_coupling', 'duality_exact',
                     'sensitivity_gradient'):
            self.assertTrue(checks[name]['passed'], checks[name])


if __name__ == '__main__':
    unittest.main()
