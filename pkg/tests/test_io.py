#!/usr/bin/env python
"""
Tests for result file readers and writers.
"""
import filecmp
import os
import sys
import tempfile
import unittest

import numpy as np
import pandas as pd

# Add parent directory to path to import robustdicke
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from robustdicke.core.exceptions import PulseFileError
from robustdicke.core.types import (
    ControlPulse, FidelityMap, IterationRecord, MomentState, SampleGrid, SpinNetwork
)
from robustdicke.utils.io import (
    HISTORY_COLUMNS, read_fidelity_map, read_json, read_pulse, write_fidelity_map, write_history,
    write_json, write_moments, write_populations, write_pulse
)


class PulseFileTests(unittest.TestCase):
    """Tests for pulse CSV files."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, 'pulse.csv')
        rng = np.random.default_rng(17)
        self.pulse = ControlPulse(rng.uniform(0, 40, 900), rng.uniform(0, 40, 900), 0.01)

    def tearDown(self):
        self.tmp.cleanup()

    def _write_text(self, text):
        with open(self.path, 'w') as f:
            f.write(text)

    def test_values_survive(self):
        write_pulse(self.pulse, self.path)
        loaded = read_pulse(self.path, 0.01, 900)
        np.testing.assert_array_equal(loaded.ux, self.pulse.ux)
        np.testing.assert_array_equal(loaded.uz, self.pulse.uz)

    def test_header_and_times(self):
        write_pulse(ControlPulse.constant(3.0, 0.0, 0.03, 0.01), self.path)
        with open(self.path) as f:
            lines = f.read().split('\n')
        self.assertEqual(lines[0], 't,u_x,u_z')
        self.assertEqual(lines[1], '0,3,0')
        self.assertEqual(len(lines), 5)

    def test_repeat_writes_are_identical(self):
        other = os.path.join(self.tmp.name, 'again.csv')
        write_pulse(self.pulse, self.path)
        write_pulse(self.pulse, other)
        self.assertTrue(filecmp.cmp(self.path, other, shallow=False))

    def test_missing_file(self):
        with self.assertRaises(PulseFileError):
            read_pulse(os.path.join(self.tmp.name, 'absent.csv'), 0.01)

    def test_empty_file(self):
        self._write_text('')
        with self.assertRaises(PulseFileError):
            read_pulse(self.path, 0.01)

    def test_wrong_columns(self):
        self._write_text('t,ux,uz\n0,1,1\n')
        with self.assertRaises(PulseFileError):
            read_pulse(self.path, 0.01)

    def test_non_numeric(self):
        self._write_text('t,u_x,u_z\n0,1,1\n0.01,abc,1\n')
        with self.assertRaises(PulseFileError):
            read_pulse(self.path, 0.01)

    def test_non_finite(self):
        self._write_text('t,u_x,u_z\n0,1,1\n0.01,inf,1\n')
        with self.assertRaises(PulseFileError):
            read_pulse(self.path, 0.01)

    def test_length_mismatch(self):
        write_pulse(ControlPulse.constant(1.0, 1.0, 0.05, 0.01), self.path)
        with self.assertRaises(PulseFileError):
            read_pulse(self.path, 0.01, 900)

    def test_grid_mismatch(self):
        write_pulse(ControlPulse.constant(1.0, 1.0, 0.1, 0.02), self.path)
        with self.assertRaises(PulseFileError):
            read_pulse(self.path, 0.01)


class ResultFileTests(unittest.TestCase):
    """Tests for history, fidelity, population, moment and JSON files."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def test_history(self):
        path = os.path.join(self.tmp.name, 'history.csv')
        write_history([IterationRecord(0, 16.0, 1.0, True), IterationRecord(1, 17.5, 10.0, False)], path)
        df = pd.read_csv(path)
        self.assertEqual(list(df.columns), HISTORY_COLUMNS)
        self.assertEqual(df['accepted'].tolist(), [True, False])
        self.assertEqual(df['lambda'].tolist(), [1.0, 10.0])

    def test_fidelity_map_order(self):
        path = os.path.join(self.tmp.name, 'fidelity_map.csv')
        grid = SampleGrid(np.array([0.9, 1.1]), np.array([0.95, 1.05]))
        write_fidelity_map(FidelityMap(grid, np.array([[0.1, 0.2], [0.3, 0.4]])), path)
        df = read_fidelity_map(path)
        self.assertEqual(list(df.columns), ['xi', 'zeta', 'fidelity'])
        self.assertEqual(df['xi'].tolist(), [0.9, 0.9, 1.1, 1.1])
        self.assertEqual(df['fidelity'].tolist(), [0.1, 0.2, 0.3, 0.4])

    def test_populations(self):
        path = os.path.join(self.tmp.name, 'populations.csv')
        net = SpinNetwork(2)
        grid = SampleGrid(np.array([1.0]), np.array([0.9, 1.1]))
        populations = np.array([[[0.5, 0.5, 0.0], [0.0, 0.0, 1.0]]])
        write_populations(populations, grid, net, path)
        df = pd.read_csv(path)
        self.assertEqual(len(df), 6)
        self.assertEqual(df['m'].tolist(), [1.0, 0.0, -1.0, 1.0, 0.0, -1.0])
        self.assertEqual(df['population'].tolist(), [0.5, 0.5, 0.0, 0.0, 0.0, 1.0])

    def test_moments(self):
        path = os.path.join(self.tmp.name, 'moments.csv')
        m = np.zeros((3, 2, 1), dtype=complex)
        m[2, 1, 0] = 0.25 - 1.5j
        write_moments(MomentState(m), path)
        df = pd.read_csv(path)
        self.assertEqual(list(df.columns), ['a', 'i', 'j', 're', 'im'])
        row = df[(df['a'] == 2) & (df['i'] == 1)].iloc[0]
        self.assertEqual((row['re'], row['im']), (0.25, -1.5))

    def test_json(self):
        path = os.path.join(self.tmp.name, 'sub', 'summary.json')
        write_json({'max_fidelity': 0.99, 'I_ux': 27.0}, path)
        self.assertEqual(read_json(path), {'max_fidelity': 0.99, 'I_ux': 27.0})
        with open(path) as f:
            self.assertTrue(f.read().endswith('}\n'))


if __name__ == '__main__':
    unittest.main()
