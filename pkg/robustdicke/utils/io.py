"""
CSV and JSON result files.

Every CSV is written with '.' decimals and 17 significant digits, so values
survive a write/read cycle bit for bit and repeated runs produce identical
bytes.
"""
import json
import logging
import os
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from robustdicke.core.exceptions import PulseFileError
from robustdicke.core.types import (
    ControlPulse, FidelityMap, IterationRecord, MomentState, SampleGrid, SpinNetwork
)


logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'
PULSE_COLUMNS = ['t', 'u_x', 'u_z']
HISTORY_COLUMNS = ['iter', 'objective', 'lambda', 'accepted']
TIME_TOLERANCE = 1e-9


def _write_csv(df: pd.DataFrame, file_path: str):
    directory = os.path.dirname(file_path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)
    df.to_csv(file_path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.debug(f"Wrote {len(df)} rows to {file_path}")


def write_pulse(pulse: ControlPulse, file_path: str):
    """Write a pulse as columns t, u_x, u_z with t the left endpoint of each interval."""
    _write_csv(pd.DataFrame({'t': pulse.times, 'u_x': pulse.ux, 'u_z': pulse.uz}), file_path)


def read_pulse(file_path: str, dt: float, n_steps: Optional[int] = None) -> ControlPulse:
    """
    Read a pulse CSV written by write_pulse.

    Args:
        file_path: Path to the CSV file
        dt: Sample spacing of the run grid
        n_steps: Expected number of samples (optional)

    Returns:
        ControlPulse

    Raises:
        PulseFileError: On unreadable files, wrong columns, non-numeric or
            non-finite values, or a time grid that does not match the run
    """
    try:
        df = pd.read_csv(file_path, float_precision='round_trip')
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise PulseFileError(f"Cannot read pulse file {file_path}: {e}")

    if list(df.columns) != PULSE_COLUMNS:
        raise PulseFileError(f"Pulse file {file_path} must have columns {PULSE_COLUMNS}, got {list(df.columns)}")
    try:
        values = df.to_numpy(dtype=float)
    except ValueError as e:
        raise PulseFileError(f"Pulse file {file_path} has non-numeric values: {e}")
    if not np.all(np.isfinite(values)):
        raise PulseFileError(f"Pulse file {file_path} has non-finite values")

    if n_steps is not None and len(df) != n_steps:
        raise PulseFileError(f"Pulse file {file_path} has {len(df)} samples, expected {n_steps} = horizon/dt")
    expected = np.arange(len(df)) * dt
    atol = TIME_TOLERANCE * max(1.0, len(df) * dt)
    if not np.allclose(values[:, 0], expected, rtol=0.0, atol=atol):
        raise PulseFileError(f"Pulse file {file_path} times do not follow the grid t_k = k * {dt}")

    logger.info(f"Loaded pulse with {len(df)} samples from {file_path}")
    return ControlPulse(values[:, 1], values[:, 2], dt)


def write_history(history: List[IterationRecord], file_path: str):
    """Write the optimizer history as columns iter, objective, lambda, accepted."""
    df = pd.DataFrame({
        'iter': [rec.iteration for rec in history],
        'objective': [rec.objective for rec in history],
        'lambda': [rec.damping for rec in history],
        'accepted': [rec.accepted for rec in history],
    }, columns=HISTORY_COLUMNS)
    _write_csv(df, file_path)


def write_fidelity_map(fid_map: FidelityMap, file_path: str):
    """Write a fidelity map as columns xi, zeta, fidelity in xi-major order."""
    xi, zeta = fid_map.grid.flattened()
    _write_csv(pd.DataFrame({'xi': xi, 'zeta': zeta, 'fidelity': np.ravel(fid_map.values)}), file_path)


def read_fidelity_map(file_path: str) -> pd.DataFrame:
    """Read a fidelity map CSV."""
    return pd.read_csv(file_path, float_precision='round_trip')


def write_populations(populations: np.ndarray, grid: SampleGrid, net: SpinNetwork, file_path: str):
    """
    Write final level populations as columns xi, zeta, m, population.

    Args:
        populations: Array of shape (nx, nz, n)
        grid: Sample grid the populations were evaluated on
        net: Spin network
        file_path: Path to the CSV file
    """
    xi, zeta = grid.flattened()
    n = net.dim
    df = pd.DataFrame({
        'xi': np.repeat(xi, n),
        'zeta': np.repeat(zeta, n),
        'm': np.tile(net.m_values, xi.shape[0]),
        'population': populations.reshape(-1),
    })
    _write_csv(df, file_path)


def write_moments(mom: MomentState, file_path: str):
    """Write a moment tensor as columns a, i, j, re, im (a the storage index)."""
    a, i, j = np.meshgrid(*(np.arange(s) for s in mom.m.shape), indexing='ij')
    _write_csv(pd.DataFrame({
        'a': a.ravel(), 'i': i.ravel(), 'j': j.ravel(),
        're': mom.m.real.ravel(), 'im': mom.m.imag.ravel(),
    }), file_path)


def write_json(data: Dict, file_path: str):
    """Write a JSON document with stable key order."""
    directory = os.path.dirname(file_path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)
    with open(file_path, 'w') as f:
        json.dump(data, f, indent=2)
        f.write('\n')


def read_json(file_path: str) -> Dict:
    with open(file_path, 'r') as f:
        return json.load(f)
