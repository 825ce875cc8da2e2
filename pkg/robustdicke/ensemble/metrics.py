"""
Pulse effort indices and fidelity summaries.
"""
import math
from typing import Dict

import numpy as np

from robustdicke.core.types import ControlPulse, FidelityMap


def effort_index(samples: np.ndarray, dt: float) -> float:
    """
    Time integral of |f| for a piecewise-constant signal.

    Args:
        samples: Signal samples
        dt: Sample spacing

    Returns:
        Sum of |f_k| * dt
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    return math.fsum(np.abs(np.asarray(samples, dtype=float))) * dt


def slew_index(samples: np.ndarray, dt: float) -> float:
    """
    Effort index of the forward-difference derivative (u_{k+1} - u_k) / dt.

    Equals the total variation of the samples.

    Args:
        samples: Signal samples
        dt: Sample spacing

    Returns:
        Sum of |u_{k+1} - u_k|
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    samples = np.asarray(samples, dtype=float)
    if samples.shape[0] < 2:
        return 0.0
    return math.fsum(np.abs(np.diff(samples)))


def pulse_indices(pulse: ControlPulse) -> Dict[str, float]:
    """
    Effort and slew indices of both control channels.

    Args:
        pulse: Control pulse

    Returns:
        Dictionary with keys I_ux, I_uz, I_dux, I_duz
    """
    return {
        'I_ux': effort_index(pulse.ux, pulse.dt),
        'I_uz': effort_index(pulse.uz, pulse.dt),
        'I_dux': slew_index(pulse.ux, pulse.dt),
        'I_duz': slew_index(pulse.uz, pulse.dt),
    }


def summarize(fid_map: FidelityMap) -> Dict[str, float]:
    """
    Maximum, mean and minimum fidelity over a map.

    Args:
        fid_map: Fidelity map

    Returns:
        Dictionary with keys max, mean, min
    """
    values = np.asarray(fid_map.values, dtype=float).ravel()
    if values.size == 0:
        raise ValueError("Cannot summarize an empty fidelity map")
    return {
        'max': float(np.max(values)),
        'mean': math.fsum(values) / values.size,
        'min': float(np.min(values)),
    }


def create_summary(fid_map: FidelityMap, pulse: ControlPulse) -> Dict[str, float]:
    """
    Summary record written next to every evaluated pulse.

    Args:
        fid_map: Fidelity map of the pulse
        pulse: Evaluated pulse

    Returns:
        Dictionary with keys max_fidelity, mean_fidelity, min_fidelity,
        I_ux, I_uz, I_dux, I_duz
    """
    stats = summarize(fid_map)
    summary = {
        'max_fidelity': stats['max'],
        'mean_fidelity': stats['mean'],
        'min_fidelity': stats['min'],
    }
    summary.update(pulse_indices(pulse))
    return summary
