"""
Enforcement of amplitude and slew-rate limits on control pulses.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from robustdicke.core.exceptions import InfeasibleConstraintsError
from robustdicke.core.types import ControlPulse, SignalRestrictions


CHANNELS = ("x", "z")


@dataclass(eq=False)
class ChannelLimits:
    """
    Absolute limits on one channel of a sampled pulse.

    Samples satisfy lower <= u_k <= upper and
    diff_lower[k] <= u_{k+1} - u_k <= diff_upper[k].
    """
    lower: float
    upper: float
    diff_lower: np.ndarray
    diff_upper: np.ndarray


class RestrictionChecker:
    """
    Limit checks for control pulses.

    Translates the signal restrictions to per-sample bounds on a given time
    grid, proves that the bounds admit at least one pulse, and reports the
    samples at which a pulse breaks them.
    """

    def __init__(self, restrictions: SignalRestrictions, tolerance: float = 1e-10):
        """
        Initialize the checker.

        Args:
            restrictions: Signal restrictions
            tolerance: Slack allowed when checking a pulse
        """
        self.logger = logging.getLogger(self.__class__.__name__)
        self.restrictions = restrictions
        self.tolerance = tolerance

    def limits(self, channel: str, n_steps: int, dt: float) -> ChannelLimits:
        """
        Absolute limits of one channel on a uniform grid.

        The rate bound between samples k and k+1 is evaluated at t_k.

        Args:
            channel: 'x' or 'z'
            n_steps: Number of samples
            dt: Sample spacing

        Returns:
            ChannelLimits
        """
        lower, upper = self.restrictions.amplitude_bounds(channel)
        times = np.arange(max(n_steps - 1, 0)) * dt
        rate_lower, rate_upper = self.restrictions.rate_bounds(times)
        return ChannelLimits(lower, upper, rate_lower * dt, rate_upper * dt)

    def infeasible_samples(self, limits: ChannelLimits, n_steps: int) -> List[int]:
        """
        Samples at which no admissible value remains.

        Walks the chain forward keeping the interval of values reachable
        under all earlier bounds. An empty interval marks the sample and the
        walk restarts from the amplitude box.

        Args:
            limits: Channel limits
            n_steps: Number of samples

        Returns:
            Indices of infeasible samples
        """
        if n_steps == 0:
            return []
        if limits.lower > limits.upper:
            return list(range(n_steps))
        bad = []
        lo, hi = limits.lower, limits.upper
        for k in range(1, n_steps):
            lo = max(limits.lower, lo + limits.diff_lower[k - 1])
            hi = min(limits.upper, hi + limits.diff_upper[k - 1])
            if lo > hi:
                bad.append(k)
                lo, hi = limits.lower, limits.upper
        return bad

    def ensure_feasible(self, n_steps: int, dt: float):
        """
        Raise if the restrictions admit no pulse on the grid.

        Raises:
            InfeasibleConstraintsError: For the first infeasible channel
        """
        for channel in CHANNELS:
            bad = self.infeasible_samples(self.limits(channel, n_steps, dt), n_steps)
            if bad:
                raise InfeasibleConstraintsError(channel, bad)

    def check_pulse(self, pulse: ControlPulse) -> Tuple[bool, Dict[str, List[int]]]:
        """
        Check a pulse against the restrictions.

        Args:
            pulse: Control pulse

        Returns:
            Tuple of (compliant, violations)
            - compliant: True if every sample is within limits
            - violations: Offending sample indices per channel and kind
        """
        violations = {}
        for channel, samples in zip(CHANNELS, (pulse.ux, pulse.uz)):
            limits = self.limits(channel, pulse.n_steps, pulse.dt)
            amp = np.flatnonzero((samples < limits.lower - self.tolerance)
                                 | (samples > limits.upper + self.tolerance))
            diffs = np.diff(samples)
            rate = np.flatnonzero((diffs < limits.diff_lower - self.tolerance)
                                  | (diffs > limits.diff_upper + self.tolerance))
            if amp.size:
                violations[f"amplitude_{channel}"] = amp.tolist()
            if rate.size:
                violations[f"rate_{channel}"] = rate.tolist()
        for kind, indices in violations.items():
            self.logger.warning(f"Pulse violates {kind} limits at {len(indices)} samples")
        return not violations, violations

    def clip(self, pulse: ControlPulse) -> ControlPulse:
        """Clip both channels to their amplitude boxes."""
        x_lo, x_hi = self.restrictions.amplitude_bounds("x")
        z_lo, z_hi = self.restrictions.amplitude_bounds("z")
        return ControlPulse(np.clip(pulse.ux, x_lo, x_hi), np.clip(pulse.uz, z_lo, z_hi), pulse.dt)
