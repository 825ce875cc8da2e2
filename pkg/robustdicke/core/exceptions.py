"""
Exceptions raised by the package.
"""
from typing import Optional, Sequence


class ConfigError(ValueError):
    """Invalid run configuration, anchored to the offending key and line."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class InfeasibleConstraintsError(ValueError):
    """Amplitude and rate bounds leave no admissible control samples."""

    def __init__(self, channel: str, indices: Sequence[int]):
        self.channel = channel
        self.indices = list(indices)
        shown = ", ".join(str(i) for i in self.indices[:10])
        more = "" if len(self.indices) <= 10 else f" (+{len(self.indices) - 10} more)"
        super().__init__(f"Signal restrictions on channel u_{channel} are infeasible at samples {shown}{more}")


class PulseFileError(ValueError):
    """Pulse CSV does not match the documented schema or the run grid."""
