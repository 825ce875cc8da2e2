"""
Target profiles for the metrology states the designer prepares.
"""
import math
from typing import Dict, Optional

from robustdicke.core.types import SpinNetwork, TargetKind, TargetProfile


def build_target(kind: TargetKind, net: SpinNetwork,
                 amplitudes: Optional[Dict[float, float]] = None) -> TargetProfile:
    """
    Build the target magnitude profile of a state.

    W = |S, -(S-1)>, HEDS = |S, 0> (N even) or |S, -1/2> (N odd),
    GHZ = (|S, S> + |S, -S>) / sqrt(2). CUSTOM takes explicit magnitudes.

    Args:
        kind: Target kind
        net: Spin network
        amplitudes: Magnitude per Dicke level (CUSTOM only)

    Returns:
        TargetProfile
    """
    spin = net.spin
    if kind is TargetKind.W:
        magnitudes = {-(spin - 1.0): 1.0}
    elif kind is TargetKind.HEDS:
        magnitudes = {0.0 if net.n_particles % 2 == 0 else -0.5: 1.0}
    elif kind is TargetKind.GHZ:
        magnitudes = {spin: 1.0 / math.sqrt(2.0), -spin: 1.0 / math.sqrt(2.0)}
    elif kind is TargetKind.CUSTOM:
        if not amplitudes:
            raise ValueError("CUSTOM targets need explicit amplitudes")
        magnitudes = {float(m): abs(float(v)) for m, v in amplitudes.items()}
    else:
        raise ValueError(f"Unknown target kind: {kind}")

    for m in magnitudes:
        net.index_of(m)
    return TargetProfile(kind=kind, magnitudes=magnitudes)
