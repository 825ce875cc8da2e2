"""
Sampling of the parameter box and direct ensemble evaluation of pulses.
"""
import logging

import numpy as np

from robustdicke.core.dynamics import propagate_batch
from robustdicke.core.types import (
    AmplitudeState, ControlPulse, FidelityMap, GeneratorSet, GridKind, ParameterBox,
    SampleGrid, SpinNetwork, TargetProfile
)
from robustdicke.moments.legendre import gauss_legendre


logger = logging.getLogger(__name__)


def _axis_nodes(delta: float, count: int, kind: GridKind) -> np.ndarray:
    if delta == 0.0:
        return np.ones(1)
    if count < 1:
        raise ValueError(f"Grid node count must be positive, got {count}")
    if kind is GridKind.GAUSS_LEGENDRE:
        nodes, _ = gauss_legendre(count)
        return 1.0 + delta * nodes
    if count == 1:
        return np.ones(1)
    return np.linspace(1.0 - delta, 1.0 + delta, count)


def build_grid(box: ParameterBox, nx: int = 21, nz: int = 21,
               kind: GridKind = GridKind.UNIFORM) -> SampleGrid:
    """
    Sample the parameter box on a tensor grid.

    A collapsed axis (delta = 0) is pinned to the single gain 1.

    Args:
        box: Parameter box
        nx: Node count along xi
        nz: Node count along zeta
        kind: Node placement

    Returns:
        SampleGrid
    """
    return SampleGrid(
        xi_nodes=_axis_nodes(box.delta_xi, nx, kind),
        zeta_nodes=_axis_nodes(box.delta_zeta, nz, kind),
        kind=kind,
    )


def fidelity_values(final: np.ndarray, target: np.ndarray, support: np.ndarray) -> np.ndarray:
    """
    Vectorized fidelity 1 - sum over the support of (|c_a| - t_a)^2.

    Args:
        final: Final amplitudes, shape (..., n)
        target: Target magnitudes, shape (n,)
        support: Boolean mask of the target support, shape (n,)

    Returns:
        Fidelities, shape final.shape[:-1]
    """
    gaps = np.abs(final[..., support]) - target[support]
    return 1.0 - np.sum(gaps ** 2, axis=-1)


def fidelity(final: AmplitudeState, target: TargetProfile) -> float:
    """
    Fidelity of a final state against a target profile.

    Only magnitudes enter, so the value is invariant under per-level phases.
    Very poor states give negative values, which are returned unclamped.

    Args:
        final: Final state
        target: Target profile

    Returns:
        Fidelity, at most 1
    """
    net = SpinNetwork(final.c.shape[0] - 1)
    t = target.vector(net)
    return float(fidelity_values(final.c, t, t > 0))


def propagate_grid(pulse: ControlPulse, gen: GeneratorSet, grid: SampleGrid,
                   psi0: AmplitudeState) -> np.ndarray:
    """
    Final amplitudes of every grid member.

    Args:
        pulse: Control pulse
        gen: Generator set
        grid: Sample grid
        psi0: Common initial state

    Returns:
        Array of shape (nx, nz, n)
    """
    xi, zeta = grid.flattened()
    final = propagate_batch(psi0.c, gen, xi, zeta, pulse).final
    return final.reshape(grid.shape + (gen.dim,))


def fidelity_map(pulse: ControlPulse, net: SpinNetwork, gen: GeneratorSet, grid: SampleGrid,
                 target: TargetProfile, psi0: AmplitudeState) -> FidelityMap:
    """
    Propagate the sampled ensemble and record the fidelity at every node.

    Args:
        pulse: Control pulse
        net: Spin network
        gen: Generator set of the network
        grid: Sample grid
        target: Target profile
        psi0: Common initial state

    Returns:
        FidelityMap with values of shape grid.shape
    """
    if grid.shape[0] == 0 or grid.shape[1] == 0:
        raise ValueError("Sample grid is empty")
    final = propagate_grid(pulse, gen, grid, psi0)
    t = target.vector(net)
    values = fidelity_values(final, t, t > 0)
    logger.debug(f"Evaluated fidelity map of shape {values.shape}")
    return FidelityMap(grid=grid, values=values)


def population_map(pulse: ControlPulse, gen: GeneratorSet, grid: SampleGrid,
                   psi0: AmplitudeState) -> np.ndarray:
    """
    Final Dicke-level populations |C_m(T, xi, zeta)|^2 over the grid.

    Returns:
        Array of shape (nx, nz, n)
    """
    return np.abs(propagate_grid(pulse, gen, grid, psi0)) ** 2
