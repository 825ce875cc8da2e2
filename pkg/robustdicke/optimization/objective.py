"""
Least-squares design objective on final moments and its sensitivity to the
control samples.

J = sum over a not in A, all (i, j) of |m[a,i,j](T)|^2
  + sum over a in A, a != a_max, all (i, j) of |m[a,i,j](T) - F delta_i0 delta_j0 t_a|^2

with F the order-(0, 0) moment of a unit constant (4 unnormalized, 2
orthonormal). Only the a_max level is left out of the residual.
"""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from robustdicke.core.types import ControlPulse, MomentState, SpinNetwork, TargetProfile
from robustdicke.moments.kernel import MomentKernel


logger = logging.getLogger(__name__)


def _network_of(mom: MomentState) -> SpinNetwork:
    return SpinNetwork(mom.m.shape[0] - 1)


def target_moments(target: TargetProfile, mom: MomentState) -> np.ndarray:
    """Moment tensor of the ideal parameter-independent final ensemble."""
    ideal = np.zeros(mom.m.shape, dtype=complex)
    ideal[:, 0, 0] = mom.convention.target_factor * target.vector(_network_of(mom))
    return ideal


def residual_mask(target: TargetProfile, mom: MomentState) -> np.ndarray:
    """Boolean mask over the moment tensor selecting residual entries."""
    mask = np.ones(mom.m.shape, dtype=bool)
    mask[_network_of(mom).index_of(target.a_max)] = False
    return mask


def residual(mom: MomentState, target: TargetProfile) -> np.ndarray:
    """
    Complex residual of the final moments.

    Args:
        mom: Final moment state
        target: Target profile

    Returns:
        Residual entries in C order of the masked tensor
    """
    return (mom.m - target_moments(target, mom))[residual_mask(target, mom)]


def realify_residual(r: np.ndarray) -> np.ndarray:
    """Stack real and imaginary parts."""
    return np.concatenate([r.real, r.imag])


def objective(mom: MomentState, target: TargetProfile) -> float:
    """
    Least-squares objective of a final moment state.

    Args:
        mom: Final moment state
        target: Target profile

    Returns:
        Sum of squared residual magnitudes
    """
    r = residual(mom, target)
    return float(np.sum(r.real ** 2 + r.imag ** 2))


@dataclass(eq=False)
class SensitivityMap:
    """
    First-order map from control increments to final-moment increments.

    jacobian[a, i, j, c] = d m[a, i, j](T) / d u_c, with the decision vector
    u = [ux_0 .. ux_{K-1}, uz_0 .. uz_{K-1}].
    """
    jacobian: np.ndarray

    @property
    def n_controls(self) -> int:
        return self.jacobian.shape[-1]

    def apply(self, du: np.ndarray) -> np.ndarray:
        """Moment increment produced by a control increment."""
        return self.jacobian @ np.asarray(du, dtype=float)

    def realified(self, mask: np.ndarray) -> np.ndarray:
        """Real Jacobian of the realified residual, shape (2R, 2K_t)."""
        rows = self.jacobian[mask]
        return np.vstack([rows.real, rows.imag])


def _divided_differences(eigvals: np.ndarray, dt: float) -> np.ndarray:
    """
    First divided differences of exp(-i lambda dt) over eigenvalue pairs.

    Written through sinc so that (near-)degenerate pairs reduce smoothly to
    the derivative -i dt exp(-i lambda dt).
    """
    mean = 0.5 * (eigvals[:, :, None] + eigvals[:, None, :])
    diff = eigvals[:, :, None] - eigvals[:, None, :]
    return -1j * dt * np.exp(-1j * dt * mean) * np.sinc(diff * dt / (2.0 * np.pi))


def sensitivity(pulse: ControlPulse, kernel: MomentKernel,
                m0: MomentState) -> Tuple[SensitivityMap, MomentState]:
    """
    Exact derivative of the final moments with respect to every control sample.

    Each step propagator is differentiated through its eigendecomposition in
    the nodal representation of the moment system, then carried to the final
    time by the remaining step propagators.

    Args:
        pulse: Current pulse
        kernel: Moment kernel
        m0: Initial moments

    Returns:
        Tuple of (SensitivityMap, final MomentState)
    """
    n_steps = pulse.n_steps
    trajectory = kernel.propagate_nodal(m0, pulse, keep_factors=True)
    final = MomentState(kernel.from_nodal(trajectory.final), m0.t + pulse.horizon, kernel.convention)
    batch, dim = kernel.n_nodes, kernel.gen.dim
    nodal_jacobian = np.zeros((batch, dim, 2, n_steps), dtype=complex)
    if n_steps == 0:
        return SensitivityMap(kernel.from_nodal(nodal_jacobian.reshape(batch, dim, 0))), final

    directions = (
        kernel.node_xi[:, None, None] * kernel.gen.x,
        kernel.node_zeta[:, None, None] * np.diag(kernel.gen.dz),
    )
    tail = np.broadcast_to(np.eye(dim, dtype=complex), (batch, dim, dim)).copy()
    for k in range(n_steps - 1, -1, -1):
        vec = trajectory.eigvecs[k]
        lam = trajectory.eigvals[k]
        gamma = _divided_differences(lam, pulse.dt)
        coeffs = np.einsum("bji,bj->bi", vec, trajectory.states[k])
        for channel, direction in enumerate(directions):
            rotated = np.einsum("bji,bjk,bkl->bil", vec, direction, vec)
            w = np.einsum("bij,bj->bi", vec, np.einsum("bij,bj->bi", gamma * rotated, coeffs))
            nodal_jacobian[:, :, channel, k] = np.einsum("bij,bj->bi", tail, w)
        step = np.einsum("bij,bj,bkj->bik", vec, np.exp(-1j * pulse.dt * lam), vec)
        tail = tail @ step

    jacobian = kernel.from_nodal(nodal_jacobian.reshape(batch, dim, 2 * n_steps))
    return SensitivityMap(jacobian), final
