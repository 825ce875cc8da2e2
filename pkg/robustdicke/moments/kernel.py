"""
Legendre moment kernel of the parameterized Dicke ensemble.

Moments are taken in the rescaled parameters xi* = (xi - 1)/delta_xi and
zeta* = (zeta - 1)/delta_zeta over [-1, 1]^2. The star is a change of
variables, not complex conjugation:

    m[a, i, j](t) = integral of C_a(t, xi*, zeta*) P_i(xi*) P_j(zeta*)

Substituting the ensemble dynamics gives the linear moment system

    i dm/dt = (d0 + uz dz + ux x) m
              + uz delta_zeta dz (m R_zeta^T) + ux delta_xi x (R_xi m)

truncated by dropping couplings to order K + 1. In the orthonormal basis R is
the symmetric Jacobi matrix, whose eigenvectors turn the truncated system
into independent Dicke systems at the Gauss-Legendre nodes of order K + 1.
MomentKernel propagates through that decomposition; the dense generator is
kept for cross-checks.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from robustdicke.core.dynamics import BatchTrajectory, propagate_batch
from robustdicke.core.types import (
    AmplitudeState, BasisConvention, ControlPulse, GeneratorSet, MomentState, ParameterBox
)
from robustdicke.moments.legendre import LegendreBasis, gauss_legendre, jacobi_coupling


logger = logging.getLogger(__name__)


def initial_moments(state0: AmplitudeState, order_xi: int, order_zeta: int,
                    convention: BasisConvention = BasisConvention.UNNORMALIZED) -> MomentState:
    """
    Moments of an ensemble whose members all start in the same state.

    Args:
        state0: Common initial state
        order_xi: Truncation order along xi*
        order_zeta: Truncation order along zeta*
        convention: Basis normalization

    Returns:
        MomentState with only the (0, 0) slice populated
    """
    m = np.zeros((state0.c.shape[0], order_xi + 1, order_zeta + 1), dtype=complex)
    m[:, 0, 0] = convention.target_factor * state0.c
    return MomentState(m, state0.t, convention)


def moments_from_ensemble(samples: np.ndarray, nodes_xi: np.ndarray, weights_xi: np.ndarray,
                          nodes_zeta: np.ndarray, weights_zeta: np.ndarray,
                          order_xi: int, order_zeta: int,
                          convention: BasisConvention = BasisConvention.UNNORMALIZED,
                          t: float = 0.0) -> MomentState:
    """
    Quadrature approximation of the moments of a sampled ensemble.

    Args:
        samples: Amplitudes at the quadrature nodes, shape (n, n_xi, n_zeta)
        nodes_xi: Gauss-Legendre nodes along xi*
        weights_xi: Matching weights
        nodes_zeta: Gauss-Legendre nodes along zeta*
        weights_zeta: Matching weights
        order_xi: Truncation order along xi*
        order_zeta: Truncation order along zeta*
        convention: Basis normalization
        t: Time stamp of the samples

    Returns:
        MomentState of shape (n, K_xi + 1, K_zeta + 1)
    """
    samples = np.asarray(samples, dtype=complex)
    if samples.shape[1:] != (len(nodes_xi), len(nodes_zeta)):
        raise ValueError(f"Samples shape {samples.shape} does not match node counts "
                         f"({len(nodes_xi)}, {len(nodes_zeta)})")
    if len(nodes_xi) < order_xi + 1 or len(nodes_zeta) < order_zeta + 1:
        raise ValueError(f"Need at least K + 1 nodes per axis: got ({len(nodes_xi)}, {len(nodes_zeta)}) "
                         f"for orders ({order_xi}, {order_zeta})")
    p_xi = LegendreBasis(order_xi, convention).evaluate(nodes_xi) * np.asarray(weights_xi)[:, None]
    p_zeta = LegendreBasis(order_zeta, convention).evaluate(nodes_zeta) * np.asarray(weights_zeta)[:, None]
    m = np.einsum("apq,pi,qj->aij", samples, p_xi, p_zeta)
    return MomentState(m, t, convention)


def reconstruct(mom: MomentState, xi_star: float, zeta_star: float) -> np.ndarray:
    """
    Evaluate the truncated Legendre series of the ensemble at one point.

    Args:
        mom: Moment state
        xi_star: Rescaled xi in [-1, 1]
        zeta_star: Rescaled zeta in [-1, 1]

    Returns:
        Complex amplitude vector at (xi*, zeta*)
    """
    order_xi, order_zeta = mom.orders
    basis_xi = LegendreBasis(order_xi, mom.convention)
    basis_zeta = LegendreBasis(order_zeta, mom.convention)
    w_xi = basis_xi.evaluate(xi_star) / basis_xi.norms_squared
    w_zeta = basis_zeta.evaluate(zeta_star) / basis_zeta.norms_squared
    return np.einsum("aij,i,j->a", mom.m, w_xi, w_zeta)


@dataclass(frozen=True, eq=False)
class MomentGenerator:
    """
    Dense generator of the truncated moment system for constant controls.

    i dm/dt = matrix @ m.ravel()
    """
    matrix: np.ndarray
    shape: Tuple[int, int, int]
    convention: BasisConvention

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, mom: MomentState) -> np.ndarray:
        """Time derivative dm/dt at a moment state."""
        return (-1j * (self.matrix @ mom.m.ravel())).reshape(self.shape)

    def step(self, dt: float) -> np.ndarray:
        """Propagator exp(-i matrix dt)."""
        return scipy.linalg.expm(-1j * dt * self.matrix)


def moment_generator(gen: GeneratorSet, box: ParameterBox, order_xi: int, order_zeta: int,
                     ux: float, uz: float,
                     convention: BasisConvention = BasisConvention.UNNORMALIZED) -> MomentGenerator:
    """
    Assemble the truncated moment generator for constant controls.

    Args:
        gen: Dicke generator set
        box: Parameter box supplying delta_xi and delta_zeta
        order_xi: Truncation order along xi*
        order_zeta: Truncation order along zeta*
        ux: x control value
        uz: z control value
        convention: Basis normalization

    Returns:
        MomentGenerator acting on tensors of shape (N+1, K_xi+1, K_zeta+1)
    """
    eye_xi = np.eye(order_xi + 1)
    eye_zeta = np.eye(order_zeta + 1)
    r_xi = jacobi_coupling(order_xi, convention).r
    r_zeta = jacobi_coupling(order_zeta, convention).r

    nominal = np.diag(gen.d0) + uz * np.diag(gen.dz) + ux * gen.x
    matrix = np.kron(nominal, np.kron(eye_xi, eye_zeta))
    matrix += uz * box.delta_zeta * np.kron(np.diag(gen.dz), np.kron(eye_xi, r_zeta))
    matrix += ux * box.delta_xi * np.kron(gen.x, np.kron(r_xi, eye_zeta))
    return MomentGenerator(matrix, (gen.dim, order_xi + 1, order_zeta + 1), convention)


class MomentKernel:
    """
    Truncated moment system of an ensemble over a parameter box.

    Holds the Jacobi eigenbases of both axes so that moments can be moved to
    and from the nodal representation, where each node is an ordinary Dicke
    system with gains (1 + delta_xi x_p, 1 + delta_zeta z_q).
    """

    def __init__(self, gen: GeneratorSet, box: ParameterBox, order_xi: int, order_zeta: int,
                 convention: BasisConvention = BasisConvention.UNNORMALIZED):
        """
        Initialize the kernel.

        Args:
            gen: Dicke generator set
            box: Parameter box
            order_xi: Truncation order along xi*
            order_zeta: Truncation order along zeta*
            convention: Basis normalization of the moments it reads and writes
        """
        self.logger = logging.getLogger(self.__class__.__name__)
        self.gen = gen
        self.box = box
        self.order_xi = order_xi
        self.order_zeta = order_zeta
        self.convention = convention

        basis_xi = LegendreBasis(order_xi, convention)
        basis_zeta = LegendreBasis(order_zeta, convention)
        self._scale = np.outer(basis_xi.scale, basis_zeta.scale)
        nodes_xi, self._w_xi = basis_xi.jacobi_eigensystem()
        nodes_zeta, self._w_zeta = basis_zeta.jacobi_eigensystem()

        grid_xi, grid_zeta = np.meshgrid(nodes_xi, nodes_zeta, indexing="ij")
        self.node_xi = 1.0 + box.delta_xi * grid_xi.ravel()
        self.node_zeta = 1.0 + box.delta_zeta * grid_zeta.ravel()

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.gen.dim, self.order_xi + 1, self.order_zeta + 1

    @property
    def n_nodes(self) -> int:
        return self.node_xi.shape[0]

    def to_nodal(self, m: np.ndarray) -> np.ndarray:
        """
        Map a moment tensor to nodal vectors.

        Args:
            m: Moments of shape (n, P, Q) in this kernel's convention

        Returns:
            Array of shape (P*Q, n), one row per node
        """
        nu = m / self._scale
        nodal = np.einsum("ip,jq,aij->pqa", self._w_xi, self._w_zeta, nu)
        return nodal.reshape(self.n_nodes, self.gen.dim)

    def from_nodal(self, nodal: np.ndarray) -> np.ndarray:
        """
        Map nodal vectors back to moments.

        Trailing axes after the node and level axes are carried along, so
        derivative arrays of shape (P*Q, n, ...) map to (n, P, Q, ...).

        Args:
            nodal: Array of shape (P*Q, n, ...)

        Returns:
            Moments of shape (n, P, Q, ...)
        """
        p_count, q_count = self.order_xi + 1, self.order_zeta + 1
        rest = nodal.shape[2:]
        nodal = nodal.reshape((p_count, q_count, self.gen.dim) + rest)
        nu = np.einsum("ip,jq,pqa...->aij...", self._w_xi, self._w_zeta, nodal)
        scale = self._scale.reshape(self._scale.shape + (1,) * len(rest))
        return nu * scale

    def propagate_nodal(self, m0: MomentState, pulse: ControlPulse,
                        keep_factors: bool = False) -> BatchTrajectory:
        """Propagate the nodal representation of a moment state."""
        self._check(m0)
        return propagate_batch(self.to_nodal(m0.m), self.gen, self.node_xi, self.node_zeta,
                               pulse, keep_factors=keep_factors)

    def propagate(self, m0: MomentState, pulse: ControlPulse) -> MomentState:
        """
        Propagate a moment state over a whole pulse.

        Args:
            m0: Initial moments
            pulse: Control pulse

        Returns:
            Moments at t0 + T
        """
        trajectory = self.propagate_nodal(m0, pulse)
        return MomentState(self.from_nodal(trajectory.final), m0.t + pulse.horizon, self.convention)

    def propagate_trajectory(self, m0: MomentState, pulse: ControlPulse) -> List[MomentState]:
        """Moment states at every step of a pulse, K_t + 1 entries."""
        trajectory = self.propagate_nodal(m0, pulse)
        return [MomentState(self.from_nodal(states), m0.t + k * pulse.dt, self.convention)
                for k, states in enumerate(trajectory.states)]

    def propagate_dense(self, m0: MomentState, pulse: ControlPulse) -> List[MomentState]:
        """Propagate with the full generator exponential at every step."""
        self._check(m0)
        vector = m0.m.ravel()
        trajectory = [m0]
        for k in range(pulse.n_steps):
            generator = moment_generator(self.gen, self.box, self.order_xi, self.order_zeta,
                                         pulse.ux[k], pulse.uz[k], self.convention)
            vector = generator.step(pulse.dt) @ vector
            trajectory.append(MomentState(vector.reshape(self.shape), m0.t + (k + 1) * pulse.dt,
                                          self.convention))
        return trajectory

    def _check(self, mom: MomentState):
        if mom.m.shape != self.shape:
            raise ValueError(f"Moment tensor shape {mom.m.shape} does not match kernel shape {self.shape}")
        if mom.convention is not self.convention:
            raise ValueError(f"Moment convention {mom.convention.value} does not match kernel "
                             f"convention {self.convention.value}")


def propagate_moments(m0: MomentState, gen: GeneratorSet, box: ParameterBox, pulse: ControlPulse,
                      method: str = "nodal") -> List[MomentState]:
    """
    Propagate truncated moments under a piecewise-constant pulse.

    Args:
        m0: Initial moments (their shape fixes the truncation orders)
        gen: Dicke generator set
        box: Parameter box
        pulse: Control pulse
        method: "nodal" (Jacobi eigenbasis) or "dense" (full generator exponential)

    Returns:
        List of K_t + 1 moment states
    """
    order_xi, order_zeta = m0.orders
    kernel = MomentKernel(gen, box, order_xi, order_zeta, m0.convention)
    if method == "nodal":
        return kernel.propagate_trajectory(m0, pulse)
    if method == "dense":
        return kernel.propagate_dense(m0, pulse)
    raise ValueError(f"Unknown propagation method: {method}")


def quadrature_nodes(order: int, n_nodes: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Quadrature nodes for checking moments of one axis, 2K by default.

    Order 0 (a collapsed axis) gets a single node, exact for the constant
    ensemble such an axis carries.
    """
    return gauss_legendre(n_nodes if n_nodes is not None else max(2 * order, order + 1))


def sample_ensemble(state0: AmplitudeState, gen: GeneratorSet, box: ParameterBox, pulse: ControlPulse,
                    nodes_xi: np.ndarray, nodes_zeta: np.ndarray) -> np.ndarray:
    """
    Final amplitudes of the ensemble members at a tensor grid of rescaled nodes.

    Returns:
        Array of shape (n, len(nodes_xi), len(nodes_zeta))
    """
    grid_xi, grid_zeta = np.meshgrid(nodes_xi, nodes_zeta, indexing="ij")
    xi = 1.0 + box.delta_xi * grid_xi.ravel()
    zeta = 1.0 + box.delta_zeta * grid_zeta.ravel()
    final = propagate_batch(state0.c, gen, xi, zeta, pulse).final
    return final.T.reshape(gen.dim, len(nodes_xi), len(nodes_zeta))


def duality_gap(state0: AmplitudeState, gen: GeneratorSet, box: ParameterBox, pulse: ControlPulse,
                order_xi: int, order_zeta: int,
                convention: BasisConvention = BasisConvention.UNNORMALIZED) -> float:
    """
    Relative gap between propagated moments and moments of the propagated ensemble.

    The reference integrates the sampled final ensemble with 2K Gauss-Legendre
    nodes per active axis, so the gap measures truncation error.

    Args:
        state0: Common initial state of the ensemble
        gen: Dicke generator set
        box: Parameter box
        pulse: Control pulse
        order_xi: Truncation order along xi*
        order_zeta: Truncation order along zeta*
        convention: Basis normalization

    Returns:
        ||m_propagated - m_quadrature|| / ||m_quadrature||
    """
    kernel = MomentKernel(gen, box, order_xi, order_zeta, convention)
    propagated = kernel.propagate(initial_moments(state0, order_xi, order_zeta, convention), pulse)

    nodes_xi, weights_xi = quadrature_nodes(order_xi)
    nodes_zeta, weights_zeta = quadrature_nodes(order_zeta)
    samples = sample_ensemble(state0, gen, box, pulse, nodes_xi, nodes_zeta)
    reference = moments_from_ensemble(samples, nodes_xi, weights_xi, nodes_zeta, weights_zeta,
                                      order_xi, order_zeta, convention)
    gap = float(np.linalg.norm(propagated.m - reference.m) / np.linalg.norm(reference.m))
    logger.debug(f"Duality gap at orders ({order_xi}, {order_zeta}): {gap:.3e}")
    return gap
