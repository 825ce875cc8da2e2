"""
Dicke-basis generators of the parameterized Ising Hamiltonian and
piecewise-constant propagation of ensemble members.

i dC_m/dt = [chi (2m^2 - N/2) + 2 m zeta u_z] C_m
            + xi u_x (zeta_+ C_{m+1} + zeta_- C_{m-1})

Every propagator in this module is the exact exponential of a real symmetric
step generator, computed from its eigendecomposition. Single-member and batch
propagation share one arithmetic path.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import scipy.linalg

from robustdicke.core.types import (
    AmplitudeState, ControlPulse, EnsembleParams, GeneratorSet, SpinNetwork
)


logger = logging.getLogger(__name__)


def build_generators(net: SpinNetwork) -> GeneratorSet:
    """
    Build the drift, z-control and x-control generators of a spin network.

    Args:
        net: Spin network

    Returns:
        GeneratorSet in storage order m = S, ..., -S
    """
    spin = net.spin
    m = net.m_values
    d0 = net.chi * (2.0 * m ** 2 - net.n_particles / 2.0)
    dz = 2.0 * m

    # row m couples to C_{m+1} (one index up) with zeta_+ = sqrt((S - m)(S + m + 1))
    upper = np.sqrt((spin - m[1:]) * (spin + m[1:] + 1.0))
    x = np.diag(upper, 1) + np.diag(upper, -1)
    return GeneratorSet(d0=d0, dz=dz, x=x)


def hamiltonian_batch(gen: GeneratorSet, xi: np.ndarray, zeta: np.ndarray,
                      ux: float, uz: float) -> np.ndarray:
    """
    Assemble the step generators of several ensemble members at once.

    Args:
        gen: Generator set
        xi: x-channel gains, shape (B,)
        zeta: z-channel gains, shape (B,)
        ux: x control value
        uz: z control value

    Returns:
        Real symmetric matrices, shape (B, n, n)
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    a = np.broadcast_to(np.diag(gen.d0), (xi.shape[0], gen.dim, gen.dim)).copy()
    a += (zeta * uz)[:, None, None] * np.diag(gen.dz)
    a += (xi * ux)[:, None, None] * gen.x
    return a


def hamiltonian_matrix(gen: GeneratorSet, p: EnsembleParams, ux: float, uz: float) -> np.ndarray:
    """
    Hamiltonian of one ensemble member for constant controls.

    The matrix is real symmetric, hence Hermitian.

    Args:
        gen: Generator set
        p: Ensemble member gains
        ux: x control value
        uz: z control value

    Returns:
        (N+1) x (N+1) matrix d0 + zeta*uz*dz + xi*ux*x
    """
    return hamiltonian_batch(gen, [p.xi], [p.zeta], ux, uz)[0]


def apply_step(eigvals: np.ndarray, eigvecs: np.ndarray, c: np.ndarray, dt: float) -> np.ndarray:
    """Apply exp(-i A dt) to a batch of vectors from A's eigendecomposition."""
    coeffs = np.einsum("bji,bj->bi", eigvecs, c)
    coeffs *= np.exp(-1j * dt * eigvals)
    return np.einsum("bij,bj->bi", eigvecs, coeffs)


@dataclass(eq=False)
class BatchTrajectory:
    """States and per-step eigendecompositions of a batch propagation."""
    states: np.ndarray
    eigvals: Optional[np.ndarray] = None
    eigvecs: Optional[np.ndarray] = None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def propagate_batch(c0: np.ndarray, gen: GeneratorSet, xi: np.ndarray, zeta: np.ndarray,
                    pulse: ControlPulse, keep_factors: bool = False) -> BatchTrajectory:
    """
    Propagate a batch of ensemble members under a piecewise-constant pulse.

    Vectors need not be normalized; moment propagation feeds weighted nodal
    vectors through here.

    Args:
        c0: Initial vectors, shape (n,) shared by all members or (B, n)
        gen: Generator set
        xi: x-channel gains, shape (B,)
        zeta: z-channel gains, shape (B,)
        pulse: Control pulse
        keep_factors: Keep per-step eigendecompositions (needed for sensitivities)

    Returns:
        BatchTrajectory with states of shape (K_t + 1, B, n)
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    if xi.shape != zeta.shape:
        raise ValueError(f"xi and zeta must have equal shapes, got {xi.shape} and {zeta.shape}")
    batch = xi.shape[0]
    c = np.broadcast_to(np.asarray(c0, dtype=complex), (batch, gen.dim)).copy()

    n_steps = pulse.n_steps
    states = np.empty((n_steps + 1, batch, gen.dim), dtype=complex)
    states[0] = c
    eigvals = np.empty((n_steps, batch, gen.dim)) if keep_factors else None
    eigvecs = np.empty((n_steps, batch, gen.dim, gen.dim)) if keep_factors else None

    for k in range(n_steps):
        a = hamiltonian_batch(gen, xi, zeta, pulse.ux[k], pulse.uz[k])
        lam, vec = np.linalg.eigh(a)
        c = apply_step(lam, vec, c, pulse.dt)
        states[k + 1] = c
        if keep_factors:
            eigvals[k] = lam
            eigvecs[k] = vec

    return BatchTrajectory(states=states, eigvals=eigvals, eigvecs=eigvecs)


def propagate_step(state: AmplitudeState, gen: GeneratorSet, p: EnsembleParams,
                   ux: float, uz: float, dt: float) -> AmplitudeState:
    """
    Advance one ensemble member by one step of constant controls.

    Args:
        state: Current state
        gen: Generator set
        p: Ensemble member gains
        ux: x control value on the step
        uz: z control value on the step
        dt: Step length

    Returns:
        State at t + dt
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    a = hamiltonian_batch(gen, [p.xi], [p.zeta], ux, uz)
    lam, vec = np.linalg.eigh(a)
    c = apply_step(lam, vec, state.c[None, :], dt)[0]
    return AmplitudeState(c, state.t + dt)


def propagate(state0: AmplitudeState, gen: GeneratorSet, p: EnsembleParams,
              pulse: ControlPulse) -> List[AmplitudeState]:
    """
    Propagate one ensemble member over a whole pulse.

    Args:
        state0: Initial state
        gen: Generator set
        p: Ensemble member gains
        pulse: Control pulse

    Returns:
        List of K_t + 1 states, the last at t0 + T
    """
    trajectory = [state0]
    state = state0
    for k in range(pulse.n_steps):
        state = propagate_step(state, gen, p, pulse.ux[k], pulse.uz[k], pulse.dt)
        trajectory.append(state)
    return trajectory


def realify(gen: GeneratorSet, p: EnsembleParams, ux: float, uz: float) -> np.ndarray:
    """
    Real form of the amplitude dynamics.

    With z = [Re c; Im c], i dc/dt = A c becomes dz/dt = B z where
    B = [[0, A], [-A, 0]] is skew-symmetric.

    Args:
        gen: Generator set
        p: Ensemble member gains
        ux: x control value
        uz: z control value

    Returns:
        Real 2(N+1) x 2(N+1) matrix B
    """
    a = hamiltonian_matrix(gen, p, ux, uz)
    zero = np.zeros_like(a)
    return np.block([[zero, a], [-a, zero]])


def propagate_realified(state0: AmplitudeState, gen: GeneratorSet, p: EnsembleParams,
                        pulse: ControlPulse) -> AmplitudeState:
    """
    Propagate the realified system with a Pade matrix exponential.

    Independent of the eigendecomposition path; used as a cross-check.

    Args:
        state0: Initial state
        gen: Generator set
        p: Ensemble member gains
        pulse: Control pulse

    Returns:
        Final state
    """
    n = gen.dim
    z = np.concatenate([state0.c.real, state0.c.imag])
    for k in range(pulse.n_steps):
        b = realify(gen, p, pulse.ux[k], pulse.uz[k])
        z = scipy.linalg.expm(b * pulse.dt) @ z
    return AmplitudeState(z[:n] + 1j * z[n:], state0.t + pulse.horizon)
