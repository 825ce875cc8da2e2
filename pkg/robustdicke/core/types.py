"""
Common data types and enums used throughout the package.

Dicke-basis vectors are always stored from m = S down to m = -S, so index k
holds the amplitude of |S, S - k>.
"""
import math
from enum import Enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np


NORM_TOLERANCE = 1e-9


class TargetKind(Enum):
    """Target states the optimizer knows how to build."""
    W = "W"
    HEDS = "HEDS"
    GHZ = "GHZ"
    CUSTOM = "CUSTOM"


class GridKind(Enum):
    """Node placement for ensemble sample grids."""
    UNIFORM = "uniform"
    GAUSS_LEGENDRE = "gauss-legendre"


class BasisConvention(Enum):
    """Normalization of the Legendre moment basis."""
    UNNORMALIZED = "unnormalized"
    ORTHONORMAL = "orthonormal"

    @property
    def axis_factor(self) -> float:
        """Integral of the order-0 basis polynomial over [-1, 1]."""
        if self is BasisConvention.UNNORMALIZED:
            return 2.0
        return math.sqrt(2.0)

    @property
    def target_factor(self) -> float:
        """Order-(0, 0) moment of a unit constant over the square [-1, 1]^2."""
        return self.axis_factor ** 2


class RateMode(Enum):
    """How the slew-rate bound of a control channel depends on time."""
    LITERAL_OVER_T = "literal_over_t"
    CONSTANT = "constant"


@dataclass(frozen=True)
class SpinNetwork:
    """Symmetric network of spin-1/2 particles with one-axis-twisting drift."""
    n_particles: int
    chi: float = 1.0

    def __post_init__(self):
        if int(self.n_particles) != self.n_particles or self.n_particles < 2:
            raise ValueError(f"n_particles must be an integer >= 2, got {self.n_particles}")
        if not math.isfinite(self.chi):
            raise ValueError(f"chi must be finite, got {self.chi}")

    @property
    def spin(self) -> float:
        """Total spin S = N/2."""
        return self.n_particles / 2.0

    @property
    def dim(self) -> int:
        """Dimension of the Dicke subspace."""
        return self.n_particles + 1

    @property
    def m_values(self) -> np.ndarray:
        """Magnetic quantum numbers in storage order (S, S-1, ..., -S)."""
        return self.spin - np.arange(self.dim, dtype=float)

    def index_of(self, m: float) -> int:
        """
        Storage index of the Dicke level m.

        Args:
            m: Magnetic quantum number

        Returns:
            Index k with m = S - k
        """
        k = self.spin - m
        if abs(k - round(k)) > 1e-12 or not 0 <= round(k) < self.dim:
            raise ValueError(f"m={m} is not a Dicke level of a network with N={self.n_particles}")
        return int(round(k))


@dataclass(eq=False)
class AmplitudeState:
    """Normalized Dicke-basis probability amplitudes at time t."""
    c: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=complex)
        if self.c.ndim != 1:
            raise ValueError("Amplitude vector must be one-dimensional")
        norm_sq = float(np.vdot(self.c, self.c).real)
        if abs(norm_sq - 1.0) > NORM_TOLERANCE:
            raise ValueError(f"Amplitude vector is not normalized (|c|^2 = {norm_sq:.12g})")

    @classmethod
    def basis(cls, net: SpinNetwork, m: float, t: float = 0.0) -> 'AmplitudeState':
        """Create the Dicke basis state |S, m>."""
        c = np.zeros(net.dim, dtype=complex)
        c[net.index_of(m)] = 1.0
        return cls(c, t)

    @classmethod
    def ground(cls, net: SpinNetwork) -> 'AmplitudeState':
        """Create the ground state |S, -S>."""
        return cls.basis(net, -net.spin)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.c))

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.c) ** 2


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    """
    Real matrices assembling the Dicke-basis Hamiltonian.

    A(xi, zeta) = diag(d0) + zeta * uz * diag(dz) + xi * ux * x
    """
    d0: np.ndarray
    dz: np.ndarray
    x: np.ndarray

    @property
    def dim(self) -> int:
        return self.d0.shape[0]


@dataclass(frozen=True)
class EnsembleParams:
    """Gains of the x and z control channels for one ensemble member."""
    xi: float = 1.0
    zeta: float = 1.0


@dataclass(frozen=True)
class ParameterBox:
    """Interval uncertainty [1 - delta, 1 + delta] on each control gain."""
    delta_xi: float = 0.0
    delta_zeta: float = 0.0

    def __post_init__(self):
        for name, delta in (("delta_xi", self.delta_xi), ("delta_zeta", self.delta_zeta)):
            if not 0.0 <= delta < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {delta}")

    @property
    def xi_interval(self) -> Tuple[float, float]:
        return 1.0 - self.delta_xi, 1.0 + self.delta_xi

    @property
    def zeta_interval(self) -> Tuple[float, float]:
        return 1.0 - self.delta_zeta, 1.0 + self.delta_zeta

    @property
    def xi_collapsed(self) -> bool:
        return self.delta_xi == 0.0

    @property
    def zeta_collapsed(self) -> bool:
        return self.delta_zeta == 0.0


@dataclass(frozen=True, eq=False)
class SampleGrid:
    """Tensor grid of physical gains (xi_i, zeta_j) used to evaluate a pulse."""
    xi_nodes: np.ndarray
    zeta_nodes: np.ndarray
    kind: GridKind = GridKind.UNIFORM

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.xi_nodes), len(self.zeta_nodes)

    def flattened(self) -> Tuple[np.ndarray, np.ndarray]:
        """Gains of every node, xi-major order."""
        grid_xi, grid_zeta = np.meshgrid(self.xi_nodes, self.zeta_nodes, indexing="ij")
        return grid_xi.ravel(), grid_zeta.ravel()


@dataclass(frozen=True, eq=False)
class FidelityMap:
    """Fidelity of a pulse at every node of a sample grid."""
    grid: SampleGrid
    values: np.ndarray


@dataclass(eq=False)
class ControlPulse:
    """
    Piecewise-constant samples of u_x and u_z on a uniform time grid.

    Sample k is held on [k*dt, (k+1)*dt).
    """
    ux: np.ndarray
    uz: np.ndarray
    dt: float

    def __post_init__(self):
        self.ux = np.asarray(self.ux, dtype=float).copy()
        self.uz = np.asarray(self.uz, dtype=float).copy()
        if self.ux.ndim != 1 or self.ux.shape != self.uz.shape:
            raise ValueError(f"ux and uz must be 1-D arrays of equal length, got {self.ux.shape} and {self.uz.shape}")
        if not (np.all(np.isfinite(self.ux)) and np.all(np.isfinite(self.uz))):
            raise ValueError("Control samples must be finite")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    @classmethod
    def constant(cls, ux: float, uz: float, horizon: float, dt: float) -> 'ControlPulse':
        """Create a constant pulse covering [0, horizon]."""
        n_steps = int(round(horizon / dt))
        return cls(np.full(n_steps, ux), np.full(n_steps, uz), dt)

    @property
    def n_steps(self) -> int:
        return self.ux.shape[0]

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        """Left endpoints of the piecewise-constant intervals."""
        return np.arange(self.n_steps) * self.dt

    @property
    def stacked(self) -> np.ndarray:
        """Decision vector [ux_0 .. ux_{K-1}, uz_0 .. uz_{K-1}]."""
        return np.concatenate([self.ux, self.uz])

    def with_stacked(self, u: np.ndarray) -> 'ControlPulse':
        """Create a pulse on the same grid from a stacked decision vector."""
        return ControlPulse(u[:self.n_steps], u[self.n_steps:], self.dt)


@dataclass(eq=False)
class MomentState:
    """
    Truncated Legendre moments of a parameterized ensemble.

    m[a, i, j] is the moment of amplitude index a against the order-i basis
    polynomial in xi* and the order-j polynomial in zeta*.
    """
    m: np.ndarray
    t: float = 0.0
    convention: BasisConvention = BasisConvention.UNNORMALIZED

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=complex)
        if self.m.ndim != 3:
            raise ValueError(f"Moment tensor must be 3-D, got shape {self.m.shape}")

    @property
    def orders(self) -> Tuple[int, int]:
        """Truncation orders (K_xi, K_zeta)."""
        return self.m.shape[1] - 1, self.m.shape[2] - 1

    @property
    def dim(self) -> int:
        return self.m.size


@dataclass(frozen=True)
class TargetProfile:
    """Desired final amplitude magnitudes per Dicke level."""
    kind: TargetKind
    magnitudes: Dict[float, float]

    def __post_init__(self):
        total = sum(v * v for v in self.magnitudes.values())
        if abs(total - 1.0) > NORM_TOLERANCE:
            raise ValueError(f"Target magnitudes must have unit norm, got sum of squares {total:.12g}")
        if any(v < 0 for v in self.magnitudes.values()):
            raise ValueError("Target magnitudes must be non-negative")

    @property
    def support(self) -> List[float]:
        """Levels with non-zero target magnitude, largest m first."""
        return sorted((m for m, v in self.magnitudes.items() if v > 0), reverse=True)

    @property
    def a_max(self) -> float:
        return self.support[0]

    def vector(self, net: SpinNetwork) -> np.ndarray:
        """Target magnitudes in storage order."""
        t = np.zeros(net.dim)
        for m, value in self.magnitudes.items():
            t[net.index_of(m)] = value
        return t


@dataclass(frozen=True)
class SignalRestrictions:
    """
    Amplitude and slew-rate limits for both control channels.

    rate_min and rate_max bound du/dt; in literal mode they are divided by
    the sample time.
    """
    u_min_x: float = 0.0
    u_max_x: float = 40.0
    u_min_z: float = 0.0
    u_max_z: float = 40.0
    rate_mode: RateMode = RateMode.LITERAL_OVER_T
    rate_min: float = -1e4
    rate_max: float = 1e4

    def __post_init__(self):
        if self.u_min_x > self.u_max_x or self.u_min_z > self.u_max_z:
            raise ValueError("Amplitude lower bounds must not exceed upper bounds")
        if not (np.isfinite(self.rate_min) and np.isfinite(self.rate_max)):
            raise ValueError(f"Rate bounds must be finite, got [{self.rate_min}, {self.rate_max}]")
        if self.rate_min > self.rate_max:
            raise ValueError(f"rate_min={self.rate_min} exceeds rate_max={self.rate_max}")

    @classmethod
    def symmetric(cls, u_min: float, u_max: float, rate_mode: RateMode = RateMode.LITERAL_OVER_T,
                  rate_value: float = 1e4) -> 'SignalRestrictions':
        """Same amplitude box on both channels and rate bounds of +-rate_value."""
        if not rate_value > 0:
            raise ValueError(f"rate_value must be positive, got {rate_value}")
        return cls(u_min, u_max, u_min, u_max, rate_mode, -rate_value, rate_value)

    def amplitude_bounds(self, channel: str) -> Tuple[float, float]:
        if channel == "x":
            return self.u_min_x, self.u_max_x
        if channel == "z":
            return self.u_min_z, self.u_max_z
        raise ValueError(f"Unknown channel: {channel}")

    def rate_bounds(self, times: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Bounds on du/dt at the given times.

        In literal mode the bounds are rate_min / t and rate_max / t,
        unbounded at t = 0.

        Args:
            times: Sample times

        Returns:
            Tuple of (rate_min, rate_max) arrays
        """
        times = np.asarray(times, dtype=float)
        if self.rate_mode is RateMode.CONSTANT:
            return np.full(times.shape, self.rate_min), np.full(times.shape, self.rate_max)
        positive = times > 0
        safe = np.where(positive, times, 1.0)
        lower = np.where(positive, self.rate_min / safe, -np.inf)
        upper = np.where(positive, self.rate_max / safe, np.inf)
        return lower, upper


@dataclass(frozen=True)
class SolverSettings:
    """Settings of the damped Gauss-Newton outer loop and its QP."""
    max_outer_iters: int = 200
    objective_tol: float = 1e-8
    lambda_init: float = 1.0
    lambda_increase: float = 10.0
    lambda_decrease: float = 2.0
    lambda_max: float = 1e12
    qp_max_iters: int = 4000
    qp_tol: float = 1e-8
    deterministic: bool = True

    def __post_init__(self):
        if self.lambda_init <= 0:
            raise ValueError("lambda_init must be positive")
        if self.lambda_increase <= 1 or self.lambda_decrease <= 1:
            raise ValueError("lambda_increase and lambda_decrease must exceed 1")


@dataclass(frozen=True)
class IterationRecord:
    """One outer iteration of the pulse designer."""
    iteration: int
    objective: float
    damping: float
    accepted: bool


@dataclass(eq=False)
class DesignResult:
    """Outcome of a pulse design run."""
    pulse: ControlPulse
    history: List[IterationRecord] = field(default_factory=list)
    converged: bool = False
    objective: Optional[float] = None
