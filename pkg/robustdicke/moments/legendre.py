"""
Legendre polynomial basis, Gauss-Legendre quadrature and the Jacobi
(multiplication-by-x) operator on truncated moment vectors.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg
from numpy.polynomial import legendre

from robustdicke.core.types import BasisConvention


DOMAIN_TOLERANCE = 1e-12


def legendre_eval(order: int, x) -> np.ndarray:
    """
    Evaluate unnormalized Legendre polynomials L_0 .. L_K.

    Args:
        order: Highest degree K
        x: Point or array of points in [-1, 1]

    Returns:
        Array of shape x.shape + (K + 1,)
    """
    if order < 0:
        raise ValueError(f"order must be non-negative, got {order}")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + DOMAIN_TOLERANCE):
        raise ValueError("Legendre evaluation points must lie in [-1, 1]")
    return legendre.legvander(x, order).reshape(x.shape + (order + 1,))


def gauss_legendre(n_nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre nodes and weights on [-1, 1].

    Args:
        n_nodes: Number of nodes (exact for degree 2n - 1)

    Returns:
        Tuple of (nodes, weights), nodes ascending
    """
    if n_nodes < 1:
        raise ValueError(f"n_nodes must be positive, got {n_nodes}")
    return legendre.leggauss(n_nodes)


def orthonormal_jacobi_offdiagonal(order: int) -> np.ndarray:
    """Off-diagonal b_n = n / sqrt(4n^2 - 1), n = 1..K, of the orthonormal Jacobi matrix."""
    n = np.arange(1, order + 1, dtype=float)
    return n / np.sqrt(4.0 * n ** 2 - 1.0)


@dataclass(frozen=True, eq=False)
class JacobiCoupling:
    """
    Action of multiplication by x on truncated moment vectors.

    moments(x f) = r @ moments(f), with the order-(K+1) moment dropped.
    """
    r: np.ndarray
    convention: BasisConvention

    @property
    def order(self) -> int:
        return self.r.shape[0] - 1

    def apply(self, moments: np.ndarray, axis: int = 0) -> np.ndarray:
        """Apply the coupling along one axis of a moment array."""
        moved = np.moveaxis(np.asarray(moments), axis, 0)
        out = np.tensordot(self.r, moved, axes=(1, 0))
        return np.moveaxis(out, 0, axis)


@dataclass(frozen=True)
class LegendreBasis:
    """Legendre polynomials up to a truncation order in a chosen normalization."""
    order: int
    convention: BasisConvention = BasisConvention.UNNORMALIZED

    def __post_init__(self):
        if self.order < 0:
            raise ValueError(f"order must be non-negative, got {self.order}")

    @property
    def degrees(self) -> np.ndarray:
        return np.arange(self.order + 1, dtype=float)

    @property
    def norms_squared(self) -> np.ndarray:
        """Integral of P_n^2 over [-1, 1]."""
        if self.convention is BasisConvention.UNNORMALIZED:
            return 2.0 / (2.0 * self.degrees + 1.0)
        return np.ones(self.order + 1)

    @property
    def scale(self) -> np.ndarray:
        """Ratio P_n / p_n of this basis to the orthonormal one."""
        return np.sqrt(self.norms_squared)

    def evaluate(self, x) -> np.ndarray:
        """Evaluate P_0 .. P_K at x, shape x.shape + (K + 1,)."""
        values = legendre_eval(self.order, x)
        if self.convention is BasisConvention.ORTHONORMAL:
            values = values * np.sqrt((2.0 * self.degrees + 1.0) / 2.0)
        return values

    def jacobi(self) -> JacobiCoupling:
        """Truncated multiplication-by-x operator in this basis."""
        return jacobi_coupling(self.order, self.convention)

    def jacobi_eigensystem(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Eigenvalues and orthonormal eigenvectors of the orthonormal Jacobi matrix.

        The eigenvalues are the Gauss-Legendre nodes of K + 1 points and
        column p of the eigenvector matrix is proportional to
        [p_0(x_p), ..., p_K(x_p)].

        Returns:
            Tuple of (nodes (K+1,), eigenvectors (K+1, K+1))
        """
        if self.order == 0:
            return np.zeros(1), np.ones((1, 1))
        return scipy.linalg.eigh_tridiagonal(
            np.zeros(self.order + 1), orthonormal_jacobi_offdiagonal(self.order)
        )


def jacobi_coupling(order: int, convention: BasisConvention = BasisConvention.UNNORMALIZED) -> JacobiCoupling:
    """
    Build the truncated Jacobi coupling of a Legendre basis.

    Unnormalized: (x f)_i = ((i + 1) m_{i+1} + i m_{i-1}) / (2i + 1).
    Orthonormal: symmetric tridiagonal with off-diagonal n / sqrt(4n^2 - 1).

    Args:
        order: Truncation order K
        convention: Basis normalization

    Returns:
        JacobiCoupling with a (K+1) x (K+1) matrix
    """
    if order < 0:
        raise ValueError(f"order must be non-negative, got {order}")
    if convention is BasisConvention.ORTHONORMAL:
        b = orthonormal_jacobi_offdiagonal(order)
        r = np.diag(b, 1) + np.diag(b, -1)
    else:
        i = np.arange(order + 1, dtype=float)
        r = np.diag((i[:-1] + 1.0) / (2.0 * i[:-1] + 1.0), 1) + np.diag(i[1:] / (2.0 * i[1:] + 1.0), -1)
    return JacobiCoupling(r=r, convention=convention)
