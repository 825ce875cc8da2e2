"""
Convex quadratic programs for the damped Gauss-Newton step.

min 0.5 x'Px + q'x  subject to  l <= Cx <= u

Multipliers follow the sign convention y_i <= 0 where row i sits at its
lower bound and y_i >= 0 where it sits at its upper bound, so that
Px + q + C'y = 0 at a KKT point.
"""
import logging
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg, sparse

from robustdicke.core.types import ControlPulse, MomentState, SignalRestrictions, TargetProfile
from robustdicke.optimization.objective import (
    SensitivityMap, realify_residual, residual, residual_mask
)
from robustdicke.optimization.restrictions import CHANNELS, RestrictionChecker


logger = logging.getLogger(__name__)


@dataclass(eq=False)
class LinearConstraints:
    """Two-sided linear constraints l <= Cx <= u."""
    matrix: sparse.csr_matrix
    lower: np.ndarray
    upper: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    def violation(self, x: np.ndarray) -> float:
        """Largest bound violation at x."""
        if self.n_rows == 0:
            return 0.0
        s = self.matrix @ x
        return float(max(0.0, np.max(self.lower - s), np.max(s - self.upper)))


@dataclass(eq=False)
class QPResult:
    """Solution of a quadratic program together with its KKT residuals."""
    x: np.ndarray
    y: np.ndarray
    status: str
    iterations: int
    stationarity: float
    primal_residual: float
    complementarity: float
    active_rows: int = 0

    @property
    def kkt_residual(self) -> float:
        return max(self.stationarity, self.primal_residual, self.complementarity)


def kkt_residuals(hessian: np.ndarray, gradient: np.ndarray, constraints: LinearConstraints,
                  x: np.ndarray, y: np.ndarray):
    """
    Stationarity, primal feasibility and complementarity residuals.

    Args:
        hessian: P
        gradient: q
        constraints: Linear constraints
        x: Primal point
        y: Multipliers, one per constraint row

    Returns:
        Tuple of (stationarity, primal_residual, complementarity)
    """
    grad = hessian @ x + gradient
    if constraints.n_rows == 0:
        return float(np.max(np.abs(grad), initial=0.0)), 0.0, 0.0
    grad = grad + constraints.matrix.T @ y
    s = constraints.matrix @ x
    with np.errstate(invalid="ignore"):
        lower_gap = np.where(y < 0, np.abs(y) * np.abs(s - constraints.lower), 0.0)
        upper_gap = np.where(y > 0, y * np.abs(constraints.upper - s), 0.0)
    complementarity = np.nan_to_num(np.maximum(lower_gap, upper_gap), nan=np.inf)
    return (
        float(np.max(np.abs(grad), initial=0.0)),
        constraints.violation(x),
        float(np.max(complementarity, initial=0.0)),
    )


class QPSolver(ABC):
    """
    Abstract base class for convex QP solvers.

    Solvers are deterministic: equal inputs give bitwise equal outputs.
    """

    def __init__(self, tol: float = 1e-8):
        self.logger = logging.getLogger(self.__class__.__name__)
        self.tol = tol

    @abstractmethod
    def solve(self, hessian: np.ndarray, gradient: np.ndarray,
              constraints: LinearConstraints) -> QPResult:
        """
        Solve min 0.5 x'Px + q'x subject to the constraints.

        Args:
            hessian: Symmetric positive definite P
            gradient: q
            constraints: Linear constraints

        Returns:
            QPResult
        """
        pass

    def _result(self, hessian, gradient, constraints, x, y, status, iterations, active=0) -> QPResult:
        stationarity, primal, complementarity = kkt_residuals(hessian, gradient, constraints, x, y)
        result = QPResult(x=x, y=y, status=status, iterations=iterations, stationarity=stationarity,
                          primal_residual=primal, complementarity=complementarity, active_rows=active)
        self.logger.debug(
            f"QP {status} after {iterations} iterations: stationarity={stationarity:.3e}, "
            f"primal={primal:.3e}, complementarity={complementarity:.3e}, active={active}"
        )
        return result


class ADMMQPSolver(QPSolver):
    """
    Operator-splitting QP solver with an active-set polish.

    ADMM iterations with a single Cholesky factorization identify the active
    set. The polish then solves the equality-constrained KKT system of that
    set, adding the most violated row or dropping the multiplier of the wrong
    sign until the working set is consistent.
    """

    def __init__(self, max_iters: int = 4000, tol: float = 1e-8, rho: float = 0.1,
                 sigma: float = 1e-6, alpha: float = 1.6, admm_tol: float = 1e-6,
                 polish_iters: int = 200):
        """
        Initialize the solver.

        Args:
            max_iters: ADMM iteration cap
            tol: KKT tolerance of the polished solution
            rho: Penalty parameter relative to the mean Hessian diagonal
            sigma: Primal regularization of the ADMM linear system
            alpha: Over-relaxation factor in (0, 2)
            admm_tol: Residual tolerance that ends the ADMM phase
            polish_iters: Working-set update cap of the polish
        """
        super().__init__(tol)
        self.max_iters = max_iters
        self.rho = rho
        self.sigma = sigma
        self.alpha = alpha
        self.admm_tol = admm_tol
        self.polish_iters = polish_iters

    def solve(self, hessian: np.ndarray, gradient: np.ndarray,
              constraints: LinearConstraints) -> QPResult:
        hessian = np.asarray(hessian, dtype=float)
        gradient = np.asarray(gradient, dtype=float)
        n = gradient.shape[0]
        m = constraints.n_rows
        if n == 0:
            return self._result(hessian, gradient, constraints, np.zeros(0), np.zeros(m), "solved", 0)

        factor = linalg.cho_factor(hessian)
        x_free = linalg.cho_solve(factor, -gradient)
        if m == 0 or constraints.violation(x_free) <= self.tol:
            return self._result(hessian, gradient, constraints, x_free, np.zeros(m), "unconstrained", 0)

        x, z, y, iterations = self._admm(hessian, gradient, constraints)
        polished = self._polish(hessian, gradient, constraints, x, z, y)
        if polished is not None:
            x_pol, y_pol, steps, active = polished
            return self._result(hessian, gradient, constraints, x_pol, y_pol, "polished",
                                iterations + steps, active)
        self.logger.warning("QP polish failed; returning the ADMM iterate")
        return self._result(hessian, gradient, constraints, x, y, "admm", iterations)

    def _admm(self, hessian, gradient, constraints):
        n = gradient.shape[0]
        matrix = constraints.matrix
        rho = self.rho * max(float(np.trace(hessian)) / n, 1e-12)
        gram = (matrix.T @ matrix).toarray()
        factor = linalg.cho_factor(hessian + self.sigma * np.eye(n) + rho * gram)

        x = np.zeros(n)
        z = np.clip(matrix @ x, constraints.lower, constraints.upper)
        y = np.zeros(constraints.n_rows)
        iterations = 0
        for iterations in range(1, self.max_iters + 1):
            x_tilde = linalg.cho_solve(factor, self.sigma * x - gradient + matrix.T @ (rho * z - y))
            z_tilde = matrix @ x_tilde
            x = self.alpha * x_tilde + (1.0 - self.alpha) * x
            z_relaxed = self.alpha * z_tilde + (1.0 - self.alpha) * z
            z_next = np.clip(z_relaxed + y / rho, constraints.lower, constraints.upper)
            y = y + rho * (z_relaxed - z_next)
            z = z_next

            primal = np.max(np.abs(matrix @ x - z))
            dual = np.max(np.abs(hessian @ x + gradient + matrix.T @ y))
            if primal <= self.admm_tol and dual <= self.admm_tol:
                break
        self.logger.debug(f"ADMM stopped after {iterations} iterations")
        return x, z, y, iterations

    def _polish(self, hessian, gradient, constraints, x, z, y):
        matrix = constraints.matrix
        lower, upper = constraints.lower, constraints.upper
        s = matrix @ x
        near = 1e-5 * (1.0 + np.abs(s))
        # -1 lower bound active, +1 upper bound active
        working = np.zeros(constraints.n_rows, dtype=int)
        working[(y < 0) & (s - lower <= near)] = -1
        working[(y > 0) & (upper - s <= near)] = 1

        seen = set()
        for step in range(1, self.polish_iters + 1):
            key = working.tobytes()
            if key in seen:
                self.logger.debug("Active-set polish is cycling")
                return None
            seen.add(key)

            rows = np.flatnonzero(working)
            x_eq, y_rows = self._solve_equality(hessian, gradient, matrix, rows,
                                                np.where(working[rows] < 0, lower[rows], upper[rows]))
            s = matrix @ x_eq
            excess = np.maximum(lower - s, s - upper)
            excess[rows] = -np.inf
            worst = int(np.argmax(excess))
            if excess[worst] > self.tol:
                working[worst] = -1 if s[worst] < lower[worst] else 1
                continue

            wrong_sign = np.maximum(working[rows] * -y_rows, 0.0)
            if rows.size and np.max(wrong_sign) > self.tol:
                working[rows[int(np.argmax(wrong_sign))]] = 0
                continue

            y_full = np.zeros(constraints.n_rows)
            y_full[rows] = y_rows
            return x_eq, y_full, step, int(rows.size)
        return None

    @staticmethod
    def _solve_equality(hessian, gradient, matrix, rows, rhs):
        n = gradient.shape[0]
        if rows.size == 0:
            return linalg.solve(hessian, -gradient, assume_a="pos"), np.zeros(0)
        active = matrix[rows].toarray()
        kkt = np.block([[hessian, active.T], [active, np.zeros((rows.size, rows.size))]])
        b = np.concatenate([-gradient, rhs])
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", linalg.LinAlgWarning)
                sol = linalg.solve(kkt, b, assume_a="sym")
        except (linalg.LinAlgError, linalg.LinAlgWarning):
            # dependent active rows
            sol = linalg.lstsq(kkt, b)[0]
        return sol[:n], sol[n:]


def build_step_constraints(pulse: ControlPulse, restrictions: SignalRestrictions) -> LinearConstraints:
    """
    Constraints on a step du that keep pulse + du within the restrictions.

    Rows are the amplitude box of every sample followed by the finite rate
    rows of each channel, channel x first.

    Args:
        pulse: Current pulse
        restrictions: Signal restrictions

    Returns:
        LinearConstraints over the stacked step vector
    """
    checker = RestrictionChecker(restrictions)
    n_steps = pulse.n_steps
    blocks, lowers, uppers = [], [], []
    for offset, (channel, samples) in enumerate(zip(CHANNELS, (pulse.ux, pulse.uz))):
        limits = checker.limits(channel, n_steps, pulse.dt)
        select = sparse.csr_matrix(
            (np.ones(n_steps), (np.arange(n_steps), offset * n_steps + np.arange(n_steps))),
            shape=(n_steps, 2 * n_steps),
        )
        blocks.append(select)
        lowers.append(limits.lower - samples)
        uppers.append(limits.upper - samples)

        finite = np.flatnonzero(np.isfinite(limits.diff_lower) | np.isfinite(limits.diff_upper))
        if finite.size:
            cols = offset * n_steps + finite
            diff = sparse.csr_matrix(
                (np.concatenate([-np.ones(finite.size), np.ones(finite.size)]),
                 (np.tile(np.arange(finite.size), 2), np.concatenate([cols, cols + 1]))),
                shape=(finite.size, 2 * n_steps),
            )
            current = np.diff(samples)[finite]
            blocks.append(diff)
            lowers.append(limits.diff_lower[finite] - current)
            uppers.append(limits.diff_upper[finite] - current)

    return LinearConstraints(
        matrix=sparse.vstack(blocks, format="csr"),
        lower=np.concatenate(lowers),
        upper=np.concatenate(uppers),
    )


def qp_step(mom: MomentState, sens: SensitivityMap, target: TargetProfile, pulse: ControlPulse,
            restrictions: SignalRestrictions, damping: float,
            solver: Optional[QPSolver] = None) -> QPResult:
    """
    Damped Gauss-Newton step under the signal restrictions.

    Minimizes |r + G du|^2 + damping |du|^2 over admissible steps, with r the
    realified residual of the current final moments and G its Jacobian.

    Args:
        mom: Final moments of the current pulse
        sens: Sensitivity of the final moments to the controls
        target: Target profile
        pulse: Current pulse
        restrictions: Signal restrictions
        damping: Damping weight, positive
        solver: QP solver (ADMMQPSolver by default)

    Returns:
        QPResult whose x is the step du in stacked [ux, uz] order

    Raises:
        InfeasibleConstraintsError: If the restrictions admit no pulse
    """
    if not damping > 0:
        raise ValueError(f"Damping must be positive, got {damping}")
    RestrictionChecker(restrictions).ensure_feasible(pulse.n_steps, pulse.dt)
    solver = solver or ADMMQPSolver()

    r = realify_residual(residual(mom, target))
    jac = sens.realified(residual_mask(target, mom))
    hessian = 2.0 * (jac.T @ jac + damping * np.eye(jac.shape[1]))
    gradient = 2.0 * (jac.T @ r)
    return solver.solve(hessian, gradient, build_step_constraints(pulse, restrictions))
