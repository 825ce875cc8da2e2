"""
Pulse designer that runs the damped Gauss-Newton loop on the moment system.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from robustdicke.core.dynamics import build_generators
from robustdicke.core.types import (
    AmplitudeState, BasisConvention, ControlPulse, DesignResult, IterationRecord, ParameterBox,
    SignalRestrictions, SolverSettings, SpinNetwork, TargetProfile
)
from robustdicke.moments.kernel import MomentKernel, initial_moments
from robustdicke.optimization.objective import objective, sensitivity
from robustdicke.optimization.qp import ADMMQPSolver, QPSolver, qp_step
from robustdicke.optimization.restrictions import RestrictionChecker


SINGLE_AXIS_ORDER = 14
DOUBLE_AXIS_ORDER = 7


def default_moment_orders(box: ParameterBox) -> Tuple[int, int]:
    """
    Moment truncation orders for a parameter box.

    A collapsed axis carries only order 0. One active axis gets order 14, two
    active axes get order 7 each.
    """
    active = (not box.xi_collapsed) + (not box.zeta_collapsed)
    order = SINGLE_AXIS_ORDER if active == 1 else DOUBLE_AXIS_ORDER
    return (0 if box.xi_collapsed else order, 0 if box.zeta_collapsed else order)


class PulseDesigner:
    """
    Designs robust pulses by least-squares steering of the Legendre moments.

    Each outer iteration propagates the moments under the current pulse,
    linearizes the final moments in the controls, and solves a damped QP
    for a step that respects the signal restrictions. Steps that lower the
    objective are accepted and relax the damping; others are rejected and
    stiffen it.
    """

    def __init__(self, net: SpinNetwork, box: ParameterBox, target: TargetProfile,
                 restrictions: SignalRestrictions, settings: Optional[SolverSettings] = None,
                 order_xi: Optional[int] = None, order_zeta: Optional[int] = None,
                 psi0: Optional[AmplitudeState] = None,
                 convention: BasisConvention = BasisConvention.UNNORMALIZED,
                 solver: Optional[QPSolver] = None):
        """
        Initialize the designer.

        Args:
            net: Spin network
            box: Parameter box the pulse must be robust over
            target: Target profile
            restrictions: Signal restrictions
            settings: Solver settings
            order_xi: Moment order along xi (default from the box)
            order_zeta: Moment order along zeta (default from the box)
            psi0: Initial state (ground state by default)
            convention: Legendre basis normalization
            solver: QP solver for the inner step
        """
        self.logger = logging.getLogger(self.__class__.__name__)
        self.net = net
        self.box = box
        self.target = target
        self.restrictions = restrictions
        self.settings = settings or SolverSettings()
        default_xi, default_zeta = default_moment_orders(box)
        self.order_xi = default_xi if order_xi is None else order_xi
        self.order_zeta = default_zeta if order_zeta is None else order_zeta
        self.psi0 = psi0 or AmplitudeState.ground(net)
        self.solver = solver or ADMMQPSolver(max_iters=self.settings.qp_max_iters, tol=self.settings.qp_tol)
        self.checker = RestrictionChecker(restrictions)

        self.kernel = MomentKernel(build_generators(net), box, self.order_xi, self.order_zeta, convention)
        self.m0 = initial_moments(self.psi0, self.order_xi, self.order_zeta, convention)

    def evaluate(self, pulse: ControlPulse) -> float:
        """Objective of a pulse."""
        return objective(self.kernel.propagate(self.m0, pulse), self.target)

    def design(self, u_init: ControlPulse) -> DesignResult:
        """
        Run the outer loop from an initial pulse.

        Args:
            u_init: Initial pulse, within the signal restrictions

        Returns:
            DesignResult with the best pulse seen and the iteration history

        Raises:
            InfeasibleConstraintsError: If the restrictions admit no pulse
            ValueError: If u_init breaks the restrictions
        """
        settings = self.settings
        self.checker.ensure_feasible(u_init.n_steps, u_init.dt)
        compliant, violations = self.checker.check_pulse(u_init)
        if not compliant:
            raise ValueError(f"Initial pulse violates the signal restrictions: {violations}")

        pulse = u_init
        sens, final = sensitivity(pulse, self.kernel, self.m0)
        value = objective(final, self.target)
        damping = settings.lambda_init
        history = [IterationRecord(0, value, damping, True)]
        self.logger.info(
            f"Designing {self.target.kind.name} pulse: N={self.net.n_particles}, "
            f"orders=({self.order_xi}, {self.order_zeta}), steps={pulse.n_steps}, J0={value:.6e}"
        )

        converged = value <= settings.objective_tol
        iteration = 0
        while not converged and iteration < settings.max_outer_iters:
            iteration += 1
            step = qp_step(final, sens, self.target, pulse, self.restrictions, damping, self.solver)
            candidate = self.checker.clip(pulse.with_stacked(pulse.stacked + step.x))
            candidate_value = self.evaluate(candidate)
            accepted = candidate_value < value
            self.logger.debug(
                f"Iteration {iteration}: J={candidate_value:.6e}, lambda={damping:.3e}, "
                f"qp={step.status}, kkt={step.kkt_residual:.3e}, accepted={accepted}"
            )

            if accepted:
                decrease = value - candidate_value
                pulse, value = candidate, candidate_value
                damping /= settings.lambda_decrease
                history.append(IterationRecord(iteration, value, damping, True))
                self.logger.info(f"Iteration {iteration}: J={value:.6e}, lambda={damping:.3e}")
                if decrease < settings.objective_tol:
                    converged = True
                    break
                sens, final = sensitivity(pulse, self.kernel, self.m0)
            else:
                damping *= settings.lambda_increase
                history.append(IterationRecord(iteration, candidate_value, damping, False))
                if damping > settings.lambda_max:
                    self.logger.warning(f"Damping exceeded {settings.lambda_max:.1e} at iteration {iteration}")
                    converged = value <= settings.objective_tol
                    break

        if not converged:
            self.logger.warning(f"Design did not converge after {iteration} iterations; best J={value:.6e}")
        else:
            self.logger.info(f"Design converged after {iteration} iterations: J={value:.6e}")
        return DesignResult(pulse=pulse, history=history, converged=converged, objective=value)


def design_pulse(net: SpinNetwork, box: ParameterBox, target: TargetProfile,
                 restrictions: SignalRestrictions, settings: SolverSettings, u_init: ControlPulse,
                 order_xi: Optional[int] = None, order_zeta: Optional[int] = None,
                 psi0: Optional[AmplitudeState] = None) -> DesignResult:
    """
    Design a robust pulse.

    Args:
        net: Spin network
        box: Parameter box
        target: Target profile
        restrictions: Signal restrictions
        settings: Solver settings
        u_init: Initial pulse
        order_xi: Moment order along xi
        order_zeta: Moment order along zeta
        psi0: Initial state

    Returns:
        DesignResult
    """
    designer = PulseDesigner(net, box, target, restrictions, settings, order_xi, order_zeta, psi0)
    return designer.design(u_init)


def accepted_objectives(result: DesignResult) -> np.ndarray:
    """Objective values of the accepted iterations, in order."""
    return np.array([rec.objective for rec in result.history if rec.accepted])
