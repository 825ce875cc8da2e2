"""
Implementations of the design, simulate and verify commands.

Each command takes a validated configuration and an output directory, writes
its result files there and returns the process exit status.
"""
import logging
import os
from typing import Optional

from robustdicke.core.dynamics import build_generators
from robustdicke.core.types import ControlPulse
from robustdicke.ensemble.grid import build_grid, fidelity_map, population_map
from robustdicke.ensemble.metrics import create_summary
from robustdicke.optimization.designer import PulseDesigner
from robustdicke.cli.verification import run_checks
from robustdicke.utils.config import RunConfig, save_config
from robustdicke.utils.io import (
    read_pulse, write_fidelity_map, write_history, write_json, write_moments, write_populations,
    write_pulse
)


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NOT_CONVERGED = 2


def evaluate_pulse(cfg: RunConfig, pulse: ControlPulse, out_dir: str):
    """
    Evaluate a pulse on the configured grid and write the evaluation files.

    Writes fidelity_map.csv, populations.csv and summary.json.

    Returns:
        Summary dictionary
    """
    net = cfg.network()
    gen = build_generators(net)
    grid = build_grid(cfg.parameter_box(), cfg.eval_grid_nx, cfg.eval_grid_nz, cfg.eval_grid_kind)
    target = cfg.target()
    psi0 = cfg.initial_amplitudes()

    fid_map = fidelity_map(pulse, net, gen, grid, target, psi0)
    summary = create_summary(fid_map, pulse)
    write_fidelity_map(fid_map, os.path.join(out_dir, 'fidelity_map.csv'))
    write_populations(population_map(pulse, gen, grid, psi0), grid, net, os.path.join(out_dir, 'populations.csv'))
    write_json(summary, os.path.join(out_dir, 'summary.json'))
    logger.info(
        f"Fidelity over {grid.shape[0]}x{grid.shape[1]} grid: max={summary['max_fidelity']:.6f}, "
        f"mean={summary['mean_fidelity']:.6f}, min={summary['min_fidelity']:.6f}"
    )
    return summary


def cmd_design(cfg: RunConfig, out_dir: Optional[str] = None) -> int:
    """
    Design a robust pulse and evaluate it.

    Writes config.yaml, pulse.csv, history.csv, the evaluation files and,
    when export_moments is set, moments_final.csv.

    Args:
        cfg: Run configuration
        out_dir: Output directory (defaults to cfg.output_dir)

    Returns:
        EXIT_OK on convergence, EXIT_NOT_CONVERGED otherwise
    """
    out_dir = out_dir or cfg.output_dir
    save_config(cfg, os.path.join(out_dir, 'config.yaml'))

    designer = PulseDesigner(
        cfg.network(), cfg.parameter_box(), cfg.target(), cfg.restrictions(), cfg.solver_settings(),
        cfg.moment_order_xi, cfg.moment_order_zeta, cfg.initial_amplitudes(),
    )
    result = designer.design(cfg.initial_pulse())

    write_pulse(result.pulse, os.path.join(out_dir, 'pulse.csv'))
    write_history(result.history, os.path.join(out_dir, 'history.csv'))
    if cfg.export_moments:
        write_moments(designer.kernel.propagate(designer.m0, result.pulse), os.path.join(out_dir, 'moments_final.csv'))
    evaluate_pulse(cfg, result.pulse, out_dir)

    if not result.converged:
        logger.warning(f"Design did not converge; best objective {result.objective:.6e} written to {out_dir}")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, pulse_file: str, out_dir: Optional[str] = None) -> int:
    """
    Evaluate an existing pulse without optimizing.

    Args:
        cfg: Run configuration (network, box, target, grid)
        pulse_file: Pulse CSV with columns t, u_x, u_z on the configured grid
        out_dir: Output directory (defaults to cfg.output_dir)

    Returns:
        EXIT_OK

    Raises:
        PulseFileError: If the pulse file does not match the schema or grid
    """
    out_dir = out_dir or cfg.output_dir
    pulse = read_pulse(pulse_file, cfg.dt, cfg.n_steps)
    evaluate_pulse(cfg, pulse, out_dir)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out_dir: Optional[str] = None) -> int:
    """
    Run the invariant suite and write verification_report.json.

    Args:
        cfg: Run configuration
        out_dir: Output directory (defaults to cfg.output_dir)

    Returns:
        EXIT_OK when every check passes, EXIT_NOT_CONVERGED otherwise
    """
    out_dir = out_dir or cfg.output_dir
    report = run_checks(cfg)
    write_json(report, os.path.join(out_dir, 'verification_report.json'))
    if not report['passed']:
        failed = [check['name'] for check in report['checks'] if not check['passed']]
        logger.warning(f"Verification failed: {', '.join(failed)}")
        return EXIT_NOT_CONVERGED
    logger.info(f"All {len(report['checks'])} verification checks passed")
    return EXIT_OK
