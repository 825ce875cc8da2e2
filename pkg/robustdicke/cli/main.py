"""
Command line entry point.

    robustdicke design   --config run.yaml [--out DIR] [--log-level LEVEL]
    robustdicke simulate --config run.yaml --pulse pulse.csv [--out DIR]
    robustdicke verify   --config run.yaml [--out DIR]

Exit status: 0 on success, 1 on configuration or input file errors,
2 when a design does not converge or a verification check fails.
"""
import argparse
import logging
import os
import sys
from typing import List, Optional

from robustdicke.cli.commands import EXIT_INPUT_ERROR, cmd_design, cmd_simulate, cmd_verify
from robustdicke.core.exceptions import ConfigError, InfeasibleConstraintsError, PulseFileError
from robustdicke.utils.config import load_config
from robustdicke.utils.logger import setup_run_logger


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(prog='robustdicke',
                                     description='Robust pulse design for Dicke-basis Ising spin networks')
    subparsers = parser.add_subparsers(dest='command', required=True)

    for name, help_text in (('design', 'Design a robust pulse and evaluate it'),
                            ('simulate', 'Evaluate an existing pulse on the ensemble grid'),
                            ('verify', 'Run the invariant checks')):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument('--config', type=str, required=True,
                         help='Run configuration (YAML)')
        sub.add_argument('--out', type=str, default=None,
                         help='Output directory (overrides output_dir)')
        sub.add_argument('--log-level', type=str, default=None,
                         choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                         help='Logging level (overrides log_level)')
        if name == 'simulate':
            sub.add_argument('--pulse', type=str, required=True,
                             help='Pulse CSV with columns t,u_x,u_z')

    return parser.parse_args(argv)


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command and return its exit status."""
    args = parse_args(argv)
    try:
        cfg = load_config(args.config)
        out_dir = args.out or cfg.output_dir
        os.makedirs(out_dir, exist_ok=True)
        setup_run_logger(args.command, out_dir, args.log_level or cfg.log_level)
        logging.getLogger(__name__).info(f"Running {args.command} with {args.config}, output in {out_dir}")

        if args.command == 'design':
            return cmd_design(cfg, out_dir)
        if args.command == 'simulate':
            return cmd_simulate(cfg, args.pulse, out_dir)
        return cmd_verify(cfg, out_dir)
    except (ConfigError, PulseFileError, InfeasibleConstraintsError, OSError) as e:
        print(f"robustdicke {args.command}: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == '__main__':
    sys.exit(main())
