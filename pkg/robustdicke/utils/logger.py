"""
Utility functions for logging.
"""
import logging
import os
import sys
from typing import Union


FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logger(name: str = None, log_level: Union[int, str] = logging.INFO,
                 log_file: str = None, console_output: bool = True) -> logging.Logger:
    """
    Set up a logger with the specified configuration.

    Args:
        name: Logger name (defaults to root logger)
        log_level: Logging level as a number or name (defaults to INFO)
        log_file: Path to log file (optional)
        console_output: Whether to output logs to the console (stderr)

    Returns:
        Configured logger
    """
    if isinstance(log_level, str):
        level = logging.getLevelName(log_level.upper())
        if not isinstance(level, int):
            raise ValueError(f"Unknown log level: {log_level}")
        log_level = level

    logger = logging.getLogger(name)
    logger.setLevel(log_level)

    for handler in logger.handlers[:]:
        logger.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(FORMAT)

    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir)
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    # stdout is left to command output
    if console_output:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

    return logger


def setup_run_logger(command: str, output_dir: str, log_level: Union[int, str] = logging.INFO) -> logging.Logger:
    """
    Set up the root logger for one CLI run.

    Log records go to the console and to <output_dir>/<command>.log.

    Args:
        command: Subcommand name
        output_dir: Run output directory
        log_level: Logging level

    Returns:
        Configured root logger
    """
    return setup_logger(
        name=None,
        log_level=log_level,
        log_file=os.path.join(output_dir, f"{command}.log"),
        console_output=True,
    )
