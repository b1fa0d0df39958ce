"""
Common utility functions for the macsolve package.
"""

import logging
import math
import os
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, Optional, Tuple, Union

import yaml

log = logging.getLogger(__name__)

CONFIG_PATHS = [".macsolve.yml", ".macsolve.yaml"]


class MacsolveError(RuntimeError):
    """Base class for the errors the solver raises on purpose.

    These are preliminary but intended program terminations, so the CLI logs
    them as a single line instead of printing a traceback. ``exit_code`` is the
    status the command line interface exits with.
    """

    exit_code = 1
    code = "error"


def rich_force_colors():
    """
    Check if any environment variables are set to force Rich to use coloured output
    """
    if os.getenv("GITHUB_ACTIONS") or os.getenv("FORCE_COLOR") or os.getenv("PY_COLORS"):
        return True
    return None


def get_first_available_path(directory, paths):
    for p in paths:
        if Path(directory, p).is_file():
            return Path(directory, p)
    return None


def load_solver_config(directory: Union[str, Path] = ".") -> Tuple[Optional[Path], dict]:
    """
    Parse the macsolve.yml configuration file

    Look for a file called either `.macsolve.yml` or `.macsolve.yaml`

    Returns the path of the file that was loaded (or None) and the loaded config dict
    """
    config_fn = get_first_available_path(directory, CONFIG_PATHS)
    if config_fn is None:
        log.debug(f"No solver config file found: {CONFIG_PATHS[0]}")
        return None, {}

    with open(config_fn) as fh:
        solver_config = yaml.safe_load(fh)
    # If the file is empty
    solver_config = solver_config or {}
    if not isinstance(solver_config, dict):
        raise UserWarning(f"Config file '{config_fn}' must contain a mapping, not {type(solver_config).__name__}")

    log.debug("Using config file: %s", config_fn)
    return config_fn, solver_config


@contextmanager
def stopwatch(timings: Dict[str, float], key: str) -> Iterator[None]:
    """Record the wall time spent inside the block under ``timings[key]``."""
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[key] = timings.get(key, 0.0) + time.perf_counter() - start


def format_complex(value: complex, digits: int = 17) -> str:
    """Format a complex number as ``a+bi`` with the given significant digits."""
    value = complex(value)
    real = f"{value.real:.{digits}g}"
    imag = f"{abs(value.imag):.{digits}g}"
    sign = "-" if math.copysign(1.0, value.imag) < 0 else "+"
    return f"{real}{sign}{imag}i"


def plural_s(list_or_int):
    """Return an s if the input is not one or has not the length of one."""
    length = list_or_int if isinstance(list_or_int, int) else len(list_or_int)
    return "s" * (length != 1)
