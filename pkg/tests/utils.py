"""
Helper functions for tests
"""

import functools
import tempfile
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
import scipy.optimize

TEST_DATA_DIR = Path(__file__).parent / "data"


def with_temporary_folder(func: Callable[..., Any]) -> Callable[..., Any]:
    """
    Call the decorated function under the tempfile.TemporaryDirectory
    context manager. Pass the temporary directory name to the decorated
    function
    """

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        with tempfile.TemporaryDirectory() as tmpdirname:
            return func(*args, tmpdirname, **kwargs)

    return wrapper


def with_temporary_file(func: Callable[..., Any]) -> Callable[..., Any]:
    """
    Call the decorated function under the tempfile.NamedTemporaryFile
    context manager. Pass the opened file handle to the decorated function
    """

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        with tempfile.NamedTemporaryFile() as tmpfile:
            return func(*args, tmpfile, **kwargs)

    return wrapper


def match_points(found: Sequence[Sequence[complex]], expected: Sequence[Sequence[complex]]) -> float:
    """Largest distance between two point sets after an optimal one to one matching."""
    found = np.atleast_2d(np.asarray(found, dtype=complex))
    expected = np.atleast_2d(np.asarray(expected, dtype=complex))
    assert found.shape == expected.shape, f"{found.shape} != {expected.shape}"
    cost = np.max(np.abs(found[:, None, :] - expected[None, :, :]), axis=2)
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def projective_distance(u: Sequence[complex], v: Sequence[complex]) -> float:
    """Sine of the angle between two nonzero vectors, zero when they span the same line."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    return float(np.sqrt(max(0.0, 1.0 - abs(np.vdot(u, v)) ** 2)))


def match_projective(found: Sequence[Sequence[complex]], expected: Sequence[Sequence[complex]]) -> float:
    """Like :func:`match_points`, comparing points as lines through the origin."""
    cost = np.array([[projective_distance(f, e) for e in expected] for f in found])
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    return float(cost[rows, cols].max())
