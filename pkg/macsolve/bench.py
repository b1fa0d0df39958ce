"""
Timing runs on random dense systems.

Every row solves one system with ``n`` equations of degree ``d`` whose
coefficients are drawn from a standard normal distribution.
"""

import csv
import io
import logging
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from tabulate import tabulate

from macsolve.macaulay import monomials_up_to_degree
from macsolve.poly import Polynomial, PolynomialSystem, Seed, SolveMode
from macsolve.solve import SolveConfig, solve_system

log = logging.getLogger(__name__)

BENCH_COLUMNS = ["n", "d", "delta", "m1", "m2", "n2", "res", "delta_alg", "t_M", "t_N", "t_B", "t_S", "t_alg"]


def random_system(degrees: Sequence[int], seed: Seed = 0) -> PolynomialSystem:
    """One dense equation per entry of ``degrees`` in ``x1, ..., xn`` with ``n = len(degrees)``.

    Coefficients are real and standard normal, drawn equation by equation.
    """
    n = len(degrees)
    if n < 1 or min(degrees) < 1:
        raise ValueError(f"Need at least one equation and positive degrees, got {tuple(degrees)}")
    rng = np.random.default_rng(seed)
    polys = []
    for d in degrees:
        monomials = monomials_up_to_degree(n, d)
        polys.append(Polynomial(zip(monomials, rng.standard_normal(len(monomials))), n))
    return PolynomialSystem(polys, tuple(f"x{i + 1}" for i in range(n)), SolveMode.AFFINE)


def random_dense_system(n: int, d: int, seed: Seed = 0) -> PolynomialSystem:
    """``n`` dense equations of degree ``d`` in ``x1, ..., xn`` with real Gaussian coefficients."""
    if n < 1 or d < 1:
        raise ValueError(f"Need n >= 1 and d >= 1, got n={n}, d={d}")
    return random_system([d] * n, seed)


def bench_row(n: int, d: int, seed: int = 0, config: Optional[SolveConfig] = None) -> Dict[str, Any]:
    """Solve one random dense system and report the sizes and timings.

    ``m1`` and ``m2`` are the number of columns and rows of the Macaulay
    matrix ``M``, ``n2`` the number of rows of the null space map ``N`` and
    ``delta_alg`` the number of roots found counted with multiplicity.
    """
    config = config or SolveConfig(seed=seed)
    system = random_dense_system(n, d, seed)
    roots = solve_system(system, config)
    rows, cols = roots.diagnostics["matrix_shape"]
    row = {
        "n": n,
        "d": d,
        "delta": roots.delta,
        "m1": int(cols),
        "m2": int(rows),
        "n2": roots.delta,
        "res": roots.max_residual,
        "delta_alg": roots.total_multiplicity,
    }
    row.update({key: roots.timings.get(key, 0.0) for key in ("t_M", "t_N", "t_B", "t_S", "t_alg")})
    log.debug(f"Bench n={n} d={d}: {row}")
    return row


def run_bench(
    n: int, degrees: Sequence[int], seed: int = 0, config: Optional[SolveConfig] = None
) -> List[Dict[str, Any]]:
    """One :func:`bench_row` per degree, run one after the other."""
    rows = []
    for d in degrees:
        log.info(f"Solving a random dense system with n={n}, d={d}")
        rows.append(bench_row(n, d, seed, config))
    return rows


def format_bench(rows: List[Dict[str, Any]], fmt: str = "csv") -> str:
    """Render bench rows as CSV (17 significant digits) or as a plain text table."""
    if fmt == "table":
        return tabulate([[row[c] for c in BENCH_COLUMNS] for row in rows], headers=BENCH_COLUMNS, floatfmt=".3g") + "\n"
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(BENCH_COLUMNS)
    for row in rows:
        writer.writerow([f"{row[c]:.17g}" if isinstance(row[c], float) else row[c] for c in BENCH_COLUMNS])
    return out.getvalue()
