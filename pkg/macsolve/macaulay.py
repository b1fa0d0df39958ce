"""
Macaulay-type resultant matrices.

The stored orientation has one row per monomial of the space ``V`` and one
column per multiple ``x^beta * f_i``, so the algebra structure is read from the
left null space of the stored matrix.
"""

import csv
import itertools
import logging
from dataclasses import dataclass
from functools import reduce
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from macsolve.poly import (
    DegreeError,
    Exponent,
    HomogeneityError,
    Polynomial,
    PolynomialSystem,
    Seed,
    SolveMode,
    VariableBlocks,
    graded_lex_key,
)
from macsolve.polytope import lattice_points, minkowski_sum, newton_polytope, random_shift, standard_simplex
from macsolve.utils import MacsolveError, format_complex

log = logging.getLogger(__name__)

# The dense SVD of an m x c matrix also needs the m x m unitary factor
DEFAULT_MAX_MATRIX_BYTES = 2 * 1024**3

ColumnLabel = Tuple[int, Exponent]
Degree = Union[int, Tuple[int, ...], None]


class DegenerateShiftError(MacsolveError):
    """The toric shift produced an empty or inconsistent support, try another shift."""

    exit_code = 3
    code = "degenerate_shift"


class ResourceLimitError(MacsolveError):
    """The matrices would not fit in the configured memory budget."""

    exit_code = 5
    code = "resource_limit"


def monomial_label(exponent: Sequence[int], names: Optional[Sequence[str]] = None) -> str:
    """Human readable monomial, e.g. ``x1^2*x2``, or ``1`` for the constant."""
    if names is None:
        names = [f"x{i + 1}" for i in range(len(exponent))]
    factors = [name if e == 1 else f"{name}^{e}" for name, e in zip(names, exponent) if e != 0]
    return "*".join(factors) or "1"


class MonomialIndex:
    """An ordered list of exponent vectors with reverse lookup.

    Args:
        exponents: The monomials. Sorted in graded lexicographic order unless
            ``keep_order`` is set.
    """

    def __init__(self, exponents: Iterable[Sequence[int]], keep_order: bool = False):
        exps = [tuple(int(x) for x in e) for e in exponents]
        if not keep_order:
            exps.sort(key=graded_lex_key)
        self.exponents: Tuple[Exponent, ...] = tuple(exps)
        self._lookup: Dict[Exponent, int] = {e: i for i, e in enumerate(self.exponents)}
        if len(self._lookup) != len(self.exponents):
            raise ValueError("Monomial index contains repeated exponents")

    def __len__(self):
        return len(self.exponents)

    def __getitem__(self, position: int) -> Exponent:
        return self.exponents[position]

    def __iter__(self) -> Iterator[Exponent]:
        return iter(self.exponents)

    def __contains__(self, exponent) -> bool:
        return tuple(exponent) in self._lookup

    def index(self, exponent: Sequence[int]) -> int:
        return self._lookup[tuple(exponent)]

    def positions(self, exponents: Iterable[Sequence[int]]) -> np.ndarray:
        return np.array([self._lookup[tuple(e)] for e in exponents], dtype=int)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.exponents, dtype=int).reshape(len(self), -1)


def monomials_of_degree(nvars: int, degree: int) -> List[Exponent]:
    """All exponent vectors of total degree exactly ``degree``, graded lex order."""
    if degree < 0:
        return []
    exps = []
    for combo in itertools.combinations_with_replacement(range(nvars), degree):
        exponent = [0] * nvars
        for j in combo:
            exponent[j] += 1
        exps.append(tuple(exponent))
    return sorted(exps, key=graded_lex_key)


def monomials_up_to_degree(nvars: int, degree: int) -> List[Exponent]:
    return [e for d in range(degree + 1) for e in monomials_of_degree(nvars, d)]


def multidegree_monomials(blocks: VariableBlocks, rho: Sequence[int]) -> List[Exponent]:
    """All monomials in the homogeneous coordinates of ``blocks`` with multidegree exactly ``rho``."""
    homogeneous = blocks.as_homogeneous()
    if len(rho) != homogeneous.k:
        raise ValueError(f"Multidegree {tuple(rho)} does not match {homogeneous.k} blocks")
    if any(r < 0 for r in rho):
        return []
    per_block = [monomials_of_degree(size + 1, r) for size, r in zip(homogeneous.sizes, rho)]
    exps = [tuple(itertools.chain.from_iterable(parts)) for parts in itertools.product(*per_block)]
    return sorted(exps, key=graded_lex_key)


def check_matrix_budget(rows: int, cols: int, limit: Optional[int] = DEFAULT_MAX_MATRIX_BYTES) -> None:
    """Refuse matrices whose dense SVD would not fit in ``limit`` bytes."""
    needed = 16 * (rows * cols + rows * rows)
    if limit is not None and needed > limit:
        raise ResourceLimitError(
            f"A {rows} x {cols} Macaulay matrix needs about {needed / 1024**3:.1f} GiB "
            f"(limit {limit / 1024**3:.1f} GiB). Raise `max_matrix_bytes` if the machine can take it."
        )


@dataclass(eq=False)
class MacaulayMatrix:
    """A Macaulay matrix together with its row and column layout.

    Attributes:
        matrix (np.ndarray): Dense complex entries, rows = monomials of ``V``.
        rows (MonomialIndex): The monomial of every row.
        columns (tuple): ``(i, beta)`` for the column holding ``x^beta * f_i``.
        mode (SolveMode): The construction used.
        system (PolynomialSystem): The equations as they entered the matrix
            (with Laurent exponents cleared in toric mode).
        rho: Degree (dense/projective), multidegree (multihomogeneous) or None (toric).
        shift (np.ndarray): The toric shift ``v``.
        laurent_shifts (tuple): Monomial each equation was multiplied by in toric mode.
    """

    matrix: np.ndarray
    rows: MonomialIndex
    columns: Tuple[ColumnLabel, ...]
    mode: SolveMode
    system: PolynomialSystem
    rho: Degree = None
    shift: Optional[np.ndarray] = None
    laurent_shifts: Optional[Tuple[Exponent, ...]] = None

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape

    def column_polynomial(self, j: int) -> Polynomial:
        """Read column ``j`` back as a polynomial."""
        column = self.matrix[:, j]
        return Polynomial(((self.rows[r], column[r]) for r in np.flatnonzero(column)), self.system.nvars)

    def column_label(self, j: int, names: Optional[Sequence[str]] = None) -> str:
        i, beta = self.columns[j]
        return f"({i + 1}, {monomial_label(beta, names)})"

    def to_csv(self, path: Union[str, Path], names: Optional[Sequence[str]] = None) -> None:
        """Write the matrix as CSV: a header of column labels, then one row per monomial."""
        names = names or self.system.variables
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["monomial"] + [self.column_label(j, names) for j in range(len(self.columns))])
            for r, exponent in enumerate(self.rows):
                writer.writerow([monomial_label(exponent, names)] + [format_complex(v) for v in self.matrix[r]])
        log.info(f"Wrote {self.shape[0]} x {self.shape[1]} Macaulay matrix to [blue]{path}[/]")


def _assemble(
    polys: Sequence[Polynomial],
    rows: MonomialIndex,
    multipliers: Sequence[Sequence[Exponent]],
    max_bytes: Optional[int],
) -> Tuple[np.ndarray, Tuple[ColumnLabel, ...]]:
    columns = tuple((i, tuple(beta)) for i, betas in enumerate(multipliers) for beta in betas)
    check_matrix_budget(len(rows), len(columns), max_bytes)
    matrix = np.zeros((len(rows), len(columns)), dtype=complex)
    for j, (i, beta) in enumerate(columns):
        p = polys[i]
        targets = p.exponent_array + np.asarray(beta, dtype=int)
        try:
            positions = rows.positions(targets)
        except KeyError as e:
            raise AssertionError(f"Term x^{e.args[0]} of multiple x^{beta} * f{i + 1} has no row") from None
        matrix[positions, j] = p.coefficient_array
    log.debug(f"Assembled a {matrix.shape[0]} x {matrix.shape[1]} Macaulay matrix")
    return matrix, columns


def default_degree(system: PolynomialSystem, mode: SolveMode) -> Degree:
    """The degree ``rho`` the builders use unless told otherwise."""
    if mode == SolveMode.AFFINE:
        return sum(system.degrees()) - system.nvars + 1
    if mode == SolveMode.PROJECTIVE:
        return sum(system.degrees()) - (len(system.polys) - 1)
    if mode == SolveMode.MULTIHOM:
        return tuple(int(x) for x in np.sum(np.array(system.multidegrees(), dtype=int), axis=0))
    return None


def dense_macaulay(
    system: PolynomialSystem, rho: Optional[int] = None, max_bytes: Optional[int] = DEFAULT_MAX_MATRIX_BYTES
) -> MacaulayMatrix:
    """Macaulay matrix of an affine system on all monomials of degree at most ``rho``.

    Args:
        system (PolynomialSystem): Square affine system.
        rho (int): Degree of ``V``, defaults to ``sum(d_i) - n + 1``.
        max_bytes (int): Memory budget for the matrix and its SVD.
    """
    system.require_square()
    system.validate()
    if system.blocks.homogeneous or any(p.has_negative_exponents() for p in system.polys):
        raise DegreeError("The dense construction needs an affine polynomial system")
    degrees = system.degrees()
    n = system.nvars
    default = sum(degrees) - n + 1
    rho = default if rho is None else int(rho)
    if rho < max(degrees):
        raise DegreeError(f"Degree {rho} is below the largest equation degree {max(degrees)}")
    if rho < default:
        log.warning(f"[yellow][!] Degree {rho} is below the regularity bound {default}")
    rows = MonomialIndex(monomials_up_to_degree(n, rho))
    multipliers = [monomials_up_to_degree(n, rho - d) for d in degrees]
    matrix, columns = _assemble(system.polys, rows, multipliers, max_bytes)
    return MacaulayMatrix(matrix, rows, columns, SolveMode.AFFINE, system, rho=rho)


def toric_macaulay(
    system: PolynomialSystem,
    shift: Optional[Sequence[float]] = None,
    seed: Seed = None,
    shift_scale: float = 1e-3,
    max_bytes: Optional[int] = DEFAULT_MAX_MATRIX_BYTES,
) -> MacaulayMatrix:
    """Macaulay matrix supported in the lattice points of ``simplex + P_1 + ... + P_n + v``.

    The multipliers of ``f_i`` are the lattice points of the same sum with
    ``P_i`` left out. The linear equation ``f_0`` behind the simplex is never
    built.

    Args:
        system (PolynomialSystem): Square system, Laurent exponents allowed.
        shift (list): The generic shift ``v``; drawn from ``seed`` when omitted.
        seed: Seed for the shift.
        shift_scale (float): Size of a drawn shift.
        max_bytes (int): Memory budget for the matrix and its SVD.
    """
    system.require_square()
    system.validate()
    n = system.nvars
    shifted_polys = []
    laurent_shifts = []
    for p in system.polys:
        shifted, monomial = p.shift_to_nonnegative()
        shifted_polys.append(shifted)
        laurent_shifts.append(monomial)
    shift = random_shift(n, seed, shift_scale) if shift is None else np.asarray(shift, dtype=float)
    polytopes = [newton_polytope(p) for p in shifted_polys]
    simplex = standard_simplex(n)
    support = lattice_points(reduce(minkowski_sum, polytopes, simplex), shift)
    multipliers = []
    for i in range(n):
        others = [q for j, q in enumerate(polytopes) if j != i]
        multipliers.append(sorted(lattice_points(reduce(minkowski_sum, others, simplex), shift), key=graded_lex_key))
    if not support or any(not m for m in multipliers):
        raise DegenerateShiftError(f"Shift {shift} leaves an empty support")
    rows = MonomialIndex(support)
    try:
        matrix, columns = _assemble(shifted_polys, rows, multipliers, max_bytes)
    except AssertionError as e:
        raise DegenerateShiftError(f"Shift {shift} is not generic: {e}") from None
    return MacaulayMatrix(
        matrix,
        rows,
        columns,
        SolveMode.TORIC,
        system.with_polys(shifted_polys),
        shift=shift,
        laurent_shifts=tuple(laurent_shifts),
    )


def homogeneous_macaulay(
    system: PolynomialSystem,
    rho: Optional[int] = None,
    max_bytes: Optional[int] = DEFAULT_MAX_MATRIX_BYTES,
    truncate: bool = False,
) -> MacaulayMatrix:
    """Homogeneous Macaulay matrix in degree ``rho = sum(d_i) - (n - 1)``.

    Args:
        system (PolynomialSystem): ``n`` homogeneous equations in ``n + 1`` variables.
        rho (int): Degree override.
        max_bytes (int): Memory budget for the matrix and its SVD.
        truncate (bool): Equations of degree above ``rho`` get no multiples
            instead of raising, so every degree has a matrix.
    """
    system.require_square()
    if not system.blocks.homogeneous or system.blocks.k != 1:
        raise HomogeneityError("The homogeneous construction needs a projective system")
    system.validate()
    for i, p in enumerate(system.polys):
        if not p.is_homogeneous():
            raise HomogeneityError(f"Equation {i + 1} is not homogeneous")
    degrees = system.degrees()
    default = sum(degrees) - (len(degrees) - 1)
    rho = default if rho is None else int(rho)
    if rho < max(degrees) and not truncate:
        raise DegreeError(f"Degree {rho} is below the largest equation degree {max(degrees)}")
    rows = MonomialIndex(monomials_of_degree(system.nvars, rho))
    multipliers = [monomials_of_degree(system.nvars, rho - d) for d in degrees]
    matrix, columns = _assemble(system.polys, rows, multipliers, max_bytes)
    return MacaulayMatrix(matrix, rows, columns, SolveMode.PROJECTIVE, system, rho=rho)


def multihom_macaulay(
    system: PolynomialSystem,
    rho: Optional[Sequence[int]] = None,
    max_bytes: Optional[int] = DEFAULT_MAX_MATRIX_BYTES,
) -> MacaulayMatrix:
    """Multihomogeneous Macaulay matrix in multidegree ``rho = d_0 + d_1 + ... + d_n - 1`` with ``d_0 = 1``.

    Args:
        system (PolynomialSystem): Square multihomogeneous system with declared blocks.
        rho (tuple): Multidegree override.
        max_bytes (int): Memory budget for the matrix and its SVD.
    """
    system.require_square()
    if not system.blocks.homogeneous:
        raise HomogeneityError("The multihomogeneous construction needs homogeneous blocks")
    system.validate()
    for i, p in enumerate(system.polys):
        if not p.is_multihomogeneous(system.blocks):
            raise HomogeneityError(f"Equation {i + 1} is not multihomogeneous for blocks {system.blocks.sizes}")
    degrees = np.array(system.multidegrees(), dtype=int)
    default = tuple(int(x) for x in degrees.sum(axis=0))
    rho = default if rho is None else tuple(int(r) for r in rho)
    if len(rho) != system.blocks.k:
        raise DegreeError(f"Multidegree {rho} does not match {system.blocks.k} blocks")
    multipliers = []
    for i, d in enumerate(degrees):
        remaining = tuple(int(r - x) for r, x in zip(rho, d))
        if min(remaining) < 0:
            raise DegreeError(f"Equation {i + 1} of multidegree {tuple(d)} does not fit in multidegree {rho}")
        multipliers.append(multidegree_monomials(system.blocks, remaining))
    rows = MonomialIndex(multidegree_monomials(system.blocks, rho))
    matrix, columns = _assemble(system.polys, rows, multipliers, max_bytes)
    return MacaulayMatrix(matrix, rows, columns, SolveMode.MULTIHOM, system, rho=rho)


def build_macaulay(system: PolynomialSystem, mode: Optional[SolveMode] = None, **kwargs) -> MacaulayMatrix:
    """Dispatch to the builder for ``mode`` (the system's own mode by default)."""
    mode = SolveMode(mode or system.mode)
    builders = {
        SolveMode.AFFINE: dense_macaulay,
        SolveMode.TORIC: toric_macaulay,
        SolveMode.PROJECTIVE: homogeneous_macaulay,
        SolveMode.MULTIHOM: multihom_macaulay,
    }
    return builders[mode](system, **kwargs)
