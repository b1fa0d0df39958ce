"""
Quotient algebra structure from the null space of a Macaulay matrix.

Every pipeline follows the same steps: the left null space ``N`` of the
Macaulay matrix, a restriction to the monomials ``W`` that stay in ``V`` after
multiplication by a variable, a basis picked by QR with column pivoting, and
the multiplication matrices ``m_i = N*^-1 N_i``.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from macsolve.macaulay import (
    DEFAULT_MAX_MATRIX_BYTES,
    DegenerateShiftError,
    MacaulayMatrix,
    MonomialIndex,
    dense_macaulay,
    homogeneous_macaulay,
    monomial_label,
    monomials_of_degree,
    multidegree_monomials,
    multihom_macaulay,
    toric_macaulay,
)
from macsolve.poly import (
    Exponent,
    Polynomial,
    PolynomialSystem,
    Seed,
    SolveMode,
    coordinate_change,
    linear_form_coefficients,
    random_unit_coefficients,
)
from macsolve.polytope import bkk_bound, multihom_bezout
from macsolve.utils import MacsolveError, plural_s, stopwatch

log = logging.getLogger(__name__)


class GenericityViolation(MacsolveError):
    """The null space does not have the dimension the generic root count predicts."""

    exit_code = 3
    code = "genericity_violation"


class SurjectivityFailure(MacsolveError):
    """The restricted null space map has rank below the number of roots."""

    exit_code = 4
    code = "surjectivity_failure"


class RegularityFailure(MacsolveError):
    """No generic linear form made ``N_h`` surjective: the degree is below the regularity."""

    exit_code = 4
    code = "regularity_failure"


@dataclass
class Tolerances:
    """Numerical thresholds shared by the pipelines.

    Attributes:
        tol_null (float): Bound on ``||N M|| / ||M||``.
        tol_commute (float): Bound on the relative commutators of the multiplication matrices.
        gap_min (float): Smallest accepted singular value gap at the null space boundary.
        cond_bound (float): Condition number of ``N*`` above which a warning is logged.
        rank_tol (float): Relative pivot size below which ``N_W`` counts as rank deficient.
        tol_cluster (float): Relative clustering threshold for Schur diagonals.
        retries (int): Number of linear forms tried before giving up on regularity.
    """

    tol_null: float = 1e-10
    tol_commute: float = 1e-8
    gap_min: float = 1e3
    cond_bound: float = 1e12
    rank_tol: float = 1e-10
    tol_cluster: float = 1e-6
    retries: int = 3

    def validate(self) -> None:
        for name in ("tol_null", "tol_commute", "gap_min", "cond_bound", "rank_tol", "tol_cluster"):
            if not getattr(self, name) > 0:
                raise ValueError(f"Tolerance `{name}` must be positive, got {getattr(self, name)}")
        if self.retries < 1:
            raise ValueError("At least one attempt is needed")


@dataclass(eq=False)
class NullSpaceMap:
    """The left null space of a Macaulay matrix.

    Attributes:
        N (np.ndarray): ``delta x m`` matrix with orthonormal rows, ``N M ~ 0``.
        delta (int): Number of rows.
        index (MonomialIndex): The monomial of every column.
        gap (float): ``sigma_(m - delta) / sigma_(m - delta + 1)``.
        residual (float): ``||N M|| / ||M||``.
        singular_values (np.ndarray): All ``m`` singular values, zero padded.
    """

    N: np.ndarray
    delta: int
    index: MonomialIndex
    gap: float = math.inf
    residual: float = 0.0
    singular_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def columns(self, exponents: Sequence[Sequence[int]]) -> np.ndarray:
        """Columns of ``N`` at the given monomials."""
        return self.N[:, self.index.positions(exponents)]

    def rotated(self, transform: np.ndarray) -> "NullSpaceMap":
        """Another basis of the same null space, ``T N``."""
        return NullSpaceMap(transform @ self.N, self.delta, self.index, self.gap, self.residual, self.singular_values)


@dataclass(eq=False)
class BasisChoice:
    basis: Tuple[Exponent, ...]
    positions: np.ndarray
    nstar: np.ndarray
    permutation: np.ndarray
    cond: float


@dataclass(eq=False)
class QuotientRep:
    """Multiplication matrices of the quotient algebra over a monomial basis.

    Attributes:
        basis (tuple): The ``delta`` basis monomials.
        nstar (np.ndarray): ``N`` restricted to the basis, invertible.
        shifted (tuple): The matrices ``N_i`` (one per coordinate).
        mult (tuple): The multiplication matrices ``m_i = N*^-1 N_i``.
        labels (tuple): Coordinate name of every ``m_i``.
        groups (tuple): Indices into ``mult`` per variable block.
        mode (SolveMode): The pipeline that built it.
        system (PolynomialSystem): The system the roots are reported for.
        delta (int): Number of roots counted with multiplicity.
        transform (np.ndarray): Coordinate change applied before the build;
            a root ``y`` of the transformed system is ``T y`` in the original.
        macaulay (MacaulayMatrix): The matrix the null space came from.
        null_map (NullSpaceMap): The null space.
        timings (dict): ``t_M``, ``t_N`` and ``t_B`` in seconds.
        diagnostics (dict): Gap, null residual, condition number, commutator norm.
    """

    basis: Tuple[Exponent, ...]
    nstar: np.ndarray
    shifted: Tuple[np.ndarray, ...]
    mult: Tuple[np.ndarray, ...]
    labels: Tuple[str, ...]
    groups: Tuple[Tuple[int, ...], ...]
    mode: SolveMode
    system: PolynomialSystem
    delta: int
    macaulay: MacaulayMatrix
    null_map: NullSpaceMap
    transform: Optional[np.ndarray] = None
    timings: Dict[str, float] = field(default_factory=dict)
    diagnostics: Dict[str, object] = field(default_factory=dict)

    @property
    def cond(self) -> float:
        return float(self.diagnostics.get("cond", math.inf))

    def commutator_norm(self) -> float:
        return max_commutator(self.mult)


@dataclass
class RegularityReport:
    regular: bool
    rank: int
    delta: int
    degree: int
    gap: float
    singular_values: np.ndarray

    def __bool__(self):
        return self.regular


def max_commutator(mats: Sequence[np.ndarray]) -> float:
    """Largest ``||A B - B A|| / max(||A||, ||B||)`` over all pairs."""
    worst = 0.0
    for a, b in itertools.combinations(mats, 2):
        scale = max(np.linalg.norm(a, 2), np.linalg.norm(b, 2))
        if scale > 0:
            worst = max(worst, float(np.linalg.norm(a @ b - b @ a, 2) / scale))
    return worst


def _svd(matrix: np.ndarray, compute_uv: bool = True):
    try:
        return scipy.linalg.svd(matrix, full_matrices=True, compute_uv=compute_uv)
    except np.linalg.LinAlgError:
        log.debug("gesdd did not converge, falling back to gesvd")
        return scipy.linalg.svd(matrix, full_matrices=True, compute_uv=compute_uv, lapack_driver="gesvd")


def null_space(mac: MacaulayMatrix, delta: int, tolerances: Optional[Tolerances] = None) -> NullSpaceMap:
    """The ``delta``-dimensional left null space of the stored Macaulay matrix.

    The dimension comes from the root count, not from a rank decision; the
    singular value gap at that position guards the genericity assumption.
    """
    tolerances = tolerances or Tolerances()
    matrix = mac.matrix
    m = matrix.shape[0]
    if delta < 1:
        raise ValueError(f"The expected number of roots must be positive, got {delta}")
    if delta > m:
        raise GenericityViolation(f"Expected {delta} roots but V only has {m} monomials")
    U, s, _ = _svd(matrix)
    sigma = np.zeros(m)
    sigma[: len(s)] = s
    kept = sigma[m - delta - 1] if m > delta else math.inf
    dropped = sigma[m - delta]
    if dropped > 0:
        gap = kept / dropped
    else:
        # the padded zeros of a wide null space give no gap at all
        gap = math.inf if kept > tolerances.tol_null * sigma[0] else 1.0
    residual = dropped / sigma[0] if sigma[0] > 0 else 0.0
    window = sigma[max(0, m - delta - 3) : m - delta + 3]
    log.debug(
        f"Singular values around the null space boundary ({m - delta}/{m}): {np.array2string(window, precision=3)}"
    )
    if gap < tolerances.gap_min:
        raise GenericityViolation(
            f"Singular value gap {gap:.3g} at position {m - delta} is below {tolerances.gap_min:.3g}: "
            f"the system does not have {delta} isolated roots in general position"
        )
    if residual > tolerances.tol_null:
        raise GenericityViolation(f"Null space residual {residual:.3g} exceeds {tolerances.tol_null:.3g}")
    N = U[:, m - delta :].conj().T
    log.debug(f"Null space of dimension {delta}, gap {gap:.3g}, residual {residual:.3g}")
    return NullSpaceMap(N, delta, mac.rows, gap, residual, sigma)


def w_monomials(mac: MacaulayMatrix) -> List[Exponent]:
    """Monomials ``w`` whose products with every coordinate stay in ``V``.

    For dense matrices these are the monomials of degree below ``rho``, for
    toric matrices the lattice points ``a`` with every ``a + e_i`` in the
    support, and for (multi)homogeneous matrices the monomials of
    (multi)degree ``rho - 1``.
    """
    nvars = mac.system.nvars
    if mac.mode == SolveMode.MULTIHOM:
        return multidegree_monomials(mac.system.blocks, tuple(r - 1 for r in mac.rho))
    if mac.mode == SolveMode.PROJECTIVE:
        return monomials_of_degree(nvars, mac.rho - 1)
    units = np.eye(nvars, dtype=int)
    return [w for w in mac.rows if all(tuple(np.add(w, e)) in mac.rows for e in units)]


def restrict_to_W(
    null_map: NullSpaceMap, mac: MacaulayMatrix, shift: Optional[Sequence[int]] = None
) -> Tuple[List[Exponent], np.ndarray]:
    """Columns of ``N`` at ``x^shift * w`` for the monomials ``w`` of ``W``.

    Without a shift this is ``N_|W`` (dense and toric). With ``shift = e_i``
    on a homogeneous matrix it is the block ``N_|W_i``.
    """
    monomials = w_monomials(mac)
    if not monomials:
        raise SurjectivityFailure("The restriction space W is empty")
    if shift is None:
        return monomials, null_map.columns(monomials)
    return monomials, null_map.columns([tuple(np.add(w, shift)) for w in monomials])


def select_basis(
    N_W: np.ndarray,
    delta: int,
    monomials: Sequence[Exponent],
    forced: Optional[Sequence[Sequence[int]]] = None,
    tolerances: Optional[Tolerances] = None,
) -> BasisChoice:
    """Pick ``delta`` columns of ``N_W`` by QR with column pivoting.

    Args:
        N_W (np.ndarray): The restricted null space map.
        delta (int): Number of roots.
        monomials (list): The monomial of every column of ``N_W``.
        forced (list): Use these monomials as the basis instead of pivoting.
        tolerances (Tolerances): Rank and condition thresholds.
    """
    tolerances = tolerances or Tolerances()
    if N_W.shape[1] < delta:
        raise SurjectivityFailure(f"Only {N_W.shape[1]} columns available for a basis of size {delta}")
    if forced is not None:
        lookup = {tuple(m): i for i, m in enumerate(monomials)}
        try:
            positions = np.array([lookup[tuple(b)] for b in forced], dtype=int)
        except KeyError as e:
            raise SurjectivityFailure(f"Forced basis monomial {e.args[0]} is not in W") from None
        if len(positions) != delta:
            raise SurjectivityFailure(f"Forced basis has {len(positions)} monomials, need {delta}")
        rest = np.array([i for i in range(N_W.shape[1]) if i not in set(positions)], dtype=int)
        permutation = np.concatenate([positions, rest])
    else:
        _, R, permutation = scipy.linalg.qr(N_W, mode="economic", pivoting=True)
        pivots = np.abs(np.diag(R))
        if len(pivots) < delta or pivots[delta - 1] <= tolerances.rank_tol * pivots[0]:
            rank = int(np.sum(pivots > tolerances.rank_tol * pivots[0])) if len(pivots) else 0
            raise SurjectivityFailure(f"N restricted to W has numerical rank {rank} < {delta}")
        positions = permutation[:delta]
    nstar = N_W[:, positions]
    cond = float(np.linalg.cond(nstar))
    if not np.isfinite(cond):
        raise SurjectivityFailure("The chosen basis gives a singular N*")
    if cond > tolerances.cond_bound:
        log.warning(f"[yellow][!] N* is badly conditioned (cond = {cond:.3g} > {tolerances.cond_bound:.3g})")
    basis = tuple(tuple(monomials[i]) for i in positions)
    log.debug(f"Basis of {delta} monomial{plural_s(delta)} chosen, cond(N*) = {cond:.3g}")
    return BasisChoice(basis, np.asarray(positions, dtype=int), nstar, np.asarray(permutation, dtype=int), cond)


def _multiplication_matrices(nstar: np.ndarray, shifted: Sequence[np.ndarray]) -> Tuple[np.ndarray, ...]:
    lu = scipy.linalg.lu_factor(nstar)
    return tuple(scipy.linalg.lu_solve(lu, n_i) for n_i in shifted)


def _finish(
    choice: BasisChoice,
    shifted: Sequence[np.ndarray],
    labels: Sequence[str],
    groups: Sequence[Sequence[int]],
    mac: MacaulayMatrix,
    null_map: NullSpaceMap,
    system: PolynomialSystem,
    tolerances: Tolerances,
    timings: Dict[str, float],
    transform: Optional[np.ndarray] = None,
    extra: Optional[Dict[str, object]] = None,
) -> QuotientRep:
    with stopwatch(timings, "t_B"):
        mult = _multiplication_matrices(choice.nstar, shifted)
    commutator = max_commutator(mult)
    if commutator > tolerances.tol_commute:
        log.warning(f"[yellow][!] Multiplication matrices commute only up to {commutator:.3g}")
    diagnostics: Dict[str, object] = {
        "gap": null_map.gap,
        "null_residual": null_map.residual,
        "cond": choice.cond,
        "commutator": commutator,
        "matrix_shape": list(mac.shape),
        "basis": [monomial_label(b, mac.system.variables) for b in choice.basis],
    }
    diagnostics.update(extra or {})
    return QuotientRep(
        basis=choice.basis,
        nstar=choice.nstar,
        shifted=tuple(shifted),
        mult=mult,
        labels=tuple(labels),
        groups=tuple(tuple(g) for g in groups),
        mode=mac.mode,
        system=system,
        delta=null_map.delta,
        macaulay=mac,
        null_map=null_map,
        transform=transform,
        timings=timings,
        diagnostics=diagnostics,
    )


def _affine_structure(
    mac: MacaulayMatrix,
    null_map: NullSpaceMap,
    system: PolynomialSystem,
    tolerances: Tolerances,
    timings: Dict[str, float],
    forced_basis: Optional[Sequence[Sequence[int]]],
    extra: Optional[Dict[str, object]] = None,
) -> QuotientRep:
    """Shared tail of the dense and toric pipelines."""
    with stopwatch(timings, "t_B"):
        monomials, N_W = restrict_to_W(null_map, mac)
        choice = select_basis(N_W, null_map.delta, monomials, forced_basis, tolerances)
        units = np.eye(system.nvars, dtype=int)
        shifted = [null_map.columns([tuple(np.add(b, e)) for b in choice.basis]) for e in units]
    return _finish(
        choice,
        shifted,
        system.variables,
        [tuple(range(system.nvars))],
        mac,
        null_map,
        system,
        tolerances,
        timings,
        extra=extra,
    )


def build_affine(
    system: PolynomialSystem,
    tolerances: Optional[Tolerances] = None,
    rho: Optional[int] = None,
    forced_basis: Optional[Sequence[Sequence[int]]] = None,
    max_bytes: Optional[int] = DEFAULT_MAX_MATRIX_BYTES,
) -> QuotientRep:
    """Multiplication matrices of ``R/I`` for a dense affine square system.

    Args:
        system (PolynomialSystem): Square affine system.
        tolerances (Tolerances): Numerical thresholds.
        rho (int): Degree override for the Macaulay matrix.
        forced_basis (list): Basis monomials to use instead of pivoted QR.
        max_bytes (int): Memory budget for the Macaulay matrix.
    """
    tolerances = tolerances or Tolerances()
    timings: Dict[str, float] = {}
    with stopwatch(timings, "t_M"):
        mac = dense_macaulay(system, rho=rho, max_bytes=max_bytes)
    delta = math.prod(system.degrees())
    log.info(f"Affine Macaulay matrix {mac.shape[0]} x {mac.shape[1]}, expecting {delta} root{plural_s(delta)}")
    with stopwatch(timings, "t_N"):
        null_map = null_space(mac, delta, tolerances)
    return _affine_structure(mac, null_map, system, tolerances, timings, forced_basis)


def build_toric(
    system: PolynomialSystem,
    tolerances: Optional[Tolerances] = None,
    seed: Seed = None,
    shift: Optional[Sequence[float]] = None,
    shift_scale: float = 1e-3,
    forced_basis: Optional[Sequence[Sequence[int]]] = None,
    max_bytes: Optional[int] = DEFAULT_MAX_MATRIX_BYTES,
) -> QuotientRep:
    """Multiplication matrices of ``R/I*`` for a sparse (Laurent) square system.

    The number of roots in the torus is the BKK bound. A degenerate shift is
    replaced by a fresh one up to ``tolerances.retries`` times.

    Args:
        system (PolynomialSystem): Square system, Laurent exponents allowed.
        tolerances (Tolerances): Numerical thresholds.
        seed: Seed for the generic shift.
        shift (list): Fixed shift ``v``; no retries when given.
        shift_scale (float): Size of drawn shifts.
        forced_basis (list): Basis monomials to use instead of pivoted QR.
        max_bytes (int): Memory budget for the Macaulay matrix.
    """
    tolerances = tolerances or Tolerances()
    rng = np.random.default_rng(seed)
    timings: Dict[str, float] = {}
    delta = bkk_bound(system)
    if delta < 1:
        raise GenericityViolation("The BKK bound is zero: the system has no roots in the torus")
    for attempt in range(tolerances.retries):
        try:
            with stopwatch(timings, "t_M"):
                mac = toric_macaulay(system, shift=shift, seed=rng, shift_scale=shift_scale, max_bytes=max_bytes)
            break
        except DegenerateShiftError as e:
            if shift is not None or attempt == tolerances.retries - 1:
                raise
            log.debug(f"{e}, drawing a new shift")
    log.info(f"Toric Macaulay matrix {mac.shape[0]} x {mac.shape[1]}, expecting {delta} root{plural_s(delta)}")
    with stopwatch(timings, "t_N"):
        null_map = null_space(mac, delta, tolerances)
    extra = {"shift": [float(x) for x in mac.shift]}
    return _affine_structure(mac, null_map, system, tolerances, timings, forced_basis, extra)


def build_projective(
    system: PolynomialSystem,
    tolerances: Optional[Tolerances] = None,
    seed: Seed = None,
    h: Optional[Polynomial] = None,
    rho: Optional[int] = None,
    forced_basis: Optional[Sequence[Sequence[int]]] = None,
    max_bytes: Optional[int] = DEFAULT_MAX_MATRIX_BYTES,
) -> QuotientRep:
    """Multiplication-by-``x_i/h`` matrices for a homogeneous square system.

    ``N_h = sum_i h_i N_|W_i`` must be surjective; a random ``h`` is redrawn
    up to ``tolerances.retries`` times before the degree is declared irregular.

    Args:
        system (PolynomialSystem): ``n`` homogeneous equations in ``n + 1`` variables.
        tolerances (Tolerances): Numerical thresholds.
        seed: Seed for the random linear form.
        h (Polynomial): Fixed linear form; ``h = x_0`` reproduces the affine algorithm.
        rho (int): Degree override for the Macaulay matrix.
        forced_basis (list): Basis monomials of degree ``rho - 1``.
        max_bytes (int): Memory budget for the Macaulay matrix.
    """
    tolerances = tolerances or Tolerances()
    rng = np.random.default_rng(seed)
    timings: Dict[str, float] = {}
    with stopwatch(timings, "t_M"):
        mac = homogeneous_macaulay(system, rho=rho, max_bytes=max_bytes)
    delta = math.prod(system.degrees())
    log.info(f"Homogeneous Macaulay matrix {mac.shape[0]} x {mac.shape[1]}, expecting {delta} root{plural_s(delta)}")
    with stopwatch(timings, "t_N"):
        null_map = null_space(mac, delta, tolerances)
    nvars = system.nvars
    with stopwatch(timings, "t_B"):
        units = np.eye(nvars, dtype=int)
        blocks = [restrict_to_W(null_map, mac, e) for e in units]
        monomials = blocks[0][0]
        for attempt in range(tolerances.retries):
            coefficients = linear_form_coefficients(h) if h is not None else random_unit_coefficients(rng, nvars)
            N_h = sum(c * block for c, (_, block) in zip(coefficients, blocks))
            try:
                choice = select_basis(N_h, delta, monomials, forced_basis, tolerances)
                break
            except SurjectivityFailure as e:
                if h is not None or attempt == tolerances.retries - 1:
                    raise RegularityFailure(f"N_h is not surjective in degree {mac.rho - 1}: {e}") from None
                log.debug(f"Linear form {attempt + 1} gave a rank deficient N_h, trying another")
        shifted = [block[:, choice.positions] for _, block in blocks]
    extra = {"h": [[float(c.real), float(c.imag)] for c in coefficients]}
    return _finish(
        choice,
        shifted,
        system.variables,
        [tuple(range(nvars))],
        mac,
        null_map,
        system,
        tolerances,
        timings,
        extra=extra,
    )


def _k_matrix(factor: Polynomial, monomials: Sequence[Exponent], rows: MonomialIndex) -> np.ndarray:
    """Columns ``vec(factor * m)`` for every monomial ``m``, in the row layout of ``V``."""
    K = np.zeros((len(rows), len(monomials)), dtype=complex)
    exps = factor.exponent_array
    coefficients = factor.coefficient_array
    for col, m in enumerate(monomials):
        K[rows.positions(exps + np.asarray(m, dtype=int)), col] += coefficients
    return K


def _random_block_unitary(rng: np.random.Generator, size: int) -> np.ndarray:
    z = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def build_multihom(
    system: PolynomialSystem,
    tolerances: Optional[Tolerances] = None,
    seed: Seed = None,
    hs: Optional[Sequence[Polynomial]] = None,
    rho: Optional[Sequence[int]] = None,
    forced_basis: Optional[Sequence[Sequence[int]]] = None,
    precondition: bool = True,
    max_bytes: Optional[int] = DEFAULT_MAX_MATRIX_BYTES,
) -> QuotientRep:
    """Multiplication-by-``x_ij/h_i`` matrices for a multihomogeneous square system.

    ``N_h = N K`` with ``K`` holding ``vec(h_1...h_k m)`` for ``m`` of
    multidegree ``rho - 1``, and ``N_ij = N K_ij`` with ``h_i`` replaced by
    ``x_ij``. By default the system first goes through a random unitary
    block-diagonal change of coordinates, undone when the roots are read.

    Args:
        system (PolynomialSystem): Square multihomogeneous system.
        tolerances (Tolerances): Numerical thresholds.
        seed: Seed for the coordinate change and the random linear forms.
        hs (list): Fixed linear forms, one per block.
        rho (tuple): Multidegree override for the Macaulay matrix.
        forced_basis (list): Basis monomials of multidegree ``rho - 1``.
        precondition (bool): Apply the random block-diagonal coordinate change.
        max_bytes (int): Memory budget for the Macaulay matrix.
    """
    tolerances = tolerances or Tolerances()
    rng = np.random.default_rng(seed)
    blocks = system.blocks
    ranges = blocks.block_ranges()
    timings: Dict[str, float] = {}
    transform = None
    working = system
    if precondition:
        transform = scipy.linalg.block_diag(*[_random_block_unitary(rng, len(r)) for r in ranges])
        working = coordinate_change(system, transform)
    with stopwatch(timings, "t_M"):
        mac = multihom_macaulay(working, rho=rho, max_bytes=max_bytes)
    delta = multihom_bezout(working.multidegrees(), blocks.sizes)
    log.info(
        f"Multihomogeneous Macaulay matrix {mac.shape[0]} x {mac.shape[1]}, expecting {delta} root{plural_s(delta)}"
    )
    with stopwatch(timings, "t_N"):
        null_map = null_space(mac, delta, tolerances)
    nvars = system.nvars
    with stopwatch(timings, "t_B"):
        monomials = w_monomials(mac)
        if not monomials:
            raise SurjectivityFailure("The restriction space W is empty")
        for attempt in range(tolerances.retries):
            if hs is not None:
                forms = list(hs)
            else:
                forms = []
                for r in ranges:
                    coefficients = np.zeros(nvars, dtype=complex)
                    coefficients[list(r)] = random_unit_coefficients(rng, len(r))
                    forms.append(Polynomial.linear_form(coefficients))
            product = Polynomial.constant(1.0, nvars)
            for form in forms:
                product = product * form
            N_h = null_map.N @ _k_matrix(product, monomials, mac.rows)
            try:
                choice = select_basis(N_h, delta, monomials, forced_basis, tolerances)
                break
            except SurjectivityFailure as e:
                if hs is not None or attempt == tolerances.retries - 1:
                    raise RegularityFailure(f"N_h is not surjective in multidegree {mac.rho}: {e}") from None
                log.debug(f"Linear forms {attempt + 1} gave a rank deficient N_h, trying others")
        shifted = []
        for i, r in enumerate(ranges):
            others = Polynomial.constant(1.0, nvars)
            for block, form in enumerate(forms):
                if block != i:
                    others = others * form
            for j in r:
                factor = others * Polynomial.variable(j, nvars)
                shifted.append(null_map.N @ _k_matrix(factor, choice.basis, mac.rows))
    extra = {
        "h": [
            [[float(c.real), float(c.imag)] for c in linear_form_coefficients(f)[list(r)]]
            for f, r in zip(forms, ranges)
        ]
    }
    return _finish(
        choice,
        shifted,
        system.variables,
        [tuple(r) for r in ranges],
        mac,
        null_map,
        system,
        tolerances,
        timings,
        transform=transform,
        extra=extra,
    )


def build_quotient(system: PolynomialSystem, mode: Optional[SolveMode] = None, **kwargs) -> QuotientRep:
    """Dispatch to the pipeline for ``mode`` (the system's own mode by default)."""
    mode = SolveMode(mode or system.mode)
    if mode == SolveMode.AFFINE:
        kwargs.pop("seed", None)
        return build_affine(system, **kwargs)
    builders = {
        SolveMode.TORIC: build_toric,
        SolveMode.PROJECTIVE: build_projective,
        SolveMode.MULTIHOM: build_multihom,
    }
    return builders[mode](system, **kwargs)


def regularity_check(
    N: np.ndarray,
    index: MonomialIndex,
    delta: int,
    seed: Seed = None,
    tolerances: Optional[Tolerances] = None,
) -> RegularityReport:
    """Is ``N_h`` surjective onto ``C^delta`` for a generic ``h``?

    Args:
        N (np.ndarray): Null space map on the degree ``d`` monomials ``index``.
        index (MonomialIndex): Homogeneous monomials of one degree.
        delta (int): Number of roots.
        seed: Seed for the generic linear form.
        tolerances (Tolerances): ``rank_tol`` decides the numerical rank.
    """
    tolerances = tolerances or Tolerances()
    nvars = len(index[0])
    degree = sum(index[0])
    monomials = monomials_of_degree(nvars, degree - 1)
    coefficients = random_unit_coefficients(seed, nvars)
    N_h = np.zeros((N.shape[0], len(monomials)), dtype=complex)
    for c, e in zip(coefficients, np.eye(nvars, dtype=int)):
        N_h += c * N[:, index.positions([tuple(np.add(w, e)) for w in monomials])]
    s = scipy.linalg.svdvals(N_h) if N_h.size else np.zeros(0)
    rank = int(np.sum(s > tolerances.rank_tol * s[0])) if len(s) and s[0] > 0 else 0
    if len(s) > delta:
        gap = s[delta - 1] / s[delta] if s[delta] > 0 else math.inf
    elif len(s) == delta:
        gap = math.inf
    else:
        gap = 0.0
    regular = rank == delta
    log.debug(f"N_h in degree {degree - 1} has rank {rank} for {delta} roots")
    return RegularityReport(regular, rank, delta, degree, float(gap), s)


def regularity_check_system(
    system: PolynomialSystem, degree: int, seed: Seed = None, tolerances: Optional[Tolerances] = None
) -> RegularityReport:
    """Run :func:`regularity_check` on the numerical null space of the degree ``d`` Macaulay matrix.

    Equations of degree above ``d`` contribute no columns, so a low degree is
    reported as not regular instead of failing.
    """
    tolerances = tolerances or Tolerances()
    delta = math.prod(system.degrees())
    if degree < 0:
        return RegularityReport(False, 0, delta, degree, 0.0, np.zeros(0))
    mac = homogeneous_macaulay(system, rho=degree, truncate=True)
    m, c = mac.shape
    if c == 0:
        rank = 0
        N = np.eye(m, dtype=complex)
    else:
        U, s, _ = _svd(mac.matrix)
        rank = int(np.sum(s > tolerances.tol_null * s[0])) if len(s) and s[0] > 0 else 0
        N = U[:, rank:].conj().T
    log.debug(f"Degree {degree}: {m} monomials, Macaulay rank {rank}, null space dimension {m - rank}")
    if N.shape[0] == 0:
        return RegularityReport(False, 0, delta, degree, 0.0, np.zeros(0))
    return regularity_check(N, mac.rows, delta, seed, tolerances)
