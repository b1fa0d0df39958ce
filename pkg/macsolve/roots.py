"""
Reading the roots off the multiplication matrices.

All coordinates come from one shared Schur form of a generic combination of
the multiplication matrices, so the root order is the same for every
coordinate. Diagonal entries that agree up to a tolerance are clustered and
moved next to each other; the cluster size is the multiplicity.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import scipy.cluster.hierarchy
import scipy.linalg

from macsolve.poly import PolynomialSystem, Seed, SolveMode, random_unit_coefficients
from macsolve.quotient import QuotientRep, Tolerances, max_commutator
from macsolve.utils import MacsolveError, plural_s, stopwatch

log = logging.getLogger(__name__)

# Relative size of the strictly lower part of a transformed T_i before it is reported
TRIANGULAR_TOL = 1e-8
# Relative growth of ||U m* U^H - T*|| accepted from the cluster reordering
REORDER_TOL = 1e-10
# Roots of a toric system with a larger residual are probably not in the torus
TORUS_RESIDUAL_TOL = 1e-6
INFINITY_TOL = 1e-10


class CommutatorViolation(MacsolveError):
    """The multiplication matrices do not commute."""

    exit_code = 3
    code = "commutator_violation"


class SchurFailure(MacsolveError):
    """LAPACK could not compute the Schur form."""

    exit_code = 3
    code = "schur_failure"


class DegeneratePencil(MacsolveError):
    """``A - lambda B`` is singular for every ``lambda``."""

    exit_code = 3
    code = "degenerate_pencil"


@dataclass(frozen=True)
class ProjectiveRatio:
    """A generalized eigenvalue ``alpha / beta``, kept as a pair so that infinity is a value."""

    alpha: complex
    beta: complex
    tol: float = INFINITY_TOL

    @property
    def is_infinite(self) -> bool:
        return abs(self.beta) <= self.tol * max(abs(self.alpha), abs(self.beta))

    @property
    def value(self) -> complex:
        if self.is_infinite:
            return complex(np.inf, 0.0)
        return complex(self.alpha / self.beta)

    def __complex__(self):
        return self.value

    def __repr__(self):
        return "ProjectiveRatio(inf)" if self.is_infinite else f"ProjectiveRatio({self.value:.6g})"


@dataclass(eq=False)
class SchurForm:
    """``T_i = U m_i U^H`` for all matrices, triangularized by the Schur form of ``m*``."""

    U: np.ndarray
    tstar: np.ndarray
    mstar: np.ndarray
    triangular: Tuple[np.ndarray, ...]
    coefficients: np.ndarray
    lower_mass: float = 0.0


@dataclass(eq=False)
class ClusteredSchur:
    U: np.ndarray
    tstar: np.ndarray
    clusters: Tuple[Tuple[int, ...], ...]
    reordered: bool = False
    residual: float = 0.0


@dataclass(eq=False)
class Root:
    """One root of the system.

    Attributes:
        coordinates (np.ndarray): Affine coordinates, or projective coordinates
            scaled so that every block has a largest-modulus entry equal to 1.
        multiplicity (int): Size of the cluster the root came from.
        residual (float): Relative backward error on the input system.
        blocks (tuple): Variable ranges of the blocks (projective modes only).
        cluster_diameter (float): Spread of the clustered Schur diagonal entries.
    """

    coordinates: np.ndarray
    multiplicity: int = 1
    residual: float = 0.0
    blocks: Optional[Tuple[range, ...]] = None
    cluster_diameter: float = 0.0

    @property
    def is_projective(self) -> bool:
        return self.blocks is not None

    def block_coordinates(self) -> List[np.ndarray]:
        if self.blocks is None:
            return [self.coordinates]
        return [self.coordinates[list(block)] for block in self.blocks]

    @property
    def at_infinity(self) -> bool:
        """Is some chart coordinate ``x_i0`` (numerically) zero?"""
        if self.blocks is None:
            return False
        return any(abs(self.coordinates[block[0]]) <= INFINITY_TOL for block in self.blocks)

    @property
    def affine(self) -> Optional[np.ndarray]:
        """Coordinates dehomogenized with respect to every ``x_i0``, None at infinity."""
        if self.blocks is None:
            return self.coordinates
        if self.at_infinity:
            return None
        return np.concatenate([z[1:] / z[0] for z in self.block_coordinates()])

    def is_real(self, tol: float = 1e-8) -> bool:
        values = self.affine if self.affine is not None else self.coordinates
        return bool(np.all(np.abs(np.imag(values)) <= tol * np.maximum(1.0, np.abs(values))))


@dataclass(eq=False)
class RootSet:
    """The roots found by one solver run.

    Attributes:
        roots (list): One entry per cluster.
        mode (SolveMode): Pipeline used.
        seed: Seed of the run.
        delta (int): Number of roots with multiplicity.
        variables (tuple): Names of the coordinates.
        timings (dict): ``t_M``, ``t_N``, ``t_B``, ``t_S`` and ``t_alg`` in seconds.
        diagnostics (dict): Numerical health of the run.
    """

    roots: List[Root]
    mode: SolveMode
    seed: Seed
    delta: int
    variables: Tuple[str, ...] = ()
    timings: Dict[str, float] = field(default_factory=dict)
    diagnostics: Dict[str, object] = field(default_factory=dict)

    def __len__(self):
        return len(self.roots)

    def __iter__(self) -> Iterator[Root]:
        return iter(self.roots)

    def __getitem__(self, i: int) -> Root:
        return self.roots[i]

    @property
    def total_multiplicity(self) -> int:
        return sum(r.multiplicity for r in self.roots)

    @property
    def max_residual(self) -> float:
        return max((r.residual for r in self.roots), default=0.0)

    def coordinates(self) -> np.ndarray:
        return np.array([r.coordinates for r in self.roots])


def _schur_rng(seed: Seed) -> np.random.Generator:
    """A stream independent from the one the quotient builders drew their linear forms from."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])


def _lower_mass(T: np.ndarray, m: np.ndarray) -> float:
    scale = np.linalg.norm(m)
    return float(np.linalg.norm(np.tril(T, -1)) / scale) if scale > 0 else 0.0


def simultaneous_schur(
    mats: Sequence[np.ndarray], seed: Seed = None, tol_commute: float = 1e-8, tol_tri: float = TRIANGULAR_TOL
) -> SchurForm:
    """Triangularize commuting matrices with the Schur vectors of a random combination.

    Args:
        mats (list): Commuting square matrices of the same size.
        seed: Seed for the coefficients of ``m*``.
        tol_commute (float): Bound on the relative commutators.
        tol_tri (float): Strictly lower mass above which a warning is logged.
    """
    mats = [np.asarray(m, dtype=complex) for m in mats]
    if not mats:
        raise ValueError("Need at least one matrix")
    shape = mats[0].shape
    if len(shape) != 2 or shape[0] != shape[1] or any(m.shape != shape for m in mats):
        raise ValueError(f"Need square matrices of one size, got {[m.shape for m in mats]}")
    commutator = max_commutator(mats)
    if commutator > tol_commute:
        raise CommutatorViolation(f"Multiplication matrices do not commute: {commutator:.3g} > {tol_commute:.3g}")
    coefficients = random_unit_coefficients(seed, len(mats))
    mstar = sum(c * m for c, m in zip(coefficients, mats))
    try:
        tstar, Z = scipy.linalg.schur(mstar, output="complex")
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SchurFailure(f"Schur decomposition failed: {e}") from None
    U = Z.conj().T
    triangular = tuple(U @ m @ Z for m in mats)
    lower = max(_lower_mass(T, m) for T, m in zip(triangular, mats))
    if lower > tol_tri:
        log.warning(f"[yellow][!] Schur vectors of m* leave a lower triangular part of relative size {lower:.3g}")
    log.debug(f"Simultaneous Schur form of {len(mats)} matrices of size {shape[0]}")
    return SchurForm(U, tstar, mstar, triangular, coefficients, lower)


def cluster_values(values: Sequence[complex], tol: float) -> List[List[int]]:
    """Single-linkage clusters of points in the complex plane, in order of first appearance."""
    values = np.asarray(values, dtype=complex)
    if len(values) == 0:
        return []
    if len(values) == 1:
        return [[0]]
    points = np.column_stack([values.real, values.imag])
    labels = scipy.cluster.hierarchy.fcluster(
        scipy.cluster.hierarchy.linkage(points, method="single"), t=tol, criterion="distance"
    )
    clusters: Dict[int, List[int]] = {}
    for position, label in enumerate(labels):
        clusters.setdefault(int(label), []).append(position)
    return sorted(clusters.values(), key=lambda c: c[0])


def _swap(T: np.ndarray, U: np.ndarray, k: int) -> None:
    """Exchange the diagonal entries ``k`` and ``k + 1`` of the Schur form in place."""
    a, b, c = T[k, k], T[k + 1, k + 1], T[k, k + 1]
    r = np.hypot(abs(c), abs(b - a))
    if r == 0:
        return
    Q = np.array([[c, -np.conj(b - a)], [b - a, np.conj(c)]]) / r
    T[k : k + 2, :] = Q.conj().T @ T[k : k + 2, :]
    T[:, k : k + 2] = T[:, k : k + 2] @ Q
    U[k : k + 2, :] = Q.conj().T @ U[k : k + 2, :]
    T[k + 1, k] = 0.0


def cluster_reorder(
    tstar: np.ndarray, U: np.ndarray, tol_cluster: float, mstar: Optional[np.ndarray] = None
) -> ClusteredSchur:
    """Move clustered diagonal entries of a Schur form next to each other.

    Adjacent entries are exchanged with Givens rotations. When ``mstar`` is
    given the reordered factorization is checked against it; if it got worse
    than ``REORDER_TOL`` the original form is returned with every root in a
    cluster of its own.

    Args:
        tstar (np.ndarray): Upper triangular Schur factor.
        U (np.ndarray): Unitary factor, ``U m* U^H = T*``.
        tol_cluster (float): Absolute clustering distance.
        mstar (np.ndarray): The matrix that was decomposed.
    """
    diagonal = np.diag(tstar)
    clusters = cluster_values(diagonal, tol_cluster)
    rank = np.empty(len(diagonal), dtype=int)
    for i, cluster in enumerate(clusters):
        rank[cluster] = i
    if np.all(np.diff(rank) >= 0):
        spans = _spans(clusters)
        return ClusteredSchur(U, tstar, spans, reordered=False)

    T = np.array(tstar, dtype=complex)
    V = np.array(U, dtype=complex)
    swaps = 0
    for end in range(len(rank) - 1, 0, -1):
        for k in range(end):
            if rank[k] > rank[k + 1]:
                _swap(T, V, k)
                rank[k], rank[k + 1] = rank[k + 1], rank[k]
                swaps += 1
    sizes = [len(c) for c in clusters]
    spans = tuple(tuple(range(start, start + size)) for start, size in zip(np.cumsum([0] + sizes[:-1]), sizes))
    residual = 0.0
    if mstar is not None:
        scale = max(np.linalg.norm(mstar, 2), 1.0)
        residual = float(np.linalg.norm(V @ mstar @ V.conj().T - T, 2) / scale)
        if residual > REORDER_TOL:
            log.warning(
                f"[yellow][!] Reordering the Schur form lost accuracy ({residual:.3g}), reporting simple roots only"
            )
            return ClusteredSchur(U, tstar, tuple((i,) for i in range(len(diagonal))), reordered=False)
    log.debug(f"Reordered the Schur form with {swaps} swap{plural_s(swaps)} into {len(clusters)} clusters")
    return ClusteredSchur(V, T, spans, reordered=True, residual=residual)


def _spans(clusters: Sequence[Sequence[int]]) -> Tuple[Tuple[int, ...], ...]:
    return tuple(tuple(c) for c in clusters)


def pencil_eigenvalues(A: np.ndarray, B: np.ndarray, tol: float = INFINITY_TOL) -> List[ProjectiveRatio]:
    """Generalized eigenvalues of ``A v = lambda B v`` as ratios ``alpha / beta``.

    A pair with ``beta`` zero is an eigenvalue at infinity.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise ValueError(f"Pencil needs two square matrices of one size, got {A.shape} and {B.shape}")
    alpha, beta = scipy.linalg.eigvals(A, B, homogeneous_eigvals=True)
    scale = max(np.linalg.norm(A, 2), np.linalg.norm(B, 2))
    ratios = []
    for a, b in zip(alpha, beta):
        size = max(abs(a), abs(b))
        if size <= tol * scale:
            raise DegeneratePencil("Both matrices of the pencil share a null vector")
        ratios.append(ProjectiveRatio(complex(a / size), complex(b / size), tol))
    return ratios


def residual(system: PolynomialSystem, z: Sequence[complex]) -> float:
    """``max_i |f_i(z)| / (||f_i||_1 * max(1, ||z||_inf)^d_i)``."""
    z = np.asarray(z, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(z)))) if len(z) else 1.0
    worst = 0.0
    for p in system.polys:
        norm = p.norm1()
        if norm == 0:
            continue
        degree = max(0, p.total_degree())
        try:
            value = abs(p.evaluate(z))
        except ValueError:
            value = np.inf
        worst = max(worst, value / (norm * scale**degree))
    return float(worst)


def _normalize_blocks(z: np.ndarray, blocks: Sequence[range]) -> np.ndarray:
    z = np.array(z, dtype=complex)
    for block in blocks:
        part = z[list(block)]
        pivot = part[np.argmax(np.abs(part))]
        if pivot != 0:
            z[list(block)] = part / pivot
            z[block[0] + int(np.argmax(np.abs(part)))] = 1.0
    return z


def _cluster_diameter(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.max(np.abs(values[:, None] - values[None, :])))


def _schur_values(qrep: QuotientRep, seed: Seed, tolerances: Tolerances, diagnostics: Dict[str, object]):
    schur = simultaneous_schur(qrep.mult, seed=_schur_rng(seed), tol_commute=tolerances.tol_commute)
    tol = tolerances.tol_cluster * (1.0 + float(np.max(np.abs(np.diag(schur.tstar)))))
    ordered = cluster_reorder(schur.tstar, schur.U, tol, schur.mstar)
    triangular = [ordered.U @ m @ ordered.U.conj().T for m in qrep.mult]
    diagonals = np.array([np.diag(T) for T in triangular])
    star = np.diag(ordered.tstar)
    unitarity = float(np.linalg.norm(ordered.U.conj().T @ ordered.U - np.eye(len(star)), 2))
    diagnostics.update(
        {
            "schur_lower_mass": max(_lower_mass(T, m) for T, m in zip(triangular, qrep.mult)),
            "schur_unitarity": unitarity,
            "reordered": ordered.reordered,
        }
    )
    return diagonals, star, ordered.clusters


def _eig_values(qrep: QuotientRep, seed: Seed, tolerances: Tolerances, diagnostics: Dict[str, object]):
    commutator = max_commutator(qrep.mult)
    if commutator > tolerances.tol_commute:
        raise CommutatorViolation(
            f"Multiplication matrices do not commute: {commutator:.3g} > {tolerances.tol_commute:.3g}"
        )
    coefficients = random_unit_coefficients(_schur_rng(seed), len(qrep.mult))
    mstar = sum(c * m for c, m in zip(coefficients, qrep.mult))
    star, P = scipy.linalg.eig(mstar)
    lu = scipy.linalg.lu_factor(P)
    diagonals = np.array([np.diag(scipy.linalg.lu_solve(lu, m @ P)) for m in qrep.mult])
    diagnostics["eigenvector_cond"] = float(np.linalg.cond(P))
    tol = tolerances.tol_cluster * (1.0 + float(np.max(np.abs(star))))
    return diagonals, star, tuple(tuple(c) for c in cluster_values(star, tol))


def extract_roots(
    qrep: QuotientRep,
    seed: Seed = None,
    method: str = "schur",
    tolerances: Optional[Tolerances] = None,
) -> RootSet:
    """Read the roots off the multiplication matrices of ``qrep``.

    Args:
        qrep (QuotientRep): Output of one of the quotient builders.
        seed: Seed for the random combination ``m*``.
        method (str): ``schur`` for the shared, reordered Schur form or ``eig``
            for the eigenvectors of ``m*`` (simple roots only).
        tolerances (Tolerances): Commutator and clustering thresholds.
    """
    tolerances = tolerances or Tolerances()
    timings = dict(qrep.timings)
    diagnostics = dict(qrep.diagnostics)
    with stopwatch(timings, "t_S"):
        if method == "schur":
            diagonals, star, clusters = _schur_values(qrep, seed, tolerances, diagnostics)
        elif method == "eig":
            diagonals, star, clusters = _eig_values(qrep, seed, tolerances, diagnostics)
        else:
            raise ValueError(f"Unknown extraction method '{method}', use 'schur' or 'eig'")

        system = qrep.system
        blocks = tuple(system.blocks.block_ranges()) if qrep.mode.is_homogeneous else None
        roots = []
        for cluster in clusters:
            positions = list(cluster)
            z = diagonals[:, positions].mean(axis=1)
            if qrep.transform is not None:
                z = qrep.transform @ z
            if blocks is not None:
                z = _normalize_blocks(z, blocks)
            roots.append(
                Root(
                    coordinates=z,
                    multiplicity=len(positions),
                    residual=residual(system, z),
                    blocks=blocks,
                    cluster_diameter=_cluster_diameter(star[positions]),
                )
            )
    timings["t_alg"] = sum(timings.get(key, 0.0) for key in ("t_M", "t_N", "t_B", "t_S"))

    worst = max((r.residual for r in roots), default=0.0)
    if qrep.mode == SolveMode.TORIC and worst > TORUS_RESIDUAL_TOL:
        log.warning(f"[yellow][!] Largest residual {worst:.3g}: some roots may lie outside the torus")
    diagnostics.update(
        {
            "method": method,
            "clusters": len(roots),
            "max_residual": worst,
            "real_roots": sum(r.is_real() for r in roots),
            "roots_at_infinity": sum(r.at_infinity for r in roots),
        }
    )
    multiple = sum(r.multiplicity > 1 for r in roots)
    log.info(
        f"Found {len(roots)} distinct root{plural_s(roots)} ({qrep.delta} with multiplicity"
        + (f", {multiple} multiple" if multiple else "")
        + f"), largest residual {worst:.3g}"
    )
    return RootSet(
        roots=roots,
        mode=qrep.mode,
        seed=seed,
        delta=qrep.delta,
        variables=tuple(system.variables),
        timings=timings,
        diagnostics=diagnostics,
    )
