"""
Lattice polytopes: Newton polytopes, Minkowski sums, lattice points, volumes,
mixed volumes and the root counts derived from them.

Hulls are found with Qhull but every facet inequality, vertex test and volume
is recomputed exactly in integer arithmetic, so lattice-point membership does
not depend on floating point noise.
"""

import concurrent.futures
import itertools
import logging
import math
from fractions import Fraction
from functools import reduce
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.spatial
import sympy

from macsolve.poly import (
    Polynomial,
    PolynomialSystem,
    Seed,
    SolveMode,
    ZeroPolynomialError,
    multihom_dehomogenize,
)
from macsolve.utils import MacsolveError

log = logging.getLogger(__name__)

# Inclusion-exclusion needs 2^n - 1 volumes, so mixed volumes are meant for small n
MAX_MIXED_VOLUME_DIM = 5
MEMBERSHIP_TOL = 1e-9
MIXED_VOLUME_TOL = 1e-6

HalfSpace = Tuple[Tuple[int, ...], int]


class MixedVolumeMismatch(MacsolveError):
    """Two independent mixed volume computations disagree."""

    exit_code = 1
    code = "internal_consistency"


class DimensionMismatch(MacsolveError):
    """Polytopes of the wrong number or ambient dimension were combined."""

    exit_code = 2
    code = "dimension_mismatch"


def _primitive(vector: Sequence) -> Tuple[int, ...]:
    """Scale a rational vector to the primitive integer vector with the same direction."""
    rationals = [sympy.Rational(x) for x in vector]
    denominator = int(sympy.ilcm(*(int(r.q) for r in rationals), 1))
    integers = [int(r * denominator) for r in rationals]
    divisor = reduce(math.gcd, (abs(x) for x in integers), 0) or 1
    return tuple(x // divisor for x in integers)


def _dot(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(int(x) * int(y) for x, y in zip(a, b))


class LatticePolytope:
    """The convex hull of a finite set of integer points.

    Only the vertices are kept, sorted lexicographically. The exact
    H-representation consists of ``equalities`` (``a.x == b``, describing the
    affine hull) and ``inequalities`` (``a.x <= b``, one per facet), all with
    primitive integer normals.

    Args:
        points: Integer points, at least one.
        ambient_dim (int): Checked against the points when given.
    """

    def __init__(self, points: Iterable[Sequence[int]], ambient_dim: Optional[int] = None):
        pts = [tuple(int(x) for x in p) for p in points]
        if not pts:
            raise ValueError("A lattice polytope needs at least one point")
        self.ambient_dim = len(pts[0]) if ambient_dim is None else ambient_dim
        if any(len(p) != self.ambient_dim for p in pts):
            raise ValueError(f"All points must have {self.ambient_dim} coordinates")
        self._points = np.unique(np.array(pts, dtype=np.int64), axis=0)
        self.dim = 0
        self.equalities: List[HalfSpace] = []
        self.inequalities: List[HalfSpace] = []
        self._boundary: List[np.ndarray] = []
        self.vertices: Tuple[Tuple[int, ...], ...] = ()
        self._compute_hull()

    def _compute_hull(self):
        pts = self._points
        n = self.ambient_dim
        base = pts[0]
        diffs = sympy.Matrix((pts[1:] - base).tolist()) if len(pts) > 1 else None
        self.dim = diffs.rank() if diffs is not None else 0

        # Affine hull: primitive normals orthogonal to every difference vector
        if self.dim == 0:
            normals = [tuple(int(i == j) for j in range(n)) for i in range(n)]
        else:
            normals = [_primitive(v) for v in diffs.nullspace()]
        self.equalities = sorted((a, _dot(a, base)) for a in normals)

        if self.dim == 0:
            self.vertices = (tuple(int(x) for x in base),)
            return

        # Coordinates on which the projection is injective on the affine hull
        chosen: List[int] = []
        for j in range(n):
            if diffs[:, chosen + [j]].rank() == len(chosen) + 1:
                chosen.append(j)
            if len(chosen) == self.dim:
                break
        projected = pts[:, chosen]

        if self.dim == 1:
            lo, hi = projected[:, 0].min(), projected[:, 0].max()
            ends = [pts[int(np.argmin(projected[:, 0]))], pts[int(np.argmax(projected[:, 0]))]]
            self.vertices = tuple(sorted(tuple(int(x) for x in v) for v in ends))
            self.inequalities = sorted([(self._lift((-1,), chosen), -int(lo)), (self._lift((1,), chosen), int(hi))])
            return

        hull = scipy.spatial.ConvexHull(projected.astype(float))
        centroid_scaled = projected.sum(axis=0)
        count = len(projected)
        facets = {}
        for simplex in hull.simplices:
            corner = projected[simplex[0]]
            edges = sympy.Matrix((projected[simplex[1:]] - corner).tolist())
            null = edges.nullspace()
            if len(null) != 1:
                # triangulated facets can contain zero-volume pieces
                continue
            a = _primitive(null[0])
            if _dot(a, centroid_scaled) - count * _dot(a, corner) > 0:
                a = tuple(-x for x in a)
            facets[a] = _dot(a, corner)
            self._boundary.append(pts[simplex])
        self.inequalities = sorted((self._lift(a, chosen), b) for a, b in facets.items())

        vertices = []
        for index in hull.vertices:
            p = projected[index]
            tight = [a for a, b in facets.items() if _dot(a, p) == b]
            if tight and sympy.Matrix(tight).rank() == self.dim:
                vertices.append(tuple(int(x) for x in pts[index]))
        self.vertices = tuple(sorted(vertices))

    def _lift(self, normal: Sequence[int], chosen: Sequence[int]) -> Tuple[int, ...]:
        lifted = [0] * self.ambient_dim
        for coordinate, value in zip(chosen, normal):
            lifted[coordinate] = int(value)
        return tuple(lifted)

    @property
    def is_full_dimensional(self) -> bool:
        return self.dim == self.ambient_dim

    def contains(self, point: Sequence[float], shift: Optional[Sequence[float]] = None, tol: float = MEMBERSHIP_TOL):
        """Membership of ``point`` in the polytope translated by ``shift``."""
        return bool(self._membership(np.atleast_2d(np.asarray(point, dtype=float)), shift, tol)[0])

    def _membership(self, points: np.ndarray, shift: Optional[Sequence[float]], tol: float) -> np.ndarray:
        shifted = points - (np.zeros(self.ambient_dim) if shift is None else np.asarray(shift, dtype=float))
        inside = np.ones(len(points), dtype=bool)
        if self.inequalities:
            a = np.array([h[0] for h in self.inequalities], dtype=float)
            b = np.array([h[1] for h in self.inequalities], dtype=float)
            inside &= np.all(shifted @ a.T <= b + tol, axis=1)
        if self.equalities:
            a = np.array([h[0] for h in self.equalities], dtype=float)
            b = np.array([h[1] for h in self.equalities], dtype=float)
            inside &= np.all(np.abs(shifted @ a.T - b) <= tol, axis=1)
        return inside

    def dilate(self, factor: int) -> "LatticePolytope":
        return LatticePolytope((tuple(factor * x for x in v) for v in self.vertices), self.ambient_dim)

    def __add__(self, other: "LatticePolytope") -> "LatticePolytope":
        return minkowski_sum(self, other)

    def __eq__(self, other):
        if not isinstance(other, LatticePolytope):
            return NotImplemented
        return self.vertices == other.vertices

    def __hash__(self):
        return hash(self.vertices)

    def __repr__(self):
        return f"LatticePolytope(vertices={list(self.vertices)})"


def standard_simplex(n: int) -> LatticePolytope:
    """The simplex with vertices ``0, e_1, ..., e_n``."""
    points = [(0,) * n] + [tuple(int(i == j) for j in range(n)) for i in range(n)]
    return LatticePolytope(points)


def newton_polytope(p: Polynomial) -> LatticePolytope:
    if p.is_zero:
        raise ZeroPolynomialError("The zero polynomial has no Newton polytope")
    return LatticePolytope(sorted(p.support()), p.nvars)


def minkowski_sum(p: LatticePolytope, q: LatticePolytope) -> LatticePolytope:
    if p.ambient_dim != q.ambient_dim:
        raise ValueError(f"Cannot add polytopes in dimensions {p.ambient_dim} and {q.ambient_dim}")
    return LatticePolytope(
        (tuple(a + b for a, b in zip(u, v)) for u in p.vertices for v in q.vertices),
        p.ambient_dim,
    )


def random_shift(n: int, seed: Seed, scale: float = 1e-3) -> np.ndarray:
    """A small generic shift ``scale * u`` with ``u`` drawn from ``(-1, 0)^n``."""
    rng = np.random.default_rng(seed)
    return scale * rng.uniform(-1.0, 0.0, n)


def lattice_points(
    polytope: LatticePolytope, shift: Optional[Sequence[float]] = None, tol: float = MEMBERSHIP_TOL
) -> List[Tuple[int, ...]]:
    """All integer points of ``polytope + shift``, sorted lexicographically."""
    n = polytope.ambient_dim
    offset = np.zeros(n) if shift is None else np.asarray(shift, dtype=float)
    verts = np.array(polytope.vertices, dtype=float)
    lower = np.floor(verts.min(axis=0) + offset - tol).astype(int)
    upper = np.ceil(verts.max(axis=0) + offset + tol).astype(int)
    grid = np.array(list(itertools.product(*(range(lo, hi + 1) for lo, hi in zip(lower, upper)))), dtype=float)
    if grid.size == 0:
        return []
    inside = polytope._membership(grid.reshape(-1, n), offset, tol)
    return [tuple(int(x) for x in p) for p in grid[inside]]


def volume(polytope: LatticePolytope) -> Fraction:
    """Exact Euclidean volume, zero for polytopes that are not full dimensional.

    The boundary triangulation is coned from the first vertex and the
    absolute simplex determinants are summed, divided by ``n!``.
    """
    if not polytope.is_full_dimensional:
        return Fraction(0)
    n = polytope.ambient_dim
    if n == 1:
        return Fraction(polytope.vertices[-1][0] - polytope.vertices[0][0])
    apex = np.array(polytope.vertices[0], dtype=np.int64)
    total = 0
    for simplex in polytope._boundary:
        total += abs(int(sympy.Matrix((simplex - apex).tolist()).det(method="bareiss")))
    return Fraction(total, math.factorial(n))


def _sum_volume(polytopes: Sequence[LatticePolytope], factors: Sequence[int]) -> Fraction:
    """Volume of ``sum_i factors[i] * polytopes[i]`` (terms with factor 0 dropped)."""
    terms = [p if f == 1 else p.dilate(f) for p, f in zip(polytopes, factors) if f]
    if not terms:
        return Fraction(0)
    return volume(reduce(minkowski_sum, terms))


def mixed_volume(
    polytopes: Sequence[LatticePolytope], cross_check: bool = True, workers: Optional[int] = None
) -> int:
    """Mixed volume, normalized so that ``MV(simplex, ..., simplex) = 1``.

    Computed by inclusion-exclusion over the subsets of the polytopes. With
    ``cross_check`` the value is recomputed as the mixed finite difference of
    ``Vol(sum lambda_i P_i)`` on the grid ``lambda in {1, 2}^n`` and the two
    results must agree.

    Args:
        polytopes (list): ``n`` polytopes in ``R^n``.
        cross_check (bool): Recompute with the independent method.
        workers (int): Evaluate the volumes on a thread pool of this size.
    """
    n = len(polytopes)
    if n == 0 or any(p.ambient_dim != n for p in polytopes):
        dims = [p.ambient_dim for p in polytopes]
        raise DimensionMismatch(f"Mixed volume needs n polytopes in R^n, got {n} in {dims}")
    if n > MAX_MIXED_VOLUME_DIM:
        log.warning(f"Mixed volume in dimension {n} needs {2**n - 1} volumes, this will be slow")

    subsets = [s for s in itertools.product((0, 1), repeat=n) if any(s)]
    grid = list(itertools.product((1, 2), repeat=n))
    jobs = [tuple(s) for s in subsets] + ([tuple(g) for g in grid] if cross_check else [])
    if workers:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            volumes = dict(zip(jobs, pool.map(lambda f: _sum_volume(polytopes, f), jobs)))
    else:
        volumes = {f: _sum_volume(polytopes, f) for f in jobs}

    by_subsets = sum(((-1) ** (n - sum(s)) * volumes[s] for s in subsets), Fraction(0))
    result = round(by_subsets)
    if abs(by_subsets - result) > MIXED_VOLUME_TOL:
        log.warning(f"[yellow][!] Mixed volume {float(by_subsets)} is not an integer, rounding to {result}")
    if cross_check:
        by_grid = sum(((-1) ** (n - (sum(g) - n)) * volumes[g] for g in grid), Fraction(0))
        if abs(by_grid - by_subsets) > MIXED_VOLUME_TOL:
            raise MixedVolumeMismatch(
                f"Mixed volume by inclusion-exclusion ({by_subsets}) and by interpolation ({by_grid}) disagree"
            )
    log.debug(f"Mixed volume of {n} polytopes: {result}")
    return int(result)


def _affine_polys(system: PolynomialSystem) -> List[Polynomial]:
    """The equations in affine coordinates (dehomogenized at ``x_i0`` if needed)."""
    if not system.blocks.homogeneous:
        return list(system.polys)
    blocks = system.blocks
    hs = [Polynomial.variable(j, blocks.nvars) for j in blocks.homogenizing_indices()]
    return [multihom_dehomogenize(p, hs, blocks) for p in system.polys]


def bkk_bound(system: PolynomialSystem, workers: Optional[int] = None) -> int:
    """Bernstein's bound on the number of roots in the torus: the mixed volume of the Newton polytopes."""
    system.require_square()
    polytopes = [newton_polytope(p) for p in _affine_polys(system)]
    return mixed_volume(polytopes, workers=workers)


def multihom_bezout(degrees: Sequence[Sequence[int]], sizes: Sequence[int]) -> int:
    """Root count of a generic multihomogeneous system.

    The coefficient of ``z_1^n_1 ... z_k^n_k`` in ``prod_i (d_i1 z_1 + ... + d_ik z_k)``.

    Args:
        degrees (list): One multidegree per equation.
        sizes (list): Block sizes ``(n_1, ..., n_k)``.
    """
    k = len(sizes)
    if len(degrees) != sum(sizes):
        raise ValueError(f"Need {sum(sizes)} multidegrees for blocks {tuple(sizes)}, got {len(degrees)}")
    if any(len(d) != k for d in degrees):
        raise ValueError(f"Every multidegree must have {k} entries")
    zetas = sympy.symbols(f"z1:{k + 1}")
    product = sympy.Integer(1)
    for d in degrees:
        product *= sum(int(a) * z for a, z in zip(d, zetas))
    monomial = sympy.Mul(*(z ** int(size) for z, size in zip(zetas, sizes)))
    return int(sympy.Poly(sympy.expand(product), *zetas).coeff_monomial(monomial))


def system_root_count(system: PolynomialSystem, mode=None) -> int:
    """The generic root count the pipeline for ``mode`` relies on."""
    mode = SolveMode(mode or system.mode)
    if mode == SolveMode.TORIC:
        return bkk_bound(system)
    if mode == SolveMode.MULTIHOM:
        return multihom_bezout(system.multidegrees(), system.blocks.sizes)
    return math.prod(system.degrees())
