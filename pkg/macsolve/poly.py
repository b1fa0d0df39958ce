"""
Multivariate (Laurent) polynomials with complex coefficients, polynomial systems
and the (multi)homogenization maps between affine and projective coordinates.
"""

import dataclasses
import enum
import functools
import logging
import numbers
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from macsolve.utils import MacsolveError

log = logging.getLogger(__name__)

Exponent = Tuple[int, ...]
Seed = Union[int, np.random.Generator, None]


class ZeroPolynomialError(MacsolveError):
    """The degree (or Newton polytope) of the zero polynomial was requested."""

    exit_code = 2
    code = "zero_polynomial"


class DegreeError(MacsolveError):
    """A polynomial does not fit in the requested degree."""

    exit_code = 2
    code = "degree"


class HomogeneityError(MacsolveError):
    """A polynomial is not (multi)homogeneous where it has to be."""

    exit_code = 2
    code = "not_homogeneous"


class NonSquareSystemError(MacsolveError):
    """The number of equations differs from the number of affine unknowns."""

    exit_code = 2
    code = "non_square"


class DegenerateSystemError(MacsolveError):
    """The system contains zero or repeated equations."""

    exit_code = 2
    code = "degenerate_system"


class SingularTransformError(MacsolveError):
    """A coordinate change matrix is not invertible."""

    exit_code = 2
    code = "singular_transform"


class SolveMode(str, enum.Enum):
    """The four solver pipelines."""

    AFFINE = "affine"
    TORIC = "toric"
    PROJECTIVE = "projective"
    MULTIHOM = "multihom"

    def __str__(self):
        return self.value

    @property
    def is_homogeneous(self) -> bool:
        return self in (SolveMode.PROJECTIVE, SolveMode.MULTIHOM)


def graded_lex_key(exponent: Sequence[int]) -> Tuple[int, Tuple[int, ...]]:
    """Sort key of the graded lexicographic term order.

    Lower total degree first; within a degree, higher powers of the first
    variables first, so ``1, x1, x2, x1^2, x1*x2, x2^2, ...``.
    """
    return sum(exponent), tuple(-e for e in exponent)


@dataclass(frozen=True)
class VariableBlocks:
    """Block structure of the variables of a system.

    Args:
        sizes (tuple): The affine block sizes ``(n_1, ..., n_k)``.
        homogeneous (bool): If True every block carries ``n_i + 1`` projective
            coordinates ``x_i0, ..., x_in_i``, the homogenizing one first.
    """

    sizes: Tuple[int, ...]
    homogeneous: bool = False

    def __post_init__(self):
        if not self.sizes or any(size < 1 for size in self.sizes):
            raise ValueError(f"Block sizes must be positive integers, got {self.sizes}")

    @classmethod
    def single(cls, n: int, homogeneous: bool = False) -> "VariableBlocks":
        return cls((n,), homogeneous)

    @property
    def k(self) -> int:
        return len(self.sizes)

    @property
    def n(self) -> int:
        """Number of affine unknowns."""
        return sum(self.sizes)

    @property
    def nvars(self) -> int:
        return self.n + (self.k if self.homogeneous else 0)

    def block_ranges(self) -> List[range]:
        """Variable positions of every block."""
        ranges = []
        offset = 0
        for size in self.sizes:
            width = size + 1 if self.homogeneous else size
            ranges.append(range(offset, offset + width))
            offset += width
        return ranges

    def homogenizing_indices(self) -> List[int]:
        """Positions of the coordinates ``x_i0``."""
        if not self.homogeneous:
            raise ValueError("Affine blocks have no homogenizing coordinates")
        return [block[0] for block in self.block_ranges()]

    def as_homogeneous(self) -> "VariableBlocks":
        return VariableBlocks(self.sizes, True)

    def as_affine(self) -> "VariableBlocks":
        return VariableBlocks(self.sizes, False)


class Polynomial:
    """A multivariate Laurent polynomial with complex coefficients.

    Terms are kept sorted in graded lexicographic order with zero coefficients
    dropped, so equal polynomials always serialize identically. Instances are
    treated as immutable.

    Args:
        terms: A mapping or an iterable of ``(exponent, coefficient)`` pairs.
            Repeated exponents are added together.
        nvars (int): The number of variables.
    """

    def __init__(self, terms: Union[Mapping[Exponent, complex], Iterable[Tuple[Exponent, complex]]], nvars: int):
        items = terms.items() if isinstance(terms, Mapping) else terms
        merged: Dict[Exponent, complex] = {}
        for exponent, coefficient in items:
            exponent = tuple(int(e) for e in exponent)
            if len(exponent) != nvars:
                raise ValueError(f"Exponent {exponent} does not have {nvars} entries")
            merged[exponent] = merged.get(exponent, 0j) + complex(coefficient)
        self.nvars = nvars
        self._terms: Tuple[Tuple[Exponent, complex], ...] = tuple(
            sorted(((e, c) for e, c in merged.items() if c != 0), key=lambda term: graded_lex_key(term[0]))
        )

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls({}, nvars)

    @classmethod
    def constant(cls, value: complex, nvars: int) -> "Polynomial":
        return cls({(0,) * nvars: value}, nvars)

    @classmethod
    def monomial(cls, exponent: Sequence[int], coefficient: complex = 1.0) -> "Polynomial":
        return cls({tuple(exponent): coefficient}, len(exponent))

    @classmethod
    def variable(cls, index: int, nvars: int) -> "Polynomial":
        exponent = [0] * nvars
        exponent[index] = 1
        return cls.monomial(exponent)

    @classmethod
    def linear_form(cls, coefficients: Sequence[complex]) -> "Polynomial":
        """Build ``sum_i c_i x_i`` from its coefficient vector."""
        nvars = len(coefficients)
        return cls(
            ((tuple(int(i == j) for j in range(nvars)), c) for i, c in enumerate(coefficients)),
            nvars,
        )

    @property
    def terms(self) -> Tuple[Tuple[Exponent, complex], ...]:
        return self._terms

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @functools.cached_property
    def exponent_array(self) -> np.ndarray:
        return np.array([e for e, _ in self._terms], dtype=int).reshape(len(self._terms), self.nvars)

    @functools.cached_property
    def coefficient_array(self) -> np.ndarray:
        return np.array([c for _, c in self._terms], dtype=complex)

    def coefficient(self, exponent: Sequence[int]) -> complex:
        exponent = tuple(exponent)
        for e, c in self._terms:
            if e == exponent:
                return c
        return 0j

    def support(self) -> set:
        return {e for e, _ in self._terms}

    def total_degree(self) -> int:
        if self.is_zero:
            raise ZeroPolynomialError("The degree of the zero polynomial is undefined")
        return max(sum(e) for e, _ in self._terms)

    def multidegree(self, blocks: VariableBlocks) -> Tuple[int, ...]:
        if self.is_zero:
            raise ZeroPolynomialError("The multidegree of the zero polynomial is undefined")
        if blocks.nvars != self.nvars:
            raise ValueError(f"Blocks describe {blocks.nvars} variables, polynomial has {self.nvars}")
        return tuple(max(sum(e[j] for j in block) for e, _ in self._terms) for block in blocks.block_ranges())

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e, _ in self._terms}) <= 1

    def is_multihomogeneous(self, blocks: VariableBlocks) -> bool:
        ranges = blocks.block_ranges()
        return len({tuple(sum(e[j] for j in block) for block in ranges) for e, _ in self._terms}) <= 1

    def has_negative_exponents(self) -> bool:
        return any(x < 0 for e, _ in self._terms for x in e)

    def norm1(self) -> float:
        return float(np.sum(np.abs(self.coefficient_array)))

    def evaluate(self, z: Sequence[complex]) -> complex:
        """Evaluate at the point ``z``, summing the terms pairwise in term order."""
        z = np.asarray(z, dtype=complex)
        if z.shape != (self.nvars,):
            raise ValueError(f"Point has shape {z.shape}, expected ({self.nvars},)")
        if self.is_zero:
            return 0j
        exps = self.exponent_array
        negative = (exps < 0).any(axis=0)
        if (negative & (z == 0)).any():
            raise ValueError("Zero coordinate raised to a negative power")
        powers = np.ones(exps.shape, dtype=complex)
        mask = exps != 0
        powers[mask] = np.broadcast_to(z, exps.shape)[mask] ** exps[mask]
        return complex(np.sum(self.coefficient_array * np.prod(powers, axis=1)))

    def shifted(self, exponent: Sequence[int]) -> "Polynomial":
        """Multiply by the monomial ``x^exponent``."""
        shift = tuple(exponent)
        return Polynomial(((tuple(a + b for a, b in zip(e, shift)), c) for e, c in self._terms), self.nvars)

    def shift_to_nonnegative(self) -> Tuple["Polynomial", Exponent]:
        """Multiply by the smallest monomial that clears all negative exponents.

        Returns:
            The shifted polynomial and the exponent of the monomial used.
        """
        if self.is_zero:
            return self, (0,) * self.nvars
        lowest = self.exponent_array.min(axis=0)
        shift = tuple(int(max(0, -m)) for m in lowest)
        return self.shifted(shift), shift

    def substitute(self, images: Sequence["Polynomial"], nvars: Optional[int] = None) -> "Polynomial":
        """Replace every variable ``x_j`` by ``images[j]``.

        Only polynomials with nonnegative exponents can be substituted into.
        """
        if len(images) != self.nvars:
            raise ValueError(f"Need {self.nvars} images, got {len(images)}")
        if nvars is None:
            nvars = images[0].nvars if images else 0
        if self.has_negative_exponents():
            raise ValueError("Cannot substitute into a Laurent polynomial with negative exponents")
        powers: Dict[Tuple[int, int], Polynomial] = {}

        def power(j: int, e: int) -> Polynomial:
            if (j, e) not in powers:
                powers[(j, e)] = Polynomial.constant(1.0, nvars) if e == 0 else power(j, e - 1) * images[j]
            return powers[(j, e)]

        result: Dict[Exponent, complex] = {}
        for exponent, coefficient in self._terms:
            term = Polynomial.constant(coefficient, nvars)
            for j, e in enumerate(exponent):
                if e:
                    term = term * power(j, e)
            for e, c in term.terms:
                result[e] = result.get(e, 0j) + c
        return Polynomial(result, nvars)

    def to_string(self, names: Optional[Sequence[str]] = None) -> str:
        """Serialize in the input file syntax, e.g. ``7 + 3*x1 - 6*x2``."""
        if names is None:
            names = [f"x{i + 1}" for i in range(self.nvars)]
        if self.is_zero:
            return "0"
        pieces: List[str] = []
        for exponent, coefficient in self._terms:
            factors = []
            for name, e in zip(names, exponent):
                if e == 1:
                    factors.append(name)
                elif e != 0:
                    factors.append(f"{name}^{e}")
            negative = coefficient.imag == 0 and coefficient.real < 0
            magnitude = -coefficient if negative else coefficient
            coef_str = _format_coefficient(magnitude)
            if factors and coef_str == "1":
                body = "*".join(factors)
            else:
                body = "*".join([coef_str] + factors)
            if not pieces:
                pieces.append(f"-{body}" if negative else body)
            else:
                pieces.append(f" - {body}" if negative else f" + {body}")
        return "".join(pieces)

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms)

    def __eq__(self, other):
        if isinstance(other, numbers.Number):
            other = Polynomial.constant(other, self.nvars)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self):
        return hash((self.nvars, self._terms))

    def __repr__(self):
        return f"Polynomial({self.to_string()!r}, nvars={self.nvars})"

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError(f"Variable count mismatch: {self.nvars} and {other.nvars}")
            return other
        if isinstance(other, numbers.Number):
            return Polynomial.constant(complex(other), self.nvars)
        raise TypeError(f"Cannot combine a polynomial with {type(other).__name__}")

    def __add__(self, other):
        other = self._coerce(other)
        return Polynomial(list(self._terms) + list(other.terms), self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(((e, -c) for e, c in self._terms), self.nvars)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, numbers.Number):
            return Polynomial(((e, c * other) for e, c in self._terms), self.nvars)
        other = self._coerce(other)
        product: Dict[Exponent, complex] = {}
        for e1, c1 in self._terms:
            for e2, c2 in other.terms:
                e = tuple(a + b for a, b in zip(e1, e2))
                product[e] = product.get(e, 0j) + c1 * c2
        return Polynomial(product, self.nvars)

    __rmul__ = __mul__

    def __pow__(self, power: int):
        if not isinstance(power, numbers.Integral) or power < 0:
            raise ValueError("Polynomials can only be raised to nonnegative integer powers")
        result = Polynomial.constant(1.0, self.nvars)
        for _ in range(int(power)):
            result = result * self
        return result


def _format_coefficient(value: complex) -> str:
    """Shortest exact text for a coefficient: integers bare, complex numbers as ``(a+bi)``."""
    if value.imag == 0:
        real = value.real
        if real.is_integer() and abs(real) < 1e15:
            return str(int(real))
        return repr(real)
    real = repr(value.real) if not value.real.is_integer() else str(int(value.real))
    imag = abs(value.imag)
    imag_str = repr(imag) if not imag.is_integer() else str(int(imag))
    sign = "-" if value.imag < 0 else "+"
    return f"({real}{sign}{imag_str}i)"


def evaluate(p: Polynomial, z: Sequence[complex]) -> complex:
    return p.evaluate(z)


def total_degree(p: Polynomial) -> int:
    return p.total_degree()


def multidegree(p: Polynomial, blocks: VariableBlocks) -> Tuple[int, ...]:
    return p.multidegree(blocks)


def support(p: Polynomial) -> set:
    return p.support()


def linear_form_coefficients(h: Polynomial) -> np.ndarray:
    """Coefficient vector of a linear form, raising if ``h`` is not one."""
    if h.is_zero or any(sum(e) != 1 or min(e) < 0 for e, _ in h.terms):
        raise ValueError(f"Not a linear form: {h.to_string()}")
    coefficients = np.zeros(h.nvars, dtype=complex)
    for exponent, coefficient in h.terms:
        coefficients[exponent.index(1)] = coefficient
    return coefficients


def homogenize(p: Polynomial, d: int, h: Polynomial) -> Polynomial:
    """Homogenize ``p`` to degree ``d`` with respect to the linear form ``h``.

    The result is ``h^d p(x_1/h, ..., x_n/h)`` in the variables ``x_0, ..., x_n``,
    which expands to ``sum_a c_a x^a h^(d - |a|)``.

    Args:
        p (Polynomial): Affine polynomial in ``n`` variables.
        d (int): Target degree, at least ``deg(p)``.
        h (Polynomial): Linear form in ``n + 1`` variables with ``h_0 != 0``.
    """
    hs = linear_form_coefficients(h)
    if h.nvars != p.nvars + 1:
        raise ValueError(f"Linear form must have {p.nvars + 1} variables, got {h.nvars}")
    if hs[0] == 0:
        raise ValueError("The homogenizing coefficient h_0 must be nonzero")
    if p.has_negative_exponents():
        raise DegreeError("Laurent polynomials cannot be homogenized")
    if not p.is_zero and p.total_degree() > d:
        raise DegreeError(f"Polynomial of degree {p.total_degree()} does not fit in degree {d}")
    h_powers = [Polynomial.constant(1.0, h.nvars)]
    for _ in range(d):
        h_powers.append(h_powers[-1] * h)
    result = Polynomial.zero(h.nvars)
    for exponent, coefficient in p.terms:
        result = result + h_powers[d - sum(exponent)].shifted((0,) + exponent) * coefficient
    return result


def dehomogenize(p: Polynomial, h: Polynomial) -> Polynomial:
    """Inverse of :func:`homogenize`: substitute ``x_0 = (1 - sum h_i y_i) / h_0``."""
    hs = linear_form_coefficients(h)
    if h.nvars != p.nvars:
        raise ValueError(f"Linear form must have {p.nvars} variables, got {h.nvars}")
    if hs[0] == 0:
        raise ValueError("The homogenizing coefficient h_0 must be nonzero")
    if not p.is_homogeneous():
        raise HomogeneityError(f"Cannot dehomogenize the inhomogeneous polynomial {p.to_string()}")
    n = p.nvars - 1
    ys = [Polynomial.variable(i, n) for i in range(n)]
    x0 = (Polynomial.constant(1.0, n) - sum((ys[i] * hs[i + 1] for i in range(n)), Polynomial.zero(n))) * (1 / hs[0])
    return p.substitute([x0] + ys, n)


def _check_block_forms(hs: Sequence[Polynomial], blocks: VariableBlocks) -> List[np.ndarray]:
    """Validate that ``hs[i]`` is a linear form in the coordinates of block ``i`` only."""
    if len(hs) != blocks.k:
        raise ValueError(f"Need one linear form per block ({blocks.k}), got {len(hs)}")
    ranges = blocks.as_homogeneous().block_ranges()
    coefficient_blocks = []
    for i, (h, block) in enumerate(zip(hs, ranges)):
        coefficients = linear_form_coefficients(h)
        outside = np.delete(coefficients, list(block))
        if np.any(outside != 0):
            raise ValueError(f"Linear form {i + 1} involves coordinates outside its block")
        if coefficients[block[0]] == 0:
            raise ValueError(f"Linear form {i + 1} has a zero homogenizing coefficient")
        coefficient_blocks.append(coefficients[block[0] : block[-1] + 1])
    return coefficient_blocks


def multihom_homogenize(
    p: Polynomial, rho: Sequence[int], hs: Sequence[Polynomial], blocks: VariableBlocks
) -> Polynomial:
    """Blockwise homogenization ``h_1^rho_1 ... h_k^rho_k p(x_1./h_1, ..., x_k./h_k)``.

    Args:
        p (Polynomial): Affine polynomial in ``n_1 + ... + n_k`` variables.
        rho (tuple): Target multidegree.
        hs (list): Linear forms, ``hs[i]`` in the coordinates of block ``i``.
        blocks (VariableBlocks): Block sizes ``(n_1, ..., n_k)``.
    """
    affine = blocks.as_affine()
    homogeneous = blocks.as_homogeneous()
    if p.nvars != affine.nvars:
        raise ValueError(f"Polynomial has {p.nvars} variables, blocks describe {affine.nvars}")
    if len(rho) != blocks.k:
        raise ValueError(f"Multidegree {tuple(rho)} does not match {blocks.k} blocks")
    _check_block_forms(hs, blocks)
    if p.has_negative_exponents():
        raise DegreeError("Laurent polynomials cannot be homogenized")
    if not p.is_zero:
        degree = p.multidegree(affine)
        if any(a > b for a, b in zip(degree, rho)):
            raise DegreeError(f"Polynomial of multidegree {degree} does not fit in multidegree {tuple(rho)}")
    nvars = homogeneous.nvars
    h_powers = []
    for h, r in zip(hs, rho):
        powers = [Polynomial.constant(1.0, nvars)]
        for _ in range(r):
            powers.append(powers[-1] * h)
        h_powers.append(powers)
    affine_ranges = affine.block_ranges()
    homogeneous_ranges = homogeneous.block_ranges()
    result = Polynomial.zero(nvars)
    for exponent, coefficient in p.terms:
        lifted = [0] * nvars
        factor = Polynomial.constant(coefficient, nvars)
        for i, (a_block, h_block) in enumerate(zip(affine_ranges, homogeneous_ranges)):
            block_exponent = [exponent[j] for j in a_block]
            for offset, e in enumerate(block_exponent):
                lifted[h_block[0] + 1 + offset] = e
            factor = factor * h_powers[i][rho[i] - sum(block_exponent)]
        result = result + factor.shifted(lifted)
    return result


def multihom_dehomogenize(p: Polynomial, hs: Sequence[Polynomial], blocks: VariableBlocks) -> Polynomial:
    """Inverse of :func:`multihom_homogenize`: ``x_i0 = (1 - sum_j h_ij y_ij) / h_i0`` in every block."""
    homogeneous = blocks.as_homogeneous()
    if p.nvars != homogeneous.nvars:
        raise ValueError(f"Polynomial has {p.nvars} variables, blocks describe {homogeneous.nvars}")
    if not p.is_multihomogeneous(homogeneous):
        raise HomogeneityError(f"Cannot dehomogenize the non multihomogeneous polynomial {p.to_string()}")
    coefficient_blocks = _check_block_forms(hs, blocks)
    n = blocks.n
    images: List[Polynomial] = []
    offset = 0
    for size, coefficients in zip(blocks.sizes, coefficient_blocks):
        ys = [Polynomial.variable(offset + j, n) for j in range(size)]
        linear = sum((ys[j] * coefficients[j + 1] for j in range(size)), Polynomial.zero(n))
        images.append((Polynomial.constant(1.0, n) - linear) * (1 / coefficients[0]))
        images.extend(ys)
        offset += size
    return p.substitute(images, n)


def random_unit_coefficients(seed: Seed, size: int) -> np.ndarray:
    """Complex numbers drawn uniformly from the unit circle."""
    rng = np.random.default_rng(seed)
    return np.exp(2j * np.pi * rng.uniform(0.0, 1.0, size))


def random_linear_form(nvars: int, seed: Seed) -> Polynomial:
    """A linear form with unit-modulus complex coefficients, deterministic for a given seed."""
    if nvars < 1:
        raise ValueError("A linear form needs at least one variable")
    return Polynomial.linear_form(random_unit_coefficients(seed, nvars))


@dataclass(frozen=True)
class PolynomialSystem:
    """A system of polynomial equations over named variables.

    Args:
        polys (tuple): The equations.
        variables (tuple): Variable names, in term order.
        mode (SolveMode): The pipeline the system is meant for.
        blocks (VariableBlocks): Block structure. Defaults to a single affine
            block, or a single homogeneous block in projective mode.
    """

    polys: Tuple[Polynomial, ...]
    variables: Tuple[str, ...]
    mode: SolveMode = SolveMode.AFFINE
    blocks: Optional[VariableBlocks] = None

    def __post_init__(self):
        object.__setattr__(self, "polys", tuple(self.polys))
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "mode", SolveMode(self.mode))
        for p in self.polys:
            if p.nvars != len(self.variables):
                raise ValueError(f"Polynomial in {p.nvars} variables, system declares {len(self.variables)}")
        if self.blocks is None:
            if self.mode == SolveMode.MULTIHOM:
                raise ValueError("Multihomogeneous systems need a declared block structure")
            homogeneous = self.mode == SolveMode.PROJECTIVE
            size = len(self.variables) - 1 if homogeneous else len(self.variables)
            object.__setattr__(self, "blocks", VariableBlocks.single(max(size, 1), homogeneous))
        if self.blocks.nvars != len(self.variables):
            raise ValueError(
                f"Blocks {self.blocks.sizes} describe {self.blocks.nvars} variables, "
                f"system declares {len(self.variables)}"
            )

    @property
    def nvars(self) -> int:
        return len(self.variables)

    @property
    def n_affine(self) -> int:
        return self.blocks.n

    def is_square(self) -> bool:
        return len(self.polys) == self.n_affine

    def require_square(self) -> None:
        if not self.is_square():
            raise NonSquareSystemError(
                f"square system required: {len(self.polys)} equation{'s' * (len(self.polys) != 1)} "
                f"in {self.n_affine} unknowns"
            )

    def degrees(self) -> Tuple[int, ...]:
        return tuple(p.total_degree() for p in self.polys)

    def multidegrees(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(p.multidegree(self.blocks) for p in self.polys)

    def validate(self) -> None:
        """Reject inputs the pipelines cannot give a meaningful answer for."""
        for i, p in enumerate(self.polys):
            if p.is_zero:
                raise ZeroPolynomialError(f"Equation {i + 1} is the zero polynomial")
            if self.mode != SolveMode.TORIC and p.has_negative_exponents():
                raise DegreeError(f"Equation {i + 1} has negative exponents, only allowed in toric mode")
            if self.mode == SolveMode.PROJECTIVE and not p.is_homogeneous():
                raise HomogeneityError(f"Equation {i + 1} is not homogeneous")
            if self.mode == SolveMode.MULTIHOM and not p.is_multihomogeneous(self.blocks):
                raise HomogeneityError(f"Equation {i + 1} is not multihomogeneous for blocks {self.blocks.sizes}")
        seen: Dict[Polynomial, int] = {}
        for i, p in enumerate(self.polys):
            if p in seen:
                raise DegenerateSystemError(f"Equation {i + 1} repeats equation {seen[p] + 1}")
            seen[p] = i

    def with_polys(self, polys: Sequence[Polynomial]) -> "PolynomialSystem":
        return dataclasses.replace(self, polys=tuple(polys))

    def homogenized(self, mode: SolveMode, blocks: Optional[VariableBlocks] = None) -> "PolynomialSystem":
        """Lift an affine system to projective or multiprojective coordinates.

        Uses ``h = x_0`` (one homogenizing coordinate per block, named ``h0``,
        ``h1``, ...) and the (multi)degree of every equation.
        """
        mode = SolveMode(mode)
        if self.blocks.homogeneous:
            raise HomogeneityError("System is already in homogeneous coordinates")
        if mode == SolveMode.PROJECTIVE:
            blocks = VariableBlocks.single(self.nvars, True)
        elif mode == SolveMode.MULTIHOM:
            blocks = (blocks or self.blocks).as_homogeneous()
            if blocks.n != self.nvars:
                raise ValueError(f"Blocks {blocks.sizes} do not cover {self.nvars} variables")
        else:
            raise ValueError(f"Cannot homogenize for mode {mode}")
        affine = blocks.as_affine()
        names: List[str] = []
        affine_names = list(self.variables)
        for i, block in enumerate(affine.block_ranges()):
            label = "h0" if blocks.k == 1 else f"h{i + 1}"
            while label in self.variables or label in names:
                label = f"{label}_"
            names.append(label)
            names.extend(affine_names[j] for j in block)
        hs = [Polynomial.variable(j, blocks.nvars) for j in blocks.homogenizing_indices()]
        polys = []
        for p in self.polys:
            if p.is_zero:
                raise ZeroPolynomialError("Cannot homogenize the zero polynomial")
            polys.append(multihom_homogenize(p, p.multidegree(affine), hs, blocks))
        log.debug(f"Homogenized system into {mode} coordinates: {', '.join(names)}")
        return PolynomialSystem(tuple(polys), tuple(names), mode, blocks)


def coordinate_change(system: PolynomialSystem, transform: np.ndarray) -> PolynomialSystem:
    """Compose every equation with the linear substitution ``x -> T x``.

    If ``z`` solves the original system then ``T^-1 z`` solves the new one. In
    multihomogeneous mode ``T`` has to be block diagonal.
    """
    transform = np.asarray(transform, dtype=complex)
    nvars = system.nvars
    if transform.shape != (nvars, nvars):
        raise ValueError(f"Transform has shape {transform.shape}, expected ({nvars}, {nvars})")
    if np.linalg.matrix_rank(transform) < nvars:
        raise SingularTransformError("Coordinate change matrix is singular")
    if system.mode == SolveMode.MULTIHOM:
        mask = np.zeros((nvars, nvars), dtype=bool)
        for block in system.blocks.block_ranges():
            mask[block[0] : block[-1] + 1, block[0] : block[-1] + 1] = True
        if np.any(transform[~mask] != 0):
            raise SingularTransformError("Multihomogeneous coordinate changes must be block diagonal")
    images = [Polynomial.linear_form(row) for row in transform]
    return system.with_polys([p.substitute(images, nvars) for p in system.polys])
