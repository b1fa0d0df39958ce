"""
Reading and writing polynomial systems in the line based input format::

    # comment
    vars: x1 x2
    mode: affine
    f: 7 + 3*x1 - 6*x2 - 4*x1^2 + 2*x1*x2 + 5*x2^2
    f: -1 - 3*x1 + 14*x2 - 2*x1^2 + 2*x1*x2 - 3*x2^2

Optional headers are ``blocks: n1,n2,...`` and ``mode: affine|toric|projective|multihom``.
Coefficients may be complex, written ``(1.5-2i)``; exponents may be negative
in toric mode.
"""

import logging
import re
from pathlib import Path
from typing import Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

from macsolve.poly import Polynomial, PolynomialSystem, SolveMode, VariableBlocks
from macsolve.utils import MacsolveError

log = logging.getLogger(__name__)

HEADER_KEYS = ("vars", "blocks", "mode", "f")
# Degree limit for a single power, far beyond any Macaulay matrix that fits in memory
MAX_EXPONENT = 1000

TOKEN_RE = re.compile(
    r"""
    (?P<space>\s+)
    |(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<imag>i(?![A-Za-z0-9_]))?
    |(?P<name>[A-Za-z_][A-Za-z0-9_]*)
    |(?P<op>\*\*|[-+*^()])
    """,
    re.VERBOSE,
)


class SystemParseError(MacsolveError):
    """The input text does not describe a polynomial system."""

    exit_code = 2
    code = "parse_error"

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(f"{location}{message}")


class Token(NamedTuple):
    kind: str
    text: str
    column: int


def tokenize(expression: str, line: int = 1, offset: int = 0) -> List[Token]:
    """Split an expression into tokens; ``offset`` is the column the expression starts at."""
    tokens = []
    position = 0
    while position < len(expression):
        match = TOKEN_RE.match(expression, position)
        if match is None:
            raise SystemParseError(f"unexpected character '{expression[position]}'", line, offset + position + 1)
        column = offset + position + 1
        if match.group("number") is not None:
            kind = "imag" if match.group("imag") else "number"
            tokens.append(Token(kind, match.group("number"), column))
        elif match.group("name") is not None:
            tokens.append(Token("name", match.group("name"), column))
        elif match.group("op") is not None:
            op = match.group("op")
            tokens.append(Token("op", "^" if op == "**" else op, column))
        position = match.end()
    tokens.append(Token("end", "", offset + len(expression) + 1))
    return tokens


class _ExpressionParser:
    """Recursive descent over ``expr := term (+|- term)*``, ``term := factor ([*] factor)*``,
    ``factor := (+|-) factor | atom [^ [-] int]``, ``atom := number | name | ( expr )``.

    Juxtaposition (``2x1``, ``3(x+1)``) multiplies.
    """

    def __init__(self, tokens: Sequence[Token], variables: Sequence[str], line: int):
        self.tokens = tokens
        self.position = 0
        self.variables = {name: i for i, name in enumerate(variables)}
        self.nvars = len(variables)
        self.line = line

    @property
    def current(self) -> Token:
        return self.tokens[self.position]

    def error(self, message: str, token: Optional[Token] = None) -> SystemParseError:
        token = token or self.current
        return SystemParseError(message, self.line, token.column)

    def advance(self) -> Token:
        token = self.current
        self.position += 1
        return token

    def expect(self, text: str) -> Token:
        if self.current.kind != "op" or self.current.text != text:
            found = self.current.text or "end of line"
            raise self.error(f"expected '{text}' but found '{found}'")
        return self.advance()

    def parse(self) -> Polynomial:
        result = self.expression()
        if self.current.kind != "end":
            raise self.error(f"unexpected '{self.current.text}'")
        return result

    def expression(self) -> Polynomial:
        result = self.term()
        while self.current.kind == "op" and self.current.text in "+-":
            op = self.advance().text
            right = self.term()
            result = result + right if op == "+" else result - right
        return result

    def _starts_atom(self) -> bool:
        token = self.current
        return token.kind in ("number", "imag", "name") or (token.kind == "op" and token.text == "(")

    def term(self) -> Polynomial:
        result = self.factor()
        while True:
            if self.current.kind == "op" and self.current.text == "*":
                self.advance()
            elif not self._starts_atom():
                return result
            result = result * self.factor()

    def factor(self) -> Polynomial:
        if self.current.kind == "op" and self.current.text in "+-":
            sign = self.advance().text
            operand = self.factor()
            return -operand if sign == "-" else operand
        base = self.atom()
        if self.current.kind == "op" and self.current.text == "^":
            self.advance()
            negative = False
            if self.current.kind == "op" and self.current.text in "+-":
                negative = self.advance().text == "-"
            token = self.current
            if token.kind != "number" or not token.text.isdigit():
                raise self.error("exponents must be integers")
            self.advance()
            return self._power(base, -int(token.text) if negative else int(token.text), token)
        return base

    def _power(self, base: Polynomial, power: int, token: Token) -> Polynomial:
        degree = max((sum(abs(e) for e in exponent) for exponent, _ in base.terms), default=0) * abs(power)
        if degree > MAX_EXPONENT:
            raise self.error(f"power of degree {degree} exceeds the limit of {MAX_EXPONENT}", token)
        if power >= 0:
            return base**power
        if len(base) != 1:
            raise self.error("only monomials can be raised to negative powers", token)
        exponent, coefficient = base.terms[0]
        return Polynomial.monomial(tuple(e * power for e in exponent), coefficient**power)

    def atom(self) -> Polynomial:
        token = self.current
        if token.kind == "number":
            self.advance()
            return Polynomial.constant(float(token.text), self.nvars)
        if token.kind == "imag":
            self.advance()
            return Polynomial.constant(complex(0.0, float(token.text)), self.nvars)
        if token.kind == "name":
            self.advance()
            if token.text in self.variables:
                return Polynomial.variable(self.variables[token.text], self.nvars)
            if token.text == "i":
                return Polynomial.constant(1j, self.nvars)
            raise self.error(f"unknown variable '{token.text}'", token)
        if token.kind == "op" and token.text == "(":
            self.advance()
            inner = self.expression()
            self.expect(")")
            return inner
        raise self.error(f"unexpected '{token.text or 'end of line'}'")


def parse_polynomial(expression: str, variables: Sequence[str], line: int = 1, offset: int = 0) -> Polynomial:
    """Parse one polynomial expression over the given variable names."""
    if not variables:
        raise SystemParseError("no variables declared", line)
    return _ExpressionParser(tokenize(expression, line, offset), variables, line).parse()


def _lines(text: str) -> Iterator[Tuple[int, str, str, int]]:
    """Yield ``(line number, key, value, value column)`` for every non empty line."""
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        if not content.strip():
            continue
        key, sep, value = content.partition(":")
        if not sep:
            raise SystemParseError("expected 'key: value'", number, 1)
        key = key.strip().lower()
        if key not in HEADER_KEYS:
            raise SystemParseError(f"unknown key '{key}', expected one of {', '.join(HEADER_KEYS)}", number, 1)
        yield number, key, value, content.index(":") + 1


def _parse_blocks(value: str, line: int) -> Tuple[int, ...]:
    try:
        sizes = tuple(int(s) for s in re.split(r"[,\s]+", value.strip()) if s)
    except ValueError:
        raise SystemParseError(f"block sizes must be integers, got '{value.strip()}'", line) from None
    if not sizes or any(s < 1 for s in sizes):
        raise SystemParseError(f"block sizes must be positive, got '{value.strip()}'", line)
    return sizes


def _parse_mode(value: str, line: Optional[int]) -> SolveMode:
    try:
        return SolveMode(value.strip().lower())
    except ValueError:
        choices = ", ".join(m.value for m in SolveMode)
        raise SystemParseError(f"unknown mode '{value.strip()}', expected one of {choices}", line) from None


def parse_system(
    text: str,
    mode: Optional[Union[str, SolveMode]] = None,
    blocks: Optional[Sequence[int]] = None,
) -> PolynomialSystem:
    """Parse a system file.

    Affine input in projective or multihomogeneous mode (as many variables as
    affine unknowns) is homogenized with one new coordinate per block.

    Args:
        text (str): File contents.
        mode: Overrides the ``mode:`` header.
        blocks (list): Overrides the ``blocks:`` header.
    """
    variables: Optional[List[str]] = None
    header_mode: Optional[SolveMode] = None
    header_blocks: Optional[Tuple[int, ...]] = None
    blocks_line = None
    polys: List[Polynomial] = []
    for line, key, value, column in _lines(text):
        if key == "vars":
            if variables is not None:
                raise SystemParseError("variables declared twice", line)
            variables = [v for v in re.split(r"[,\s]+", value.strip()) if v]
            bad = [v for v in variables if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", v)]
            if not variables or bad:
                raise SystemParseError(f"invalid variable names {bad or value.strip()!r}", line)
            if len(set(variables)) != len(variables):
                raise SystemParseError("variable names must be distinct", line)
        elif key == "blocks":
            header_blocks = _parse_blocks(value, line)
            blocks_line = line
        elif key == "mode":
            header_mode = _parse_mode(value, line)
        else:
            if variables is None:
                raise SystemParseError("'vars:' must come before the first equation", line)
            p = parse_polynomial(value, variables, line, column)
            if p.is_zero:
                raise SystemParseError("zero polynomial", line, column + 1)
            polys.append(p)
    if variables is None:
        raise SystemParseError("no 'vars:' line found")
    if not polys:
        raise SystemParseError("no equations found")

    mode = SolveMode(mode) if mode is not None else header_mode
    sizes = tuple(blocks) if blocks is not None else header_blocks
    if mode is None:
        mode = SolveMode.MULTIHOM if sizes and len(sizes) > 1 else SolveMode.AFFINE
    system = _assemble(polys, variables, mode, sizes, blocks_line)
    log.debug(f"Parsed {len(polys)} equations in {system.nvars} variables ({system.mode})")
    return system


def _assemble(
    polys: List[Polynomial],
    variables: List[str],
    mode: SolveMode,
    sizes: Optional[Tuple[int, ...]],
    blocks_line: Optional[int],
) -> PolynomialSystem:
    nvars = len(variables)
    if mode == SolveMode.MULTIHOM:
        if sizes is None:
            raise SystemParseError("multihomogeneous mode needs a 'blocks:' line or --blocks")
        if sum(sizes) == nvars:
            affine = PolynomialSystem(polys, variables, SolveMode.AFFINE, VariableBlocks(sizes))
            return affine.homogenized(SolveMode.MULTIHOM, affine.blocks)
        if sum(sizes) + len(sizes) == nvars:
            return PolynomialSystem(polys, variables, mode, VariableBlocks(sizes, True))
        raise SystemParseError(
            f"blocks {','.join(map(str, sizes))} fit neither {nvars} affine nor {nvars} projective coordinates",
            blocks_line,
        )
    if sizes is not None and len(sizes) > 1:
        raise SystemParseError(f"{mode} mode takes a single block, got {len(sizes)}", blocks_line)
    if mode == SolveMode.PROJECTIVE:
        if nvars == len(polys):
            return PolynomialSystem(polys, variables, SolveMode.AFFINE).homogenized(SolveMode.PROJECTIVE)
        if nvars < 2:
            raise SystemParseError("projective coordinates need at least two variables")
        return PolynomialSystem(polys, variables, mode)
    if sizes is not None and sizes[0] != nvars:
        raise SystemParseError(f"block of size {sizes[0]} does not match {nvars} variables", blocks_line)
    return PolynomialSystem(polys, variables, mode)


def read_system(path: Union[str, Path], **kwargs) -> PolynomialSystem:
    """Parse the system file at ``path``."""
    path = Path(path)
    log.debug(f"Reading system from {path}")
    return parse_system(path.read_text(), **kwargs)


def format_system(system: PolynomialSystem) -> str:
    """Serialize a system so that :func:`parse_system` reads it back unchanged."""
    lines = [f"vars: {' '.join(system.variables)}"]
    if system.mode == SolveMode.MULTIHOM:
        lines.append(f"blocks: {','.join(str(s) for s in system.blocks.sizes)}")
    lines.append(f"mode: {system.mode}")
    lines.extend(f"f: {p.to_string(system.variables)}" for p in system.polys)
    return "\n".join(lines) + "\n"
