"""
The solve pipeline from a parsed system to a written root file, and the
smaller commands built on the same pieces.
"""

import csv
import dataclasses
import io
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import jsonschema

from macsolve.macaulay import DEFAULT_MAX_MATRIX_BYTES, MacaulayMatrix, build_macaulay
from macsolve.poly import PolynomialSystem, SolveMode, VariableBlocks
from macsolve.polytope import bkk_bound, newton_polytope, volume
from macsolve.quotient import QuotientRep, RegularityReport, Tolerances, build_quotient, regularity_check_system
from macsolve.roots import RootSet, extract_roots
from macsolve.utils import MacsolveError, format_complex, load_solver_config

log = logging.getLogger(__name__)

SCHEMA_PATH = Path(__file__).parent / "schemas" / "rootset.schema.json"
OUTPUT_FORMATS = ("json", "csv")
EXTRACTION_METHODS = ("schur", "eig")


class ConfigError(MacsolveError):
    """Inconsistent solver settings."""

    exit_code = 2
    code = "config_error"


class OutputValidationError(MacsolveError):
    """The root document does not match the bundled schema."""

    exit_code = 1
    code = "invalid_output"


@dataclass
class SolveConfig:
    """Settings of one solver run.

    Defaults live here; a ``.macsolve.yml`` file overrides them and command
    line options override the file (see :meth:`from_sources`).
    """

    mode: Optional[SolveMode] = None
    seed: int = 0
    blocks: Optional[Tuple[int, ...]] = None
    tol_null: float = 1e-10
    tol_commute: float = 1e-8
    tol_cluster: float = 1e-6
    gap_min: float = 1e3
    cond_bound: float = 1e12
    shift_scale: float = 1e-3
    max_matrix_bytes: int = DEFAULT_MAX_MATRIX_BYTES
    method: str = "schur"
    output: str = "json"
    emit_residuals: bool = True
    emit_timings: bool = True
    dump_matrix: Optional[Path] = None

    def __post_init__(self):
        if self.mode is not None:
            self.mode = SolveMode(self.mode)
        if self.blocks is not None:
            self.blocks = tuple(int(b) for b in self.blocks)
        if self.dump_matrix is not None:
            self.dump_matrix = Path(self.dump_matrix)

    @classmethod
    def from_sources(cls, file_config: Optional[Dict[str, Any]] = None, **options) -> "SolveConfig":
        """Merge the config file values and the command line options (None means unset)."""
        names = {f.name for f in dataclasses.fields(cls)}
        values: Dict[str, Any] = {}
        for key, value in (file_config or {}).items():
            key = key.replace("-", "_")
            if key not in names:
                log.warning(f"[yellow][!] Unknown setting '{key}' in the config file is ignored")
                continue
            values[key] = value
        values.update({k: v for k, v in options.items() if v is not None})
        try:
            return cls(**values)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid solver settings: {e}") from None

    @classmethod
    def load(cls, directory: Union[str, Path] = ".", **options) -> "SolveConfig":
        _, file_config = load_solver_config(directory)
        return cls.from_sources(file_config, **options)

    def tolerances(self) -> Tolerances:
        return Tolerances(
            tol_null=self.tol_null,
            tol_commute=self.tol_commute,
            gap_min=self.gap_min,
            cond_bound=self.cond_bound,
            tol_cluster=self.tol_cluster,
        )

    def validate(self, system: Optional[PolynomialSystem] = None) -> None:
        try:
            self.tolerances().validate()
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"Seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.shift_scale <= 0:
            raise ConfigError("shift_scale must be positive")
        if self.output not in OUTPUT_FORMATS:
            raise ConfigError(f"Unknown output format '{self.output}', use one of {', '.join(OUTPUT_FORMATS)}")
        if self.method not in EXTRACTION_METHODS:
            raise ConfigError(f"Unknown method '{self.method}', use one of {', '.join(EXTRACTION_METHODS)}")
        if self.blocks is not None and self.mode not in (None, SolveMode.MULTIHOM) and len(self.blocks) > 1:
            raise ConfigError(f"{self.mode} mode takes a single block, got {len(self.blocks)}")
        if system is not None and self.blocks is not None and system.mode == SolveMode.MULTIHOM:
            if tuple(system.blocks.sizes) != self.blocks:
                raise ConfigError(f"Blocks {self.blocks} do not match the system blocks {system.blocks.sizes}")


def prepare_system(system: PolynomialSystem, mode: Optional[SolveMode], blocks=None) -> PolynomialSystem:
    """Bring a parsed system into the coordinates ``mode`` works in."""
    mode = SolveMode(mode or system.mode)
    if mode == system.mode:
        return system
    if mode.is_homogeneous and not system.blocks.homogeneous:
        sizes = VariableBlocks(tuple(blocks)) if blocks else None
        return system.homogenized(mode, sizes)
    if mode == SolveMode.TORIC and system.mode == SolveMode.AFFINE:
        return dataclasses.replace(system, mode=SolveMode.TORIC)
    if mode == SolveMode.AFFINE and system.mode == SolveMode.TORIC:
        return dataclasses.replace(system, mode=SolveMode.AFFINE)
    raise ConfigError(f"Cannot solve a {system.mode} system in {mode} mode")


def build(system: PolynomialSystem, config: SolveConfig) -> QuotientRep:
    """Run the quotient pipeline of the system's mode with the configured settings."""
    kwargs: Dict[str, Any] = {"tolerances": config.tolerances(), "max_bytes": config.max_matrix_bytes}
    if system.mode != SolveMode.AFFINE:
        kwargs["seed"] = config.seed
    if system.mode == SolveMode.TORIC:
        kwargs["shift_scale"] = config.shift_scale
    return build_quotient(system, system.mode, **kwargs)


def solve_system(system: PolynomialSystem, config: Optional[SolveConfig] = None) -> RootSet:
    """Solve a square system and return its roots.

    Args:
        system (PolynomialSystem): Parsed system.
        config (SolveConfig): Run settings; the mode defaults to the system's.
    """
    config = config or SolveConfig()
    system = prepare_system(system, config.mode, config.blocks)
    config.validate(system)
    system.require_square()
    log.info(f"Solving {len(system.polys)} equations in {system.nvars} variables, {system.mode} mode")
    qrep = build(system, config)
    if config.dump_matrix is not None:
        qrep.macaulay.to_csv(config.dump_matrix)
    roots = extract_roots(qrep, seed=config.seed, method=config.method, tolerances=config.tolerances())
    if roots.total_multiplicity != roots.delta:
        log.warning(f"[yellow][!] Found {roots.total_multiplicity} roots with multiplicity, expected {roots.delta}")
    return roots


def _number(value: complex) -> Dict[str, float]:
    value = complex(value)
    return {"re": float(value.real), "im": float(value.imag)}


def _jsonable(value: Any) -> Any:
    """Plain JSON types only; non finite floats become strings."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, int):
        return int(value)
    if isinstance(value, complex):
        return _number(value)
    try:
        number = float(value)
    except (TypeError, ValueError):
        return str(value)
    if number.is_integer() and not isinstance(value, float) and abs(number) < 2**53:
        return int(number)
    return number if math.isfinite(number) else str(number)


def rootset_to_dict(roots: RootSet, config: Optional[SolveConfig] = None) -> Dict[str, Any]:
    """The root document written by ``solve --output json``."""
    config = config or SolveConfig()
    entries = []
    for root in roots:
        entry: Dict[str, Any] = {
            "coords": [_number(z) for z in root.coordinates],
            "multiplicity": int(root.multiplicity),
            "real": root.is_real(),
            "at_infinity": root.at_infinity,
        }
        if root.is_projective:
            entry["blocks"] = [[_number(z) for z in block] for block in root.block_coordinates()]
            affine = root.affine
            entry["affine"] = None if affine is None else [_number(z) for z in affine]
        if config.emit_residuals:
            entry["residual"] = float(root.residual)
        entries.append(entry)
    document: Dict[str, Any] = {
        "mode": str(roots.mode),
        "seed": roots.seed if isinstance(roots.seed, int) else None,
        "delta": int(roots.delta),
        "variables": list(roots.variables),
        "roots": entries,
        "diagnostics": _jsonable(roots.diagnostics),
    }
    if config.emit_timings:
        document["timings"] = {k: float(v) for k, v in roots.timings.items()}
    return document


def load_schema() -> Dict[str, Any]:
    with open(SCHEMA_PATH) as fh:
        return json.load(fh)


def validate_rootset(document: Dict[str, Any]) -> None:
    """Check a root document against the bundled JSON schema."""
    schema = load_schema()
    try:
        jsonschema.Draft7Validator(schema).validate(document)
    except jsonschema.exceptions.ValidationError as e:
        raise OutputValidationError(f"Root document does not match the schema: {e.message}") from None


def rootset_to_csv(roots: RootSet, config: Optional[SolveConfig] = None) -> str:
    """One row per root: multiplicity, residual and every coordinate as ``a+bi``."""
    config = config or SolveConfig()
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    header = ["root", "multiplicity"] + (["residual"] if config.emit_residuals else []) + list(roots.variables)
    writer.writerow(header)
    for i, root in enumerate(roots, start=1):
        row: List[Any] = [i, root.multiplicity]
        if config.emit_residuals:
            row.append(f"{root.residual:.17g}")
        row.extend(format_complex(z) for z in root.coordinates)
        writer.writerow(row)
    return out.getvalue()


def render_rootset(roots: RootSet, config: Optional[SolveConfig] = None) -> str:
    config = config or SolveConfig()
    if config.output == "csv":
        return rootset_to_csv(roots, config)
    document = rootset_to_dict(roots, config)
    validate_rootset(document)
    return json.dumps(document, indent=2) + "\n"


def write_rootset(roots: RootSet, path: Union[str, Path], config: Optional[SolveConfig] = None) -> None:
    text = render_rootset(roots, config)
    Path(path).write_text(text)
    log.info(f"Wrote {len(roots)} root{'s' * (len(roots) != 1)} to [blue]{path}[/]")


def error_document(error: MacsolveError) -> Dict[str, Any]:
    """Machine readable failure report, written instead of the roots."""
    return {"error": {"code": error.code, "message": str(error), "exit_code": error.exit_code}}


def bkk(system: PolynomialSystem, workers: Optional[int] = None) -> int:
    """The BKK bound of a square system."""
    return bkk_bound(system, workers)


def polytope_summary(system: PolynomialSystem) -> List[Dict[str, Any]]:
    """Support size, vertex count and normalized volume (``n! Vol``) of every Newton polytope."""
    rows = []
    n = system.nvars
    for i, p in enumerate(system.polys, start=1):
        polytope = newton_polytope(p)
        rows.append(
            {
                "equation": i,
                "terms": len(p),
                "vertices": len(polytope.vertices),
                "dimension": polytope.dim,
                "volume": int(volume(polytope) * math.factorial(n)),
            }
        )
    return rows


def dump_matrix(
    system: PolynomialSystem, path: Union[str, Path], config: Optional[SolveConfig] = None
) -> MacaulayMatrix:
    """Build the Macaulay matrix the solver would use and write it as CSV."""
    config = config or SolveConfig()
    system = prepare_system(system, config.mode, config.blocks)
    kwargs: Dict[str, Any] = {"max_bytes": config.max_matrix_bytes}
    if system.mode == SolveMode.TORIC:
        kwargs.update(seed=config.seed, shift_scale=config.shift_scale)
    matrix = build_macaulay(system, system.mode, **kwargs)
    matrix.to_csv(path)
    return matrix


def regularity(system: PolynomialSystem, degree: int, config: Optional[SolveConfig] = None) -> RegularityReport:
    """Is the degree ``d`` null space of a projective system ``d``-regular?"""
    config = config or SolveConfig()
    system = prepare_system(system, SolveMode.PROJECTIVE)
    return regularity_check_system(system, degree, seed=config.seed, tolerances=config.tolerances())
