#!/usr/bin/env python
"""macsolve: solve square polynomial systems with Macaulay matrices."""

import json
import logging
import sys
from pathlib import Path

import rich
import rich.console
import rich.logging
import rich.table
import rich.traceback
import rich_click as click

from macsolve import __version__
from macsolve.utils import MacsolveError, load_solver_config, rich_force_colors

# Set up logging as the root logger
# Submodules should all traverse back to this
log = logging.getLogger()

# Set up nicer formatting of click cli help messages
click.rich_click.MAX_WIDTH = 100
click.rich_click.USE_RICH_MARKUP = True
click.rich_click.COMMAND_GROUPS = {
    "macsolve": [
        {
            "name": "Solving",
            "commands": ["solve", "bkk", "regularity"],
        },
        {
            "name": "Inspection and benchmarks",
            "commands": ["dump-matrix", "bench"],
        },
    ],
}
click.rich_click.OPTION_GROUPS = {
    "macsolve solve": [
        {"name": "Pipeline", "options": ["--mode", "--blocks", "--seed", "--method"]},
        {
            "name": "Tolerances",
            "options": ["--tol-null", "--tol-commute", "--tol-cluster", "--gap-min", "--cond-bound"],
        },
        {
            "name": "Output",
            "options": ["--output", "--out", "--emit-residuals", "--emit-timings", "--dump-matrix"],
        },
    ],
}

# Set up rich stderr console
stderr = rich.console.Console(stderr=True, force_terminal=rich_force_colors())
stdout = rich.console.Console(force_terminal=rich_force_colors())

# Set up the rich traceback
rich.traceback.install(console=stderr, width=200, word_wrap=True, extra_lines=1)


# Solver errors are intended program terminations: log them without a traceback
def selective_traceback_hook(exctype, value, traceback):
    if issubclass(exctype, MacsolveError):
        log.error(value)
    else:
        # print the colored traceback for all other exceptions with rich as usual
        stderr.print(rich.traceback.Traceback.from_exception(exctype, value, traceback))


sys.excepthook = selective_traceback_hook

MODES = ["affine", "toric", "projective", "multihom"]


def parse_blocks(ctx, param, value):
    """Turn ``1,1`` into ``(1, 1)``."""
    if value is None:
        return None
    try:
        sizes = tuple(int(s) for s in value.split(","))
    except ValueError:
        raise click.BadParameter(f"expected comma separated integers, got '{value}'")
    if any(s < 1 for s in sizes):
        raise click.BadParameter("block sizes must be positive")
    return sizes


def fail(error: MacsolveError, output: str = "text", out=None):
    """Log a solver error, write the JSON error document if asked and exit with the error's status."""
    log.error(error)
    if output == "json":
        from macsolve.solve import error_document

        text = json.dumps(error_document(error), indent=2)
        if out:
            Path(out).write_text(text + "\n")
        else:
            click.echo(text)
    sys.exit(error.exit_code)


def load_config(**options):
    from macsolve.solve import SolveConfig

    config_fn, file_config = load_solver_config(Path.cwd())
    if config_fn:
        log.debug(f"Settings from {config_fn}: {file_config}")
    return SolveConfig.from_sources(file_config, **options)


def run_macsolve():
    # Launch the click cli
    macsolve_cli(auto_envvar_prefix="MACSOLVE")


EXIT_CODES_HELP = (
    "Exit codes: 0 success, 1 internal inconsistency (mixed volume cross-check, output schema), "
    "2 invalid input, 3 system not generic, 4 no invertible basis or irregular degree, 5 memory budget."
)


@click.group(context_settings=dict(help_option_names=["-h", "--help"]), epilog=EXIT_CODES_HELP)
@click.version_option(__version__)
@click.option(
    "-v",
    "--verbose",
    is_flag=True,
    default=False,
    help="Print verbose output to the console.",
)
@click.option("-l", "--log-file", help="Save a verbose log to a file.", metavar="<filename>")
@click.pass_context
def macsolve_cli(ctx, verbose, log_file):
    """
    macsolve finds all roots of square polynomial systems.

    The roots are read off multiplication matrices built from the null space of a
    Macaulay matrix, in affine space, the torus, projective space or products of
    projective spaces.
    """
    # Set the base logger to output DEBUG
    log.setLevel(logging.DEBUG)

    # Set up logs to the console
    log.addHandler(
        rich.logging.RichHandler(
            level=logging.DEBUG if verbose else logging.INFO,
            console=rich.console.Console(stderr=True, force_terminal=rich_force_colors()),
            show_time=False,
            show_path=verbose,  # True if verbose, false otherwise
            markup=True,
        )
    )

    # don't show rich debug logging in verbose mode
    rich_logger = logging.getLogger("rich")
    rich_logger.setLevel(logging.INFO)

    # Set up logs to a file if we asked for one
    if log_file:
        log_fh = logging.FileHandler(log_file, encoding="utf-8")
        log_fh.setLevel(logging.DEBUG)
        log_fh.setFormatter(logging.Formatter("[%(asctime)s] %(name)-20s [%(levelname)-7s]  %(message)s"))
        log.addHandler(log_fh)

    ctx.obj = {"verbose": verbose}


# macsolve solve
@macsolve_cli.command()
@click.argument("system_file", type=click.Path(exists=True, dir_okay=False), metavar="<system file>")
@click.option(
    "-m", "--mode", type=click.Choice(MODES), help="Solver pipeline. Defaults to the `mode:` line of the file."
)
@click.option("-b", "--blocks", callback=parse_blocks, help="Variable block sizes, e.g. `1,1`.")
@click.option("-s", "--seed", type=int, help="Seed for every random choice. Defaults to 0.")
@click.option("--method", type=click.Choice(["schur", "eig"]), help="Root extraction method.")
@click.option("--tol-null", type=float, help="Bound on ||N M|| / ||M||.")
@click.option("--tol-commute", type=float, help="Bound on the commutators of the multiplication matrices.")
@click.option("--tol-cluster", type=float, help="Relative distance below which Schur diagonal entries are merged.")
@click.option("--gap-min", type=float, help="Smallest accepted singular value gap.")
@click.option("--cond-bound", type=float, help="Condition number of N* above which a warning is given.")
@click.option("-o", "--output", type=click.Choice(["json", "csv"]), help="Format of the root file.")
@click.option("--out", type=click.Path(dir_okay=False), help="Write the roots to this file instead of stdout.")
@click.option("--emit-residuals/--no-emit-residuals", default=None, help="Include residuals in the output.")
@click.option("--emit-timings/--no-emit-timings", default=None, help="Include timings in the JSON output.")
@click.option("--dump-matrix", type=click.Path(dir_okay=False), help="Also write the Macaulay matrix as CSV.")
def solve(
    system_file,
    mode,
    blocks,
    seed,
    method,
    tol_null,
    tol_commute,
    tol_cluster,
    gap_min,
    cond_bound,
    output,
    out,
    emit_residuals,
    emit_timings,
    dump_matrix,
):
    """
    Find all roots of a square polynomial system.

    Reads a system file, builds the Macaulay matrix for the chosen mode, computes the
    multiplication matrices and writes the roots as JSON or CSV.
    """
    from macsolve.solve import render_rootset, solve_system
    from macsolve.system_io import read_system

    output_format = output or "json"
    try:
        config = load_config(
            mode=mode,
            blocks=blocks,
            seed=seed,
            method=method,
            tol_null=tol_null,
            tol_commute=tol_commute,
            tol_cluster=tol_cluster,
            gap_min=gap_min,
            cond_bound=cond_bound,
            output=output,
            emit_residuals=emit_residuals,
            emit_timings=emit_timings,
            dump_matrix=dump_matrix,
        )
        output_format = config.output
        system = read_system(system_file, mode=config.mode, blocks=config.blocks)
        roots = solve_system(system, config)
        text = render_rootset(roots, config)
    except MacsolveError as e:
        fail(e, output_format, out)
    except UserWarning as e:
        log.error(e)
        sys.exit(2)
    if out:
        Path(out).write_text(text)
        log.info(f"[green][✓] Wrote {len(roots)} root{'s' * (len(roots) != 1)} to [blue]{out}[/]")
    else:
        click.echo(text, nl=False)


# macsolve bkk
@macsolve_cli.command()
@click.argument("system_file", type=click.Path(exists=True, dir_okay=False), metavar="<system file>")
@click.option("-t", "--table", is_flag=True, default=False, help="Also show the Newton polytope of every equation.")
@click.option("-w", "--workers", type=int, help="Compute the volumes on this many threads.")
def bkk(system_file, table, workers):
    """
    Print the BKK bound of a square system.

    The bound is the mixed volume of the Newton polytopes and counts the roots in the
    algebraic torus of a generic system with the same supports.
    """
    from macsolve.solve import bkk as bkk_bound
    from macsolve.solve import polytope_summary
    from macsolve.system_io import read_system

    try:
        system = read_system(system_file)
        bound = bkk_bound(system, workers)
        if table:
            rich_table = rich.table.Table("Equation", "Terms", "Vertices", "Dimension", "n! Volume")
            for row in polytope_summary(system):
                rich_table.add_row(*(str(row[k]) for k in ("equation", "terms", "vertices", "dimension", "volume")))
            stderr.print(rich_table)
    except MacsolveError as e:
        fail(e)
    click.echo(bound)


# macsolve bench
@macsolve_cli.command()
@click.option("-n", "--n", "n", type=int, required=True, help="Number of variables and equations.")
@click.option("-d", "--d", "degrees", type=int, multiple=True, required=True, help="Degree, repeat for several rows.")
@click.option("-s", "--seed", type=int, default=0, show_default=True, help="Seed of the random coefficients.")
@click.option("-f", "--format", "fmt", type=click.Choice(["csv", "table"]), default="csv", show_default=True)
@click.option("--max-matrix-bytes", type=int, help="Memory budget for the Macaulay matrix.")
def bench(n, degrees, seed, fmt, max_matrix_bytes):
    """
    Time the affine solver on random dense systems.

    Prints one row per degree with the root count, the matrix sizes, the largest
    residual and the time spent building M, N, the basis and the Schur form.
    """
    from macsolve.bench import format_bench, run_bench

    try:
        config = load_config(seed=seed, max_matrix_bytes=max_matrix_bytes, mode="affine")
        rows = run_bench(n, degrees, seed, config)
    except MacsolveError as e:
        fail(e)
    except ValueError as e:
        raise click.BadParameter(str(e))
    click.echo(format_bench(rows, fmt), nl=False)


# macsolve dump-matrix
@macsolve_cli.command("dump-matrix")
@click.argument("system_file", type=click.Path(exists=True, dir_okay=False), metavar="<system file>")
@click.argument("path", type=click.Path(dir_okay=False), metavar="<csv file>")
@click.option("-m", "--mode", type=click.Choice(MODES), help="Construction to use.")
@click.option("-b", "--blocks", callback=parse_blocks, help="Variable block sizes, e.g. `1,1`.")
@click.option("-s", "--seed", type=int, help="Seed of the toric shift.")
def dump_matrix(system_file, path, mode, blocks, seed):
    """
    Write the Macaulay matrix of a system as CSV.

    Rows are monomials, columns the multiples `(i, x^b)` of the equations and entries
    complex numbers `a+bi` with 17 significant digits.
    """
    from macsolve.solve import dump_matrix as write_matrix
    from macsolve.system_io import read_system

    try:
        config = load_config(mode=mode, blocks=blocks, seed=seed)
        system = read_system(system_file, mode=config.mode, blocks=config.blocks)
        write_matrix(system, path, config)
    except MacsolveError as e:
        fail(e)


# macsolve regularity
@macsolve_cli.command()
@click.argument("system_file", type=click.Path(exists=True, dir_okay=False), metavar="<system file>")
@click.option("-d", "--degree", type=int, required=True, help="Degree of the Macaulay matrix.")
@click.option("-s", "--seed", type=int, help="Seed of the generic linear form.")
def regularity(system_file, degree, seed):
    """
    Check whether a projective system is regular in a degree.

    Builds the homogeneous Macaulay matrix of the given degree and tests whether a
    generic linear form maps its null space onto all roots.
    """
    from macsolve.solve import regularity as check_regularity
    from macsolve.system_io import read_system

    try:
        config = load_config(seed=seed)
        system = read_system(system_file, mode="projective")
        report = check_regularity(system, degree, config)
    except MacsolveError as e:
        fail(e)
    if report.regular:
        log.info(f"[green][✓] Degree {degree} is regular: rank {report.rank} = {report.delta}")
    else:
        log.info(f"[red][✗] Degree {degree} is not regular: rank {report.rank} < {report.delta}")
    click.echo(json.dumps({"degree": degree, "regular": report.regular, "rank": report.rank, "delta": report.delta}))


if __name__ == "__main__":
    run_macsolve()
