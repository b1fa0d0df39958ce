"""Tests covering the command-line code.

Most tests check the cli arguments are passed along and that some action is
taken.
"""

import csv
import json
import os
import unittest
from pathlib import Path
from unittest import mock

from click.testing import CliRunner

import macsolve.__main__
from macsolve.bench import BENCH_COLUMNS
from macsolve.poly import SolveMode
from macsolve.polytope import MixedVolumeMismatch

from .utils import TEST_DATA_DIR, with_temporary_folder


@mock.patch("macsolve.__main__.macsolve_cli")
def test_header(mock_cli):
    """Just try to execute the header function"""
    macsolve.__main__.run_macsolve()
    mock_cli.assert_called_once_with(auto_envvar_prefix="MACSOLVE")


def json_line(output):
    """The single line JSON document in a command's output, between the log lines"""
    return json.loads([line for line in output.splitlines() if line.startswith("{")][0])


class TestCli(unittest.TestCase):
    """Class for testing the command line interface"""

    def setUp(self):
        self.runner = CliRunner()
        self.affine_file = str(TEST_DATA_DIR / "affine_example.txt")

    def assemble_params(self, params):
        """Assemble a dictionary of parameters into a list of arguments for the cli

        Note:
            if the value of a parameter is None, it will be considered a flag.

        Args:
            params (dict): dict of parameters to assemble"""
        arg_list = []
        for key, value in params.items():
            if value is not None:
                arg_list += [f"--{key}", value]
            else:
                arg_list += [f"--{key}"]

        return arg_list

    def invoke_cli(self, cmd):
        """Invoke the commandline interface using a list of parameters

        Args:
            cmd (list): commandline to execute
        """
        return self.runner.invoke(macsolve.__main__.macsolve_cli, cmd)

    def test_cli_help(self):
        """Test the main launch function with --help"""
        result = self.invoke_cli(["--help"])
        assert result.exit_code == 0
        assert "Show the version and exit." in result.output
        assert "Exit codes" in result.output

    def test_cli_bad_subcommand(self):
        """Test the main launch function with an unrecognised argument"""
        result = self.invoke_cli(["foo"])
        assert result.exit_code == 2

    def test_cli_verbose(self):
        """Test the main launch function with verbose flag"""
        result = self.invoke_cli(["-v"])
        # Checks that -v was considered valid
        assert "No such option: -v" not in result.output

    @mock.patch("macsolve.solve.render_rootset", return_value="rendered roots\n")
    @mock.patch("macsolve.solve.solve_system")
    def test_cli_solve_options(self, mock_solve, mock_render):
        """Test the solve options end up in the solver settings"""
        params = {
            "mode": "projective",
            "seed": "42",
            "tol-null": "1e-9",
            "method": "eig",
            "output": "csv",
        }
        cmd = ["solve"] + self.assemble_params(params) + ["--no-emit-timings", self.affine_file]
        result = self.invoke_cli(cmd)

        assert result.exit_code == 0
        assert "rendered roots" in result.output
        system, config = mock_solve.call_args[0]
        assert system.mode == SolveMode.PROJECTIVE
        assert config.seed == 42
        assert config.tol_null == 1e-9
        assert config.method == "eig"
        assert config.output == "csv"
        assert not config.emit_timings
        assert config.emit_residuals

    @mock.patch("macsolve.solve.render_rootset", return_value="")
    @mock.patch("macsolve.solve.solve_system")
    def test_cli_solve_reads_config_file(self, mock_solve, mock_render):
        """Test settings are read from .macsolve.yml in the working directory"""
        with self.runner.isolated_filesystem():
            Path(".macsolve.yml").write_text("seed: 9\ntol_cluster: 1.0e-5\n")
            result = self.invoke_cli(["solve", "--tol-cluster", "1e-4", self.affine_file])

        assert result.exit_code == 0
        config = mock_solve.call_args[0][1]
        assert config.seed == 9
        assert config.tol_cluster == 1e-4

    @with_temporary_folder
    def test_cli_solve_json(self, tmp_dir):
        """Test the roots of the two conics are written as JSON"""
        out = os.path.join(tmp_dir, "roots.json")
        result = self.invoke_cli(["solve", self.affine_file, "--out", out])

        assert result.exit_code == 0
        with open(out) as fh:
            document = json.load(fh)
        assert document["delta"] == 4
        assert len(document["roots"]) == 4

    @with_temporary_folder
    def test_cli_solve_csv(self, tmp_dir):
        """Test the CSV root file"""
        out = os.path.join(tmp_dir, "roots.csv")
        result = self.invoke_cli(["solve", self.affine_file, "-o", "csv", "--out", out])

        assert result.exit_code == 0
        with open(out) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["root", "multiplicity", "residual", "x1", "x2"]
        assert len(rows) == 5

    @with_temporary_folder
    def test_cli_solve_non_square(self, tmp_dir):
        """Test a failing run writes the error document and exits with the error status"""
        out = os.path.join(tmp_dir, "roots.json")
        result = self.invoke_cli(["solve", str(TEST_DATA_DIR / "nonsquare.txt"), "--out", out])

        assert result.exit_code == 2
        with open(out) as fh:
            document = json.load(fh)
        assert document["error"]["code"] == "non_square"
        assert document["error"]["exit_code"] == 2

    @with_temporary_folder
    def test_cli_solve_syntax_error(self, tmp_dir):
        """Test a parse error is reported with its location"""
        out = os.path.join(tmp_dir, "roots.json")
        result = self.invoke_cli(["solve", str(TEST_DATA_DIR / "bad_syntax.txt"), "--out", out])

        assert result.exit_code == 2
        with open(out) as fh:
            document = json.load(fh)
        assert document["error"]["code"] == "parse_error"
        assert document["error"]["message"].startswith("line 2, column 7")

    def test_cli_solve_missing_file(self):
        """Test click rejects a system file that does not exist"""
        result = self.invoke_cli(["solve", "does-not-exist.txt"])
        assert result.exit_code == 2

    def test_cli_solve_bad_blocks(self):
        """Test the block sizes are validated"""
        result = self.invoke_cli(["solve", "--blocks", "1,x", self.affine_file])
        assert result.exit_code == 2
        assert "comma separated integers" in result.output

    def test_cli_bkk(self):
        """Test the BKK bound of the Laurent system is printed"""
        result = self.invoke_cli(["bkk", str(TEST_DATA_DIR / "laurent.txt")])
        assert result.exit_code == 0
        assert "4" in result.output.splitlines()

    @mock.patch("macsolve.solve.bkk", return_value=12)
    def test_cli_bkk_workers(self, mock_bkk):
        """Test the worker count is passed on"""
        result = self.invoke_cli(["bkk", "-w", "3", self.affine_file])
        assert result.exit_code == 0
        assert mock_bkk.call_args[0][1] == 3
        assert "12" in result.output.splitlines()

    @mock.patch("macsolve.solve.bkk", side_effect=MixedVolumeMismatch("volumes disagree"))
    def test_cli_bkk_internal_inconsistency(self, mock_bkk):
        """Test a failed mixed volume cross-check exits with the internal error status"""
        result = self.invoke_cli(["bkk", self.affine_file])
        assert result.exit_code == 1

    def test_cli_bkk_table(self):
        """Test the Newton polytope table"""
        result = self.invoke_cli(["bkk", "--table", str(TEST_DATA_DIR / "laurent.txt")])
        assert result.exit_code == 0
        assert "Vertices" in result.output

    def test_cli_bench(self):
        """Test a small benchmark run prints CSV"""
        result = self.invoke_cli(["bench", "-n", "1", "-d", "3", "-d", "4"])
        assert result.exit_code == 0
        lines = result.output.splitlines()
        assert ",".join(BENCH_COLUMNS) in lines
        assert sum(line.startswith("1,3,3,") or line.startswith("1,4,4,") for line in lines) == 2

    def test_cli_bench_bad_size(self):
        """Test bench rejects an empty system"""
        result = self.invoke_cli(["bench", "-n", "0", "-d", "2"])
        assert result.exit_code == 2

    @with_temporary_folder
    def test_cli_dump_matrix(self, tmp_dir):
        """Test the Macaulay matrix is written as CSV"""
        path = os.path.join(tmp_dir, "M.csv")
        result = self.invoke_cli(["dump-matrix", self.affine_file, path])

        assert result.exit_code == 0
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 11
        assert rows[0][0] == "monomial"

    def test_cli_regularity(self):
        """Test the regularity report"""
        result = self.invoke_cli(["regularity", self.affine_file, "-d", "3"])
        assert result.exit_code == 0
        assert json_line(result.output) == {"degree": 3, "regular": True, "rank": 4, "delta": 4}

        result = self.invoke_cli(["regularity", self.affine_file, "-d", "2"])
        assert result.exit_code == 0
        assert not json_line(result.output)["regular"]

    def test_cli_regularity_low_degree(self):
        """Test a degree below the equation degrees is reported, not rejected"""
        result = self.invoke_cli(["regularity", self.affine_file, "-d", "1"])
        assert result.exit_code == 0
        assert json_line(result.output) == {"degree": 1, "regular": False, "rank": 1, "delta": 4}
