"""Tests for the solve pipeline, the root documents and the smaller commands."""

import csv
import json
import os
import unittest
from pathlib import Path

import numpy as np
import pytest

from macsolve.bench import random_system
from macsolve.poly import NonSquareSystemError, Polynomial, PolynomialSystem, SolveMode
from macsolve.solve import (
    ConfigError,
    OutputValidationError,
    SolveConfig,
    bkk,
    dump_matrix,
    error_document,
    polytope_summary,
    prepare_system,
    regularity,
    render_rootset,
    rootset_to_csv,
    rootset_to_dict,
    solve_system,
    validate_rootset,
    write_rootset,
)
from macsolve.system_io import read_system

from .utils import TEST_DATA_DIR, match_points, with_temporary_folder

AFFINE_ROOTS = [(-2, 3), (3, 2), (2, 1), (-1, 0)]


class TestSolveConfig(unittest.TestCase):
    """Class for solver settings tests"""

    def test_defaults(self):
        config = SolveConfig()
        assert config.seed == 0
        assert config.method == "schur"
        assert config.tolerances().tol_null == 1e-10
        config.validate()

    def test_options_override_file(self):
        config = SolveConfig.from_sources({"seed": 3, "tol-null": 1e-9}, seed=5, method=None)
        assert config.seed == 5
        assert config.tol_null == 1e-9
        assert config.method == "schur"

    def test_unknown_setting_is_ignored(self):
        with self.assertLogs("macsolve.solve", level="WARNING") as logs:
            config = SolveConfig.from_sources({"colour": "red", "mode": "toric"})
        assert "colour" in logs.output[0]
        assert config.mode == SolveMode.TORIC

    def test_invalid_setting(self):
        with pytest.raises(ConfigError):
            SolveConfig.from_sources({"mode": "sparse"})

    @with_temporary_folder
    def test_load_from_directory(self, tmp_dir):
        Path(tmp_dir, ".macsolve.yml").write_text("seed: 7\nmode: toric\nblocks: [2]\n")
        config = SolveConfig.load(tmp_dir, seed=3)
        assert config.seed == 3
        assert config.mode == SolveMode.TORIC
        assert config.blocks == (2,)

    def test_validate(self):
        for bad in [
            SolveConfig(output="xml"),
            SolveConfig(method="qz"),
            SolveConfig(seed=-1),
            SolveConfig(tol_null=0),
            SolveConfig(shift_scale=0),
            SolveConfig(mode="projective", blocks=(1, 1)),
        ]:
            with pytest.raises(ConfigError):
                bad.validate()

    def test_blocks_must_match_system(self):
        system = read_system(TEST_DATA_DIR / "bilinear.txt")
        SolveConfig(blocks=(1, 1)).validate(system)
        with pytest.raises(ConfigError, match="do not match"):
            SolveConfig(blocks=(2,)).validate(system)


class TestPrepareSystem(unittest.TestCase):
    """Class for the coordinate changes between modes"""

    def setUp(self):
        self.system = read_system(TEST_DATA_DIR / "affine_example.txt")

    def test_same_mode(self):
        assert prepare_system(self.system, None) is self.system

    def test_homogenize(self):
        projective = prepare_system(self.system, SolveMode.PROJECTIVE)
        assert projective.variables == ("h0", "x1", "x2")
        multihom = prepare_system(self.system, SolveMode.MULTIHOM, (1, 1))
        assert multihom.blocks.sizes == (1, 1)
        assert multihom.nvars == 4

    def test_toric(self):
        toric = prepare_system(self.system, SolveMode.TORIC)
        assert toric.mode == SolveMode.TORIC
        assert toric.polys == self.system.polys

    def test_projective_to_affine(self):
        system = read_system(TEST_DATA_DIR / "projective_infinity.txt")
        with pytest.raises(ConfigError, match="Cannot solve"):
            prepare_system(system, SolveMode.AFFINE)


class TestSolveSystem(unittest.TestCase):
    """Class for end to end solver runs"""

    def test_affine(self):
        roots = solve_system(read_system(TEST_DATA_DIR / "affine_example.txt"))
        assert roots.mode == SolveMode.AFFINE
        assert roots.delta == 4
        assert match_points(roots.coordinates(), AFFINE_ROOTS) < 1e-8

    def test_affine_as_projective(self):
        system = read_system(TEST_DATA_DIR / "affine_example.txt")
        roots = solve_system(system, SolveConfig(mode="projective"))
        affine = np.array([root.affine for root in roots])
        assert match_points(affine, AFFINE_ROOTS) < 1e-7

    def test_laurent(self):
        roots = solve_system(read_system(TEST_DATA_DIR / "laurent.txt"), SolveConfig(seed=1))
        assert roots.delta == 4
        assert roots.max_residual < 1e-8

    def test_multihom(self):
        roots = solve_system(read_system(TEST_DATA_DIR / "bilinear.txt"))
        assert roots.delta == 2
        assert roots.total_multiplicity == 2

    def test_non_square(self):
        with pytest.raises(NonSquareSystemError):
            solve_system(read_system(TEST_DATA_DIR / "nonsquare.txt"))

    @with_temporary_folder
    def test_dump_matrix_while_solving(self, tmp_dir):
        path = Path(tmp_dir, "M.csv")
        solve_system(read_system(TEST_DATA_DIR / "affine_example.txt"), SolveConfig(dump_matrix=path))
        assert len(path.read_text().splitlines()) == 11


class TestRootDocuments(unittest.TestCase):
    """Class for the JSON and CSV root files"""

    @classmethod
    def setUpClass(cls):
        cls.affine = solve_system(read_system(TEST_DATA_DIR / "affine_example.txt"))
        cls.projective = solve_system(read_system(TEST_DATA_DIR / "projective_infinity.txt"))

    def test_json_document(self):
        document = rootset_to_dict(self.affine)
        validate_rootset(document)
        assert document["mode"] == "affine"
        assert document["seed"] == 0
        assert document["variables"] == ["x1", "x2"]
        assert len(document["roots"]) == 4
        assert set(document["timings"]) == {"t_M", "t_N", "t_B", "t_S", "t_alg"}
        coords = [[complex(z["re"], z["im"]) for z in r["coords"]] for r in document["roots"]]
        assert match_points(coords, AFFINE_ROOTS) < 1e-8
        # plain JSON all the way down
        json.dumps(document, allow_nan=False)

    def test_json_projective(self):
        document = rootset_to_dict(self.projective)
        validate_rootset(document)
        infinite = [r for r in document["roots"] if r["at_infinity"]]
        assert len(infinite) == 1
        assert infinite[0]["affine"] is None
        assert len(infinite[0]["blocks"]) == 1

    def test_json_without_extras(self):
        config = SolveConfig(emit_residuals=False, emit_timings=False)
        document = rootset_to_dict(self.affine, config)
        validate_rootset(document)
        assert "timings" not in document
        assert all("residual" not in r for r in document["roots"])

    def test_invalid_document(self):
        with pytest.raises(OutputValidationError):
            validate_rootset({"mode": "affine", "roots": []})
        document = rootset_to_dict(self.affine)
        document["roots"][0]["multiplicity"] = 0
        with pytest.raises(OutputValidationError):
            validate_rootset(document)

    def test_csv(self):
        rows = list(csv.reader(rootset_to_csv(self.affine).splitlines()))
        assert rows[0] == ["root", "multiplicity", "residual", "x1", "x2"]
        assert len(rows) == 5
        assert [r[0] for r in rows[1:]] == ["1", "2", "3", "4"]
        assert all(r[3].endswith("i") for r in rows[1:])

    def test_csv_without_residuals(self):
        text = rootset_to_csv(self.affine, SolveConfig(emit_residuals=False))
        assert text.splitlines()[0] == "root,multiplicity,x1,x2"

    def test_render(self):
        assert render_rootset(self.affine, SolveConfig(output="csv")).startswith("root,")
        assert json.loads(render_rootset(self.affine))["delta"] == 4

    @with_temporary_folder
    def test_write_rootset(self, tmp_dir):
        path = os.path.join(tmp_dir, "roots.json")
        write_rootset(self.affine, path)
        with open(path) as fh:
            assert len(json.load(fh)["roots"]) == 4

    def test_error_document(self):
        document = error_document(NonSquareSystemError("2 equations in 3 variables"))
        assert document == {
            "error": {"code": "non_square", "message": "2 equations in 3 variables", "exit_code": 2}
        }


class TestCommands(unittest.TestCase):
    """Class for the bound, matrix and regularity helpers"""

    def test_bkk(self):
        assert bkk(read_system(TEST_DATA_DIR / "laurent.txt")) == 4
        assert bkk(read_system(TEST_DATA_DIR / "affine_example.txt")) == 4

    def test_polytope_summary(self):
        summary = polytope_summary(read_system(TEST_DATA_DIR / "laurent.txt"))
        assert summary == [
            {"equation": 1, "terms": 4, "vertices": 3, "dimension": 2, "volume": 2},
            {"equation": 2, "terms": 3, "vertices": 3, "dimension": 2, "volume": 1},
        ]

    @with_temporary_folder
    def test_dump_matrix(self, tmp_dir):
        path = Path(tmp_dir, "M.csv")
        matrix = dump_matrix(read_system(TEST_DATA_DIR / "affine_example.txt"), path)
        assert matrix.shape == (10, 6)
        rows = list(csv.reader(path.read_text().splitlines()))
        assert len(rows) == 11
        assert len(rows[0]) == 7

    @with_temporary_folder
    def test_dump_matrix_other_mode(self, tmp_dir):
        path = Path(tmp_dir, "M.csv")
        system = read_system(TEST_DATA_DIR / "affine_example.txt")
        matrix = dump_matrix(system, path, SolveConfig(mode="projective"))
        assert matrix.mode == SolveMode.PROJECTIVE
        assert {sum(e) for e in matrix.rows} == {matrix.rho}

    def test_regularity(self):
        system = read_system(TEST_DATA_DIR / "affine_example.txt")
        assert not regularity(system, 2).regular
        report = regularity(system, 3)
        assert report.regular
        assert report.delta == 4


def random_bidegree_system(d, seed=0):
    """Two dense equations of bidegree ``(d, d)`` in ``x`` and ``y``."""
    rng = np.random.default_rng(seed)
    monomials = [(a, b) for a in range(d + 1) for b in range(d + 1)]
    polys = [Polynomial(zip(monomials, rng.standard_normal(len(monomials))), 2) for _ in range(2)]
    return PolynomialSystem(polys, ("x", "y"), SolveMode.AFFINE)


class TestRandomSystems(unittest.TestCase):
    """Class for root counts and residuals on seeded random systems"""

    def test_projective_degrees_7_and_11(self):
        roots = solve_system(random_system((7, 11), seed=0), SolveConfig(mode=SolveMode.PROJECTIVE))
        assert roots.delta == 77
        assert roots.total_multiplicity == 77
        assert roots.max_residual <= 1e-10

    def test_multihom_bidegree_3(self):
        config = SolveConfig(mode=SolveMode.MULTIHOM, blocks=(1, 1))
        roots = solve_system(random_bidegree_system(3, seed=0), config)
        assert roots.delta == 18
        assert roots.total_multiplicity == 18
        assert roots.max_residual <= 1e-8

    @pytest.mark.slow
    def test_multihom_bidegree_9(self):
        config = SolveConfig(mode=SolveMode.MULTIHOM, blocks=(1, 1))
        roots = solve_system(random_bidegree_system(9, seed=0), config)
        assert roots.delta == 162
        assert roots.total_multiplicity == 162
        assert roots.max_residual <= 1e-8


class TestSeedInvariance(unittest.TestCase):
    """Class for root sets that must not depend on the random choices of a run"""

    def assert_seed_invariant(self, system, **options):
        first = solve_system(system, SolveConfig(seed=1, **options))
        second = solve_system(system, SolveConfig(seed=99, **options))
        assert len(first) == len(second)
        assert match_points(first.coordinates(), second.coordinates()) <= 1e-8

    def test_affine(self):
        self.assert_seed_invariant(read_system(TEST_DATA_DIR / "affine_example.txt"))
        self.assert_seed_invariant(random_system((4, 4), seed=3))

    def test_toric(self):
        self.assert_seed_invariant(read_system(TEST_DATA_DIR / "laurent.txt"))

    def test_projective(self):
        self.assert_seed_invariant(random_system((3, 4), seed=2), mode=SolveMode.PROJECTIVE)

    def test_multihom(self):
        self.assert_seed_invariant(read_system(TEST_DATA_DIR / "bilinear.txt"))
        self.assert_seed_invariant(random_bidegree_system(2, seed=5), mode=SolveMode.MULTIHOM, blocks=(1, 1))
