"""Tests for the simultaneous Schur form, clustering and root extraction."""

import unittest

import numpy as np
import pytest
import scipy.stats

from macsolve.poly import Polynomial, PolynomialSystem
from macsolve.quotient import build_affine, build_multihom, build_projective, build_toric
from macsolve.roots import (
    CommutatorViolation,
    DegeneratePencil,
    ProjectiveRatio,
    Root,
    cluster_reorder,
    cluster_values,
    extract_roots,
    pencil_eigenvalues,
    residual,
    simultaneous_schur,
)
from macsolve.system_io import read_system

from .utils import TEST_DATA_DIR, match_points, match_projective, projective_distance


def commuting_family(eigenvalues, seed=0):
    """Diagonalizable commuting matrices with prescribed joint eigenvalues, one matrix per column."""
    eigenvalues = np.asarray(eigenvalues, dtype=complex)
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((len(eigenvalues), len(eigenvalues)))
    P_inv = np.linalg.inv(P)
    return [P @ np.diag(column) @ P_inv for column in eigenvalues.T]


class TestSimultaneousSchur(unittest.TestCase):
    """Class for the simultaneous Schur form tests"""

    def test_triangularizes_commuting_family(self):
        mats = commuting_family([(1, 2), (3, -1), (-2, 0.5)])
        schur = simultaneous_schur(mats, seed=0)
        for T, m in zip(schur.triangular, mats):
            np.testing.assert_allclose(np.tril(T, -1), 0, atol=1e-10)
            np.testing.assert_allclose(schur.U.conj().T @ T @ schur.U, m, atol=1e-10)
        assert schur.lower_mass < 1e-10

    def test_random_unitary_factor(self):
        U = scipy.stats.unitary_group.rvs(4, random_state=1)
        D = np.diag([1.0, 2.0, 3.0, 4.0])
        schur = simultaneous_schur([U @ D @ U.conj().T], seed=0)
        np.testing.assert_allclose(np.sort(np.diag(schur.tstar).real), [1, 2, 3, 4], atol=1e-10)

    def test_non_commuting(self):
        a = np.array([[1.0, 1.0], [0.0, 2.0]])
        b = np.array([[1.0, 0.0], [1.0, 2.0]])
        with pytest.raises(CommutatorViolation):
            simultaneous_schur([a, b], seed=0)

    def test_shapes(self):
        with pytest.raises(ValueError):
            simultaneous_schur([np.eye(2), np.eye(3)])
        with pytest.raises(ValueError):
            simultaneous_schur([])


class TestClustering(unittest.TestCase):
    """Class for clustering and reordering tests"""

    def test_cluster_values(self):
        clusters = cluster_values([1.0, 2.0, 1.0 + 1e-9, 2.0 - 1e-9j, 5.0], 1e-6)
        assert clusters == [[0, 2], [1, 3], [4]]

    def test_cluster_values_chain(self):
        # single linkage joins points through a chain of close neighbours
        assert cluster_values([0.0, 0.6, 1.2], 0.7) == [[0, 1, 2]]

    def test_cluster_values_edge_cases(self):
        assert cluster_values([], 1e-6) == []
        assert cluster_values([3.0], 1e-6) == [[0]]

    def test_reorder_brings_clusters_together(self):
        T = np.array(
            [
                [1.0, 0.3, 0.2, 0.1],
                [0.0, 2.0, 0.5, 0.4],
                [0.0, 0.0, 1.0, 0.7],
                [0.0, 0.0, 0.0, 3.0],
            ],
            dtype=complex,
        )
        U = np.eye(4, dtype=complex)
        mstar = U.conj().T @ T @ U
        ordered = cluster_reorder(T, U, 1e-6, mstar)
        assert ordered.reordered
        assert ordered.clusters == ((0, 1), (2,), (3,))
        np.testing.assert_allclose(np.diag(ordered.tstar), [1, 1, 2, 3], atol=1e-12)
        np.testing.assert_allclose(ordered.U @ mstar @ ordered.U.conj().T, ordered.tstar, atol=1e-12)
        np.testing.assert_allclose(np.tril(ordered.tstar, -1), 0, atol=1e-12)

    def test_reorder_not_needed(self):
        T = np.triu(np.ones((3, 3))) + np.diag([0.0, 1.0, 2.0])
        ordered = cluster_reorder(T.astype(complex), np.eye(3, dtype=complex), 1e-6)
        assert not ordered.reordered
        assert ordered.clusters == ((0,), (1,), (2,))


class TestPencil(unittest.TestCase):
    """Class for generalized eigenvalue tests"""

    def test_finite_and_infinite(self):
        A = np.array([[2.0, 0.0], [0.0, 1.0]])
        B = np.array([[1.0, 0.0], [0.0, 0.0]])
        ratios = pencil_eigenvalues(A, B)
        assert sorted(r.is_infinite for r in ratios) == [False, True]
        assert [r.value for r in ratios if not r.is_infinite][0] == pytest.approx(2)
        assert complex([r for r in ratios if r.is_infinite][0]) == complex(np.inf, 0)

    def test_degenerate_pencil(self):
        A = np.array([[1.0, 0.0], [0.0, 0.0]])
        B = np.array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(DegeneratePencil):
            pencil_eigenvalues(A, B)

    def test_projective_ratio(self):
        assert ProjectiveRatio(1.0, 0.0).is_infinite
        assert ProjectiveRatio(3.0, 2.0).value == pytest.approx(1.5)


class TestResidual(unittest.TestCase):
    """Class for the backward error tests"""

    def test_scaled_residual(self):
        x = Polynomial.variable(0, 2)
        y = Polynomial.variable(1, 2)
        system = PolynomialSystem((x + 1, y - 2), ("x", "y"))
        assert residual(system, (-1, 2)) == 0
        # |f1(0, 2)| / ||f1||_1 = 1 / 2
        assert residual(system, (0, 2)) == pytest.approx(0.5)
        # the scale max(1, ||z||_inf)^d_i damps large points
        assert residual(system, (9, 2)) == pytest.approx(10 / (2 * 9))

    def test_root_properties(self):
        root = Root(np.array([0, 1, -1], dtype=complex), blocks=(range(0, 3),))
        assert root.is_projective
        assert root.at_infinity
        assert root.affine is None
        assert root.is_real()
        finite = Root(np.array([0.5, 1, 2j], dtype=complex), blocks=(range(0, 3),))
        np.testing.assert_allclose(finite.affine, [2, 4j])
        assert not finite.is_real()


class TestExtractRoots(unittest.TestCase):
    """Class for root extraction tests, one per pipeline"""

    def test_affine(self):
        system = read_system(TEST_DATA_DIR / "affine_example.txt")
        roots = extract_roots(build_affine(system), seed=0)
        assert len(roots) == 4
        assert roots.total_multiplicity == 4
        assert match_points(roots.coordinates(), [(-2, 3), (3, 2), (2, 1), (-1, 0)]) < 1e-8
        assert roots.max_residual < 1e-10
        assert roots.diagnostics["real_roots"] == 4
        assert set(roots.timings) == {"t_M", "t_N", "t_B", "t_S", "t_alg"}
        assert roots.timings["t_alg"] == pytest.approx(sum(roots.timings[k] for k in ("t_M", "t_N", "t_B", "t_S")))

    def test_affine_eig_method(self):
        system = read_system(TEST_DATA_DIR / "affine_example.txt")
        roots = extract_roots(build_affine(system), seed=0, method="eig")
        assert match_points(roots.coordinates(), [(-2, 3), (3, 2), (2, 1), (-1, 0)]) < 1e-8
        assert roots.diagnostics["method"] == "eig"

    def test_unknown_method(self):
        system = read_system(TEST_DATA_DIR / "affine_example.txt")
        with pytest.raises(ValueError):
            extract_roots(build_affine(system), method="qz")

    def test_reproducible(self):
        system = read_system(TEST_DATA_DIR / "affine_example.txt")
        first = extract_roots(build_affine(system), seed=3).coordinates()
        second = extract_roots(build_affine(system), seed=3).coordinates()
        np.testing.assert_array_equal(first, second)

    def test_double_root(self):
        system = read_system(TEST_DATA_DIR / "double_root.txt")
        roots = extract_roots(build_affine(system), seed=0)
        assert len(roots) == 1
        assert roots[0].multiplicity == 2
        np.testing.assert_allclose(roots[0].coordinates, [1, 1], atol=1e-6)

    def test_toric(self):
        system = read_system(TEST_DATA_DIR / "laurent.txt")
        roots = extract_roots(build_toric(system, seed=0), seed=0)
        xs = np.roots([1, -6, 13, -11, 3])
        expected = [(x, (3 * x - x**2 - 1) / x) for x in xs]
        assert match_points(roots.coordinates(), expected) < 1e-7
        assert roots.max_residual < 1e-8

    def test_projective_with_root_at_infinity(self):
        system = read_system(TEST_DATA_DIR / "projective_infinity.txt")
        roots = extract_roots(build_projective(system, seed=0), seed=0)
        assert len(roots) == 2
        assert match_projective(roots.coordinates(), [(0, 1, -1), (1, -10, 12)]) < 1e-8
        assert roots.diagnostics["roots_at_infinity"] == 1
        at_infinity = [r for r in roots if r.at_infinity][0]
        finite = [r for r in roots if not r.at_infinity][0]
        np.testing.assert_allclose(at_infinity.coordinates, [0, 1, -1], atol=1e-8)
        np.testing.assert_allclose(finite.affine, [-10, 12], atol=1e-7)
        assert np.max(np.abs(finite.coordinates)) == pytest.approx(1)

    def test_multihom(self):
        system = read_system(TEST_DATA_DIR / "bilinear.txt")
        roots = extract_roots(build_multihom(system, seed=0), seed=0)
        assert len(roots) == 2
        for root in roots:
            assert len(root.block_coordinates()) == 2
        found = [np.concatenate([b / np.linalg.norm(b) for b in root.block_coordinates()]) for root in roots]
        expected = [(1, 2, 1, 0), (0, 1, 1, 0.5)]
        for z in expected:
            assert min(
                max(
                    projective_distance(f[:2], z[:2]),
                    projective_distance(f[2:], z[2:]),
                )
                for f in found
            ) < 1e-8
        assert sum(r.at_infinity for r in roots) == 1

