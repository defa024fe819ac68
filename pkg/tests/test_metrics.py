"""Tests for evaluation metrics and the metric-trace CSV format."""
import itertools

import numpy as np
import pytest

from kfunmix.datamodel import ConcentrationMatrix, EndmemberMatrix, SpectraMatrix
from kfunmix.metrics import (
    MetricRecord,
    align_components,
    asad,
    pca_lower_bound,
    rmse_concentrations,
    read_trace_csv,
    reconstruction_error,
    sad,
    write_trace_csv,
)


class TestSad:
    def test_identical_vectors(self):
        """arccos loses precision near cosine 1, so zero is only approximate."""
        assert sad(np.array([1.0, 2.0]), np.array([2.0, 4.0])) < 1e-5

    def test_orthogonal_vectors(self):
        assert abs(sad(np.array([1.0, 0.0]), np.array([0.0, 3.0])) - 90.0) < 1e-12

    def test_forty_five_degrees(self):
        assert abs(sad(np.array([1.0, 0.0]), np.array([1.0, 1.0])) - 45.0) < 1e-12

    def test_opposite_vectors_clamp_to_180(self):
        assert abs(sad(np.array([1.0, 1.0]), np.array([-1.0, -1.0])) - 180.0) < 1e-5

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError, match="zero vectors"):
            sad(np.zeros(3), np.ones(3))

    def test_rounding_near_parallel_stays_finite(self):
        v = np.array([1.0, 1e-8])
        assert 0.0 <= sad(v, v * (1.0 + 1e-15)) < 1e-3


class TestAlignComponents:
    def test_swapped_columns(self):
        truth = np.array([[1.0, 0.0], [0.0, 1.0], [0.2, 0.8]])
        est = truth[:, [1, 0]]
        perm = align_components(est, truth)
        np.testing.assert_array_equal(perm, [1, 0])
        for i in range(2):
            assert sad(est[:, perm[i]], truth[:, i]) < 1e-12

    def test_single_component(self):
        np.testing.assert_array_equal(
            align_components(np.ones((4, 1)), np.ones((4, 1))), [0]
        )

    def test_minimizes_total_angle_over_all_permutations(self):
        """Exhaustive check of the assignment against all 4! pairings."""
        rng = np.random.default_rng(0)
        est = rng.uniform(0.1, 1.0, size=(12, 4))
        truth = rng.uniform(0.1, 1.0, size=(12, 4))
        perm = align_components(est, truth)
        got = sum(sad(est[:, perm[i]], truth[:, i]) for i in range(4))
        best = min(
            sum(sad(est[:, p[i]], truth[:, i]) for i in range(4))
            for p in itertools.permutations(range(4))
        )
        assert abs(got - best) < 1e-10

    def test_count_mismatch(self):
        with pytest.raises(ValueError, match="component counts differ"):
            align_components(np.ones((4, 2)), np.ones((4, 3)))


class TestAsad:
    def test_zero_for_permuted_scaled_copy(self):
        rng = np.random.default_rng(1)
        truth = rng.uniform(0.1, 1.0, size=(20, 3))
        est = truth[:, [2, 0, 1]] * np.array([1.0, 3.0, 0.5])
        assert asad(est, truth) < 1e-5

    def test_known_average(self):
        truth = np.array([[1.0, 0.0], [0.0, 1.0]])
        est = np.array([[1.0, 1.0], [0.0, 1.0]])  # 0 and 45 degrees
        assert abs(asad(est, truth) - 22.5) < 1e-10

    def test_accepts_endmember_matrices(self):
        m = EndmemberMatrix(np.array([[1.0, 0.2], [0.1, 1.0]]))
        assert asad(m, m) < 1e-12


class TestRmse:
    def test_zero_for_aligned_copy(self):
        rng = np.random.default_rng(2)
        truth = rng.dirichlet(np.ones(3), size=10)
        est = truth[:, [1, 2, 0]]
        assert rmse_concentrations(est, truth, align_components(est, truth)) == 0.0

    def test_constant_offset_value(self):
        truth = np.zeros((4, 5))
        est = np.full((4, 5), 0.1)
        got = rmse_concentrations(est, truth, np.arange(5))
        assert abs(got - 0.1) < 1e-12

    def test_matches_formula(self):
        rng = np.random.default_rng(3)
        truth = rng.dirichlet(np.ones(3), size=7)
        est = rng.dirichlet(np.ones(3), size=7)
        perm = np.array([2, 0, 1])
        expected = np.sqrt(np.sum((truth - est[:, perm]) ** 2) / truth.size)
        assert abs(rmse_concentrations(est, truth, perm) - expected) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shapes differ"):
            rmse_concentrations(np.ones((3, 2)), np.ones((4, 2)), np.arange(2))


class TestReconstructionError:
    def test_exact_model_is_zero(self):
        rng = np.random.default_rng(4)
        c = rng.dirichlet(np.ones(3), size=8)
        s = rng.uniform(0.1, 1.0, size=(12, 3))
        assert reconstruction_error(c @ s.T, c, s) < 1e-14

    def test_zero_estimate_gives_one(self):
        y = np.ones((3, 4))
        c = np.full((3, 2), 0.5)
        s = np.full((4, 2), 1e-30)
        assert abs(reconstruction_error(y, c, s) - 1.0) < 1e-12

    def test_matches_formula(self):
        rng = np.random.default_rng(5)
        y = rng.uniform(size=(6, 9))
        c = rng.dirichlet(np.ones(2), size=6)
        s = rng.uniform(size=(9, 2))
        expected = np.linalg.norm(y - c @ s.T) / np.linalg.norm(y)
        assert abs(reconstruction_error(y, c, s) - expected) < 1e-14

    def test_accepts_wrappers(self):
        y = SpectraMatrix(np.array([[1.0, 0.0], [0.0, 1.0]]))
        c = ConcentrationMatrix(np.eye(2))
        s = EndmemberMatrix(np.eye(2))
        assert reconstruction_error(y, c, s) < 1e-14

    def test_zero_data_rejected(self):
        with pytest.raises(ValueError, match="all-zero data"):
            reconstruction_error(np.zeros((2, 3)), np.ones((2, 1)), np.ones((3, 1)))


class TestPcaLowerBound:
    def test_exact_rank_k_data(self):
        rng = np.random.default_rng(6)
        c = rng.uniform(size=(20, 3))
        s = rng.uniform(size=(15, 3))
        assert pca_lower_bound(c @ s.T, 3) < 1e-12

    def test_full_rank_projection_is_lossless(self):
        rng = np.random.default_rng(7)
        y = rng.uniform(size=(5, 8))
        assert pca_lower_bound(y, 5) < 1e-12

    def test_matches_svd_tail_identity(self):
        """The relative error equals the tail singular-value energy ratio."""
        rng = np.random.default_rng(8)
        y = rng.normal(size=(10, 14))
        sv = np.linalg.svd(y, compute_uv=False)
        for k in (1, 3, 7):
            expected = np.sqrt(np.sum(sv[k:] ** 2)) / np.linalg.norm(y)
            assert abs(pca_lower_bound(y, k) - expected) < 1e-12

    def test_bounds_any_factorization(self):
        """No rank-K mixing model can beat the SVD truncation."""
        rng = np.random.default_rng(9)
        y = rng.uniform(size=(25, 12))
        c = rng.dirichlet(np.ones(3), size=25)
        s = rng.uniform(size=(12, 3))
        assert pca_lower_bound(y, 3) <= reconstruction_error(y, c, s) + 1e-12

    def test_centered_variant_differs(self):
        rng = np.random.default_rng(10)
        y = rng.uniform(size=(30, 10)) + 5.0
        assert pca_lower_bound(y, 2, centered=True) != pca_lower_bound(y, 2)

    def test_range_validation(self):
        y = np.ones((4, 6))
        with pytest.raises(ValueError, match=r"n_components must be in \[1, 4\]"):
            pca_lower_bound(y, 5)
        with pytest.raises(ValueError, match="n_components"):
            pca_lower_bound(y, 0)

    def test_accepts_spectra_matrix(self):
        y = SpectraMatrix(np.array([[1.0, 2.0], [2.0, 4.0]]))
        assert pca_lower_bound(y, 1) < 1e-12


class TestMetricRecord:
    def test_optional_fields(self):
        rec = MetricRecord(t=5, asad_deg=None, rmse=None, re=0.2, wall_ms=1.5)
        assert rec.asad_deg is None

    def test_validation(self):
        with pytest.raises(ValueError, match="t must be"):
            MetricRecord(t=0, asad_deg=None, rmse=None, re=None, wall_ms=0.0)
        with pytest.raises(ValueError, match=r"asad_deg must be in \[0, 180\]"):
            MetricRecord(t=1, asad_deg=181.0, rmse=None, re=None, wall_ms=0.0)
        with pytest.raises(ValueError, match="rmse"):
            MetricRecord(t=1, asad_deg=None, rmse=-0.1, re=None, wall_ms=0.0)
        with pytest.raises(ValueError, match="re must be"):
            MetricRecord(t=1, asad_deg=None, rmse=None, re=-0.1, wall_ms=0.0)
        with pytest.raises(ValueError, match="wall_ms"):
            MetricRecord(t=1, asad_deg=None, rmse=None, re=None, wall_ms=-1.0)


class TestTraceCsv:
    def records(self):
        return [
            MetricRecord(t=31, asad_deg=12.5, rmse=0.08, re=0.15, wall_ms=2.25),
            MetricRecord(t=32, asad_deg=None, rmse=None, re=None, wall_ms=1.75),
        ]

    def test_round_trip_with_comments(self, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace_csv(self.records(), path, comments={"seed": "0", "eta": "87"})
        records, comments = read_trace_csv(path)
        assert comments == {"seed": "0", "eta": "87"}
        assert records[0].t == 31
        assert records[0].asad_deg == 12.5
        assert records[1].asad_deg is None
        assert records[1].rmse is None
        assert records[1].wall_ms == 1.75

    def test_comment_keys_sorted_in_file(self, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace_csv(self.records(), path, comments={"b": "2", "a": "1"})
        lines = path.read_text().splitlines()
        assert lines[0] == "# a=1"
        assert lines[1] == "# b=2"
        assert lines[2] == "t,asad_deg,rmse,re,wall_ms"

    def test_missing_values_serialized_as_nan(self, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace_csv(self.records(), path)
        assert "32,nan,nan,nan,1.75" in path.read_text()

    def test_unexpected_header(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("time,asad\n1,2\n")
        with pytest.raises(ValueError, match="line 1: unexpected header"):
            read_trace_csv(path)

    def test_field_count_enforced(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("t,asad_deg,rmse,re,wall_ms\n31,1.0,2.0\n")
        with pytest.raises(ValueError, match="line 2: expected 5 fields"):
            read_trace_csv(path)
