import numpy as np
import pytest
from scipy import stats

from colorconcept.datasets import RatingsTable, builtin_fruit_ratings, builtin_uw58
from colorconcept.evaluation import (EstimateMatrix, estimate_matrix,
                                     evaluate_model, fisher_z_independent,
                                     load_estimates, pearson_r,
                                     save_scatter_data)

UW58 = builtin_uw58()


class TestPearson:
    def test_exact_linearity(self):
        r, p = pearson_r([1, 2, 3], [2, 4, 6])
        assert r == 1.0 and p == 0.0

    def test_half_correlation(self):
        r, _ = pearson_r([1, 2, 3], [1, 3, 2])
        assert r == pytest.approx(0.5)

    def test_perfect_anticorrelation(self):
        x = np.arange(10.0)
        r, p = pearson_r(x, -x)
        assert r == -1.0 and p == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_scipy(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=30)
        y = 0.4 * x + rng.normal(size=30)
        r, p = pearson_r(x, y)
        ref = stats.pearsonr(x, y)
        assert r == pytest.approx(ref.statistic, abs=1e-12)
        assert p == pytest.approx(ref.pvalue, rel=1e-9)

    def test_affine_invariance(self):
        rng = np.random.default_rng(42)
        x = rng.normal(size=25)
        y = rng.normal(size=25)
        r0, _ = pearson_r(x, y)
        r1, _ = pearson_r(3.0 * x + 7.0, y)
        r2, _ = pearson_r(x, 0.5 * y - 2.0)
        assert r0 == pytest.approx(r1, abs=1e-12)
        assert r0 == pytest.approx(r2, abs=1e-12)

    def test_too_short(self):
        with pytest.raises(ValueError, match="3 points"):
            pearson_r([1, 2], [3, 4])

    def test_zero_variance(self):
        with pytest.raises(ValueError, match="variance"):
            pearson_r([1, 1, 1], [1, 2, 3])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            pearson_r([1, 2, 3], [1, 2])


class TestFisherZ:
    def test_sector_vs_ball_benchmark(self):
        z, p = fisher_z_independent(0.72, 696, 0.65, 696)
        assert z == pytest.approx(2.46, abs=0.01)
        assert p == pytest.approx(0.014, abs=0.001)

    def test_combined_vs_sector_benchmark(self):
        z, _ = fisher_z_independent(0.81, 696, 0.72, 696)
        assert z == pytest.approx(4.08, abs=0.01)

    def test_combined_vs_ball_benchmark(self):
        z, p = fisher_z_independent(0.81, 696, 0.65, 696)
        assert z == pytest.approx(6.55, abs=0.01)
        assert p < 0.001

    def test_unequal_sample_sizes_benchmark(self):
        z, p = fisher_z_independent(0.68, 222, 0.81, 696)
        assert abs(z) == pytest.approx(3.84, abs=0.01)
        assert p < 0.001

    def test_identical_inputs_give_zero(self):
        z, p = fisher_z_independent(0.5, 100, 0.5, 100)
        assert z == 0.0
        assert p == 1.0

    def test_antisymmetry(self):
        z1, _ = fisher_z_independent(0.7, 50, 0.3, 80)
        z2, _ = fisher_z_independent(0.3, 80, 0.7, 50)
        assert z1 == pytest.approx(-z2, abs=1e-12)

    def test_degenerate_r(self):
        with pytest.raises(ValueError):
            fisher_z_independent(1.0, 50, 0.5, 50)

    def test_degenerate_n(self):
        with pytest.raises(ValueError):
            fisher_z_independent(0.5, 3, 0.5, 50)


class TestEvaluateModel:
    def _ratings(self, n_concepts=3, seed=0):
        rng = np.random.default_rng(seed)
        concepts = tuple(f"c{i}" for i in range(n_concepts))
        values = rng.uniform(0, 1, size=(n_concepts, 58))
        return RatingsTable(concepts=concepts, colors=UW58, values=values)

    def test_identity_estimates(self):
        ratings = self._ratings()
        est = estimate_matrix(ratings.concepts, UW58, ratings.values)
        report = evaluate_model(est, ratings)
        assert report.overall_r == pytest.approx(1.0)
        assert all(s.sse == 0.0 for s in report.per_concept)

    def test_translation_invariance(self):
        ratings = self._ratings(seed=1)
        est = estimate_matrix(ratings.concepts, UW58, ratings.values + 0.37)
        report = evaluate_model(est, ratings)
        assert report.overall_r == pytest.approx(1.0)
        assert all(s.r == pytest.approx(1.0) for s in report.per_concept)

    def test_fruit_scale_n(self):
        ratings = builtin_fruit_ratings()
        est = estimate_matrix(ratings.concepts, UW58, ratings.values)
        report = evaluate_model(est, ratings)
        assert report.n == 696
        assert len(report.per_concept) == 12
        assert all(s.n == 58 for s in report.per_concept)

    def test_concept_alignment_by_name(self):
        ratings = self._ratings(seed=2)
        shuffled = tuple(reversed(ratings.concepts))
        order = [ratings.concepts.index(c) for c in shuffled]
        est = EstimateMatrix(concepts=shuffled,
                             color_indices=tuple(e.index for e in UW58.entries),
                             values=ratings.values[order])
        report = evaluate_model(est, ratings)
        assert report.overall_r == pytest.approx(1.0)

    def test_concept_mismatch(self):
        ratings = self._ratings()
        est = estimate_matrix(("x", "y", "z"), UW58, ratings.values)
        with pytest.raises(ValueError, match="concept sets"):
            evaluate_model(est, ratings)

    def test_dimension_mismatch(self):
        ratings = self._ratings()
        est = EstimateMatrix(concepts=ratings.concepts,
                             color_indices=(1, 2, 3),
                             values=ratings.values[:, :3])
        with pytest.raises(ValueError, match="color count"):
            evaluate_model(est, ratings)

    def test_report_serialization(self):
        ratings = self._ratings(seed=3)
        est = estimate_matrix(ratings.concepts, UW58, ratings.values)
        report = evaluate_model(est, ratings)
        csv_text = report.to_csv_text()
        assert csv_text.splitlines()[0] == "concept,n,r,p,sse"
        assert csv_text.count("\n") == 1 + 1 + 3  # header + overall + concepts
        assert '"overall"' in report.to_json() or '"r"' in report.to_json()

    def test_estimates_io_round_trip(self, tmp_path):
        ratings = self._ratings(seed=4)
        est = estimate_matrix(ratings.concepts, UW58, ratings.values * 2 - 0.5)
        path = tmp_path / "estimates.csv"
        est.save(path)
        again = load_estimates(path)
        assert again.concepts == est.concepts
        np.testing.assert_array_equal(again.values, est.values)

    def test_scatter_export(self, tmp_path):
        ratings = self._ratings(seed=5)
        est = estimate_matrix(ratings.concepts, UW58, ratings.values)
        written = save_scatter_data(est, ratings, tmp_path)
        assert len(written) == 3
        text = written[0].read_text().splitlines()
        assert text[0] == "color_index,human,estimate"
        assert len(text) == 59
