"""Isolation forest: path lengths, scores, determinism, invariants."""

import numpy as np

from pedspawn.isoforest import (anomaly_score, anomaly_scores,
                                average_path_length, fit_isolation_forest,
                                harmonic, path_lengths)


def cluster_with_outliers(seed=0, n_in=500, n_out=10, dist=12.0):
    rng = np.random.default_rng(seed)
    inliers = rng.normal(0.0, 1.0, size=(n_in, 3))
    direction = rng.normal(size=(n_out, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    outliers = direction * dist + rng.normal(0.0, 0.5, size=(n_out, 3))
    return np.vstack([inliers, outliers])


class TestPathLengthFormula:
    def test_harmonic_exact(self):
        # H(1) = 1, H(2) = 3/2, H(4) = 1 + 1/2 + 1/3 + 1/4 = 25/12.
        assert harmonic(0) == 0.0
        assert harmonic(1) == 1.0
        np.testing.assert_allclose(harmonic(2), 1.5, rtol=0, atol=1e-15)
        np.testing.assert_allclose(harmonic(4), 25.0 / 12.0, rtol=0, atol=1e-15)

    def test_average_path_length_small_n(self):
        # c(2) = 2 H(1) - 2*(1/2) = 1 exactly; an approximation via
        # ln(n) + gamma would give 2*(ln 1 + 0.577...) - 1 = 0.154, so this
        # pins the exact-harmonic variant.
        assert average_path_length(0) == 0.0
        assert average_path_length(1) == 0.0
        assert average_path_length(2) == 1.0
        # c(3) = 2 H(2) - 2*(2/3) = 3 - 4/3 = 5/3.
        np.testing.assert_allclose(average_path_length(3), 5.0 / 3.0,
                                   rtol=0, atol=1e-15)

    def test_monotone_in_n(self):
        vals = [average_path_length(n) for n in range(2, 300)]
        assert all(b > a for a, b in zip(vals, vals[1:]))


class TestFit:
    def test_model_shape(self):
        pts = cluster_with_outliers()
        model = fit_isolation_forest(pts, t=25, subsample=64, seed=3)
        assert len(model.trees) == 25
        assert model.subsample_size == 64
        # ceil(log2 64) = 6.
        assert model.height_limit == 6
        assert model.n_features == 3

    def test_leaves_cover_subsample(self):
        # Every tree partitions its subsample: leaf sizes sum to psi and
        # no node exceeds the height cap.
        pts = cluster_with_outliers(seed=5)
        model = fit_isolation_forest(pts, t=10, subsample=128, seed=9)
        for tree in model.trees:
            leaves = tree.feature < 0
            assert tree.leaf_size[leaves].sum() == 128
            assert (tree.leaf_size[leaves] >= 1).all()
            assert tree.depth.max() <= model.height_limit

    def test_small_dataset_uses_all_points(self):
        pts = np.array([[0.0], [1.0], [2.0], [3.0]])
        model = fit_isolation_forest(pts, t=5, subsample=256, seed=0)
        assert model.subsample_size == 4
        assert model.height_limit == 2

    def test_too_few_points_rejected(self):
        try:
            fit_isolation_forest(np.array([[1.0]]), t=3, subsample=8, seed=0)
        except ValueError:
            return
        raise AssertionError("expected ValueError")


class TestScores:
    def test_scores_in_open_unit_interval(self):
        pts = cluster_with_outliers(seed=1)
        model = fit_isolation_forest(pts, t=50, subsample=128, seed=2)
        s = anomaly_scores(model, pts)
        assert (s > 0.0).all() and (s < 1.0).all()

    def test_identical_points_score_half(self):
        # All-duplicate data cannot split: the root is a leaf of size psi,
        # so E[h] = c(psi) and the score is exactly 2^-1.
        pts = np.ones((50, 3)) * 4.2
        model = fit_isolation_forest(pts, t=10, subsample=32, seed=0)
        s = anomaly_scores(model, pts)
        np.testing.assert_allclose(s, 0.5, rtol=0, atol=1e-15)

    def test_outliers_outrank_inliers(self):
        pts = cluster_with_outliers(seed=7)
        model = fit_isolation_forest(pts, t=100, subsample=256, seed=11)
        s = anomaly_scores(model, pts)
        top10 = set(np.argsort(s)[-10:])
        assert top10 == set(range(500, 510))

    def test_center_scores_below_far_point(self):
        pts = cluster_with_outliers(seed=3)
        model = fit_isolation_forest(pts, t=60, subsample=128, seed=4)
        assert anomaly_score(model, [0.0, 0.0, 0.0]) < anomaly_score(
            model, [20.0, 20.0, 20.0])

    def test_score_matches_path_length_identity(self):
        pts = cluster_with_outliers(seed=9)
        model = fit_isolation_forest(pts, t=20, subsample=64, seed=13)
        q = pts[:17]
        s = anomaly_scores(model, q)
        h = path_lengths(model, q)
        np.testing.assert_allclose(
            s, 2.0 ** (-h / average_path_length(64)), rtol=0, atol=1e-14)


class TestDeterminism:
    def test_same_seed_same_scores(self):
        pts = cluster_with_outliers(seed=21)
        a = anomaly_scores(fit_isolation_forest(pts, t=20, subsample=64, seed=5), pts)
        b = anomaly_scores(fit_isolation_forest(pts, t=20, subsample=64, seed=5), pts)
        np.testing.assert_array_equal(a, b)

    def test_different_seed_differs(self):
        pts = cluster_with_outliers(seed=21)
        a = anomaly_scores(fit_isolation_forest(pts, t=20, subsample=64, seed=5), pts)
        b = anomaly_scores(fit_isolation_forest(pts, t=20, subsample=64, seed=6), pts)
        assert not np.array_equal(a, b)

    def test_input_order_irrelevant(self):
        # Training canonicalizes point order, so a shuffled copy yields the
        # same model and the same score for the same query.
        pts = cluster_with_outliers(seed=2)
        rng = np.random.default_rng(0)
        shuffled = pts[rng.permutation(len(pts))]
        m1 = fit_isolation_forest(pts, t=15, subsample=64, seed=8)
        m2 = fit_isolation_forest(shuffled, t=15, subsample=64, seed=8)
        q = np.array([[0.5, -0.2, 1.0], [11.0, 3.0, -7.0]])
        np.testing.assert_array_equal(anomaly_scores(m1, q), anomaly_scores(m2, q))
