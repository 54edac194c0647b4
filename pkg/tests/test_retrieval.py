import numpy as np
import pytest

from csalign import (
    EmbeddingBatch,
    evaluate_retrieval,
    mean_average_precision,
    precision_at_k,
    rank_gallery,
)
from csalign.errors import BadK, NoRelevantItems, ShapeMismatch


class TestRankGallery:
    def test_query_vector_in_gallery_ranks_first(self):
        rng = np.random.default_rng(0)
        gallery = rng.normal(size=(6, 4))
        ranked = rank_gallery(gallery[[2]], gallery)
        assert ranked[0, 0] == 2

    def test_ties_broken_by_lower_index(self):
        gallery = np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 1.0]])  # rows 0,1 parallel
        ranked = rank_gallery(np.array([[1.0, 0.0]]), gallery)
        assert ranked[0].tolist() == [0, 1, 2]

    def test_matches_bruteforce_sort(self):
        rng = np.random.default_rng(1)
        query, gallery = rng.normal(size=(5, 3)), rng.normal(size=(7, 3))
        sim = (query / np.linalg.norm(query, axis=1, keepdims=True)) @ (
            gallery / np.linalg.norm(gallery, axis=1, keepdims=True)
        ).T
        ranked = rank_gallery(query, gallery)
        for qi in range(5):
            expected = sorted(range(7), key=lambda j: (-sim[qi, j], j))
            assert ranked[qi].tolist() == expected

    def test_dim_mismatch(self):
        with pytest.raises(ShapeMismatch):
            rank_gallery(np.ones((2, 3)), np.ones((2, 4)))


class TestPrecisionAtK:
    def test_perfect_clustering(self):
        ranked = np.array([[0, 1], [1, 0]])
        assert precision_at_k(ranked, [0, 1], [0, 1], 1) == 1.0

    def test_no_matches(self):
        ranked = np.array([[0, 1], [0, 1]])
        assert precision_at_k(ranked, [5, 6], [0, 1], 2) == 0.0

    def test_hand_two_thirds(self):
        ranked = np.array([[0], [1], [2]])
        value = precision_at_k(ranked, [0, 1, 9], [0, 1, 2], 1)
        assert value == pytest.approx(2 / 3, abs=1e-12)

    def test_bad_k(self):
        with pytest.raises(BadK):
            precision_at_k(np.array([[0, 1]]), [0], [0, 1], 3)
        with pytest.raises(BadK):
            precision_at_k(np.array([[0, 1]]), [0], [0, 1], 0)


class TestMeanAveragePrecision:
    def test_all_relevant_first(self):
        ranked = np.array([[0, 1, 2, 3]])
        assert mean_average_precision(ranked, [1], [1, 1, 0, 0]) == 1.0

    def test_single_relevant_at_rank_two(self):
        ranked = np.array([[0, 1, 2]])
        assert mean_average_precision(ranked, [7], [0, 7, 0]) == pytest.approx(0.5)

    def test_hand_value_relevant_at_ranks_one_and_three(self):
        ranked = np.array([[0, 1, 2, 3]])
        value = mean_average_precision(ranked, [1], [1, 0, 1, 0])
        assert value == pytest.approx((1.0 + 2.0 / 3.0) / 2.0, abs=1e-12)

    def test_no_relevant_items_raises(self):
        with pytest.raises(NoRelevantItems):
            mean_average_precision(np.array([[0, 1]]), [9], [0, 1])


class TestInvariances:
    def test_orthogonal_rotation_preserves_metrics(self):
        rng = np.random.default_rng(2)
        q, g = rng.normal(size=(6, 5)), rng.normal(size=(10, 5))
        q_labels, g_labels = rng.integers(0, 3, 6), rng.integers(0, 3, 10)
        rotation, _ = np.linalg.qr(rng.normal(size=(5, 5)))
        base, rotated = rank_gallery(q, g), rank_gallery(q @ rotation, g @ rotation)
        assert np.array_equal(base, rotated)
        for k in (1, 5):
            assert precision_at_k(base, q_labels, g_labels, k) == pytest.approx(
                precision_at_k(rotated, q_labels, g_labels, k), abs=1e-12
            )
        assert mean_average_precision(base, q_labels, g_labels) == pytest.approx(
            mean_average_precision(rotated, q_labels, g_labels), abs=1e-12
        )

    def test_per_row_rescaling_preserves_ranking(self):
        rng = np.random.default_rng(3)
        q, g = rng.normal(size=(5, 4)), rng.normal(size=(8, 4))
        scales_q = rng.uniform(0.1, 10.0, size=(5, 1))
        scales_g = rng.uniform(0.1, 10.0, size=(8, 1))
        assert np.array_equal(rank_gallery(q, g), rank_gallery(q * scales_q, g * scales_g))


class TestEvaluateRetrieval:
    def test_direction_label_and_caps(self):
        rng = np.random.default_rng(4)
        labels = np.array([0, 0, 1, 1])
        q = EmbeddingBatch(rng.normal(size=(4, 3)), labels, "img")
        g = EmbeddingBatch(rng.normal(size=(4, 3)), labels, "txt")
        metrics = evaluate_retrieval(q, g, ks=(1, 10))
        assert metrics.direction == "img2txt"
        assert set(metrics.p_at) == {1, 10}
        assert 0.0 <= metrics.map_score <= 1.0
