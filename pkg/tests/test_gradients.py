import numpy as np
import pytest

from csalign import (
    LOSS_KINDS,
    EmbeddingBatch,
    MatchStrategy,
    ModalityRing,
    central_difference,
    finite_diff_gradient,
    loss_gradient,
    max_relative_error,
)
from csalign.errors import ConfigError, NonFinitePerturbation


def random_ring(seed, m=2, n=8, d=4, strategy=MatchStrategy.MIXED):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 3, size=n)
    batches = tuple(
        EmbeddingBatch(rng.normal(size=(n, d)), labels, chr(65 + i)) for i in range(m)
    )
    return ModalityRing(batches, strategy)


def ring_for(kind, seed, n=8, d=4):
    return random_ring(seed, m=2 if kind in ("bimodal_cs", "kl", "mmd", "coral") else 3, n=n, d=d)


class TestCentralDifferenceOracle:
    def test_quadratic_self_test(self):
        # d/dx ||x||^2 = 2x, exactly recovered by central differences
        rng = np.random.default_rng(0)
        x = rng.normal(size=(4, 3))
        grads = central_difference(lambda arrays: float((arrays[0] ** 2).sum()), [x])
        assert np.abs(grads[0] - 2 * x).max() <= 1e-9

    def test_step_robustness(self):
        ring = random_ring(1)
        g5 = finite_diff_gradient("bimodal_cs", ring, step=1e-5)
        g6 = finite_diff_gradient("bimodal_cs", ring, step=1e-6)
        assert max_relative_error(g5, g6) <= 1e-4

    def test_non_finite_base_rejected(self):
        with pytest.raises(NonFinitePerturbation):
            central_difference(lambda arrays: float("nan"), [np.ones((2, 2))])


class TestAnalyticVsFiniteDifference:
    @pytest.mark.parametrize("kind", LOSS_KINDS)
    def test_matches_oracle(self, kind):
        shapes = [(4, 2), (8, 4), (16, 8), (8, 2), (4, 8)]
        for seed, (n, d) in enumerate(shapes):
            ring = ring_for(kind, seed, n=n, d=d)
            value, analytic = loss_gradient(kind, ring)
            numeric = finite_diff_gradient(kind, ring)
            assert max_relative_error(analytic, numeric) <= 1e-5, (kind, seed, n, d)
            assert np.isfinite(value)

    @pytest.mark.parametrize("kind", LOSS_KINDS)
    def test_value_matches_forward_operation(self, kind):
        from csalign import bimodal_cmpm_cs, coral_loss, gcs_ring_loss, mmd_squared, pairwise_sum_loss

        ring = ring_for(kind, 7)
        value, _ = loss_gradient(kind, ring)
        forward = {
            "bimodal_cs": lambda: bimodal_cmpm_cs(*ring.batches).total,
            "gcs_ring": lambda: gcs_ring_loss(ring).total,
            "pairwise_cs": lambda: pairwise_sum_loss(ring).total,
            "kl": lambda: pairwise_sum_loss(ring, measure="kl").total,
            "mmd": lambda: mmd_squared(ring.batches[0], ring.batches[1]),
            "coral": lambda: coral_loss(ring.batches[0], ring.batches[1]),
        }[kind]()
        assert value == pytest.approx(forward, abs=1e-12)


class TestGradientStructure:
    def test_stationary_at_perfect_alignment(self):
        # identical constant rows, one class: loss 0 at an interior minimum
        data = np.tile([1.0, 2.0], (4, 1))
        labels = np.zeros(4, dtype=int)
        ring = ModalityRing(
            (EmbeddingBatch(data.copy(), labels, "A"), EmbeddingBatch(data.copy(), labels, "B"))
        )
        value, bundle = loss_gradient("bimodal_cs", ring)
        assert abs(value) <= 1e-9
        assert max(np.linalg.norm(g) for g in bundle) <= 1e-6

    def test_gradient_orthogonal_to_embedding_rows(self):
        # cosine is scale free per row, so grads have no radial component
        for kind in ("bimodal_cs", "gcs_ring", "pairwise_cs", "kl"):
            ring = ring_for(kind, 23)
            _, bundle = loss_gradient(kind, ring)
            for grad, batch in zip(bundle, ring.batches):
                inner = np.abs((grad * batch.data).sum(axis=1))
                bound = 1e-8 * np.linalg.norm(grad, axis=1) * np.linalg.norm(batch.data, axis=1)
                assert np.all(inner <= bound + 1e-15)

    def test_mixed_gradient_is_sum_of_unidirectional(self):
        base = random_ring(29, m=3)
        _, mixed = loss_gradient("gcs_ring", base)
        _, cw = loss_gradient("gcs_ring", ModalityRing(base.batches, MatchStrategy.CLOCKWISE))
        _, ccw = loss_gradient(
            "gcs_ring", ModalityRing(base.batches, MatchStrategy.COUNTERCLOCKWISE)
        )
        for gm, gc, gw in zip(mixed, cw, ccw):
            assert np.abs(gm - gc - gw).max() <= 1e-10

    def test_mmd_median_bandwidth_frozen_consistently(self):
        # same frozen sigma in analytic and oracle paths
        ring = random_ring(31, m=2)
        _, analytic = loss_gradient("mmd", ring)
        numeric = finite_diff_gradient("mmd", ring)
        assert max_relative_error(analytic, numeric) <= 1e-5

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError):
            loss_gradient("hinge", random_ring(1))

    def test_pair_only_kinds_reject_m3(self):
        ring = random_ring(2, m=3)
        for kind in ("bimodal_cs", "mmd", "coral"):
            with pytest.raises(ConfigError):
                loss_gradient(kind, ring)
