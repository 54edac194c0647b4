"""Cross-modal retrieval evaluation: ranking, P@K, and MAP.

Queries from one modality are ranked against a gallery from another by
descending cosine similarity (ties broken by ascending gallery index,
so rankings are deterministic). A gallery item is *relevant* to a query
iff their class labels agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadK, NoRelevantItems, ShapeMismatch, ZeroNormRow
from .pmf import MIN_ROW_NORM, EmbeddingBatch


@dataclass(frozen=True)
class RetrievalMetrics:
    """P@K values and MAP for one retrieval direction."""

    direction: str
    p_at: dict[int, float]
    map_score: float


def _as_data(x: EmbeddingBatch | np.ndarray) -> np.ndarray:
    data = x.data if isinstance(x, EmbeddingBatch) else np.asarray(x, dtype=np.float64)
    if data.ndim != 2:
        raise ShapeMismatch(f"expected an (n, d) matrix, got shape {data.shape}")
    return data


def rank_gallery(
    query: EmbeddingBatch | np.ndarray, gallery: EmbeddingBatch | np.ndarray
) -> np.ndarray:
    """Gallery indices per query, best match first.

    Sorting is by descending cosine similarity with stable tie-breaking
    on the gallery index.
    """
    q = _as_data(query)
    g = _as_data(gallery)
    if q.shape[1] != g.shape[1]:
        raise ShapeMismatch(f"feature dims differ: {q.shape[1]} vs {g.shape[1]}")
    qn = np.linalg.norm(q, axis=1, keepdims=True)
    gn = np.linalg.norm(g, axis=1, keepdims=True)
    if np.any(qn < MIN_ROW_NORM) or np.any(gn < MIN_ROW_NORM):
        raise ZeroNormRow("zero-norm row; cosine ranking undefined")
    sim = (q / qn) @ (g / gn).T
    return np.argsort(-sim, axis=1, kind="stable")


def precision_at_k(
    ranked: np.ndarray,
    query_labels: np.ndarray,
    gallery_labels: np.ndarray,
    k: int,
) -> float:
    """Mean over queries of (same-label items in the top k) / k."""
    ranked = np.asarray(ranked)
    query_labels = np.asarray(query_labels)
    gallery_labels = np.asarray(gallery_labels)
    if not (1 <= k <= ranked.shape[1]):
        raise BadK(f"k must be in [1, {ranked.shape[1]}], got {k}")
    hits = gallery_labels[ranked[:, :k]] == query_labels[:, None]
    return float(hits.mean())


def mean_average_precision(
    ranked: np.ndarray, query_labels: np.ndarray, gallery_labels: np.ndarray
) -> float:
    """Mean over queries of average precision over all relevant items.

    AP for one query is ``(1/R) * sum over relevant ranks r of
    (relevant hits at or before r) / r``.
    """
    ranked = np.asarray(ranked)
    query_labels = np.asarray(query_labels)
    gallery_labels = np.asarray(gallery_labels)
    ap_values = []
    for qi in range(ranked.shape[0]):
        relevant = gallery_labels[ranked[qi]] == query_labels[qi]
        total = int(relevant.sum())
        if total == 0:
            raise NoRelevantItems(f"query {qi} has no relevant gallery item")
        positions = np.nonzero(relevant)[0] + 1
        hits = np.arange(1, total + 1)
        ap_values.append(float((hits / positions).sum() / total))
    return float(np.mean(ap_values))


def evaluate_retrieval(
    query: EmbeddingBatch,
    gallery: EmbeddingBatch,
    ks: tuple[int, ...] = (1, 10),
) -> RetrievalMetrics:
    """Rank, then report P@K for each requested K (capped at the gallery
    size) and MAP, labelled ``<query>2<gallery>``."""
    ranked = rank_gallery(query, gallery)
    p_at = {
        k: precision_at_k(ranked, query.labels, gallery.labels, min(k, gallery.n))
        for k in ks
    }
    return RetrievalMetrics(
        direction=f"{query.modality_name}2{gallery.modality_name}",
        p_at=p_at,
        map_score=mean_average_precision(ranked, query.labels, gallery.labels),
    )
