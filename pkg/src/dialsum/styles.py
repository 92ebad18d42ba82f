"""Speaker-style fingerprinting: tag documents, tf-idf, k-means, 2-D PCA.

A speaker's "style document" is the multiset of POS tags over every
utterance of that speaker name across the whole corpus. Styles are weighted
with tf-idf (tf as relative frequency, idf as ln(n / (1 + df)) clamped at
zero, so a tag present in every style scores exactly 0), grouped with
seeded Lloyd k-means, projected to 2-D with PCA, and summarized by ranking
tags on the sample standard deviation of their per-cluster mean weights.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus
from .errors import DegenerateDataError
from .tokenizer import TAGS, TAG_TO_ID

N_FEATURES = len(TAGS)


@dataclass
class StyleDocument:
    speaker: str
    tags: Counter
    total: int


@dataclass
class TfIdfMatrix:
    speakers: list[str]
    weights: np.ndarray   # (n_styles, 25)

    def __post_init__(self):
        if self.weights.shape != (len(self.speakers), N_FEATURES):
            raise ValueError("weight matrix shape does not match speakers x tags")


@dataclass
class ClusterAssignment:
    labels: np.ndarray      # (n_styles,) cluster id per row
    centroids: np.ndarray   # (K, 25)
    distortion_trace: list[float]


@dataclass
class Projection2D:
    coords: np.ndarray              # (n_styles, 2)
    explained_variance: tuple[float, float]
    components: np.ndarray          # (2, 25) orthonormal rows


def build_styles(corpus: Corpus) -> list[StyleDocument]:
    """One pooled tag document per distinct speaker name, sorted by name."""
    pools: dict[str, Counter] = {}
    for d in corpus:
        for i, turn in enumerate(d.turns):
            if turn.pos_tags is None:
                raise ValueError(
                    f"dialogue {d.id!r}: turn {i} is untagged; run preprocessing first"
                )
            name = d.speaker_name(turn.speaker_id)
            pool = pools.setdefault(name, Counter())
            pool.update(t for t in turn.pos_tags if t in TAG_TO_ID)
    docs = []
    for name in sorted(pools):
        counts = pools[name]
        total = sum(counts.values())
        if total >= 1:
            docs.append(StyleDocument(speaker=name, tags=counts, total=total))
    return docs


def tfidf(styles: list[StyleDocument]) -> TfIdfMatrix:
    """Relative-frequency tf times ln(n / (1 + df)) idf, clamped at zero."""
    if not styles:
        raise ValueError("tfidf needs at least one style document")
    n = len(styles)
    df = np.zeros(N_FEATURES)
    for s in styles:
        for tag in s.tags:
            df[TAG_TO_ID[tag]] += 1
    idf = np.maximum(0.0, np.log(n / (1.0 + df)))
    weights = np.zeros((n, N_FEATURES))
    for i, s in enumerate(styles):
        for tag, count in s.tags.items():
            j = TAG_TO_ID[tag]
            weights[i, j] = (count / s.total) * idf[j]
    return TfIdfMatrix(speakers=[s.speaker for s in styles], weights=weights)


def kmeans(matrix: TfIdfMatrix, k: int, seed: int = 0, max_iter: int = 100) -> ClusterAssignment:
    """Lloyd's algorithm seeded with k distinct sample rows.

    Assignment uses squared Euclidean distance with ties to the lower
    centroid index; an emptied cluster keeps its previous centroid.
    """
    x = matrix.weights
    n = x.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    centroids = x[rng.choice(n, size=k, replace=False)].copy()
    labels = np.zeros(n, dtype=np.int64)
    trace: list[float] = []
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(-1)
        new_labels = d2.argmin(1)
        trace.append(float(d2[np.arange(n), new_labels].sum()))
        for c in range(k):
            members = x[new_labels == c]
            if len(members):
                centroids[c] = members.mean(0)
        if np.array_equal(new_labels, labels) and len(trace) > 1:
            labels = new_labels
            break
        labels = new_labels
    return ClusterAssignment(labels=labels, centroids=centroids, distortion_trace=trace)


def pca_2d(matrix: TfIdfMatrix) -> Projection2D:
    """Project mean-centered styles onto the top-2 principal directions.

    The sign of each component is fixed by making its largest-magnitude
    entry positive. Zero total variance raises DegenerateDataError.
    """
    x = matrix.weights
    if x.shape[0] < 3:
        raise ValueError(f"pca_2d needs at least 3 styles, got {x.shape[0]}")
    centered = x - x.mean(0)
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    total_var = float((svals**2).sum())
    if total_var <= 1e-12:
        raise DegenerateDataError("style matrix has zero variance; nothing to project")
    components = vt[:2].copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    coords = centered @ components.T
    var = svals**2 / total_var
    explained = (float(var[0]), float(var[1]) if len(var) > 1 else 0.0)
    return Projection2D(coords=coords, explained_variance=explained, components=components)


@dataclass(frozen=True)
class FeatureRankRow:
    tag: str
    cluster_means: tuple[float, ...]
    std: float


def rank_features_by_std(
    assignment: ClusterAssignment, matrix: TfIdfMatrix, top_k: int | None = None
) -> list[FeatureRankRow]:
    """Tags ranked by the spread of their mean tf-idf weight across clusters.

    Spread is the sample standard deviation (ddof=1) over the per-cluster
    means; single-cluster assignments get std 0. Ties keep tag-inventory
    order.
    """
    if len(assignment.labels) != matrix.weights.shape[0]:
        raise ValueError("assignment does not cover the weight matrix rows")
    k = assignment.centroids.shape[0]
    means = np.zeros((k, N_FEATURES))
    for c in range(k):
        members = matrix.weights[assignment.labels == c]
        if len(members):
            means[c] = members.mean(0)
    if k > 1:
        stds = means.std(0, ddof=1)
    else:
        stds = np.zeros(N_FEATURES)
    order = sorted(range(N_FEATURES), key=lambda j: (-stds[j], j))
    if top_k is not None:
        order = order[:top_k]
    return [
        FeatureRankRow(
            tag=TAGS[j],
            cluster_means=tuple(float(means[c, j]) for c in range(k)),
            std=float(stds[j]),
        )
        for j in order
    ]


def distortion(matrix: TfIdfMatrix, labels: np.ndarray, centroids: np.ndarray) -> float:
    """Sum of squared distances from each row to its assigned centroid."""
    diff = matrix.weights - centroids[labels]
    return float((diff * diff).sum())


def style_counts_table(styles: list[StyleDocument]) -> list[list]:
    rows = []
    for s in styles:
        rows.append([s.speaker, s.total] + [s.tags.get(t, 0) for t in TAGS])
    return rows
