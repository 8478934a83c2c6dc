"""Anomaly scorers: OOV detector, rarity model, k-means, isolation forest.

All scorers share one contract: fit on training data, then return one
finite score per document where larger means more anomalous.  Fitted
models are immutable; scoring a document never looks at other documents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .vectorize import DocTermMatrix, Vocabulary, Weighting


def _check_columns(expected: int, docs: DocTermMatrix, what: str) -> None:
    if docs.n_terms != expected:
        raise ValueError(f"{what}: matrix has {docs.n_terms} columns, expected {expected}")


# ---------------------------------------------------------------------------
# Out-of-vocabulary detector
# ---------------------------------------------------------------------------

def oovd_score(v: Vocabulary, docs: DocTermMatrix) -> np.ndarray:
    """Number of out-of-vocabulary terms per document.

    Computed as original token count minus the count-matrix row sum, which
    is orders of magnitude faster than matching terms one by one.  Only
    meaningful when the vocabulary was fitted on anomaly-free data.
    """
    if docs.weighting is not Weighting.COUNT:
        raise ValueError(f"oovd_score needs a Count matrix, got {docs.weighting.value}")
    _check_columns(v.n_terms, docs, "oovd_score")
    return docs.doc_token_totals.astype(np.float64) - docs.row_sums()


# ---------------------------------------------------------------------------
# Rarity model
# ---------------------------------------------------------------------------

@dataclass
class RarityModel:
    """Per-column rarity: -ln(term occurrence share in the training corpus)."""

    rarity: np.ndarray


def rm_fit(v: Vocabulary) -> RarityModel:
    if v.corpus_total <= 0:
        raise ValueError("rarity model needs a non-empty training corpus")
    shares = v.term_total / float(v.corpus_total)
    return RarityModel(rarity=-np.log(shares))


def rm_score(m: RarityModel, docs: DocTermMatrix) -> np.ndarray:
    """Tf-idf weighted rarity per document, divided by its token count.

    The denominator is the document's original token count, OOV tokens
    included.  OOV terms contribute nothing to the numerator either, which
    is the model's known blind spot and the OOV detector's niche.  Empty
    documents score 0.
    """
    if docs.weighting is not Weighting.TFIDF:
        raise ValueError(f"rm_score needs a TfIdf matrix, got {docs.weighting.value}")
    _check_columns(len(m.rarity), docs, "rm_score")
    dots = docs.matrix @ m.rarity
    denom = docs.doc_token_totals.astype(np.float64)
    return np.divide(dots, denom, out=np.zeros_like(dots), where=denom > 0)


# ---------------------------------------------------------------------------
# K-means
# ---------------------------------------------------------------------------

@dataclass
class KMeansModel:
    k: int
    centroids: np.ndarray
    seed: int


def _sq_distances(X: sp.csr_matrix, x_sq: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances via |x|^2 + |c|^2 - 2 x.c, clipped at 0."""
    c_sq = np.einsum("ij,ij->i", centroids, centroids)
    cross = X @ centroids.T
    if sp.issparse(cross):
        cross = np.asarray(cross.todense())
    d2 = x_sq[:, None] + c_sq[None, :] - 2.0 * cross
    np.maximum(d2, 0.0, out=d2)
    return d2


def _plus_plus_init(
    X: sp.csr_matrix, x_sq: np.ndarray, k: int, rng: np.random.Generator
) -> np.ndarray:
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    centroids = np.zeros((k, X.shape[1]))
    centroids[0] = X[chosen[0]].toarray().ravel()
    d2 = _sq_distances(X, x_sq, centroids[:1]).ravel()
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # all remaining mass sits on already-chosen points
            remaining = np.setdiff1d(np.arange(n), np.asarray(chosen))
            idx = int(rng.choice(remaining)) if remaining.size else int(rng.integers(n))
        chosen.append(idx)
        centroids[j] = X[idx].toarray().ravel()
        d2 = np.minimum(d2, _sq_distances(X, x_sq, centroids[j : j + 1]).ravel())
    return centroids


def kmeans_fit(
    train: DocTermMatrix, k: int = 8, seed: int = 0, max_iter: int = 100
) -> KMeansModel:
    """Lloyd's algorithm from a seeded k-means++-style initialization.

    Runs until the assignment reaches a fixpoint or ``max_iter`` rounds.
    Empty clusters are repaired by reseeding them to the point currently
    farthest from its own centroid.
    """
    n = train.n_docs
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, n_docs], got k={k} for {n} docs")
    X = train.matrix.tocsr()
    x_sq = np.asarray(X.multiply(X).sum(axis=1)).ravel()
    rng = np.random.default_rng(seed)
    centroids = _plus_plus_init(X, x_sq, k, rng)

    prev = None
    for _ in range(max_iter):
        d2 = _sq_distances(X, x_sq, centroids)
        assign = d2.argmin(axis=1)
        own = d2[np.arange(n), assign].copy()
        for j in range(k):
            if not np.any(assign == j):
                far = int(own.argmax())
                assign[far] = j
                own[far] = -1.0  # keep later repairs from stealing the same point
        if prev is not None and np.array_equal(assign, prev):
            break
        for j in range(k):
            members = np.flatnonzero(assign == j)
            centroids[j] = np.asarray(X[members].sum(axis=0)).ravel() / len(members)
        prev = assign
    return KMeansModel(k=k, centroids=centroids, seed=seed)


def kmeans_score(m: KMeansModel, docs: DocTermMatrix) -> np.ndarray:
    """Euclidean distance to the nearest centroid."""
    _check_columns(m.centroids.shape[1], docs, "kmeans_score")
    X = docs.matrix.tocsr()
    x_sq = np.asarray(X.multiply(X).sum(axis=1)).ravel()
    d2 = _sq_distances(X, x_sq, m.centroids)
    return np.sqrt(d2.min(axis=1))


# ---------------------------------------------------------------------------
# Isolation forest
# ---------------------------------------------------------------------------

@dataclass
class IsolationTree:
    """Flat-array tree: feature < 0 marks a leaf; adjust holds c(leaf size)."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    depth: np.ndarray
    adjust: np.ndarray


@dataclass
class IForestModel:
    trees: list[IsolationTree]
    subsample: int
    c_norm: float
    n_terms: int
    depth_cap: int


def average_path_length(n: int) -> float:
    """Expected unsuccessful-search path length c(n) in a random tree.

    Uses the exact harmonic number, so c(2) == 1 precisely.
    """
    if n <= 1:
        return 0.0
    h = float(np.sum(1.0 / np.arange(1, n)))
    return 2.0 * h - 2.0 * (n - 1) / n


def _build_tree(dense: np.ndarray, rng: np.random.Generator, depth_cap: int) -> IsolationTree:
    features: list[int] = []
    thresholds: list[float] = []
    left: list[int] = []
    right: list[int] = []
    depth: list[int] = []
    adjust: list[float] = []

    def new_node(d: int) -> int:
        features.append(-1)
        thresholds.append(0.0)
        left.append(-1)
        right.append(-1)
        depth.append(d)
        adjust.append(0.0)
        return len(features) - 1

    def grow(rows: np.ndarray, d: int) -> int:
        node = new_node(d)
        if d >= depth_cap or rows.size <= 1:
            adjust[node] = average_path_length(rows.size)
            return node
        sub = dense[rows]
        mins = sub.min(axis=0)
        maxs = sub.max(axis=0)
        candidates = np.flatnonzero(maxs > mins)
        if candidates.size == 0:
            adjust[node] = average_path_length(rows.size)
            return node
        f = int(rng.choice(candidates))
        t = float(rng.uniform(mins[f], maxs[f]))
        if t <= mins[f]:  # uniform() may return its lower bound
            t = (float(mins[f]) + float(maxs[f])) / 2.0
        mask = sub[:, f] < t
        features[node] = f
        thresholds[node] = t
        left[node] = grow(rows[mask], d + 1)
        right[node] = grow(rows[~mask], d + 1)
        return node

    grow(np.arange(dense.shape[0]), 0)
    return IsolationTree(
        feature=np.asarray(features, dtype=np.int64),
        threshold=np.asarray(thresholds, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        depth=np.asarray(depth, dtype=np.int64),
        adjust=np.asarray(adjust, dtype=np.float64),
    )


def iforest_fit(
    train: DocTermMatrix, n_trees: int = 100, subsample: int = 256, seed: int = 0
) -> IForestModel:
    """Grow isolation trees on random subsamples.

    Each tree takes a subsample of up to ``subsample`` rows, recursively
    splits a randomly chosen feature (only features that actually vary in
    the node's rows are candidates) at a uniform point between its min and
    max, and stops at isolation or the depth ceiling ceil(log2 subsample).
    """
    n = train.n_docs
    if n < 2:
        raise ValueError(f"isolation forest needs at least 2 documents, got {n}")
    if n_trees < 1:
        raise ValueError(f"n_trees must be >= 1, got {n_trees}")
    psi = min(subsample, n)
    depth_cap = max(1, math.ceil(math.log2(psi)))
    X = train.matrix.tocsr()
    trees = []
    for ss in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(ss)
        rows = rng.choice(n, size=psi, replace=False)
        dense = np.asarray(X[rows].todense())
        trees.append(_build_tree(dense, rng, depth_cap))
    return IForestModel(
        trees=trees,
        subsample=psi,
        c_norm=average_path_length(psi),
        n_terms=train.n_terms,
        depth_cap=depth_cap,
    )


# Dense scoring buffer budget (elements per chunk); keeps peak memory flat
# when documents are wide.
_CHUNK_ELEMENTS = 1 << 24


def iforest_score(m: IForestModel, docs: DocTermMatrix) -> np.ndarray:
    """2^(-E[path length] / c(subsample)); in (0, 1], larger = more anomalous."""
    _check_columns(m.n_terms, docs, "iforest_score")
    n = docs.n_docs
    if n == 0:
        return np.zeros(0)
    X = docs.matrix.tocsr()
    chunk = max(1, _CHUNK_ELEMENTS // max(1, m.n_terms))
    mean_h = np.zeros(n)
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        dense = np.asarray(X[start:stop].todense())
        rows = np.arange(stop - start)
        acc = np.zeros(stop - start)
        for tree in m.trees:
            node = np.zeros(stop - start, dtype=np.int64)
            for _ in range(m.depth_cap + 1):
                feats = tree.feature[node]
                internal = feats >= 0
                if not internal.any():
                    break
                vals = dense[rows, np.where(internal, feats, 0)]
                go_left = vals < tree.threshold[node]
                node = np.where(
                    internal, np.where(go_left, tree.left[node], tree.right[node]), node
                )
            acc += tree.depth[node] + tree.adjust[node]
        mean_h[start:stop] = acc / len(m.trees)
    return np.power(2.0, -mean_h / m.c_norm)
