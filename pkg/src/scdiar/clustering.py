"""Spectral clustering of sub-segment embeddings.

Pipeline: cosine similarity matrix -> zeroed diagonal -> non-negative
affinity -> symmetric normalized Laplacian -> count eigenvalues below
``alpha`` to pick the number of speakers -> k-means over the unit-normalized
rows of the bottom-k eigenvectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ComputationError, UsageError, ValidationError
from .types import EmbeddingSet

DEGREE_FLOOR = 1e-10
SYMMETRY_TOL = 1e-12


@dataclass
class ClusterLabels:
    labels: np.ndarray
    k: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int)
        if self.labels.size and set(np.unique(self.labels).tolist()) != set(range(self.k)):
            raise ValidationError(f"labels must take exactly the values 0..{self.k - 1}")

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class SpectralConfig:
    alpha: float = 0.65
    max_speakers: int | None = 2
    oracle_k: int | None = None
    seed: int = 42


def cosine_similarity(emb: EmbeddingSet | np.ndarray) -> np.ndarray:
    x = emb.vectors if isinstance(emb, EmbeddingSet) else np.asarray(emb, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise UsageError("need at least one embedding vector")
    norms = np.linalg.norm(x, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ComputationError(f"embedding {int(zero[0])} has zero norm")
    unit = x / norms[:, None]
    s = unit @ unit.T
    # exact symmetry and unit diagonal regardless of rounding in the product
    s = (s + s.T) / 2
    np.fill_diagonal(s, 1.0)
    return np.clip(s, -1.0, 1.0)


def normalized_laplacian(similarity: np.ndarray) -> np.ndarray:
    """``I - D^-1/2 A D^-1/2`` with ``A = max(S, 0)`` after zeroing the diagonal."""
    s = np.asarray(similarity, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValidationError(f"similarity matrix must be square, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValidationError("similarity matrix contains NaN or Inf")
    if s.size and np.max(np.abs(s - s.T)) > SYMMETRY_TOL:
        raise ValidationError("similarity matrix is not symmetric")
    a = np.maximum(s, 0.0)
    np.fill_diagonal(a, 0.0)
    a = (a + a.T) / 2
    deg = a.sum(axis=1)
    deg[deg == 0] = DEGREE_FLOOR
    inv_sqrt = 1.0 / np.sqrt(deg)
    lap = np.eye(len(a)) - inv_sqrt[:, None] * a * inv_sqrt[None, :]
    return (lap + lap.T) / 2


def laplacian_spectrum(similarity: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and matching eigenvectors (columns) of the Laplacian."""
    lap = normalized_laplacian(similarity)
    evals, evecs = np.linalg.eigh(lap)
    if not (np.all(np.isfinite(evals)) and np.all(np.isfinite(evecs))):
        raise ComputationError("eigendecomposition produced NaN")
    # fix the sign of each eigenvector so results do not depend on LAPACK's choice
    pivot = np.argmax(np.abs(evecs), axis=0)
    signs = np.sign(evecs[pivot, np.arange(evecs.shape[1])])
    signs[signs == 0] = 1.0
    return evals, evecs * signs


def estimate_k(evals: np.ndarray, alpha: float, max_speakers: int | None = None) -> int:
    n = len(evals)
    k = int(np.count_nonzero(evals < alpha))
    upper = n if max_speakers is None else min(n, max_speakers)
    return max(1, min(k, upper))


def spectral_cluster(
    similarity: np.ndarray,
    alpha: float = 0.65,
    max_speakers: int | None = 2,
    oracle_k: int | None = None,
    seed: int = 42,
) -> ClusterLabels:
    if alpha <= 0:
        raise UsageError(f"alpha must be positive, got {alpha}")
    if max_speakers is not None and max_speakers < 1:
        raise UsageError(f"max_speakers must be >= 1, got {max_speakers}")
    if oracle_k is not None and oracle_k < 1:
        raise UsageError(f"oracle_k must be >= 1, got {oracle_k}")
    s = np.asarray(similarity, dtype=float)
    n = s.shape[0] if s.ndim == 2 else 0
    if n < 1:
        raise UsageError("similarity matrix is empty")

    evals, evecs = laplacian_spectrum(s)
    if oracle_k is not None:
        k = min(oracle_k, n)
    else:
        k = estimate_k(evals, alpha, max_speakers)
    if k == 1:
        return ClusterLabels(np.zeros(n, dtype=int), 1)

    p = evecs[:, :k]
    norms = np.linalg.norm(p, axis=1)
    nz = norms > 0
    p = p.copy()
    p[nz] /= norms[nz, None]
    return kmeans(p, k, seed)


def _nearest(points: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    # argmin returns the first minimum, i.e. the lowest center index on ties
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(len(points)), labels]


def _kmeans_pp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centers = [points[rng.integers(n)]]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        centers.append(points[idx])
        d2 = np.minimum(d2, ((points - points[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _fill_empty(points: np.ndarray, labels: np.ndarray, centers: np.ndarray, dist: np.ndarray) -> None:
    """Give every empty cluster the point farthest from its own center."""
    k = len(centers)
    for c in range(k):
        if np.any(labels == c):
            continue
        counts = np.bincount(labels, minlength=k)
        movable = counts[labels] > 1
        cand = np.where(movable, dist, -1.0)
        idx = int(np.argmax(cand))
        labels[idx] = c
        centers[c] = points[idx]
        dist[idx] = 0.0


def kmeans(points: np.ndarray, k: int, seed: int = 42, max_iter: int = 300, tol: float = 1e-8) -> ClusterLabels:
    """Lloyd's k-means with k-means++ seeding.

    Deterministic for fixed ``(points, k, seed)``. Nearest-center ties go
    to the lowest center index, and a cluster that empties is re-seeded
    with the point lying farthest from its current center.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = len(x)
    if k < 1:
        raise UsageError(f"k must be >= 1, got {k}")
    if k > n:
        raise UsageError(f"k={k} exceeds the number of points ({n})")

    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(x, k, rng)
    labels, dist = _nearest(x, centers)
    _fill_empty(x, labels, centers, dist)
    for _ in range(max_iter):
        new_centers = np.array([x[labels == c].mean(axis=0) for c in range(k)])
        shift = np.max(np.linalg.norm(new_centers - centers, axis=1))
        centers = new_centers
        new_labels, dist = _nearest(x, centers)
        _fill_empty(x, new_labels, centers, dist)
        if np.array_equal(new_labels, labels) or shift < tol:
            labels = new_labels
            break
        labels = new_labels
    return ClusterLabels(_canonical(labels), k)


def _canonical(labels: np.ndarray) -> np.ndarray:
    """Renumber clusters in order of first appearance."""
    mapping: dict[int, int] = {}
    for lab in labels.tolist():
        mapping.setdefault(lab, len(mapping))
    return np.array([mapping[lab] for lab in labels.tolist()], dtype=int)


def cluster_embeddings(emb: EmbeddingSet, config: SpectralConfig = SpectralConfig()) -> ClusterLabels:
    return spectral_cluster(
        cosine_similarity(emb),
        alpha=config.alpha,
        max_speakers=config.max_speakers,
        oracle_k=config.oracle_k,
        seed=config.seed,
    )
