"""Representative-task selection via spectral clustering of task similarity.

Candidate mixture recipes are rendered on a small ground-truth set; each
render is summarized by concatenated per-channel histograms, tasks are
compared by histogram intersection, and the resulting similarity matrix is
spectrally clustered. Cluster medoids become the representative tasks.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateMatrix, InvalidParam, LengthMismatch, NotSymmetric
from .imaging import ImageF32, as_image
from .pipeline import TaskSpec, apply_recipe
from .rng import RngStream, mix64

DEFAULT_BINS = 32
DEFAULT_CROP = 256
_KMEANS_RESTARTS = 10
_KMEANS_MAX_ITERS = 300


def histogram_features(img: ImageF32, bins: int) -> np.ndarray:
    """Concatenated per-channel histograms, each normalized to sum 1/3."""
    if bins < 2:
        raise InvalidParam(f"bins must be >= 2, got {bins!r}")
    img = as_image(img)
    # value 1.0 falls in the last (right-closed) bucket
    idx = np.minimum((img.astype(np.float64) * bins).astype(np.int64), bins - 1)
    n = img.shape[0] * img.shape[1]
    parts = []
    for c in range(3):
        counts = np.bincount(idx[:, :, c].ravel(), minlength=bins).astype(np.float64)
        parts.append(counts / (3.0 * n))
    return np.concatenate(parts)


def task_similarity(renders_a, renders_b) -> float:
    """Mean histogram intersection over paired ground-truth renders."""
    if len(renders_a) != len(renders_b):
        raise LengthMismatch(f"render lists differ: {len(renders_a)} vs {len(renders_b)}")
    if not renders_a:
        raise LengthMismatch("render lists must be non-empty")
    sims = [float(np.minimum(u, v).sum()) for u, v in zip(renders_a, renders_b)]
    return float(np.mean(sims))


def center_crop(img: ImageF32, size: int) -> ImageF32:
    img = as_image(img)
    h, w = img.shape[:2]
    ch, cw = min(h, size), min(w, size)
    y0, x0 = (h - ch) // 2, (w - cw) // 2
    return img[y0 : y0 + ch, x0 : x0 + cw]


def build_similarity_matrix(
    candidates, gt_images, bins: int = DEFAULT_BINS, seed: int = 0, crop: int = DEFAULT_CROP
) -> np.ndarray:
    if len(candidates) < 2:
        raise InvalidParam("need at least 2 candidate tasks")
    if not gt_images:
        raise InvalidParam("need at least 1 ground-truth image")
    features = []
    for task in candidates:
        renders = []
        for j, gt in enumerate(gt_images):
            patch = center_crop(gt, crop)
            lane = mix64(seed) ^ j
            renders.append(histogram_features(apply_recipe(patch, task.recipe, image_lane=lane), bins))
        features.append(renders)
    n = len(candidates)
    s = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            s[i, j] = s[j, i] = task_similarity(features[i], features[j])
    return s


def jacobi_eigh(m: np.ndarray):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues ascending, eigenvectors as columns).
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.T)) > 1e-9:
        raise NotSymmetric("matrix is not symmetric within 1e-9")
    n = m.shape[0]
    a = (m + m.T) / 2.0
    v = np.eye(n)
    for _ in range(100):
        off = np.sqrt(np.sum(np.square(a - np.diag(np.diag(a)))))
        if off < 1e-10:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                rot_p = c * v[:, p] - s * v[:, q]
                rot_q = s * v[:, p] + c * v[:, q]
                v[:, p], v[:, q] = rot_p, rot_q
    eigvals = np.diag(a).copy()
    order = np.argsort(eigvals, kind="stable")
    return eigvals[order], v[:, order]


def _kmeans_once(x: np.ndarray, k: int, rng: RngStream):
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    first = int(rng.integers(0, n - 1))
    centers[0] = x[first]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[c] = x[int(rng.integers(0, n - 1))]
        else:
            r = float(rng.uniform(0.0, total))
            centers[c] = x[int(np.searchsorted(np.cumsum(d2), r))]
        d2 = np.minimum(d2, np.sum((x - centers[c]) ** 2, axis=1))
    labels = None
    for _it in range(_KMEANS_MAX_ITERS):
        # ties break to the lowest cluster index via argmin
        dist = np.sum((x[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(dist, axis=1)
        for c in range(k):
            if not np.any(new_labels == c):
                # re-seed an empty cluster with the most isolated point
                far = int(np.argmax(np.min(dist, axis=1)))
                new_labels[far] = c
                dist[far, :] = np.inf
                dist[far, c] = 0.0
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            centers[c] = x[labels == c].mean(axis=0)
    inertia = 0.0
    for c in range(k):
        inertia += float(np.sum((x[labels == c] - centers[c]) ** 2))
    return labels, inertia


def spectral_cluster(s: np.ndarray, k: int, seed: int = 0):
    """Normalized-Laplacian spectral clustering; returns (labels, medoids)."""
    s = np.asarray(s, dtype=np.float64)
    n = s.shape[0]
    if s.ndim != 2 or s.shape != (n, n):
        raise InvalidParam(f"similarity matrix must be square, got {s.shape}")
    if not 2 <= k <= n:
        raise InvalidParam(f"cluster count must be in [2, {n}], got {k!r}")
    degrees = s.sum(axis=1)
    if np.any(degrees <= 0):
        raise DegenerateMatrix("similarity matrix has a zero-degree row")
    dinv = 1.0 / np.sqrt(degrees)
    lap = np.eye(n) - (dinv[:, None] * s * dinv[None, :])
    _, vecs = jacobi_eigh(lap)
    emb = vecs[:, :k]
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    emb = np.where(norms > 0, emb / np.maximum(norms, 1e-300), emb)

    best = None
    for restart in range(_KMEANS_RESTARTS):
        rng = RngStream(mix64(mix64(seed) ^ restart))
        labels, inertia = _kmeans_once(emb, k, rng)
        if best is None or inertia < best[1]:
            best = (labels, inertia)
    labels = best[0]

    medoids = np.empty(k, dtype=np.int64)
    for c in range(k):
        members = np.flatnonzero(labels == c)
        if members.size == 0:
            raise DegenerateMatrix(f"cluster {c} is empty")
        within = s[np.ix_(members, members)].sum(axis=1)
        medoids[c] = members[int(np.argmax(within))]
    return labels, medoids


def select_representatives(candidates, s: np.ndarray, per_order_count: int, seed: int = 0):
    """Medoid TaskSpecs of per_order_count clusters, largest clusters first."""
    if per_order_count > len(candidates):
        raise InvalidParam("per_order_count exceeds candidate count")
    orders = {t.recipe.order for t in candidates}
    if len(orders) != 1:
        raise InvalidParam(f"candidates must share one order, got orders {sorted(orders)}")
    if per_order_count == len(candidates):
        return list(candidates)
    labels, medoids = spectral_cluster(s, per_order_count, seed=seed)
    sizes = [int(np.sum(labels == c)) for c in range(per_order_count)]
    chosen = [candidates[int(m)] for m in medoids]
    return [
        t for _, t in sorted(zip(sizes, chosen), key=lambda p: (-p[0], p[1].task_id))
    ]
