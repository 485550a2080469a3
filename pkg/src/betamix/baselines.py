"""k-means and Gaussian-mixture baselines.

Used both as benchmark comparison methods and (k-means) as the
initializer for the beta-mixture fit.  Inputs may be plain (N, 2) arrays
or any object with a ``points`` attribute.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_COV_REG = 1e-6


def _as_xy(data):
    x = np.asarray(getattr(data, "points", data), dtype=float)
    if x.ndim != 2 or x.shape[1] != 2:
        raise ValueError(f"expected (N, 2) data, got shape {x.shape}")
    return x


@dataclass
class KMeansModel:
    centroids: np.ndarray
    inertia: float


@dataclass
class GaussianMixtureModel:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        for c, cov in enumerate(self.covariances):
            if np.min(np.linalg.eigvalsh(cov)) < 1e-8:
                raise ValueError(f"covariance {c} is not regularized SPD")


def _sq_dists(x, cents):
    return ((x[:, None, :] - cents[None, :, :]) ** 2).sum(axis=2)


def _kmeanspp(x, k, rng):
    n = x.shape[0]
    cents = np.empty((k, 2))
    cents[0] = x[rng.integers(n)]
    d2 = ((x - cents[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        cents[i] = x[idx]
        d2 = np.minimum(d2, ((x - cents[i]) ** 2).sum(axis=1))
    return cents


def kmeans_fit(data, n_clusters: int, seed: int, iters: int = 50) -> KMeansModel:
    """k-means++ seeding followed by Lloyd iterations."""
    x = _as_xy(data)
    n = x.shape[0]
    if n_clusters < 1:
        raise ValueError("n_clusters must be >= 1")
    if n < n_clusters:
        raise ValueError(f"need at least {n_clusters} points, got {n}")
    rng = np.random.default_rng(seed)
    cents = _kmeanspp(x, n_clusters, rng)
    labels = np.argmin(_sq_dists(x, cents), axis=1)
    for _ in range(iters):
        for c in range(n_clusters):
            mask = labels == c
            if mask.any():
                cents[c] = x[mask].mean(axis=0)
            else:
                # re-seed an empty cluster at the farthest point
                d2 = _sq_dists(x, cents).min(axis=1)
                cents[c] = x[int(np.argmax(d2))]
        new_labels = np.argmin(_sq_dists(x, cents), axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    inertia = float(_sq_dists(x, cents).min(axis=1).sum())
    return KMeansModel(centroids=cents, inertia=inertia)


def kmeans_predict(model: KMeansModel, data) -> np.ndarray:
    """Nearest-centroid labels; ties go to the lowest cluster index."""
    return np.argmin(_sq_dists(_as_xy(data), model.centroids), axis=1)


def _log_gauss(x, mean, cov):
    d = x - mean
    a, b, c = cov[0, 0], cov[0, 1], cov[1, 1]
    det = a * c - b * b
    quad = (d[:, 0] ** 2 * c - 2.0 * d[:, 0] * d[:, 1] * b + d[:, 1] ** 2 * a) / det
    return -np.log(2.0 * np.pi) - 0.5 * np.log(det) - 0.5 * quad


def _gmm_log_resp(x, model):
    logp = np.column_stack([
        _log_gauss(x, model.means[c], model.covariances[c])
        for c in range(len(model.weights))
    ])
    with np.errstate(divide="ignore"):
        logp += np.log(model.weights)[None, :]
    mx = logp.max(axis=1, keepdims=True)
    lse = mx + np.log(np.exp(logp - mx).sum(axis=1, keepdims=True))
    return logp, lse


def gmm_fit(data, n_clusters: int, seed: int, epochs: int = 200,
            tol: float = 1e-4) -> GaussianMixtureModel:
    """Full-covariance Gaussian mixture EM with log-space responsibilities."""
    x = _as_xy(data)
    n = x.shape[0]
    if n < n_clusters:
        raise ValueError(f"need at least {n_clusters} points, got {n}")
    km = kmeans_fit(x, n_clusters, seed)
    labels = kmeans_predict(km, x)
    weights = np.maximum(np.bincount(labels, minlength=n_clusters), 1) / n
    weights = weights / weights.sum()
    means = km.centroids.copy()
    covs = np.empty((n_clusters, 2, 2))
    for c in range(n_clusters):
        mask = labels == c
        pts = x[mask] if mask.any() else x
        d = pts - pts.mean(axis=0)
        covs[c] = d.T @ d / max(len(pts), 1) + _COV_REG * np.eye(2)
    model = GaussianMixtureModel(weights, means, covs)
    prev = -np.inf
    for _ in range(epochs):
        logp, lse = _gmm_log_resp(x, model)
        ll = float(lse.sum())
        if abs(ll - prev) < tol:
            break
        prev = ll
        gamma = np.exp(logp - lse)
        nk = np.maximum(gamma.sum(axis=0), 1e-12)
        weights = nk / n
        weights = weights / weights.sum()
        means = (gamma.T @ x) / nk[:, None]
        for c in range(n_clusters):
            d = x - means[c]
            covs[c] = (gamma[:, c] * d.T) @ d / nk[c] + _COV_REG * np.eye(2)
        model = GaussianMixtureModel(weights, means, covs)
    return model


def gmm_predict(model: GaussianMixtureModel, data) -> np.ndarray:
    """Maximum-responsibility labels; ties go to the lowest cluster index."""
    logp, _ = _gmm_log_resp(_as_xy(data), model)
    return np.argmax(logp, axis=1)
