"""Spectral initialization: truncated SVD, projection, and seeded k-means."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from lloydkit.lloyd import LloydConfig, fit_lloyd
from lloydkit.metrics import as_data, squared_distances
from lloydkit.rng import make_rng


class SvdConvergenceError(RuntimeError):
    def __init__(self, residual: float, sweeps: int):
        super().__init__(f"truncated SVD did not converge in {sweeps} sweeps (residual {residual:.3e})")
        self.residual = residual
        self.sweeps = sweeps


class SvdResult(NamedTuple):
    left_vectors: np.ndarray  # n x k
    singular_values: np.ndarray  # k, descending
    right_vectors: np.ndarray  # d x k
    sweeps: int = 0
    residual: float = 0.0


def _orthonormalize(block: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(block)
    return q


def truncated_svd(matrix, k: int, tol: float = 1e-8, max_sweeps: int = 300, seed: int = 0) -> SvdResult:
    """Top-k singular triplets by block power (subspace) iteration.

    The block carries extra columns beyond k, is re-orthonormalized every
    half sweep, and is resolved into singular triplets by a Rayleigh-Ritz step
    on the small projected matrix. Iteration stops once every retained
    triplet satisfies ``||A v - s u|| <= tol * s_max``.
    """
    a = as_data(matrix, "matrix")
    n, d = a.shape
    if not 1 <= k <= min(n, d):
        raise ValueError(f"need 1 <= k <= min(n, d) = {min(n, d)}, got {k}")
    width = min(min(n, d), 2 * k + 10)
    rng = make_rng(seed, "svd-start")
    q = _orthonormalize(a @ rng.standard_normal((d, width)))

    residual = np.inf
    for sweep in range(1, max_sweeps + 1):
        z = _orthonormalize(a.T @ q)
        q = _orthonormalize(a @ z)
        # Rayleigh-Ritz on the projected block
        small = q.T @ a
        u_small, s, vt = np.linalg.svd(small, full_matrices=False)
        u = q @ u_small[:, :k]
        s = s[:k]
        v = vt[:k].T
        res = np.linalg.norm(a @ v - u * s, axis=0)
        scale = s[0] if s[0] > 0 else 1.0
        residual = float(res.max() / scale)
        if res.max() <= tol * s[0] or s[0] == 0:
            return SvdResult(u, s, v, sweep, residual)
    raise SvdConvergenceError(residual, max_sweeps)


def spectral_coordinates(data, k: int, seed: int = 0, **svd_kwargs):
    """Rows expressed in the top-k right singular basis, plus that basis."""
    y = as_data(data)
    svd = truncated_svd(y, k, seed=seed, **svd_kwargs)
    return svd.left_vectors * svd.singular_values, svd.right_vectors


def spectral_project(data, k: int, seed: int = 0, **svd_kwargs) -> np.ndarray:
    """Project each row onto the span of the top-k singular directions."""
    coords, basis = spectral_coordinates(data, k, seed, **svd_kwargs)
    return coords @ basis.T


def kmeanspp_centers(data, k: int, rng) -> np.ndarray:
    """Distance-squared weighted seeding."""
    y = np.asarray(data, dtype=float)
    n = y.shape[0]
    idx = [int(rng.integers(n))]
    dist = squared_distances(y, y[idx]).ravel()
    for _ in range(1, k):
        total = dist.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=dist / total))
        else:
            nxt = int(rng.integers(n))
        idx.append(nxt)
        dist = np.minimum(dist, squared_distances(y, y[nxt : nxt + 1]).ravel())
    return y[idx].copy()


class KMeansResult(NamedTuple):
    labels: np.ndarray
    centers: np.ndarray
    objective: float
    restart_objectives: np.ndarray
    fits: list


def approx_kmeans(data, k: int, restarts: int = 30, seed=0, max_iter: int = 300) -> KMeansResult:
    """Best of ``restarts`` k-means++ seeded Lloyd runs by final objective."""
    y = as_data(data)
    if not 1 <= k <= y.shape[0]:
        raise ValueError(f"need 1 <= k <= n, got k={k}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    config = LloydConfig(max_iter=max_iter, tol=0)
    fits = []
    for r in range(restarts):
        rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed, r, "kmeans++")
        init = kmeanspp_centers(y, k, rng)
        fits.append(fit_lloyd(y, k, init, config))
    objectives = np.array([f.trace.objective[-1] for f in fits])
    best = int(objectives.argmin())
    return KMeansResult(fits[best].labels, fits[best].centers, float(objectives[best]), objectives, fits)


def spectral_cluster(data, k: int, seed: int = 0, restarts: int = 30, **svd_kwargs):
    """Project onto the top-k singular subspace and run :func:`approx_kmeans` there.

    Clustering uses the k-dimensional coordinates of the projected rows;
    returned centers are mapped back to the original coordinates.
    """
    y = as_data(data)
    if k == 1:
        return np.zeros(y.shape[0], dtype=np.int64), y.mean(axis=0, keepdims=True)
    coords, basis = spectral_coordinates(y, k, seed, **svd_kwargs)
    result = approx_kmeans(coords, k, restarts=restarts, seed=seed)
    return result.labels, result.centers @ basis.T
