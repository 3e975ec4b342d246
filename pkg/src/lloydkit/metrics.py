"""Error metrics and signal-to-noise quantities for clustering.

Labels are 0-based integer arrays. Label maps are arrays ``m`` where ``m[h]``
is the true label assigned to estimated label ``h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment


class DegenerateUpdateWarning(RuntimeWarning):
    """An update hit an empty cluster or zero count and fell back to a policy."""


def as_labels(labels, name: str = "labels") -> np.ndarray:
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError(f"{name} must be integers")
    arr = arr.astype(np.int64)
    if arr.size and arr.min() < 0:
        raise ValueError(f"{name} must be non-negative")
    return arr


def as_data(data, name: str = "data") -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _pair(truth, estimate, k):
    z = as_labels(truth, "truth")
    zh = as_labels(estimate, "estimate")
    if z.shape != zh.shape:
        raise ValueError(f"length mismatch: truth has {z.size}, estimate has {zh.size}")
    if z.size == 0:
        raise ValueError("empty label vectors")
    top = int(max(z.max(), zh.max())) + 1
    if k is None:
        k = top
    elif top > k:
        raise ValueError(f"labels exceed k={k}")
    return z, zh, int(k)


def confusion_counts(truth, estimate, k: int | None = None) -> np.ndarray:
    """``counts[g, h]`` = number of points with true label g and estimated label h."""
    z, zh, k = _pair(truth, estimate, k)
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (z, zh), 1)
    return counts


def misclustering_rate(truth, estimate, k: int | None = None) -> tuple[float, np.ndarray]:
    """Fraction of wrong labels under the best map from estimated to true labels.

    The infimum runs over all maps, not only permutations, so it is attained by
    sending each estimated cluster to its most frequent true label (ties go to
    the smallest true label). Returns ``(rate, label_map)``.
    """
    z, zh, k = _pair(truth, estimate, k)
    counts = confusion_counts(z, zh, k)
    label_map = counts.argmax(axis=0)
    correct = counts[label_map, np.arange(k)].sum()
    return float(z.size - correct) / z.size, label_map


def misclustering_rate_bijective(truth, estimate, k: int | None = None) -> float:
    """Same loss restricted to permutations (optimal assignment on the counts)."""
    z, zh, k = _pair(truth, estimate, k)
    counts = confusion_counts(z, zh, k)
    rows, cols = linear_sum_assignment(counts, maximize=True)
    return float(z.size - counts[rows, cols].sum()) / z.size


def groupwise_rate(truth, estimate, k: int | None = None, label_map=None) -> float:
    """Worst per-cluster false-positive or true-negative fraction.

    The estimate is first aligned with ``label_map`` (by default the minimiser
    from :func:`misclustering_rate`). An aligned cluster that ends up empty has
    no false positives; its true members are all missed, which the
    true-negative term already reports as 1.
    """
    z, zh, k = _pair(truth, estimate, k)
    if label_map is None:
        _, label_map = misclustering_rate(z, zh, k)
    aligned = np.asarray(label_map)[zh]
    counts = confusion_counts(z, aligned, k)
    diag = np.diag(counts)
    est_sizes = counts.sum(axis=0)
    true_sizes = counts.sum(axis=1)
    if np.any(true_sizes == 0):
        empty = int(np.flatnonzero(true_sizes == 0)[0])
        raise ValueError(f"true cluster {empty} is empty; group-wise rate undefined")
    with np.errstate(invalid="ignore", divide="ignore"):
        false_pos = np.where(est_sizes > 0, (est_sizes - diag) / np.maximum(est_sizes, 1), 0.0)
    true_neg = (true_sizes - diag) / true_sizes
    return float(max(false_pos.max(), true_neg.max()))


def min_center_distance(centers) -> float:
    c = as_data(centers, "centers")
    if c.shape[0] < 2:
        raise ValueError("need at least two centers for a separation")
    diff = c[:, None, :] - c[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    return float(dist[~np.eye(c.shape[0], dtype=bool)].min())


def center_error(truth_centers, est_centers, label_map=None) -> float:
    """``max_h ||est_h - truth_{map(h)}|| / Delta`` with Delta the minimum true separation."""
    truth_c = as_data(truth_centers, "truth_centers")
    est_c = as_data(est_centers, "est_centers")
    if truth_c.shape[1] != est_c.shape[1]:
        raise ValueError("center dimensions differ")
    if label_map is None:
        if truth_c.shape[0] != est_c.shape[0]:
            raise ValueError("label_map required when center counts differ")
        label_map = np.arange(est_c.shape[0])
    delta = min_center_distance(truth_c)
    if delta == 0:
        raise ValueError("true centers coincide (Delta = 0)")
    diffs = est_c - truth_c[np.asarray(label_map)]
    return float(np.sqrt((diffs**2).sum(axis=1)).max() / delta)


def squared_distances(data, centers, chunk_elems: int = 4_000_000) -> np.ndarray:
    """Exact n x k squared distances, computed by direct differences in row chunks."""
    y = np.asarray(data, dtype=float)
    c = np.asarray(centers, dtype=float)
    if y.shape[1] != c.shape[1]:
        raise ValueError(f"dimension mismatch: data d={y.shape[1]}, centers d={c.shape[1]}")
    n, k = y.shape[0], c.shape[0]
    out = np.empty((n, k))
    step = max(1, chunk_elems // max(1, k * y.shape[1]))
    for start in range(0, n, step):
        block = y[start : start + step, None, :] - c[None, :, :]
        out[start : start + step] = np.einsum("ijk,ijk->ij", block, block)
    return out


def kmeans_objective(data, centers) -> float:
    """Sum over points of the squared distance to the nearest center."""
    y = as_data(data)
    c = as_data(centers, "centers")
    return float(squared_distances(y, c).min(axis=1).sum())


@dataclass(frozen=True)
class ClusterMetrics:
    misclustering: float = math.nan
    groupwise: float = math.nan
    center_error: float = math.nan
    objective: float = math.nan


def evaluate(
    truth=None,
    estimate=None,
    *,
    k: int | None = None,
    truth_centers=None,
    est_centers=None,
    objective: float = math.nan,
) -> ClusterMetrics:
    """Collect whatever metrics the supplied arguments allow."""
    if truth is None or estimate is None:
        return ClusterMetrics(objective=objective)
    rate, label_map = misclustering_rate(truth, estimate, k)
    try:
        g = groupwise_rate(truth, estimate, k, label_map)
    except ValueError:
        g = math.nan
    lam = math.nan
    if truth_centers is not None and est_centers is not None:
        est_c = np.asarray(est_centers, dtype=float)
        lam = center_error(truth_centers, est_c, label_map[: est_c.shape[0]])
    return ClusterMetrics(rate, g, lam, objective)


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    metrics: ClusterMetrics
    elapsed_ms: float


@dataclass
class ConvergenceTrace:
    entries: list[TraceEntry] = field(default_factory=list)

    def append(self, iteration: int, metrics: ClusterMetrics, elapsed_ms: float) -> None:
        self.entries.append(TraceEntry(iteration, metrics, elapsed_ms))

    def __len__(self) -> int:
        return len(self.entries)

    def _column(self, name: str) -> np.ndarray:
        return np.array([getattr(e.metrics, name) for e in self.entries], dtype=float)

    @property
    def iterations(self) -> np.ndarray:
        return np.array([e.iteration for e in self.entries], dtype=int)

    @property
    def misclustering(self) -> np.ndarray:
        return self._column("misclustering")

    @property
    def groupwise(self) -> np.ndarray:
        return self._column("groupwise")

    @property
    def center_error(self) -> np.ndarray:
        return self._column("center_error")

    @property
    def objective(self) -> np.ndarray:
        return self._column("objective")

    @property
    def elapsed_ms(self) -> np.ndarray:
        return np.array([e.elapsed_ms for e in self.entries], dtype=float)

    def objective_violations(self, rtol: float = 1e-9) -> list[int]:
        """Iterations whose objective rose above the previous one beyond ``rtol``."""
        obj = self.objective
        bad = []
        for s in range(1, obj.size):
            if np.isnan(obj[s]) or np.isnan(obj[s - 1]):
                continue
            if obj[s] > obj[s - 1] + rtol * abs(obj[s - 1]):
                bad.append(int(self.entries[s].iteration))
        return bad


@dataclass(frozen=True)
class SnrReport:
    delta: float
    lam: float
    alpha: float
    eta: float
    r: float
    r_k: float


def snr_report(centers, sigma: float, sizes) -> SnrReport:
    """Separation and normalised signal-to-noise ratios of a mixture.

    ``r`` is only defined for two components, where the half-separation
    ``(theta_1 - theta_2) / 2`` plays the role of the symmetric center.
    """
    c = as_data(centers, "centers")
    k, d = c.shape
    if k < 2:
        raise ValueError("need k >= 2 centers")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    sizes = np.asarray(sizes, dtype=float)
    if sizes.shape != (k,) or np.any(sizes < 1):
        raise ValueError("sizes must give a positive count per cluster")
    n = sizes.sum()
    diff = c[:, None, :] - c[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))[~np.eye(k, dtype=bool)]
    delta = float(dist.min())
    lam = float(dist.max() / delta) if delta > 0 else math.inf
    alpha = float(sizes.min() / n)
    eta = 9.0 * d / n
    r = math.nan
    if k == 2:
        half = np.linalg.norm(c[0] - c[1]) / 2.0
        r = float(half / (sigma * math.sqrt(1.0 + eta)))
    r_k = float(delta / sigma * math.sqrt(alpha / (1.0 + k * d / n)))
    return SnrReport(delta, lam, alpha, eta, r, r_k)
