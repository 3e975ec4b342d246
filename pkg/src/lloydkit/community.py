"""Community detection: degree trimming, spectral start, and B-matrix iterations."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass

import numpy as np

from lloydkit.lloyd import FitResult, default_iterations
from lloydkit.metrics import ConvergenceTrace, DegenerateUpdateWarning, as_labels, evaluate
from lloydkit.spectral import spectral_cluster


@dataclass(frozen=True)
class CommuConfig:
    """Trimming threshold and iteration controls.

    ``tau`` is an absolute degree threshold; when it is None the threshold is
    ``tau_multiplier`` times the mean degree. ``row_only`` zeroes only the
    rows of trimmed nodes instead of rows and columns.
    """

    tau: float | None = None
    tau_multiplier: float = 2.0
    row_only: bool = False
    max_iter: int | None = None
    tol: int = 0
    seed: int = 0
    restarts: int = 30

    def __post_init__(self):
        if self.tau is not None and self.tau < 0:
            raise ValueError("tau must be non-negative")
        if self.tau is None and self.tau_multiplier <= 0:
            raise ValueError("tau_multiplier must be positive")

    def threshold(self, adjacency) -> float:
        if self.tau is not None:
            return float(self.tau)
        return self.tau_multiplier * float(np.asarray(adjacency).sum(axis=1).mean())


def as_adjacency(adjacency) -> np.ndarray:
    a = np.asarray(adjacency)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("adjacency must be square")
    if not np.array_equal(a, a.T):
        raise ValueError("adjacency must be symmetric")
    if np.any(np.diag(a) != 0):
        raise ValueError("adjacency must have a zero diagonal")
    return a


def trim_adjacency(adjacency, tau: float, row_only: bool = False) -> np.ndarray:
    """Zero the rows and columns of nodes whose degree exceeds ``tau``."""
    a = as_adjacency(adjacency)
    keep = a.sum(axis=1) <= tau
    out = a * keep[:, None]
    if not row_only:
        out = out * keep[None, :]
    return out


def commu_b_update(adjacency, labels, k: int, prev=None) -> np.ndarray:
    """``B[i, h]`` = fraction of community h that node i links to.

    An empty community keeps its column from ``prev``.
    """
    a = np.asarray(adjacency, dtype=float)
    z = np.asarray(labels)
    onehot = np.zeros((z.size, k))
    onehot[np.arange(z.size), z] = 1.0
    sizes = onehot.sum(axis=0)
    links = a @ onehot
    b = np.divide(links, sizes, out=np.zeros_like(links), where=sizes > 0)
    empty = sizes == 0
    if empty.any():
        if prev is None:
            raise ValueError(f"communities {np.flatnonzero(empty).tolist()} are empty")
        warnings.warn(f"empty communities {np.flatnonzero(empty).tolist()}; columns frozen", DegenerateUpdateWarning)
        b[:, empty] = np.asarray(prev)[:, empty]
    return b


def commu_label_update(b) -> np.ndarray:
    """Row-wise argmax, ties to the smallest community index."""
    return np.asarray(b).argmax(axis=1)


def fit_commu_lloyd(adjacency, k: int, config: CommuConfig | None = None, *, truth=None, init=None) -> FitResult:
    """Trim, initialize by spectral clustering, then iterate the B / argmax updates.

    ``init`` overrides the spectral start with given labels. The B updates use
    the untrimmed graph. ``centers`` is the k x k matrix of mean B rows per
    estimated community, i.e. the estimated connectivity between communities;
    ``extras`` carries the final B, the trimming threshold and the initial labels.
    """
    config = config or CommuConfig()
    a = as_adjacency(adjacency)
    n = a.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}")
    tau = config.threshold(a)
    start = time.perf_counter()
    if init is None:
        trimmed = trim_adjacency(a, tau, config.row_only)
        labels, _ = spectral_cluster(trimmed, k, seed=config.seed, restarts=config.restarts)
    else:
        labels = as_labels(init, "init")
        if labels.size != n or labels.max() >= k:
            raise ValueError("init labels do not match the graph or k")
    if np.unique(labels).size < k:
        raise ValueError("initializer produced fewer than k non-empty communities")
    init_labels = labels.copy()
    max_iter = config.max_iter or default_iterations(n, 4.0)
    metric_k = None if truth is None else max(k, int(np.max(truth)) + 1)

    trace = ConvergenceTrace()
    b = commu_b_update(a, labels, k)

    def record(s):
        trace.append(s, evaluate(truth, labels, k=metric_k), (time.perf_counter() - start) * 1e3)

    record(0)
    converged = False
    s = 0
    for s in range(1, max_iter + 1):
        new_labels = commu_label_update(b)
        changed = int(np.count_nonzero(new_labels != labels))
        labels = new_labels
        b = commu_b_update(a, labels, k, prev=b)
        record(s)
        if config.tol >= 0 and changed <= config.tol:
            converged = True
            break
    connectivity = np.vstack([b[labels == h].mean(axis=0) if np.any(labels == h) else np.full(k, np.nan) for h in range(k)])
    return FitResult(labels, connectivity, trace, s, converged, {"B": b, "tau": tau, "init_labels": init_labels})
