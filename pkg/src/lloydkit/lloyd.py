"""Lloyd iterations for k-mixtures and the symmetric two-mixture model."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from lloydkit.metrics import (
    ConvergenceTrace,
    as_data,
    as_labels,
    evaluate,
    kmeans_objective,
    squared_distances,
)
from lloydkit.rng import make_rng


class DegenerateCenterError(ArithmeticError):
    """The symmetric center estimate is exactly zero, so labels are undefined."""


def default_iterations(n: int, factor: float = 4.0) -> int:
    """``ceil(factor * ln n)``, at least 1."""
    return max(1, math.ceil(factor * math.log(max(n, 2))))


@dataclass(frozen=True)
class LloydConfig:
    """Iteration controls.

    ``max_iter=None`` means ``ceil(4 ln n)`` for :func:`fit_lloyd` and
    ``ceil(3 ln n)`` for the symmetric two-mixture fit. The fit stops once at
    most ``tol`` labels change in an iteration; a negative ``tol`` runs the
    full budget.
    """

    max_iter: int | None = None
    tol: int = 0
    empty_cluster_policy: str = "keep_previous_center"
    seed: int = 0

    def __post_init__(self):
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.empty_cluster_policy != "keep_previous_center":
            raise ValueError(f"unknown empty_cluster_policy {self.empty_cluster_policy!r}")


@dataclass
class FitResult:
    labels: np.ndarray
    centers: np.ndarray | None
    trace: ConvergenceTrace
    iterations_run: int
    converged: bool
    extras: dict = field(default_factory=dict)


def center_update(data, labels, k: int, prev_centers=None) -> np.ndarray:
    """Cluster means; an empty cluster keeps its row of ``prev_centers``."""
    y = np.asarray(data, dtype=float)
    z = np.asarray(labels)
    counts = np.bincount(z, minlength=k)[:k]
    sums = np.zeros((k, y.shape[1]))
    np.add.at(sums, z, y)
    centers = np.empty_like(sums)
    filled = counts > 0
    centers[filled] = sums[filled] / counts[filled, None]
    if not filled.all():
        if prev_centers is None:
            empty = np.flatnonzero(~filled).tolist()
            raise ValueError(f"clusters {empty} are empty and have no previous center")
        centers[~filled] = np.asarray(prev_centers, dtype=float)[~filled]
    return centers


def label_update(data, centers) -> np.ndarray:
    """Nearest center in Euclidean norm; ties go to the smallest index."""
    return squared_distances(data, centers).argmin(axis=1)


def _validate_init(y: np.ndarray, k: int, init):
    n, d = y.shape
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    arr = np.asarray(init)
    if arr.ndim == 1:
        labels = as_labels(arr, "init")
        if labels.size != n:
            raise ValueError(f"init labels have length {labels.size}, expected {n}")
        if labels.size and labels.max() >= k:
            raise ValueError(f"init labels exceed k={k}")
        return labels, None
    if arr.ndim == 2:
        if arr.shape != (k, d):
            raise ValueError(f"init centers must have shape {(k, d)}, got {arr.shape}")
        centers = as_data(arr, "init")
        return label_update(y, centers), centers
    raise ValueError("init must be a label vector or a k x d center matrix")


def fit_lloyd(
    data,
    k: int,
    init,
    config: LloydConfig | None = None,
    *,
    truth=None,
    truth_centers=None,
) -> FitResult:
    """Alternate mean and nearest-center updates from labels or centers.

    A center initializer is turned into labels by one nearest-center pass.
    Entry ``s`` of the trace describes labels ``z(s)`` and the centers
    ``theta(s)`` computed from them, so entry 0 is the initializer.
    """
    config = config or LloydConfig()
    y = as_data(data)
    labels, prev = _validate_init(y, k, init)
    max_iter = config.max_iter or default_iterations(y.shape[0], 4.0)
    metric_k = None
    if truth is not None:
        metric_k = max(k, int(np.max(truth)) + 1)

    start = time.perf_counter()
    trace = ConvergenceTrace()
    centers = center_update(y, labels, k, prev)

    def record(s):
        obj = kmeans_objective(y, centers)
        m = evaluate(
            truth, labels, k=metric_k, truth_centers=truth_centers, est_centers=centers, objective=obj
        )
        trace.append(s, m, (time.perf_counter() - start) * 1e3)

    record(0)
    converged = False
    s = 0
    for s in range(1, max_iter + 1):
        new_labels = label_update(y, centers)
        changed = int(np.count_nonzero(new_labels != labels))
        centers = center_update(y, new_labels, k, centers)
        labels = new_labels
        record(s)
        if config.tol >= 0 and changed <= config.tol:
            converged = True
            break
    return FitResult(labels, centers, trace, s, converged)


def _sym_metrics(truth, theta_star, labels, theta, objective):
    if truth is None:
        return evaluate(objective=objective)
    z = (1 - np.asarray(truth)) // 2
    zh = (1 - labels) // 2
    truth_c = est_c = None
    if theta_star is not None:
        ts = np.asarray(theta_star, dtype=float)
        truth_c = np.vstack([ts, -ts])
        est_c = np.vstack([theta, -theta])
    return evaluate(z, zh, k=2, truth_centers=truth_c, est_centers=est_c, objective=objective)


def _sym_center(y, labels):
    theta = labels @ y / y.shape[0]
    if not np.any(theta):
        raise DegenerateCenterError("center estimate is exactly zero")
    return theta


def fit_symmetric_two(
    data,
    init=None,
    config: LloydConfig | None = None,
    *,
    init_center=None,
    truth=None,
    theta_star=None,
) -> FitResult:
    """Lloyd for ``y_i = z_i theta + noise`` with labels in {-1, +1}.

    The center update is ``theta = mean(z_i * y_i)`` and the label update is
    the sign of ``<y_i, theta>`` with zero mapped to +1. Pass either ``init``
    (labels) or ``init_center``. ``extras["theta"]`` holds the final center;
    ``centers`` stacks ``theta`` and ``-theta``.
    """
    config = config or LloydConfig()
    y = as_data(data)
    n = y.shape[0]
    if (init is None) == (init_center is None):
        raise ValueError("pass exactly one of init (labels) or init_center")
    if init is not None:
        labels = np.asarray(init).astype(np.int64)
        if labels.shape != (n,) or not np.all(np.abs(labels) == 1):
            raise ValueError("init labels must be a length-n vector of +1/-1")
    else:
        c = np.asarray(init_center, dtype=float).ravel()
        if c.size != y.shape[1]:
            raise ValueError("init_center has the wrong dimension")
        labels = np.where(y @ c >= 0, 1, -1)
    max_iter = config.max_iter or default_iterations(n, 3.0)

    start = time.perf_counter()
    trace = ConvergenceTrace()
    theta = _sym_center(y, labels)

    def record(s):
        obj = kmeans_objective(y, np.vstack([theta, -theta]))
        trace.append(s, _sym_metrics(truth, theta_star, labels, theta, obj), (time.perf_counter() - start) * 1e3)

    record(0)
    converged = False
    s = 0
    for s in range(1, max_iter + 1):
        new_labels = np.where(y @ theta >= 0, 1, -1)
        changed = int(np.count_nonzero(new_labels != labels))
        labels = new_labels
        theta = _sym_center(y, labels)
        record(s)
        if config.tol >= 0 and changed <= config.tol:
            converged = True
            break
    return FitResult(labels, np.vstack([theta, -theta]), trace, s, converged, {"theta": theta})


def n_random_inits(delta: float) -> int:
    """Number of random label draws, ``ceil(3 ln(1/delta))``."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return max(1, math.ceil(3.0 * math.log(1.0 / delta) - 1e-12))


def random_init_search(
    data,
    k: int = 2,
    delta: float = 0.05,
    config: LloydConfig | None = None,
    *,
    truth=None,
    theta_star=None,
) -> FitResult:
    """Symmetric two-mixture fit from uniformly random labels and their flips.

    Draws ``ceil(3 ln(1/delta))`` label vectors from the config seed, runs
    :func:`fit_symmetric_two` from each draw and from its global flip, and
    keeps the fit with the smallest k-means objective (earliest on ties).
    """
    if k != 2:
        raise ValueError("random initialization search is defined for k = 2")
    config = config or LloydConfig()
    y = as_data(data)
    draws = n_random_inits(delta)
    best = None
    for r in range(draws):
        rng = make_rng(config.seed, r, "random-init")
        base = rng.choice(np.array([-1, 1]), size=y.shape[0])
        for sign in (1, -1):
            try:
                fit = fit_symmetric_two(y, sign * base, config, truth=truth, theta_star=theta_star)
            except DegenerateCenterError:
                continue
            if best is None or fit.trace.objective[-1] < best.trace.objective[-1]:
                best = fit
    if best is None:
        raise DegenerateCenterError("every random initializer gave a zero center")
    best.extras["n_draws"] = draws
    return best
