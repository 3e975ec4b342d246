"""Crowdsourced label aggregation under the Dawid-Skene model.

Answer tables are m x n integer arrays: entry ``[i, j]`` is worker i's answer
for item j in 1..k, or 0 when the worker did not label the item. Item labels
returned by this module are 0-based.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass

import numpy as np

from lloydkit.lloyd import FitResult
from lloydkit.metrics import ConvergenceTrace, DegenerateUpdateWarning, evaluate


@dataclass(frozen=True)
class CrowdConfig:
    max_iter: int = 50
    tol: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


def as_crowd_table(table, k: int) -> np.ndarray:
    x = np.asarray(table)
    if x.ndim != 2:
        raise ValueError("crowd table must be m x n")
    if x.size and (x.min() < 0 or x.max() > k):
        raise ValueError(f"crowd answers must lie in 0..{k}")
    return x.astype(np.int64)


def _answer_onehot(x: np.ndarray, k: int) -> np.ndarray:
    """m x n x k indicator of each answer; unobserved entries are all zero."""
    return (x[:, :, None] == np.arange(1, k + 1)).astype(float)


def majority_vote(table, k: int) -> np.ndarray:
    """Most frequent answer per item, ties to the smallest label, missing ignored."""
    x = as_crowd_table(table, k)
    votes = _answer_onehot(x, k).sum(axis=0)
    unseen = votes.sum(axis=1) == 0
    if unseen.any():
        raise ValueError(f"items {np.flatnonzero(unseen)[:10].tolist()} have no observed answers")
    return votes.argmax(axis=1)


def confusion_update(table, labels, k: int) -> np.ndarray:
    """Empirical answer frequencies per worker and estimated class.

    ``pi[i, g, h]`` = share of worker i's observed answers that equal h among
    items currently labelled g. Rows with no observed answers become uniform.
    """
    x = as_crowd_table(table, k)
    z = np.asarray(labels)
    onehot_z = np.zeros((z.size, k))
    onehot_z[np.arange(z.size), z] = 1.0
    counts = np.einsum("ijh,jg->igh", _answer_onehot(x, k), onehot_z)
    totals = counts.sum(axis=2, keepdims=True)
    pi = np.divide(counts, totals, out=np.full_like(counts, 1.0 / k), where=totals > 0)
    if np.any(totals == 0):
        warnings.warn(
            f"{int((totals == 0).sum())} worker/class rows had no answers; set to uniform",
            DegenerateUpdateWarning,
        )
    return pi


def ls_costs(table, pi) -> np.ndarray:
    """n x k squared distances between each item's answers and each class profile.

    ``cost[j, h] = sum over observed workers i of sum_g (1{X_ij = g} - pi[i, h, g])^2``.
    """
    pi = np.asarray(pi, dtype=float)
    k = pi.shape[1]
    x = as_crowd_table(table, k)
    observed = (x > 0).astype(float)
    cross = np.einsum("ijg,ihg->jh", _answer_onehot(x, k), pi)
    sq = np.einsum("ij,ih->jh", observed, (pi**2).sum(axis=2))
    return observed.sum(axis=0)[:, None] - 2.0 * cross + sq


def ls_label_update(table, pi) -> np.ndarray:
    """Least-squares label step; ties to the smallest label."""
    pi = np.asarray(pi, dtype=float)
    x = as_crowd_table(table, pi.shape[1])
    if np.any((x > 0).sum(axis=0) == 0):
        raise ValueError("some items have no observed answers")
    return ls_costs(x, pi).argmin(axis=1)


def v_pi(pi) -> float:
    """Collective worker accuracy ``min_{g != h} (sqrt(sum_i pi_igg) - sqrt(sum_i pi_igh))^2 / m``."""
    pi = np.asarray(pi, dtype=float)
    m, k, _ = pi.shape
    totals = pi.sum(axis=0)
    diag = np.sqrt(np.diag(totals))
    gaps = (diag[:, None] - np.sqrt(totals)) ** 2
    off = ~np.eye(k, dtype=bool)
    return float(gaps[off].min() / m)


def fit_crowd_lloyd(table, k: int, config: CrowdConfig | None = None, *, truth=None, init=None) -> FitResult:
    """Majority-vote start followed by confusion and least-squares label updates.

    The objective in the trace is the total least-squares cost of the current
    labels under the confusion estimate computed from them.
    ``extras["confusion"]`` holds the final m x k x k estimate; ``centers`` is
    the same estimate laid out as one row per class.
    """
    config = config or CrowdConfig()
    x = as_crowd_table(table, k)
    labels = majority_vote(x, k) if init is None else np.asarray(init).astype(np.int64)
    if labels.shape != (x.shape[1],):
        raise ValueError("init labels must have one entry per item")
    start = time.perf_counter()
    trace = ConvergenceTrace()
    pi = confusion_update(x, labels, k)
    costs = ls_costs(x, pi)

    def record(s):
        obj = float(costs[np.arange(labels.size), labels].sum())
        trace.append(s, evaluate(truth, labels, k=k, objective=obj), (time.perf_counter() - start) * 1e3)

    record(0)
    converged = False
    s = 0
    for s in range(1, config.max_iter + 1):
        new_labels = costs.argmin(axis=1)
        changed = int(np.count_nonzero(new_labels != labels))
        labels = new_labels
        pi = confusion_update(x, labels, k)
        costs = ls_costs(x, pi)
        record(s)
        if config.tol >= 0 and changed <= config.tol:
            converged = True
            break
    m = x.shape[0]
    centers = pi.transpose(1, 0, 2).reshape(k, m * k)
    return FitResult(labels, centers, trace, s, converged, {"confusion": pi})
