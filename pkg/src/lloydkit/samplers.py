"""Seeded generators for mixtures, block models and crowd labels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from lloydkit.rng import as_generator


@dataclass(frozen=True)
class GmmSpec:
    centers: np.ndarray
    sigma: float
    sizes: tuple

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float)
        if c.ndim != 2 or len(self.sizes) != c.shape[0]:
            raise ValueError("centers must be k x d with one size per center")
        if any(s < 1 for s in self.sizes):
            raise ValueError("cluster sizes must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")


def orthonormal_centers(k: int, d: int, seed=0) -> np.ndarray:
    """k random orthonormal vectors in R^d (rows)."""
    if k > d:
        raise ValueError("cannot place more than d orthonormal centers")
    rng = as_generator(seed, "centers")
    q, r = np.linalg.qr(rng.standard_normal((d, k)))
    q = q * np.sign(np.diag(r))
    return q.T.copy()


def gmm_preset(snr: float = 9.0, n: int = 1000, k: int = 10, d: int = 100, seed=0) -> GmmSpec:
    """Equal-size spherical mixture with orthonormal centers and ``sigma = 2 / snr``."""
    if n % k:
        raise ValueError("n must be divisible by k")
    return GmmSpec(orthonormal_centers(k, d, seed), 2.0 / snr, (n // k,) * k)


def sample_gmm(spec: GmmSpec, seed=0) -> tuple[np.ndarray, np.ndarray]:
    """Rows ``theta_z + sigma * g`` with labels shuffled; returns ``(data, labels)``."""
    rng = as_generator(seed, "gmm")
    centers = np.asarray(spec.centers, dtype=float)
    labels = np.repeat(np.arange(centers.shape[0]), spec.sizes)
    labels = rng.permutation(labels)
    noise = rng.standard_normal((labels.size, centers.shape[1]))
    return centers[labels] + spec.sigma * noise, labels


def sample_symmetric_two(theta_star, sigma: float, n: int, seed=0) -> tuple[np.ndarray, np.ndarray]:
    """``y_i = z_i theta* + sigma g_i`` with ``z_i`` uniform on {-1, +1}."""
    if n < 2:
        raise ValueError("n must be >= 2")
    theta = np.asarray(theta_star, dtype=float).ravel()
    rng = as_generator(seed, "sym2")
    z = rng.choice(np.array([-1, 1]), size=n)
    return z[:, None] * theta + sigma * rng.standard_normal((n, theta.size)), z


@dataclass(frozen=True)
class SbmSpec:
    """Block model with edge probability ``a/n`` inside and ``b/n`` across communities."""

    n: int
    k: int
    a: float
    b: float
    sizes: tuple | None = None

    def __post_init__(self):
        sizes = self.sizes if self.sizes is not None else balanced_sizes(self.n, self.k)
        object.__setattr__(self, "sizes", tuple(int(s) for s in sizes))
        if len(self.sizes) != self.k or sum(self.sizes) != self.n:
            raise ValueError("sizes must list k counts summing to n")
        if not (0 < self.a < self.n and 0 <= self.b < self.n):
            raise ValueError("need 0 < a < n and 0 <= b < n")

    @classmethod
    def from_probabilities(cls, n: int, k: int, within: float, between: float, sizes=None) -> "SbmSpec":
        return cls(n, k, within * n, between * n, sizes)


def balanced_sizes(n: int, k: int) -> tuple:
    base, extra = divmod(n, k)
    return tuple(base + (1 if h < extra else 0) for h in range(k))


SBM_PRESETS = {
    "balanced": dict(n=2000, k=10, within=0.20, between=0.11, sizes=None),
    "sparse": dict(n=2000, k=4, within=0.019, between=0.005, sizes=None),
    "unbalanced": dict(n=1000, k=4, within=0.35, between=0.22, sizes=(100, 200, 300, 400)),
}


def sbm_preset(name: str) -> SbmSpec:
    try:
        p = SBM_PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown SBM preset {name!r}; choose from {sorted(SBM_PRESETS)}") from None
    return SbmSpec.from_probabilities(p["n"], p["k"], p["within"], p["between"], p["sizes"])


def sample_sbm(spec: SbmSpec, seed=0) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric 0/1 adjacency with zero diagonal, plus the shuffled community labels."""
    rng = as_generator(seed, "sbm")
    labels = rng.permutation(np.repeat(np.arange(spec.k), spec.sizes))
    same = labels[:, None] == labels[None, :]
    prob = np.where(same, spec.a / spec.n, spec.b / spec.n)
    draws = rng.random((spec.n, spec.n)) < prob
    upper = np.triu(draws, k=1)
    adj = (upper | upper.T).astype(np.int8)
    return adj, labels


@dataclass(frozen=True)
class CrowdSpec:
    """``confusion[i, g, h]`` is the chance worker i answers h on an item of class g."""

    confusion: np.ndarray
    n: int
    observe_prob: float = 1.0

    def __post_init__(self):
        pi = np.asarray(self.confusion, dtype=float)
        if pi.ndim != 3 or pi.shape[1] != pi.shape[2]:
            raise ValueError("confusion must have shape (m, k, k)")
        if np.any(pi < 0) or not np.allclose(pi.sum(axis=2), 1.0, atol=1e-12):
            raise ValueError("each confusion row must be a probability vector")
        if not 0 < self.observe_prob <= 1:
            raise ValueError("observe_prob must lie in (0, 1]")

    @property
    def m(self) -> int:
        return np.asarray(self.confusion).shape[0]

    @property
    def k(self) -> int:
        return np.asarray(self.confusion).shape[1]


def crowd_preset(m: int = 100, n: int = 1000, k: int = 2, p: float = 1.0, low=0.3, high=0.9, seed=0) -> CrowdSpec:
    """Workers with per-class accuracy drawn from U[low, high].

    Wrong answers split the remaining mass evenly, which for k = 2 is the
    usual ``pi[i, g, h] = 1 - pi[i, g, g]``.
    """
    rng = as_generator(seed, "crowd-workers")
    acc = rng.uniform(low, high, size=(m, k))
    pi = np.repeat(((1.0 - acc) / (k - 1))[:, :, None], k, axis=2)
    idx = np.arange(k)
    pi[:, idx, idx] = acc
    return CrowdSpec(pi, n, p)


def one_coin(m: int, k: int, p: float) -> np.ndarray:
    """Confusion tensor where every worker is right with probability p."""
    pi = np.full((m, k, k), (1.0 - p) / (k - 1))
    idx = np.arange(k)
    pi[:, idx, idx] = p
    return pi


def sample_truth(n: int, k: int, seed=0) -> np.ndarray:
    return as_generator(seed, "truth").integers(k, size=n)


def sample_crowd(spec: CrowdSpec, truth, seed=0) -> np.ndarray:
    """m x n table of answers in 1..k, with 0 marking an unobserved entry."""
    pi = np.asarray(spec.confusion, dtype=float)
    z = np.asarray(truth)
    if z.shape != (spec.n,):
        raise ValueError(f"truth must have length {spec.n}")
    rng = as_generator(seed, "crowd-labels")
    probs = pi[:, z, :]  # m x n x k
    cdf = np.cumsum(probs, axis=2)
    u = rng.random((spec.m, spec.n, 1))
    answers = (u >= cdf[:, :, :-1]).sum(axis=2) + 1
    if spec.observe_prob < 1:
        seen = rng.random((spec.m, spec.n)) < spec.observe_prob
        answers = np.where(seen, answers, 0)
    return answers.astype(np.int64)


def corrupt_labels(truth, k: int, target_rate: float, seed=0) -> np.ndarray:
    """Move ``round(target_rate * n_h)`` points out of every true cluster h.

    The j-th moved point of cluster h goes to cluster ``(h + 1 + j mod (k-1)) mod k``.
    Every offset is used equally often by every cluster, so with equal sizes
    each cluster gains exactly as many points as it loses and both group-wise
    terms sit at the target.
    """
    z = np.asarray(truth).astype(np.int64)
    if not 0 <= target_rate <= 1:
        raise ValueError("target_rate must lie in [0, 1]")
    if k < 2:
        return z.copy()
    rng = as_generator(seed, "corrupt")
    out = z.copy()
    for h in range(k):
        members = np.flatnonzero(z == h)
        count = int(round(target_rate * members.size))
        moved = rng.choice(members, size=count, replace=False)
        out[moved] = (h + 1 + np.arange(count) % (k - 1)) % k
    return out


def flip_labels(truth, rate: float, seed=0) -> np.ndarray:
    """Flip the sign of exactly ``round(rate * n)`` randomly chosen +-1 labels."""
    z = np.asarray(truth).astype(np.int64)
    rng = as_generator(seed, "flip")
    count = int(round(rate * z.size))
    out = z.copy()
    idx = rng.choice(z.size, size=count, replace=False)
    out[idx] = -out[idx]
    return out


@dataclass
class CounterexampleFixture:
    data: np.ndarray
    truth: np.ndarray
    bad_init: np.ndarray
    centers: np.ndarray
    meta: dict = field(default_factory=dict)


def counterexample_fixture(m: int, lam: float, delta: float = 1.0) -> CounterexampleFixture:
    """Noiseless six-cluster configuration on which Lloyd with three centers stalls.

    Centers 0..2 form an equilateral triangle of side ``delta``; center
    ``i + 3`` sits at distance ``lam * delta`` from center i on the ray from
    the triangle's centroid through center i. Cluster i + 3 holds
    ``round(m / (2 lam))`` points and cluster i the rest of m, so the
    initializer that merges clusters i and i + 3 puts its center about
    ``delta / 2`` from center i, between the two true centers.
    """
    if lam < 1:
        raise ValueError("lam must be >= 1")
    if delta <= 0:
        raise ValueError("delta must be positive")
    exact = m / (2.0 * lam)
    n_outer = int(round(exact))
    n_inner = m - n_outer
    if n_outer < 1 or n_inner < 1:
        raise ValueError(f"m={m} is too small to split at lam={lam}")
    radius = delta / math.sqrt(3.0)
    angles = np.pi / 2 + 2 * np.pi * np.arange(3) / 3
    units = np.column_stack([np.cos(angles), np.sin(angles)])
    inner = radius * units
    outer = inner + lam * delta * units
    centers = np.vstack([inner, outer])
    sizes = [n_inner] * 3 + [n_outer] * 3
    truth = np.repeat(np.arange(6), sizes)
    data = centers[truth].copy()
    bad_init = truth % 3
    return CounterexampleFixture(
        data,
        truth,
        bad_init,
        centers,
        {
            "outer_count": n_outer,
            "inner_count": n_inner,
            "outer_count_exact": exact,
            "rounded": not math.isclose(exact, n_outer),
        },
    )
