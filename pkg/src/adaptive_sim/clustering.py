"""Lloyd K-means for placing hidden nodes along a sampled reference trajectory."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

INIT_NEAR_ZERO = "near-zero"
INIT_DATA_POINT = "random-data-point"


class InsufficientDataError(ValueError):
    pass


class ObjectiveIncreasedError(RuntimeError):
    pass


@dataclass(frozen=True)
class KmeansConfig:
    m: int = 20
    seed: int = 0
    max_iters: int = 500
    tol: float = 1e-9
    init: str = INIT_NEAR_ZERO
    init_scale: float = 0.01

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be at least 1, got {self.m}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.init not in (INIT_NEAR_ZERO, INIT_DATA_POINT):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass
class KmeansResult:
    centers: np.ndarray
    assignments: np.ndarray
    objective: float
    iterations: int
    history: list


def _sq_dists(data, centers):
    # Explicit differences rather than the Gram expansion so that ties and
    # zero distances come out exact.
    out = np.empty((data.shape[0], centers.shape[0]))
    for j, mu in enumerate(centers):
        d = data - mu
        out[:, j] = np.einsum("ij,ij->i", d, d)
    return out


def objective(centers, data) -> float:
    """Sum of squared distances from each sample to its nearest center."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if centers.size == 0 or data.size == 0:
        raise ValueError("objective needs nonempty centers and data")
    return float(_sq_dists(data, centers).min(axis=1).sum())


def _initial_centers(data, config, rng):
    p = data.shape[1]
    if config.init == INIT_NEAR_ZERO:
        return rng.uniform(-config.init_scale, config.init_scale, size=(config.m, p))
    idx = rng.choice(data.shape[0], size=config.m, replace=False)
    return data[idx].copy()


def _repair_empty(data, centers, labels, d2):
    """Move each empty center onto the sample farthest from its current center."""
    counts = np.bincount(labels, minlength=centers.shape[0])
    for j in np.flatnonzero(counts == 0):
        nearest = d2[np.arange(data.shape[0]), labels]
        # Only steal from clusters that keep at least one other member.
        eligible = counts[labels] > 1
        nearest = np.where(eligible, nearest, -1.0)
        i = int(np.argmax(nearest))
        counts[labels[i]] -= 1
        labels[i] = j
        counts[j] = 1
        centers[j] = data[i]
        d2[:, j] = np.einsum("ij,ij->i", data - data[i], data - data[i])
    return labels


def kmeans(data, config: KmeansConfig) -> KmeansResult:
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.shape[0] < config.m:
        raise InsufficientDataError(f"{data.shape[0]} samples for {config.m} clusters")
    if not np.all(np.isfinite(data)):
        raise ValueError("data must be finite")

    rng = np.random.default_rng(config.seed)
    centers = _initial_centers(data, config, rng)
    history = []
    prev_j = np.inf
    iterations = 0
    labels = None
    for iterations in range(1, config.max_iters + 1):
        d2 = _sq_dists(data, centers)
        labels = np.argmin(d2, axis=1)
        labels = _repair_empty(data, centers, labels, d2)
        new = np.empty_like(centers)
        for j in range(config.m):
            new[j] = data[labels == j].mean(axis=0)
        j_val = float(np.sum((data - new[labels]) ** 2))
        if j_val > prev_j * (1 + 1e-12) + 1e-300:
            raise ObjectiveIncreasedError(f"J rose from {prev_j} to {j_val} at iteration {iterations}")
        history.append(j_val)
        prev_j = j_val
        shift = float(np.max(np.abs(new - centers)))
        centers = new
        if shift < config.tol:
            break

    # Final assignment against the final centers.
    d2 = _sq_dists(data, centers)
    labels = np.argmin(d2, axis=1)
    return KmeansResult(centers, labels, float(d2[np.arange(len(labels)), labels].sum()), iterations, history)
