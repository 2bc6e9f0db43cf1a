"""Gaussian RBF network with fixed centers and an adaptive output layer."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class AdaptConfig:
    """Gradient learning with switching leakage.

    ``delta0`` is applied to a joint's weight column only while its norm is
    at or above ``w0``; below the threshold the law is the pure gradient step.
    """

    gamma: float = 6.0
    delta0: float = 0.01
    w0: float = 10.0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma!r}")
        if not self.delta0 >= 0:
            raise ValueError(f"delta0 must be non-negative, got {self.delta0!r}")
        if not self.w0 > 0:
            raise ValueError(f"w0 must be positive, got {self.w0!r}")


class RbfNetwork:
    """Centers (m x p), shared width sigma, weights (m x n)."""

    def __init__(self, centers, sigma: float, weights=None, n_outputs: int = 2):
        centers = np.array(centers, dtype=float, ndmin=2)
        if centers.shape[0] < 1:
            raise ValueError("network needs at least one center")
        if not (math.isfinite(sigma) and sigma > 0):
            raise ValueError(f"sigma must be positive, got {sigma!r}")
        if weights is None:
            weights = np.zeros((centers.shape[0], n_outputs))
        weights = np.array(weights, dtype=float, ndmin=2)
        if weights.shape[0] != centers.shape[0]:
            raise ValueError(f"weights have {weights.shape[0]} rows for {centers.shape[0]} centers")
        if not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite")
        self.centers = centers
        self.sigma = float(sigma)
        self.weights = weights

    @property
    def m(self) -> int:
        return self.centers.shape[0]

    def with_weights(self, weights) -> "RbfNetwork":
        """Same nodes, new weights; skips validation (hot path of the simulator)."""
        net = object.__new__(RbfNetwork)
        net.centers = self.centers
        net.sigma = self.sigma
        net.weights = weights
        return net

    def to_dict(self) -> dict:
        return {"sigma": self.sigma, "centers": self.centers.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, data: dict, n_outputs: int = 2) -> "RbfNetwork":
        return cls(data["centers"], float(data["sigma"]), data.get("weights"), n_outputs=n_outputs)


def activations(net: RbfNetwork, z) -> np.ndarray:
    d = net.centers - np.asarray(z, dtype=float)
    return np.exp(-np.einsum("ij,ij->i", d, d) / (net.sigma * net.sigma))


def output(net: RbfNetwork, z) -> np.ndarray:
    return net.weights.T @ activations(net, z)


def lattice_centers(levels_per_dim: Sequence[Sequence[float]]) -> np.ndarray:
    """Cartesian product of per-dimension levels, last dimension varying fastest."""
    if len(levels_per_dim) == 0 or any(len(levels) == 0 for levels in levels_per_dim):
        raise ValueError("every dimension needs at least one level")
    return np.array(list(itertools.product(*levels_per_dim)), dtype=float)


def leakage(weights: np.ndarray, config: AdaptConfig) -> np.ndarray:
    """Per-joint delta: 0 below the norm threshold, delta0 at or above it."""
    norms = np.sqrt(np.einsum("ij,ij->j", weights, weights))
    return np.where(norms >= config.w0, config.delta0, 0.0)


def adapt_step(net: RbfNetwork, config: AdaptConfig, s, e2, dt: float) -> np.ndarray:
    """One explicit-Euler step of W_i' = gamma (S e2_i - delta_i W_i); returns new weights."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    return _adapt(net.weights, config, np.asarray(s, dtype=float), np.asarray(e2, dtype=float), dt)


def _adapt(weights, config, s, e2, dt):
    delta = leakage(weights, config)
    return weights + config.gamma * dt * (np.outer(s, e2) - delta * weights)


def separation_distance(centers) -> float:
    centers = np.asarray(centers, dtype=float)
    if centers.shape[0] < 2:
        raise ValueError("separation distance needs at least two centers")
    best = np.inf
    for j in range(centers.shape[0] - 1):
        d = centers[j + 1:] - centers[j]
        best = min(best, float(np.einsum("ij,ij->i", d, d).min()))
    return math.sqrt(best)


def fill_distance(centers, samples) -> float:
    centers = np.asarray(centers, dtype=float)
    samples = np.asarray(samples, dtype=float)
    if centers.size == 0 or samples.size == 0:
        raise ValueError("fill distance needs nonempty centers and samples")
    centers = centers.reshape(centers.shape[0], -1)
    samples = samples.reshape(samples.shape[0], -1)
    best = np.full(samples.shape[0], np.inf)
    for mu in centers:
        d = samples - mu
        np.minimum(best, np.einsum("ij,ij->i", d, d), out=best)
    return float(np.sqrt(best.max()))
