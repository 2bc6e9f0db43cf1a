"""Excitation Gramian of a node distribution along a reference trajectory.

The regressor S(Z_d(t)) is persistently exciting over a window of length T0
when the Gramian  int_{t0}^{t0+T0} S S^T dt  is bounded between alpha2*I and
alpha1*I with alpha2 > 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from . import rbfnet
from .trajectory import TrajectorySpec, input_matrix


class AsymmetricMatrixError(ValueError):
    pass


@numba.njit(cache=True)
def _jacobi_sweeps(a, threshold, max_sweeps):
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += a[i, j] * a[i, j]
        if math.sqrt(2.0 * off) < threshold:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    if k == p or k == q:
                        continue
                    akp = a[k, p]
                    akq = a[k, q]
                    nkp = akp - s * (akq + tau * akp)
                    nkq = akq + s * (akp - tau * akq)
                    a[k, p] = nkp
                    a[p, k] = nkp
                    a[k, q] = nkq
                    a[q, k] = nkq
    return max_sweeps


def jacobi_eigenvalues(a, tol: float = 1e-11, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Row-cyclic sweeps until the off-diagonal Frobenius norm falls below
    ``tol`` times the Frobenius norm of the input. Returned ascending.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    a = np.ascontiguousarray(0.5 * (a + a.T))
    scale = float(np.linalg.norm(a))
    threshold = tol * scale if scale > 0 else tol
    sweeps = _jacobi_sweeps(a, threshold, max_sweeps)
    if sweeps >= max_sweeps:
        raise RuntimeError(f"Jacobi did not converge in {max_sweeps} sweeps")
    return np.sort(np.diag(a).copy())


def excitation_gramian(net: rbfnet.RbfNetwork, spec: TrajectorySpec, t0: float, T0: float, dt: float) -> np.ndarray:
    """Trapezoidal quadrature of S S^T over [t0, t0 + T0]."""
    if not T0 > 0:
        raise ValueError(f"T0 must be positive, got {T0!r}")
    if not dt > 0 or dt >= T0:
        raise ValueError(f"need 0 < dt < T0, got dt={dt!r}, T0={T0!r}")
    steps = int(round(T0 / dt))
    h = T0 / steps
    z = input_matrix(spec, t0, t0 + T0, h)[: steps + 1]
    sq = np.empty((z.shape[0], net.m))
    for j, mu in enumerate(net.centers):
        d = z - mu
        sq[:, j] = np.einsum("ij,ij->i", d, d)
    s = np.exp(-sq / (net.sigma * net.sigma))
    w = np.full(s.shape[0], h)
    w[0] = w[-1] = 0.5 * h
    g = (s * w[:, None]).T @ s
    return 0.5 * (g + g.T)


def pe_levels(gramian, asym_tol: float = 1e-9) -> tuple[float, float]:
    """(alpha1, alpha2): largest and smallest Gramian eigenvalues."""
    g = np.asarray(gramian, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {g.shape}")
    asym = float(np.max(np.abs(g - g.T))) if g.size else 0.0
    if asym > asym_tol * max(1.0, float(np.max(np.abs(g)))):
        raise AsymmetricMatrixError(f"matrix asymmetry {asym:g} exceeds {asym_tol:g}")
    eig = jacobi_eigenvalues(g)
    return float(eig[-1]), float(eig[0])


@dataclass
class ExcitationReport:
    gramian: np.ndarray = field(repr=False)
    alpha1: float
    alpha2: float
    t0: float
    T0: float
    dt: float
    separation: float | None
    fill: float
    threshold: float

    @property
    def persistently_exciting(self) -> bool:
        return self.alpha2 > self.threshold

    def to_dict(self) -> dict:
        return {
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "t0": self.t0,
            "T0": self.T0,
            "dt": self.dt,
            "separation": self.separation,
            "fill": self.fill,
            "threshold": self.threshold,
            "verdict": "PE" if self.persistently_exciting else "not-PE",
            "m": int(self.gramian.shape[0]),
        }


def excitation_report(net: rbfnet.RbfNetwork, spec: TrajectorySpec, t0: float, T0: float, dt: float,
                      threshold: float | None = None) -> ExcitationReport:
    g = excitation_gramian(net, spec, t0, T0, dt)
    alpha1, alpha2 = pe_levels(g)
    sep = rbfnet.separation_distance(net.centers) if net.m >= 2 else None
    steps = int(round(T0 / dt))
    samples = input_matrix(spec, t0, t0 + T0, T0 / steps)
    fill = rbfnet.fill_distance(net.centers, samples)
    if threshold is None:
        threshold = 1e-8 * T0
    return ExcitationReport(g, alpha1, alpha2, t0, T0, dt, sep, fill, threshold)


def compare_distributions(net_a: rbfnet.RbfNetwork, net_b: rbfnet.RbfNetwork, spec: TrajectorySpec,
                          T0: float, dt: float, t0: float = 0.0):
    """Reports for both networks and the ratio alpha2_a / alpha2_b."""
    rep_a = excitation_report(net_a, spec, t0, T0, dt)
    rep_b = excitation_report(net_b, spec, t0, T0, dt)
    ratio = rep_a.alpha2 / rep_b.alpha2 if rep_b.alpha2 != 0 else float("inf")
    return rep_a, rep_b, ratio
