"""Periodic joint-space reference trajectories.

Each joint follows either a sinusoid ``offset + A sin(w t + phase)`` or a
constant set point. The network input is the stacked vector
``Z_d = [q_d, q_d', q_d'']`` (length 6 for two joints).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np


@dataclass(frozen=True)
class Sinusoid:
    amplitude: float = 1.0
    omega: float = 1.0
    phase: float = 0.0
    offset: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"sinusoid omega must be positive, got {self.omega!r}")

    def evaluate(self, t: float) -> tuple[float, float, float]:
        arg = self.omega * t + self.phase
        s, c = math.sin(arg), math.cos(arg)
        a, w = self.amplitude, self.omega
        return self.offset + a * s, a * w * c, -a * w * w * s

    def to_dict(self) -> dict:
        return {"kind": "sinusoid", "amplitude": self.amplitude, "omega": self.omega,
                "phase": self.phase, "offset": self.offset}


@dataclass(frozen=True)
class SetPoint:
    constant: float = 0.0

    def evaluate(self, t: float) -> tuple[float, float, float]:
        return self.constant, 0.0, 0.0

    def to_dict(self) -> dict:
        return {"kind": "setpoint", "constant": self.constant}


JointProfile = Union[Sinusoid, SetPoint]


@dataclass(frozen=True)
class DesiredPoint:
    qd: np.ndarray
    qd_dot: np.ndarray
    qd_ddot: np.ndarray

    @property
    def as_input(self) -> np.ndarray:
        return np.concatenate([self.qd, self.qd_dot, self.qd_ddot])


@dataclass(frozen=True)
class TrajectorySpec:
    joints: tuple[JointProfile, ...]
    period: float

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        if len(self.joints) == 0:
            raise ValueError("trajectory needs at least one joint")
        if not (math.isfinite(self.period) and self.period > 0):
            raise ValueError(f"period must be positive, got {self.period!r}")
        for j, prof in enumerate(self.joints):
            if isinstance(prof, Sinusoid):
                cycles = self.period * prof.omega / (2 * math.pi)
                if abs(cycles - round(cycles)) > 1e-6 or round(cycles) < 1:
                    raise ValueError(
                        f"period {self.period} is not a multiple of joint {j}'s period "
                        f"{2 * math.pi / prof.omega}"
                    )

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    def bound(self) -> float:
        """Upper bound on ||Z_d(t)|| from the joint amplitudes."""
        total = 0.0
        for prof in self.joints:
            if isinstance(prof, Sinusoid):
                a, w = abs(prof.amplitude), prof.omega
                total += (abs(prof.offset) + a) ** 2 + (a * w) ** 2 + (a * w * w) ** 2
            else:
                total += prof.constant ** 2
        return math.sqrt(total)

    def to_dict(self) -> dict:
        return {"joints": [p.to_dict() for p in self.joints], "period": self.period}

    @classmethod
    def from_dict(cls, data: dict) -> "TrajectorySpec":
        joints = []
        for j, item in enumerate(data["joints"]):
            item = dict(item)
            kind = item.pop("kind", None)
            if kind == "sinusoid":
                joints.append(Sinusoid(**{k: float(v) for k, v in item.items()}))
            elif kind == "setpoint":
                joints.append(SetPoint(**{k: float(v) for k, v in item.items()}))
            else:
                raise ValueError(f"joints[{j}].kind must be 'sinusoid' or 'setpoint', got {kind!r}")
        return cls(tuple(joints), float(data["period"]))


def standard_trajectory() -> TrajectorySpec:
    """q_d1 = sin t, q_d2 = cos t."""
    return TrajectorySpec(
        (Sinusoid(1.0, 1.0, 0.0, 0.0), Sinusoid(1.0, 1.0, math.pi / 2, 0.0)),
        2 * math.pi,
    )


def set_point_trajectory(constants: Sequence[float], period: float = 1.0) -> TrajectorySpec:
    return TrajectorySpec(tuple(SetPoint(float(c)) for c in constants), period)


def sample(spec: TrajectorySpec, t: float) -> DesiredPoint:
    vals = np.array([prof.evaluate(t) for prof in spec.joints])
    return DesiredPoint(vals[:, 0].copy(), vals[:, 1].copy(), vals[:, 2].copy())


def sample_grid(spec: TrajectorySpec, t0: float, t1: float, dt: float) -> list[tuple[float, DesiredPoint]]:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    count = int(math.floor((t1 - t0) / dt + 1e-9)) + 1
    return [(t0 + k * dt, sample(spec, t0 + k * dt)) for k in range(count)]


def input_matrix(spec: TrajectorySpec, t0: float, t1: float, dt: float) -> np.ndarray:
    """Stacked Z_d samples on the grid, one row per time."""
    return np.array([p.as_input for _, p in sample_grid(spec, t0, t1, dt)])
