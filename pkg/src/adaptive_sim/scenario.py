"""Scenario configuration: JSON parsing, validation and network construction."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from . import clustering, rbfnet
from .control import MBFF, PID, RBFNN, GainSet
from .dynamics import JointState, RobotParams
from .rbfnet import AdaptConfig, RbfNetwork
from .trajectory import TrajectorySpec, input_matrix, standard_trajectory

BUILTIN_SCENARIOS = {"paper_section5": "paper_section5.json"}
INTEGRATORS = ("euler", "rk4")
_CONTROLLER_TYPES = {"pid": PID, "mbff": MBFF, "rbfnn": RBFNN}
_TOP_LEVEL = {"description", "robot", "trajectory", "initial_state", "seed", "duration", "dt", "integrator",
              "record_decimation", "snapshot_every", "window", "secondary_window", "gains", "controllers"}


class ConfigError(ValueError):
    """A scenario file is malformed; the message names the offending field."""


@dataclass(frozen=True)
class NetworkSource:
    """Where the hidden nodes come from.

    kind is "lattice" (levels per dimension), "centers" (inline list or a
    JSON file with a "centers" key) or "kmeans" (clustered trajectory samples).
    """

    kind: str
    sigma: float
    levels: Optional[tuple] = None
    centers: Optional[tuple] = None
    path: Optional[str] = None
    kmeans: Optional[clustering.KmeansConfig] = None
    sample_dt: float = 0.01

    def build(self, trajectory: TrajectorySpec, n_outputs: int = 2, base_dir: Optional[Path] = None) -> RbfNetwork:
        return RbfNetwork(self.centers_for(trajectory, base_dir), self.sigma, n_outputs=n_outputs)

    def centers_for(self, trajectory: TrajectorySpec, base_dir: Optional[Path] = None) -> np.ndarray:
        if self.kind == "lattice":
            return rbfnet.lattice_centers([list(lv) for lv in self.levels])
        if self.kind == "centers":
            if self.centers is not None:
                return np.array(self.centers, dtype=float)
            path = Path(self.path)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            with open(path) as fh:
                return np.array(json.load(fh)["centers"], dtype=float)
        data = kmeans_samples(trajectory, self.sample_dt)
        return clustering.kmeans(data, self.kmeans).centers


def kmeans_samples(trajectory: TrajectorySpec, sample_dt: float) -> np.ndarray:
    """Z_d over one period on a uniform grid, end point excluded."""
    n = int(math.floor(trajectory.period / sample_dt + 1e-9))
    return input_matrix(trajectory, 0.0, (n - 1) * sample_dt, sample_dt)


@dataclass(frozen=True)
class ControllerSpec:
    name: str
    variant: str
    gains: GainSet
    network: Optional[NetworkSource] = None


@dataclass(frozen=True)
class Scenario:
    robot: RobotParams
    trajectory: TrajectorySpec
    controller: ControllerSpec
    duration: float
    dt: float
    initial: JointState = field(default_factory=JointState)
    integrator: str = "euler"
    record_decimation: int = 1
    snapshot_every: float = 10.0
    seed: int = 0
    base_dir: Optional[Path] = None

    def __post_init__(self):
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ConfigError(f"duration must be positive, got {self.duration!r}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt must be positive, got {self.dt!r}")
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if int(self.record_decimation) < 1:
            raise ConfigError(f"record_decimation must be >= 1, got {self.record_decimation!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def build_network(self) -> Optional[RbfNetwork]:
        if self.controller.network is None:
            return None
        return self.controller.network.build(self.trajectory, self.trajectory.n_joints, self.base_dir)


@dataclass(frozen=True)
class ScenarioFile:
    """A parsed scenario document: shared settings plus one or more controllers."""

    scenarios: tuple
    window: tuple
    raw: dict
    secondary_window: Optional[tuple] = None

    @property
    def names(self) -> list:
        return [s.controller.name for s in self.scenarios]

    def select(self, names) -> list:
        by_name = {s.controller.name: s for s in self.scenarios}
        missing = [n for n in names if n not in by_name]
        if missing:
            raise ConfigError(f"controllers {missing} not in scenario (have {list(by_name)})")
        return [by_name[n] for n in names]

    def override(self, **kwargs) -> "ScenarioFile":
        changes = {k: v for k, v in kwargs.items() if v is not None}
        if not changes:
            return self
        try:
            scenarios = tuple(replace(s, **changes) for s in self.scenarios)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        return replace(self, scenarios=scenarios)


def _req(data, key, where):
    if key not in data:
        raise ConfigError(f"{where}: missing required field '{key}'")
    return data[key]


def _float(value, where):
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a number, got {value!r}") from None
    return out


def _vector(value, where, n=2):
    if isinstance(value, (int, float)):
        value = [value] * n
    if not isinstance(value, list) or len(value) != n:
        raise ConfigError(f"{where}: expected a list of {n} numbers, got {value!r}")
    return [_float(v, f"{where}[{i}]") for i, v in enumerate(value)]


def parse_gains(data: dict, where: str, n: int = 2) -> GainSet:
    known = {"K1", "K2", "KI", "gamma", "delta0", "w0"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{where}: unknown fields {sorted(unknown)}")
    adapt = None
    if "gamma" in data:
        w0 = data.get("w0", 10.0)
        w0 = math.inf if w0 in (None, "inf") else _float(w0, f"{where}.w0")
        try:
            adapt = AdaptConfig(_float(data["gamma"], f"{where}.gamma"),
                                _float(data.get("delta0", 0.0), f"{where}.delta0"), w0)
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    try:
        return GainSet(
            _vector(_req(data, "K1", where), f"{where}.K1", n),
            _vector(_req(data, "K2", where), f"{where}.K2", n),
            _vector(data.get("KI", [0.0] * n), f"{where}.KI", n),
            adapt,
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_network(data: dict, where: str, default_seed: int) -> NetworkSource:
    kind = _req(data, "kind", where)
    sigma = _float(_req(data, "sigma", where), f"{where}.sigma")
    if not sigma > 0:
        raise ConfigError(f"{where}.sigma: must be positive, got {sigma}")
    if kind == "lattice":
        levels = _req(data, "levels", where)
        if levels and not isinstance(levels[0], list):
            dims = int(_req(data, "dims", where))
            levels = [levels] * dims
        if not levels or any(len(lv) == 0 for lv in levels):
            raise ConfigError(f"{where}.levels: every dimension needs at least one level")
        return NetworkSource("lattice", sigma, levels=tuple(tuple(float(x) for x in lv) for lv in levels))
    if kind == "centers":
        if "centers" in data:
            return NetworkSource("centers", sigma, centers=tuple(tuple(float(x) for x in c) for c in data["centers"]))
        return NetworkSource("centers", sigma, path=str(_req(data, "path", where)))
    if kind == "kmeans":
        try:
            cfg = clustering.KmeansConfig(
                m=int(_req(data, "m", where)),
                seed=int(data.get("seed", default_seed)),
                max_iters=int(data.get("max_iters", 500)),
                tol=_float(data.get("tol", 1e-9), f"{where}.tol"),
                init=str(data.get("init", clustering.INIT_NEAR_ZERO)),
            )
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
        sample_dt = _float(data.get("sample_dt", 0.01), f"{where}.sample_dt")
        if not sample_dt > 0:
            raise ConfigError(f"{where}.sample_dt: must be positive")
        return NetworkSource("kmeans", sigma, kmeans=cfg, sample_dt=sample_dt)
    raise ConfigError(f"{where}.kind: expected 'lattice', 'centers' or 'kmeans', got {kind!r}")


def parse_scenario(data: dict, base_dir: Optional[Path] = None) -> ScenarioFile:
    if not isinstance(data, dict):
        raise ConfigError("scenario: top level must be a JSON object")
    unknown = set(data) - _TOP_LEVEL
    if unknown:
        raise ConfigError(f"scenario: unknown fields {sorted(unknown)}")
    try:
        robot = RobotParams.from_dict(data.get("robot", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"robot: {exc}") from None
    try:
        trajectory = TrajectorySpec.from_dict(data["trajectory"]) if "trajectory" in data else standard_trajectory()
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"trajectory: {exc}") from None
    n = trajectory.n_joints
    if n != 2:
        raise ConfigError(f"trajectory: the plant has 2 joints, trajectory has {n}")
    seed = int(data.get("seed", 0))
    base_gains = data.get("gains", {})
    init = data.get("initial_state", {})
    try:
        initial = JointState(_vector(init.get("q", [0.0, 0.0]), "initial_state.q"),
                             _vector(init.get("qdot", [0.0, 0.0]), "initial_state.qdot"))
    except ValueError as exc:
        raise ConfigError(f"initial_state: {exc}") from None
    entries = _req(data, "controllers", "scenario")
    if not isinstance(entries, list) or not entries:
        raise ConfigError("controllers: expected a nonempty list")
    window = tuple(_vector(data.get("window", [1980.0, 2000.0]), "window"))
    secondary = data.get("secondary_window")
    secondary = tuple(_vector(secondary, "secondary_window")) if secondary is not None else None
    for name, w in (("window", window), ("secondary_window", secondary)):
        if w is not None and not w[1] > w[0]:
            raise ConfigError(f"{name}: end must exceed start, got {list(w)}")

    common = dict(
        robot=robot,
        trajectory=trajectory,
        duration=_float(_req(data, "duration", "scenario"), "duration"),
        dt=_float(_req(data, "dt", "scenario"), "dt"),
        initial=initial,
        integrator=str(data.get("integrator", "euler")),
        record_decimation=int(data.get("record_decimation", 1)),
        snapshot_every=_float(data.get("snapshot_every", 10.0), "snapshot_every"),
        seed=seed,
        base_dir=base_dir,
    )
    scenarios = []
    seen = set()
    for i, entry in enumerate(entries):
        where = f"controllers[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{where}: expected an object, got {entry!r}")
        ctype = _req(entry, "type", where)
        if ctype not in _CONTROLLER_TYPES:
            raise ConfigError(f"{where}.type: expected one of {sorted(_CONTROLLER_TYPES)}, got {ctype!r}")
        name = str(entry.get("name", ctype.upper()))
        if name in seen:
            raise ConfigError(f"{where}.name: duplicate controller name {name!r}")
        seen.add(name)
        gains = parse_gains({**base_gains, **entry.get("gains", {})}, f"{where}.gains", n)
        network = None
        if _CONTROLLER_TYPES[ctype] == RBFNN:
            if gains.adapt is None:
                raise ConfigError(f"{where}.gains: RBFNN controllers need 'gamma'")
            network = parse_network(_req(entry, "network", where), f"{where}.network", seed)
        scenarios.append(Scenario(controller=ControllerSpec(name, _CONTROLLER_TYPES[ctype], gains, network), **common))
    return ScenarioFile(tuple(scenarios), window, data, secondary)


def read_scenario_data(source) -> tuple:
    """Raw JSON object and base directory for a path or builtin name."""
    source = str(source)
    if source in BUILTIN_SCENARIOS:
        text = resources.files("adaptive_sim.scenarios").joinpath(BUILTIN_SCENARIOS[source]).read_text()
        base_dir = None
    else:
        path = Path(source)
        if not path.is_file():
            raise ConfigError(f"scenario file not found: {source}")
        text = path.read_text()
        base_dir = path.parent
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return data, base_dir


def load_scenario(source) -> ScenarioFile:
    """Load from a path, or a builtin name such as ``paper_section5``."""
    data, base_dir = read_scenario_data(source)
    return parse_scenario(data, base_dir)
