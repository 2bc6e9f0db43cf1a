"""Command-line entry point: ``adaptive-sim {run,compare,pe,nodes}``.

Exit codes: 0 success, 1 other failure, 2 configuration error, 3 diverged run.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import clustering, excitation, metrics, simulator
from .control import RBFNN
from .rbfnet import RbfNetwork
from .scenario import ConfigError, Scenario, ScenarioFile, kmeans_samples, parse_scenario, read_scenario_data
from .trajectory import input_matrix

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

FLOAT_FMT = "%.17g"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _fmt(x: float) -> str:
    return FLOAT_FMT % x


def write_json(path: Path, payload) -> None:
    # json renders floats with repr, the shortest string that round-trips
    path.write_text(json.dumps(payload, indent=2, allow_nan=True) + "\n")


def write_csv(path: Path, header, block: np.ndarray) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, block, fmt=FLOAT_FMT, delimiter=",")


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def parse_window(text: str) -> tuple:
    try:
        a, b = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like A:B, got {text!r}") from None
    if not b > a:
        raise argparse.ArgumentTypeError(f"window end must exceed start, got {text!r}")
    return a, b


def load(args) -> ScenarioFile:
    """Read the scenario and apply command-line overrides before validation."""
    data, base_dir = read_scenario_data(args.scenario)
    if not isinstance(data, dict):
        raise ConfigError("scenario: top level must be a JSON object")
    data = dict(data)
    for key in ("duration", "dt", "seed", "integrator"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if getattr(args, "window", None) is not None:
        data["window"] = list(args.window)
    return parse_scenario(data, base_dir)


def _selected(sf: ScenarioFile, args, only_rbf: bool = False) -> list:
    if args.controllers:
        names = [n.strip() for n in args.controllers.split(",") if n.strip()]
        chosen = sf.select(names)
    else:
        chosen = list(sf.scenarios)
    if only_rbf:
        bad = [s.controller.name for s in chosen if s.controller.variant != RBFNN]
        if args.controllers and bad:
            raise ConfigError(f"controllers {bad} have no network")
        chosen = [s for s in chosen if s.controller.variant == RBFNN]
        if not chosen:
            raise ConfigError("scenario has no RBFNN controller")
    return chosen


def effective_window(window: tuple, duration: float, explicit: bool) -> tuple:
    """The scenario window, shifted to the end of a shorter run unless given on the command line."""
    if window[1] <= duration + 1e-9:
        return window
    if explicit:
        raise ConfigError(f"window {window[0]:g}:{window[1]:g} exceeds run duration {duration:g}")
    length = min(window[1] - window[0], duration)
    return duration - length, duration


def _build_network(scenario: Scenario) -> Optional[RbfNetwork]:
    try:
        return scenario.build_network()
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"{scenario.controller.name}: cannot build network: {exc}") from None


def _run_payload(result: simulator.RunResult, scenario: Scenario, windows: dict) -> dict:
    out = {
        "controller": result.name,
        "variant": result.variant,
        "integrator": scenario.integrator,
        "dt": scenario.dt,
        "duration": scenario.duration,
        "seed": scenario.seed,
        "steps": scenario.n_steps,
    }
    for key, window in windows.items():
        summary = metrics.summarize(result, window).to_dict()
        summary.pop("controller")
        if key == "window":
            out.update(summary)
        else:
            out[key] = summary
    return out


def _windows(sf: ScenarioFile, scenario: Scenario, args) -> dict:
    explicit = getattr(args, "window", None) is not None
    windows = {"window": effective_window(sf.window, scenario.duration, explicit)}
    if sf.secondary_window is not None and not explicit and sf.secondary_window[1] <= scenario.duration + 1e-9:
        windows["secondary_window"] = sf.secondary_window
    return windows


def _snapshot_payload(result: simulator.RunResult, scenario: Scenario) -> dict:
    return {
        "controller": result.name,
        "every": scenario.snapshot_every,
        "snapshots": [{"t": t, "weights": w.tolist()} for t, w in result.snapshots],
    }


def cmd_run(args) -> int:
    sf = load(args)
    chosen = _selected(sf, args)
    if len(chosen) != 1:
        raise ConfigError(f"run takes one controller; choose with --controllers from {sf.names}")
    scenario = chosen[0]
    windows = _windows(sf, scenario, args)
    net = _build_network(scenario)
    try:
        result = simulator.run(scenario, network=net)
    except simulator.DivergedError as exc:
        raise CliError(str(exc), EXIT_DIVERGED) from None
    out = _outdir(args)
    write_csv(out / "timeseries.csv", simulator.CSV_COLUMNS, result.csv_rows())
    write_json(out / "summary.json", _run_payload(result, scenario, windows))
    final = result.final_network.to_dict() if result.final_network is not None else None
    write_json(out / "network_final.json", {"controller": result.name, "network": final})
    if result.has_network:
        write_json(out / "weight_snapshots.json", _snapshot_payload(result, scenario))
    _log(args, f"{result.name}: wrote results to {out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    sf = load(args)
    chosen = _selected(sf, args)
    base = chosen[0]
    windows = _windows(sf, base, args)
    results = simulator.run_comparison(base, [s.controller for s in chosen], workers=args.workers)
    out = _outdir(args)
    names = [s.controller.name for s in chosen]
    for name, res in zip(names, results):
        if isinstance(res, simulator.RunResult):
            write_csv(out / f"{_safe_name(name)}.csv", simulator.CSV_COLUMNS, res.csv_rows())
            _log(args, f"{name}: done")
        else:
            _log(args, f"{name}: FAILED: {res}")
    text = []
    for key, window in windows.items():
        table = metrics.summary_table(results, window, names)
        stem = "table" if key == "window" else "table_secondary"
        write_json(out / f"{stem}.json", table.to_dict())
        text.append(table.to_text())
    (out / "table.txt").write_text("\n".join(text))
    failures = [r for r in results if not isinstance(r, simulator.RunResult)]
    if len(failures) == len(results):
        diverged = any(isinstance(r, simulator.DivergedError) for r in failures)
        raise CliError("all runs failed", EXIT_DIVERGED if diverged else EXIT_FAILED)
    return EXIT_OK


def cmd_pe(args) -> int:
    sf = load(args)
    chosen = _selected(sf, args, only_rbf=True)
    traj = chosen[0].trajectory
    T0 = args.T0 if args.T0 is not None else 2.0 * traj.period
    dt = args.dt if args.dt is not None else chosen[0].dt
    if not T0 > 0 or not 0 < dt < T0:
        raise ConfigError(f"need T0 > 0 and 0 < dt < T0, got T0={T0}, dt={dt}")
    out = _outdir(args)
    reports = {}
    for scenario in chosen:
        net = _build_network(scenario)
        rep = excitation.excitation_report(net, traj, args.t0, T0, dt)
        reports[scenario.controller.name] = rep.to_dict()
        if args.gramian:
            name = "gramian.csv" if len(chosen) == 1 else f"gramian_{_safe_name(scenario.controller.name)}.csv"
            m = rep.gramian.shape[0]
            write_csv(out / name, [f"s{j + 1}" for j in range(m)], rep.gramian)
        _log(args, f"{scenario.controller.name}: alpha2 = {rep.alpha2:.6g} ({reports[scenario.controller.name]['verdict']})")
    payload = {"t0": args.t0, "T0": T0, "dt": dt, "networks": reports}
    if len(reports) == 1:
        payload.update(next(iter(reports.values())))
    write_json(out / "pe_report.json", payload)
    return EXIT_OK


def _nodes_for(scenario: Scenario) -> tuple:
    source = scenario.controller.network
    info = {"controller": scenario.controller.name, "kind": source.kind, "sigma": source.sigma}
    if source.kind != "kmeans":
        return _build_network(scenario).centers, info
    data = kmeans_samples(scenario.trajectory, source.sample_dt)
    cfg = source.kmeans
    try:
        res = clustering.kmeans(data, cfg)
    except (clustering.InsufficientDataError, clustering.ObjectiveIncreasedError) as exc:
        raise CliError(f"{scenario.controller.name}: k-means failed (seed {cfg.seed}, m {cfg.m}): {exc}",
                       EXIT_CONFIG) from None
    info.update(seed=cfg.seed, init=cfg.init, objective=res.objective, iterations=res.iterations,
                samples=int(data.shape[0]), sample_dt=source.sample_dt)
    return res.centers, info


def _write_nodes(out: Path, scenario: Scenario, centers: np.ndarray, info: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "centers.json", {**info, "m": int(centers.shape[0]), "centers": centers.tolist()})
    traj = scenario.trajectory
    n = int(math.floor(traj.period / 0.01 + 1e-9))
    t = np.arange(n + 1) * (traj.period / n)
    z = input_matrix(traj, 0.0, traj.period, traj.period / n)[: n + 1]
    dim = z.shape[1]
    header = ["kind", "index", "t", *[f"z{j + 1}" for j in range(dim)]]
    with open(out / "nodes_vs_trajectory.csv", "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(z.shape[0]):
            fh.write(",".join(["trajectory", str(i), _fmt(t[i]), *map(_fmt, z[i])]) + "\n")
        for i, c in enumerate(centers):
            fh.write(",".join(["center", str(i), "", *map(_fmt, c)]) + "\n")


def cmd_nodes(args) -> int:
    sf = load(args)
    chosen = _selected(sf, args, only_rbf=True)
    if not args.controllers:
        kmeans_first = [s for s in chosen if s.controller.network.kind == "kmeans"]
        chosen = (kmeans_first or chosen)[:1]
    out = _outdir(args)
    for scenario in chosen:
        centers, info = _nodes_for(scenario)
        target = out if len(chosen) == 1 else out / _safe_name(scenario.controller.name)
        _write_nodes(target, scenario, centers, info)
        _log(args, f"{scenario.controller.name}: {centers.shape[0]} centers")
    return EXIT_OK


def _outdir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    return out


def _log(args, message: str) -> None:
    if not args.quiet:
        print(message, file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptive-sim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", default="paper_section5",
                        help="scenario JSON path or builtin name (default: paper_section5)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--dt", type=float, help="override the step size (s)")
    common.add_argument("--duration", type=float, help="override the run length (s)")
    common.add_argument("--seed", type=int, help="override the seed")
    common.add_argument("--integrator", choices=("euler", "rk4"), help="override the integrator")
    common.add_argument("--window", type=parse_window, help="metric window A:B in seconds")
    common.add_argument("--controllers", help="comma-separated controller names")
    common.add_argument("--quiet", action="store_true", help="no progress messages")

    sub.add_parser("run", parents=[common], help="simulate one controller")
    cmp_ = sub.add_parser("compare", parents=[common], help="simulate all controllers and tabulate")
    cmp_.add_argument("--workers", type=int, help="parallel runs (default: CPU count, capped by ADAPTIVE_SIM_THREADS)")
    pe = sub.add_parser("pe", parents=[common], help="excitation levels of the node distributions")
    pe.add_argument("--T0", type=float, help="window length (default: two periods)")
    pe.add_argument("--t0", type=float, default=0.0, help="window start")
    pe.add_argument("--gramian", action="store_true", help="also write the Gramian as CSV")
    sub.add_parser("nodes", parents=[common], help="write hidden-node centers for plotting")
    return parser


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "pe": cmd_pe, "nodes": cmd_nodes}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
