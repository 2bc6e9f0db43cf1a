"""Performance indices over a time window of a recorded run.

MATE is max |e1_i|. MAAE is the proxy max |K2_i e2_i| for every controller;
the direct network residual max |W^T S - feedforward| is reported separately
for network runs. All indices are evaluated on the recorded grid, so a
decimated run only sees its stored samples.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .simulator import RunResult

TABLE_ORDER = ("PID", "MBFF", "RBFNN-L", "RBFNN-O")
TABLE_COLUMNS = ("MAAE1", "MATE1", "MAAE2", "MATE2")


class WindowError(ValueError):
    pass


def _window_mask(result: RunResult, window) -> np.ndarray:
    ta, tb = float(window[0]), float(window[1])
    if not tb >= ta:
        raise WindowError(f"window end {tb} precedes start {ta}")
    # half-step slack so that grid points at the window edges are kept
    eps = 0.5 * result.dt
    mask = (result.t >= ta - eps) & (result.t <= tb + eps)
    if not mask.any():
        span = (float(result.t[0]), float(result.t[-1])) if result.t.size else (0.0, 0.0)
        raise WindowError(f"window [{ta}, {tb}] holds no samples (run covers {span[0]}..{span[1]} s)")
    return mask


def full_window(result: RunResult) -> tuple:
    return float(result.t[0]), float(result.t[-1])


def mate(result: RunResult, window) -> np.ndarray:
    mask = _window_mask(result, window)
    return np.max(np.abs(result.e1[mask]), axis=0)


def maae(result: RunResult, window, K2=None) -> np.ndarray:
    K2 = result.K2 if K2 is None else np.asarray(K2, dtype=float)
    mask = _window_mask(result, window)
    return np.max(np.abs(K2 * result.e2[mask]), axis=0)


def direct_approx_error(result: RunResult, window) -> np.ndarray:
    if not result.has_network:
        raise ValueError(f"run {result.name!r} ({result.variant}) has no network output")
    mask = _window_mask(result, window)
    return np.max(np.abs(result.nn[mask] - result.ff[mask]), axis=0)


def weight_convergence(result: RunResult, window) -> np.ndarray:
    """Largest per-step weight change norm per joint within the window."""
    if not result.has_network or result.dw.size == 0 or np.all(np.isnan(result.dw)):
        raise ValueError(f"run {result.name!r} has no weight history")
    mask = _window_mask(result, window)
    return np.max(result.dw[mask], axis=0)


@dataclass(frozen=True)
class PerformanceSummary:
    name: str
    window: tuple
    mate: np.ndarray
    maae: np.ndarray
    direct: Optional[np.ndarray] = None
    weight_change: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        out = {
            "controller": self.name,
            "window": list(self.window),
            "mate": self.mate.tolist(),
            "maae": self.maae.tolist(),
        }
        if self.direct is not None:
            out["direct_approx_error"] = self.direct.tolist()
        if self.weight_change is not None:
            out["weight_change"] = self.weight_change.tolist()
        return out


def summarize(result: RunResult, window) -> PerformanceSummary:
    window = (float(window[0]), float(window[1]))
    direct = wc = None
    if result.has_network:
        direct = direct_approx_error(result, window)
        wc = weight_convergence(result, window)
    return PerformanceSummary(result.name, window, mate(result, window), maae(result, window), direct, wc)


def _row_key(name: str) -> tuple:
    return (TABLE_ORDER.index(name), "") if name in TABLE_ORDER else (len(TABLE_ORDER), name)


@dataclass(frozen=True)
class SummaryTable:
    window: tuple
    rows: tuple                 # PerformanceSummary in display order
    failures: tuple = ()        # (name, message)

    def to_dict(self) -> dict:
        out = {s.name: {"maae": s.maae.tolist(), "mate": s.mate.tolist()} for s in self.rows}
        for name, msg in self.failures:
            out[name] = {"error": msg}
        return out

    def to_json(self) -> str:
        return json.dumps({"window": list(self.window), "controllers": self.to_dict()}, indent=2) + "\n"

    def to_text(self) -> str:
        header = ["controller", *TABLE_COLUMNS]
        lines = [header]
        for s in self.rows:
            vals = (s.maae[0], s.mate[0], s.maae[1], s.mate[1])
            lines.append([s.name, *(f"{v:.6g}" for v in vals)])
        for name, msg in self.failures:
            lines.append([name, "FAILED", msg, "", ""])
        widths = [max(len(r[i]) for r in lines) for i in range(len(header))]
        text = [f"window {self.window[0]:g}-{self.window[1]:g} s"]
        for r in lines:
            text.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))).rstrip())
        return "\n".join(text) + "\n"


def summary_table(results: Sequence, window, names: Optional[Sequence[str]] = None) -> SummaryTable:
    """Table over runs (or exceptions, shown as failed rows).

    ``results`` may hold RunResults or PerformanceSummary objects; summaries
    computed on a different window are rejected.
    """
    window = (float(window[0]), float(window[1]))
    rows, failures = [], []
    for i, item in enumerate(results):
        if isinstance(item, PerformanceSummary):
            if tuple(item.window) != window:
                raise WindowError(f"summary {item.name!r} uses window {item.window}, table uses {window}")
            rows.append(item)
        elif isinstance(item, RunResult):
            rows.append(summarize(item, window))
        else:
            name = names[i] if names is not None else f"run{i}"
            failures.append((name, str(item)))
    ordered = sorted(range(len(rows)), key=lambda k: (_row_key(rows[k].name), k))
    return SummaryTable(window, tuple(rows[k] for k in ordered), tuple(failures))
