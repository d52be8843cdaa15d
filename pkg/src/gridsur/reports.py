"""Trace, summary, and manifest writers.

All output is a pure function of the validated config: floats are
written in shortest round-trip form, JSON keys are sorted, and no
timestamps or absolute paths appear, so repeated runs produce
byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .strategy import RunTrace

# Fixed trace schema; metric_1..metric_k columns follow, k set by the
# functional kind (names recorded in the manifest and summary).
TRACE_COLUMNS = ("step", "selected_index", "z", "H", "J_min", "J_selected", "epsilon", "gain")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def trace_rows(trace: RunTrace) -> list[list[str]]:
    rows = []
    for r in trace.records:
        row = [
            _fmt(r.step),
            _fmt(r.selected_index),
            _fmt(r.observed_value),
            _fmt(r.h),
            _fmt(r.j_min),
            _fmt(r.j_selected),
            _fmt(r.epsilon),
            _fmt(r.gain),
        ]
        row.extend(_fmt(r.metrics[name]) for name in trace.metric_names)
        rows.append(row)
    return rows


def write_trace_csv(trace: RunTrace, path: Path) -> None:
    header = list(TRACE_COLUMNS) + [
        f"metric_{i + 1}" for i in range(len(trace.metric_names))
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(trace_rows(trace))


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def quantiles_by_step(series: np.ndarray) -> dict:
    """Quartiles across replications, per step; series is (reps, steps)."""
    q25, q50, q75 = np.quantile(series, [0.25, 0.5, 0.75], axis=0)
    return {
        "q25": [float(x) for x in q25],
        "median": [float(x) for x in q50],
        "q75": [float(x) for x in q75],
    }


def summarize_traces(traces: Sequence[RunTrace]) -> dict:
    metric_names = traces[0].metric_names
    h = np.array([t.h_series() for t in traces])
    out = {
        "kind": traces[0].config.spec.kind,
        "replications": len(traces),
        "metric_names": list(metric_names),
        "h": quantiles_by_step(h),
        "h0_median": float(np.median(h[:, 0])),
        "h_final_median": float(np.median(h[:, -1])),
    }
    metrics = {}
    for name in metric_names:
        series = np.array([[r.metrics[name] for r in t.records] for t in traces])
        metrics[name] = quantiles_by_step(series)
    out["metrics"] = metrics
    out["quasi_sur_max_violation"] = max(t.quasi_sur_violation() for t in traces)
    return out


def write_compare_csv(path: Path, rows: list[dict], max_metrics: int) -> None:
    header = ["functional", "replication", "step", "H"] + [
        f"metric_{i + 1}" for i in range(max_metrics)
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            metrics = list(row["metrics"])
            metrics += [None] * (max_metrics - len(metrics))
            writer.writerow(
                [row["functional"], str(row["replication"]), str(row["step"]), _fmt(row["h"])]
                + [_fmt(m) for m in metrics]
            )
