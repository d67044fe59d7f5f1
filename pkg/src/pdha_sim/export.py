"""Result export: trajectory and transition CSVs, run summaries, and
time snapshots. Numbers are written with 17 significant digits so files
round-trip bit-exactly.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable

import numpy as np

from .automaton import Dspdha
from .executor import Execution, ExecutionClass, ReachRecord


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def trajectory_rows(a: Dspdha, x: Execution, sample_every: int = 1) -> list[tuple]:
    """(t, x, u, mode, interval_index) per sample time and grid point,
    sorted by (t, x); interval boundaries keep both sides."""
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    rows: list[tuple] = []
    pts = a.mesh.points
    for k, iv in enumerate(x.intervals):
        n = iv.times.size
        keep = set(range(0, n, sample_every)) | {0, n - 1}
        names = [a.mode_names[q] for q in iv.partition.modes]
        for j in sorted(keep):
            t = float(iv.times[j])
            for i in range(pts.size):
                rows.append((t, float(pts[i]), float(iv.values[j, i]), names[i], k))
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def write_trajectory_csv(path: str | Path, a: Dspdha, x: Execution, sample_every: int = 1) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "u", "mode", "interval_index"])
        for t, xx, u, mode, k in trajectory_rows(a, x, sample_every):
            w.writerow([_fmt(t), _fmt(xx), _fmt(u), mode, k])


def write_transitions_csv(path: str | Path, x: Execution) -> None:
    """One row per discrete transition: tau_prime, event, indices."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau_prime", "event", "indices"])
        for t, event in x.transition_events:
            w.writerow([_fmt(t), event.name, ";".join(str(i) for i in event.indices)])


def read_transitions_csv(path: str | Path) -> list[tuple[float, str, tuple[int, ...]]]:
    out = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            idx = tuple(int(i) for i in row["indices"].split(";")) if row["indices"] else ()
            out.append((float(row["tau_prime"]), row["event"], idx))
    return out


def export_snapshot(a: Dspdha, x: Execution, t: float) -> list[tuple[float, float, str]]:
    """State profile (x, u, mode name) at time t.

    Values interpolate linearly between stored samples inside the interval
    containing t, never across a transition boundary; at a boundary time
    the post-transition interval wins. Fixed-value domain ends are
    included so profiles show the clamped boundary.

    Raises:
        ValueError: t outside the recorded horizon.
    """
    first, last = x.intervals[0], x.intervals[-1]
    if t < first.t_start or t > last.t_end:
        raise ValueError(f"t={t} outside recorded horizon [{first.t_start}, {last.t_end}]")
    iv = None
    for candidate in x.intervals:
        if candidate.t_start <= t <= candidate.t_end:
            iv = candidate  # keep scanning: the last containing interval wins
    assert iv is not None
    j = int(np.searchsorted(iv.times, t, side="right"))
    if j >= iv.times.size:
        u = iv.values[-1]
    elif j == 0 or iv.times[j - 1] == t:
        u = iv.values[max(j - 1, 0)]
    else:
        t0, t1 = iv.times[j - 1], iv.times[j]
        w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
        u = (1.0 - w) * iv.values[j - 1] + w * iv.values[j]

    names = [a.mode_names[q] for q in iv.partition.modes]
    rows = [(float(xx), float(uu), nm) for xx, uu, nm in zip(a.mesh.points, u, names)]
    left, right = a.flows[iv.partition.modes[0]].bc[0], a.flows[iv.partition.modes[-1]].bc[1]
    if left.kind == "dirichlet" and a.mesh.points[0] > a.mesh.domain.lower:
        rows.insert(0, (a.mesh.domain.lower, left.value, names[0]))
    if right.kind == "dirichlet" and a.mesh.points[-1] < a.mesh.domain.upper:
        rows.append((a.mesh.domain.upper, right.value, names[-1]))
    return rows


def write_snapshot_csv(path: str | Path, rows: Iterable[tuple[float, float, str]]) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "u", "mode"])
        for xx, u, mode in rows:
            w.writerow([_fmt(xx), _fmt(u), mode])


def run_summary(
    a: Dspdha,
    x: Execution,
    reach: ReachRecord,
    classification: ExecutionClass,
    opts_dict: dict,
    wall_time_s: float,
) -> dict:
    final = x.final_state
    counts: dict[str, int] = {name: 0 for name in a.mode_names}
    for q in final.partition.modes:
        counts[a.mode_names[q]] += 1
    events: dict[str, int] = {}
    transitions_per_index = [0] * a.m
    for _, event in x.transition_events:
        events[event.name] = events.get(event.name, 0) + 1
        for i in event.indices:
            transitions_per_index[i] += 1
    return {
        "schema": 1,
        "model": a.record.source_model,
        "scheme": a.record.scheme_name,
        "m": a.m,
        "h": a.mesh.spacing,
        "options": opts_dict,
        "classification": {"kind": classification.kind, "tau_infinity": classification.tau_infinity},
        "transition_count": x.transition_count,
        "transitions_per_index": transitions_per_index,
        "events": dict(sorted(events.items())),
        "reach_partition_count": reach.partition_count,
        "final": {
            "time": x.t_final,
            "occupied_cells": int(np.count_nonzero(final.field.values)),
            "mode_cell_counts": counts,
        },
        "wall_time_s": wall_time_s,
    }


def write_summary_json(path: str | Path, summary: dict) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
