"""Figure rendering for run reports. Files only; no interactive windows."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .automaton import Dspdha  # noqa: E402
from .executor import Execution  # noqa: E402

_MODE_COLORS = plt.get_cmap("tab10")


def save_profile_figure(path: str | Path, rows: Sequence[tuple[float, float, str]], title: str) -> None:
    """Field profile u(x) colored by mode, from snapshot rows."""
    fig, ax = plt.subplots(figsize=(7, 4))
    xs = [r[0] for r in rows]
    us = [r[1] for r in rows]
    ax.plot(xs, us, color="0.6", lw=1.0, zorder=1)
    modes = sorted({r[2] for r in rows})
    for k, mode in enumerate(modes):
        mx = [r[0] for r in rows if r[2] == mode]
        mu = [r[1] for r in rows if r[2] == mode]
        ax.scatter(mx, mu, s=22, color=_MODE_COLORS(k % 10), label=mode, zorder=2)
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_timeseries_figure(
    path: str | Path, a: Dspdha, x: Execution, index: int, thresholds: Sequence[float] = ()
) -> None:
    """u(t) at one grid point, with mode changes at that point marked."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for iv in x.intervals:
        ax.plot(iv.times, iv.values[:, index], color=_MODE_COLORS(int(iv.partition.modes[index]) % 10), lw=1.2)
    for t, event in x.transition_events:
        if index in event.indices:
            ax.axvline(t, color="0.75", lw=0.6, zorder=0)
    for thr in thresholds:
        ax.axhline(thr, color="0.4", ls="--", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel(f"u at x={a.mesh.points[index]:g}")
    ax.set_title(f"{a.record.source_model}: value at x={a.mesh.points[index]:g}")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
