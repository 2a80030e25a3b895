"""SVG convergence plots rendered with matplotlib.

Output is deterministic: the SVG id salt is fixed and no date is embedded.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .matrix import atomic_write_text  # noqa: E402

GAP_OFFSET = 1e-2
_X_COLUMNS = {"iter": "iter", "time": "elapsed_sec"}
_X_LABELS = {"iter": "iteration", "time": "time (s)"}
_Y_LABELS = {"objective": "objective", "gap": "objective - v(P) + 1e-2", "test_rmse": "Test RMSE"}


def gap_series(traces: list[dict]) -> list[np.ndarray]:
    """``objective - v + offset`` per trace, with ``v`` the least objective over all traces."""
    v = min(float(np.nanmin(t["objective"])) for t in traces)
    return [t["objective"] - v + GAP_OFFSET for t in traces]


def _svg_bytes(fig) -> str:
    buf = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": "bpgmf", "svg.fonttype": "none"}):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def plot_traces(traces: list[dict], labels: list[str], x: str, y: str, out) -> None:
    """Line chart of one column against iteration or time, one line per trace.

    Raises:
        ValueError: on an empty trace list, an unknown axis or a missing column.
    """
    if not traces:
        raise ValueError("need at least one trace")
    if x not in _X_COLUMNS or y not in _Y_LABELS:
        raise ValueError(f"unknown axis x={x!r} y={y!r}")
    xcol = _X_COLUMNS[x]
    ycol = "objective" if y == "gap" else y
    for t, name in zip(traces, labels):
        for col in (xcol, ycol):
            if np.all(np.isnan(t[col])):
                raise ValueError(f"trace {name!r} has no values in column {col!r}")
    ys = gap_series(traces) if y == "gap" else [t[ycol] for t in traces]
    fig, ax = plt.subplots(figsize=(6, 4))
    for t, yv, name in zip(traces, ys, labels):
        ax.plot(t[xcol], yv, label=name, linewidth=1.4)
    if y == "gap":
        ax.set_yscale("log")
    ax.set_xlabel(_X_LABELS[x])
    ax.set_ylabel(_Y_LABELS[y])
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    atomic_write_text(out, _svg_bytes(fig))


def plot_final_objectives(finals: dict[str, list[float]], out) -> None:
    """Box plot of per-seed final objectives for each algorithm."""
    names = list(finals)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.boxplot([finals[n] for n in names])
    ax.set_xticks(range(1, len(names) + 1), names)
    ax.set_ylabel("final objective")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    atomic_write_text(out, _svg_bytes(fig))
