"""Deterministic SVG plots for sweep tables and field dumps.

Output is byte-reproducible for identical inputs: rendering uses the
off-screen Agg backend, SVG element ids are salted with a fixed string,
and the date stamp is suppressed.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend pinned above)
import numpy as np  # noqa: E402

from .fields.io import REGION_COLLAR, read_field  # noqa: E402
from .horizon import load_sweep_rows  # noqa: E402

_RC = {"svg.hashsalt": "nlap", "svg.fonttype": "none"}


def emit_plots(paths, kind: str, out_dir=None) -> list:
    """Render one SVG per input file.

    ``kind`` selects the reader: ``"sweep"`` expects sweep CSV tables and
    draws the log-log eigenvalue error against the horizon; ``"field"``
    expects field dumps and draws a line plot (1D, collar shaded) or a
    heatmap (2D).  Plots land next to their sources unless ``out_dir``
    is given.  Returns the written paths; inputs are validated before
    any file is created.
    """
    if kind not in ("sweep", "field"):
        raise ValueError(f"unknown plot kind {kind!r}; expected 'sweep' or "
                         f"'field'")
    written = []
    for source in paths:
        source = Path(source)
        base = Path(out_dir) if out_dir is not None else source.parent
        target = base / (source.stem + ".svg")
        if kind == "sweep":
            _plot_sweep(source, target)
        else:
            _plot_field(source, target)
        written.append(target)
    return written


def _save(fig, target) -> None:
    with plt.rc_context(_RC):
        fig.savefig(target, format="svg", metadata={"Date": None})
    plt.close(fig)


def _plot_sweep(source: Path, target: Path) -> None:
    rows = load_sweep_rows(source)
    if not rows:
        raise ValueError(f"sweep table {source} has no data rows")
    deltas = [row.delta for row in rows]
    errors = [abs(row.lam - row.ref_lambda) for row in rows]
    if min(errors) <= 0.0:
        raise ValueError("eigenvalue errors must be positive for a "
                         "log-log plot")
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.loglog(deltas, errors, marker="o", color="C0")
    ax.set_xlabel("horizon delta")
    ax.set_ylabel("|lambda - lambda_ref|")
    ax.set_title(source.stem)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, target)


def _axes_of(header) -> list:
    origin = np.asarray(header["origin"], dtype=float)
    return [origin[k] + (np.arange(header["shape"][k]) + 0.5) * header["h"]
            for k in range(int(header["dim"]))]


def _collar_spans(x: np.ndarray, collar: np.ndarray, h: float) -> list:
    """Contiguous collar index runs as cell-extent intervals."""
    spans = []
    start = None
    for i, flag in enumerate(collar):
        if flag and start is None:
            start = i
        if start is not None and (not flag or i == len(collar) - 1):
            stop = i if flag else i - 1
            spans.append((x[start] - 0.5 * h, x[stop] + 0.5 * h))
            start = None
    return spans


def _plot_field(source: Path, target: Path) -> None:
    values, header = read_field(source)
    if header["kind"] != "scalar":
        raise ValueError("field plots expect scalar dumps, not gradient "
                         "stacks")
    dim = int(header["dim"])
    if dim not in (1, 2):
        raise ValueError("field plots support one- or two-dimensional "
                         "grids")
    axes = _axes_of(header)
    if dim == 1:
        fig, ax = plt.subplots(figsize=(6.0, 3.6))
        collar = header["regions"] == REGION_COLLAR
        for lo, hi in _collar_spans(axes[0], collar, header["h"]):
            ax.axvspan(lo, hi, color="0.88", zorder=0)
        ax.plot(axes[0], values, color="C0")
        ax.set_xlabel("x")
        ax.set_ylabel("u")
    else:
        fig, ax = plt.subplots(figsize=(5.2, 4.4))
        mesh = ax.pcolormesh(axes[0], axes[1], values.T, shading="nearest")
        fig.colorbar(mesh, ax=ax)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_aspect("equal")
    ax.set_title(source.stem)
    _save(fig, target)
