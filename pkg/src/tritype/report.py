"""Output path shared by the CLI commands: CSV, run manifests, figures.

CSV files are written atomically (temp file + rename) so a failed
command never leaves a partial data file, reals are printed at 17
significant digits so replays are byte-for-byte comparable, and every
command writes a `<stem>.manifest.json` recording the resolved
parameters, tool version, wall-clock duration and output paths.
Figures are optional PNG renderings written next to the CSV they
visualise; matplotlib is imported only when they are requested.
"""

from __future__ import annotations

import json
import os
import tempfile
from typing import Iterable, Sequence

import numpy as np

from . import __version__

TRAJECTORY_HEADER = ("step", "A", "B", "C", "X", "Y", "Z", "product27")
ENSEMBLE_HEADER = ("run", "seed") + TRAJECTORY_HEADER
ODE_HEADER = ("time", "X", "Y", "Z", "xyz", "product27")
STATIONARY_HEADER = ("x", "y", "z", "class", "A", "B", "C")
GRID_HEADER = ("x", "y", "z", "value")


def fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Write rows atomically; returns the final path."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(fmt(v) for v in row) + "\n")
        os.chmod(tmp, 0o644)  # mkstemp defaults to 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_manifest(
    csv_path: str,
    command: str,
    config: dict,
    duration: float,
    outputs: Sequence[str],
) -> str:
    """Replay record next to an output file; `config` reproduces the run."""
    stem, _ = os.path.splitext(csv_path)
    path = stem + ".manifest.json"
    doc = {
        "command": command,
        "version": __version__,
        "config": config,
        "duration_seconds": duration,
        "outputs": [os.path.basename(p) for p in outputs],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


_TYPE_COLORS = ("tab:blue", "tab:orange", "tab:green")


def plot_trajectory(records, path: str, title: str = "") -> str:
    """Vertex proportions plus the product 27·X·Y·Z (red) against steps."""
    plt = _pyplot()
    steps = np.array([r.step for r in records])
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for i, label in enumerate(("A (type 1)", "B (type 2)", "C (type 3)")):
        ax.plot(steps, [r.vertex_props.as_tuple()[i] for r in records],
                color=_TYPE_COLORS[i], lw=0.9, label=label)
    ax.plot(steps, [r.product27 for r in records], color="red", lw=1.4,
            label="27·X·Y·Z")
    if steps[-1] > 1000:
        ax.set_xscale("symlog", linthresh=max(1, int(steps[1]) if len(steps) > 1 else 1))
    ax.set_xlabel("step")
    ax.set_ylabel("proportion")
    ax.set_ylim(0, 1.05)
    ax.legend(loc="center left", fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_ode(traj, path: str, title: str = "") -> str:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for i, label in enumerate(("x", "y", "z")):
        ax.plot(traj.times, traj.states[:, i], color=_TYPE_COLORS[i], lw=0.9,
                label=label)
    ax.plot(traj.times, 27.0 * traj.products(), color="red", lw=1.4,
            label="27·x·y·z")
    ax.set_xlabel("time")
    ax.set_ylabel("proportion")
    ax.set_ylim(0, 1.05)
    ax.legend(loc="center left", fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_ensemble(finals, path: str, title: str = "") -> str:
    """Histogram of the per-seed final product 27·X·Y·Z."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist([rec.product27 for _, rec in finals], bins=30, color="tab:red",
            alpha=0.8)
    ax.set_xlabel("final 27·X·Y·Z")
    ax.set_ylabel("seeds")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_grid(points: np.ndarray, values: np.ndarray, path: str, title: str = "") -> str:
    """d(xyz)/dt over the simplex, drawn in the (x, y) triangle."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 5))
    sc = ax.tripcolor(points[:, 0], points[:, 1], values, shading="gouraud")
    fig.colorbar(sc, ax=ax, label="d(xyz)/dt")
    ax.plot([0, 1, 0, 0], [0, 0, 1, 0], color="black", lw=0.8)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
