"""Plain-text writers and readers.

Every float is printed with ``.17g`` so files round-trip exactly and are
byte-stable for fixed inputs.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import yaml


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if v is None:
        return "none"
    return str(v)


def _coord_names(dim):
    return [f"x{a + 1}" for a in range(dim)]


def write_value_grid_csv(vg, path, indices=None):
    """Columns ``t, x1[, x2], value``; time-major, nodes in lexicographic order."""
    indices = range(len(vg.times)) if indices is None else indices
    pts = vg.grid.points
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + _coord_names(vg.grid.dim) + ["value"])
        for k in indices:
            t = fmt(vg.times[k])
            for x, v in zip(pts, vg.values[k].ravel()):
                w.writerow([t] + [fmt(c) for c in x] + [fmt(v)])


def read_value_grid_csv(path):
    """Returns ``(times, points, values)`` with ``values`` of shape ``(n_times, n_nodes)``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    times = np.unique(data[:, 0])
    n_nodes = len(data) // len(times)
    return times, data[:n_nodes, 1:-1], data[:, -1].reshape(len(times), n_nodes)


def write_columns(path, header, rows):
    """Gnuplot-style whitespace-separated columns with one ``#`` header line."""
    with open(path, "w") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for row in rows:
            fh.write(" ".join(fmt(v) for v in row) + "\n")


def write_slice_dat(vg, k, path):
    """One time slice as columns ``x u`` (1-D) or ``x1 x2 u`` (2-D)."""
    header = ["x", "u"] if vg.grid.dim == 1 else ["x1", "x2", "u"]
    rows = (list(x) + [v] for x, v in zip(vg.grid.points, vg.values[k].ravel()))
    write_columns(path, header, rows)


def write_sequence_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_report(path, items: dict):
    """Flat ``key = value`` document, one entry per line, in the given order."""
    with open(path, "w") as fh:
        for k, v in items.items():
            fh.write(f"{k} = {fmt(v)}\n")


def read_report(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip():
            k, _, v = line.partition(" = ")
            out[k] = v
    return out


def write_paths(path, paths):
    """One line per Euler step: ``path_id,t,x...,y,z,jump_count``.

    ``t`` and ``x`` are the step's right end; ``y, z`` are the controls used on
    the step and ``jump_count`` the number of jumps inside it.
    """
    if not paths:
        Path(path).write_text("")
        return
    dim = paths[0].states.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path_id", "t"] + _coord_names(dim) + ["y", "z", "jump_count"])
        for p in paths:
            for k in range(len(p.times) - 1):
                w.writerow([p.path_id, fmt(p.times[k + 1])] + [fmt(c) for c in p.states[k + 1]]
                           + [fmt(p.controls[k, 0]), fmt(p.controls[k, 1]), int(p.jump_counts[k])])


def write_manifest(path, manifest: dict):
    Path(path).write_text(yaml.safe_dump(manifest, sort_keys=True, default_flow_style=False))


def load_yaml(path) -> dict:
    data = yaml.safe_load(Path(path).read_text())
    return {} if data is None else data
