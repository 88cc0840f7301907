"""Output writers: metric CSVs and raw field snapshots with text sidecars."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .scenarios import METRIC_COLUMNS

SNAPSHOT_FIELDS = ("phi", "psi", "c_M", "c_MOH", "c_H", "c_OH", "c_Na", "c_Cl", "sigma_h", "ebar_p")


def write_metrics(path, records, columns=METRIC_COLUMNS) -> None:
    """Write metric records as CSV with a fixed header and column order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in records:
            w.writerow([repr(float(r[k])) for k in columns])


def read_metrics(path) -> dict[str, np.ndarray]:
    """Read a metric CSV back into column arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(head))
    return {k: data[:, i] for i, k in enumerate(head)}


def write_run_outputs(out_dir, records) -> None:
    """metrics.csv with every column plus pit_depth.csv and current.csv."""
    out = Path(out_dir)
    write_metrics(out / "metrics.csv", records)
    write_metrics(out / "pit_depth.csv", records, ("t", "pit_depth"))
    write_metrics(out / "current.csv", records, ("t", "current_density"))


def snapshot_fields(state) -> dict[str, np.ndarray]:
    fields = {"phi": state.phi, "psi": state.psi}
    for name, ci in zip(SNAPSHOT_FIELDS[2:8], state.c):
        fields[name] = ci
    if state.sigma_h is not None:
        fields["sigma_h"] = state.sigma_h
    if state.ebar is not None:
        fields["ebar_p"] = state.ebar
    return fields


def write_snapshot(out_dir, index: int, state, grid) -> list[Path]:
    """One little-endian float64 raster per field plus a ``.hdr`` text sidecar.

    The raster is row-major with shape (ny, nx); row 0 is the bottom of the
    domain. The sidecar lists the field name, dimensions, spacing and time.
    """
    out = Path(out_dir) / "snapshots"
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, arr in snapshot_fields(state).items():
        stem = out / f"{name}_{index:05d}"
        np.ascontiguousarray(arr, dtype="<f8").tofile(stem.with_suffix(".raw"))
        dx = float(grid.min_spacing)
        with open(stem.with_suffix(".hdr"), "w") as fh:
            fh.write(f"field = {name}\n")
            fh.write(f"nx = {grid.nx}\n")
            fh.write(f"ny = {grid.ny}\n")
            fh.write(f"dx = {dx!r}\n")
            fh.write(f"time = {state.t!r}\n")
            fh.write(f"mode = {grid.mode}\n")
            fh.write("dtype = float64 little-endian, row-major, row 0 at the bottom\n")
            fh.write("x_faces = " + " ".join(repr(float(v)) for v in grid.xf) + "\n")
            fh.write("y_faces = " + " ".join(repr(float(v)) for v in grid.yf) + "\n")
        written.append(stem.with_suffix(".raw"))
    return written


def read_snapshot(raw_path) -> tuple[np.ndarray, dict[str, str]]:
    """Load a raster and its sidecar header."""
    raw_path = Path(raw_path)
    meta = {}
    with open(raw_path.with_suffix(".hdr")) as fh:
        for line in fh:
            k, _, v = line.partition("=")
            meta[k.strip()] = v.strip()
    arr = np.fromfile(raw_path, dtype="<f8").reshape(int(meta["ny"]), int(meta["nx"]))
    return arr, meta
