"""Snapshots of the primitive fields and their CSV files."""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SOLID_COLUMNS = ("x", "w", "sigma")
FLUID_COLUMNS = ("x", "alpha1", "rho1", "v1", "p1", "rho2", "v2", "p2", "rho", "v", "p")


@dataclass
class FieldSnapshot:
    """Per-cell tables at one time; ``tag`` is the requested output time."""

    time: float
    solid: np.ndarray
    fluid: np.ndarray
    tag: float = None

    def __post_init__(self):
        self.solid = np.asarray(self.solid, dtype=float)
        self.fluid = np.asarray(self.fluid, dtype=float)
        if self.solid.ndim != 2 or self.solid.shape[1] != len(SOLID_COLUMNS):
            raise ValueError(f"solid table needs {len(SOLID_COLUMNS)} columns")
        if self.fluid.ndim != 2 or self.fluid.shape[1] != len(FLUID_COLUMNS):
            raise ValueError(f"fluid table needs {len(FLUID_COLUMNS)} columns")
        if self.tag is None:
            self.tag = self.time

    @classmethod
    def from_field(cls, field, model, tag=None):
        g = field.grid
        w, sigma = field.solid
        a1, m1, q1, m2, q2 = field.fluid
        a2 = 1.0 - a1
        rho1, rho2 = m1 / a1, m2 / a2
        p1 = model.eos1.c**2 * rho1 - model.eos1.pi
        p2 = model.eos2.c**2 * rho2 - model.eos2.pi
        rho = m1 + m2
        solid = np.column_stack([g.solid_centers, w, sigma])
        fluid = np.column_stack([g.fluid_centers, a1, rho1, q1 / m1, p1, rho2, q2 / m2, p2,
                                 rho, (q1 + q2) / rho, a1 * p1 + a2 * p2])
        return cls(field.t, solid, fluid, tag)

    def column(self, name):
        if name in FLUID_COLUMNS and name != "x":
            return self.fluid[:, FLUID_COLUMNS.index(name)]
        if name in SOLID_COLUMNS and name != "x":
            return self.solid[:, SOLID_COLUMNS.index(name)]
        raise KeyError(name)

    def __eq__(self, other):
        if not isinstance(other, FieldSnapshot):
            return NotImplemented
        return (self.time == other.time and np.array_equal(self.solid, other.solid)
                and np.array_equal(self.fluid, other.fluid))


def time_label(t):
    """File-name label of time ``t`` in microseconds, e.g. ``50`` or ``12.5``."""
    us = round(t * 1e6, 6)
    return f"{us:.6f}".rstrip("0").rstrip(".")


def snapshot_paths(directory, tag):
    directory = Path(directory)
    label = time_label(tag)
    return directory / f"solid_t{label}.csv", directory / f"fluid_t{label}.csv"


def _write_table(path, columns, table):
    try:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(columns)
            for row in table:
                wr.writerow([format(float(v), ".16e") for v in row])
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write snapshot file {path}: {exc.strerror}") from exc


def _read_table(path, columns):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read snapshot file {path}: {exc.strerror}") from exc
    if not rows or tuple(rows[0]) != columns:
        raise ValueError(f"{path}: unexpected header {rows[:1]}")
    return np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(columns))


def write_snapshot_csv(snap, directory):
    """Write ``solid_t<us>.csv`` and ``fluid_t<us>.csv``; returns both paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    spath, fpath = snapshot_paths(directory, snap.tag)
    _write_table(spath, SOLID_COLUMNS, snap.solid)
    _write_table(fpath, FLUID_COLUMNS, snap.fluid)
    return spath, fpath


def read_snapshot_csv(directory, tag, time=None):
    spath, fpath = snapshot_paths(directory, tag)
    return FieldSnapshot(tag if time is None else time, _read_table(spath, SOLID_COLUMNS),
                         _read_table(fpath, FLUID_COLUMNS), tag)
