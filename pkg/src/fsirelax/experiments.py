"""Error metrics, grid-refinement ladders and convergence reports."""

import csv
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import serialize_config
from .fvm import CoupledField, Grid, advance
from .scenarios import initial_field
from .snapshots import FieldSnapshot

# bump when a change alters the numbers a cached ladder run would produce
SCHEME_VERSION = "1"

L1_QUANTITIES = {"w": "solid", "sigma": "solid", "rho": "fluid", "rhov": "fluid"}


def coupling_errors(field, eos1, eos2):
    """Velocity and stress mismatch ``(E_C1, E_C2)`` across the interface cells."""
    w, sigma = field.solid[:, -1]
    a, m1, q1, m2, q2 = field.fluid[:, 0]
    v = (q1 + q2) / (m1 + m2)
    p = eos1.c**2 * m1 - eos1.pi * a + eos2.c**2 * m2 - eos2.pi * (1.0 - a)
    return abs(v - w), abs(p + sigma)


def _values(snap, quantity):
    if quantity == "rhov":
        return snap.column("rho") * snap.column("v")
    return snap.column(quantity)


def _cell_width(snap, side):
    x = snap.solid[:, 0] if side == "solid" else snap.fluid[:, 0]
    if x.size < 2:
        raise ValueError("need at least two cells to infer the cell width")
    return (x[-1] - x[0]) / (x.size - 1)


def restrict(values, factor):
    """Cell averages of ``values`` over blocks of ``factor`` cells."""
    values = np.asarray(values, dtype=float)
    if factor < 1 or values.size % factor:
        raise ValueError(f"cannot restrict {values.size} cells by a factor {factor}")
    return values.reshape(-1, factor).mean(axis=1)


def l1_error(coarse, reference, quantity):
    """Discrete L1 distance of ``coarse`` from the cell-averaged ``reference``.

    ``quantity`` is one of ``w``, ``sigma`` (solid) or ``rho``, ``rhov``
    (fluid mixture density and momentum).
    """
    try:
        side = L1_QUANTITIES[quantity]
    except KeyError:
        raise ValueError(f"unknown quantity {quantity!r}; choose from {sorted(L1_QUANTITIES)}") from None
    c, r = _values(coarse, quantity), _values(reference, quantity)
    if r.size % c.size:
        raise ValueError(f"reference resolution {r.size} is not a multiple of {c.size}")
    return _cell_width(coarse, side) * float(np.sum(np.abs(c - restrict(r, r.size // c.size))))


def eoc(e_coarse, e_fine):
    """Experimental order ``log2(e_coarse / e_fine)`` for a halved cell width."""
    if not (e_coarse > 0 and e_fine > 0):
        raise ValueError(f"errors must be positive, got {e_coarse} and {e_fine}")
    return math.log2(e_coarse / e_fine)


ERROR_KEYS = ("EC1", "EC2", "Ew", "Esigma", "Erho", "Erhov")
CSV_COLUMNS = ("N",) + tuple(c for k in ERROR_KEYS for c in (k, f"{k}_eoc"))


@dataclass
class ConvergenceReport:
    """Errors per resolution, sorted by ``N``; EoCs between neighbouring rows."""

    rows: list = field(default_factory=list)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda r: r["N"])

    def eocs(self, key):
        vals = [r.get(key) for r in self.rows]
        out = [None]
        for a, b in zip(vals[:-1], vals[1:]):
            out.append(eoc(a, b) if a is not None and b is not None and a > 0 and b > 0 else None)
        return out

    def table(self):
        """Rows as lists in ``CSV_COLUMNS`` order (``None`` for missing entries)."""
        cols = {k: self.eocs(k) for k in ERROR_KEYS}
        out = []
        for i, r in enumerate(self.rows):
            line = [r["N"]]
            for k in ERROR_KEYS:
                line += [r.get(k), cols[k][i]]
            out.append(line)
        return out

    def write_csv(self, path):
        path = Path(path)
        try:
            with open(path, "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(CSV_COLUMNS)
                for line in self.table():
                    wr.writerow(["" if v is None else (v if isinstance(v, int) else repr(float(v)))
                                 for v in line])
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
        return path

    def format(self):
        head = f"{'N':>6} " + " ".join(f"{k:>10} {'EoC':>6}" for k in ERROR_KEYS)
        lines = [head]
        for line in self.table():
            cells = [f"{line[0]:>6}"]
            for v, o in zip(line[1::2], line[2::2]):
                cells.append(f"{v:10.3e}" if v is not None else f"{'-':>10}")
                cells.append(f"{o:6.3f}" if o is not None else f"{'-':>6}")
            lines.append(" ".join(cells))
        return "\n".join(lines)


def cache_key(cfg):
    text = SCHEME_VERSION + "\n" + serialize_config(cfg)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def final_field(cfg, cache_dir=None, backend=None, progress=None):
    """Field at ``cfg.t_end``; reuses a cached result when ``cache_dir`` has one.

    Returns ``(field, stats)``; ``stats`` holds step and solve counts.
    """
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"{cfg.scenario}_N{cfg.n_solid}_{cache_key(cfg)}.npz"
        if path.exists():
            with np.load(path) as z:
                grid = Grid(cfg.n_solid, cfg.n_fluid, cfg.dx)
                fld = CoupledField(grid, z["solid"], z["fluid"], float(z["t"]))
                stats = {"steps": int(z["steps"]), "solves": int(z["solves"]),
                         "max_residual": float(z["max_residual"]), "cached": True}
            return fld, stats
    fld = initial_field(cfg)
    opts = cfg.step_options(backend)
    advance(fld, cfg.model(), cfg.time_control(), cfg.t_end, opts, clip=True)
    stats = dict(opts.stats, cached=False)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp.npz")
        np.savez(tmp, solid=fld.solid, fluid=fld.fluid, t=fld.t, steps=stats["steps"],
                 solves=stats["solves"], max_residual=stats["max_residual"],
                 config=serialize_config(cfg))
        tmp.replace(path)
    if progress:
        progress(cfg.n_solid, stats)
    return fld, stats


def _ladder_member(args):
    cfg, cache_dir, backend = args
    return final_field(cfg, cache_dir, backend)


def run_convergence(cfg, cache_dir=None, backend=None, jobs=1, progress=None, with_reference=True):
    """Grid ladder over ``cfg.levels`` plus the ``cfg.reference_n`` reference.

    Returns ``(report, snapshots)`` where ``snapshots`` maps ``N`` to the
    final :class:`FieldSnapshot`. L1 errors are left out when the reference
    is skipped.
    """
    model = cfg.model()
    sizes = sorted(set(cfg.levels))
    if with_reference:
        for n in sizes:
            if cfg.reference_n % n:
                raise ValueError(f"reference N={cfg.reference_n} is not a multiple of {n}")
        sizes = sorted(set(sizes) | {cfg.reference_n})
    tasks = [(cfg.with_cells(n), cache_dir, backend) for n in sizes]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_ladder_member, tasks))
    else:
        results = []
        for task in tasks:
            results.append(_ladder_member(task))
            if progress:
                progress(task[0].n_solid, results[-1][1])
    fields = dict(zip(sizes, (r[0] for r in results)))
    snaps = {n: FieldSnapshot.from_field(f, model) for n, f in fields.items()}
    rows = []
    for n in sorted(set(cfg.levels)):
        e1, e2 = coupling_errors(fields[n], model.eos1, model.eos2)
        row = {"N": n, "EC1": e1, "EC2": e2}
        if with_reference:
            ref = snaps[cfg.reference_n]
            for key, q in (("Ew", "w"), ("Esigma", "sigma"), ("Erho", "rho"), ("Erhov", "rhov")):
                row[key] = l1_error(snaps[n], ref, q)
        rows.append(row)
    return ConvergenceReport(rows), snaps
