"""Command line front end: ``run``, ``converge``, ``riemann`` and ``check``.

Exit codes: 0 on success, 1 when a computation fails, 2 for usage or
configuration errors.
"""

import argparse
import csv
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .errors import CouplingSolverError, DegenerateError, InvalidStateError, SimulationAbort

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

SUMMARY_COLUMNS = ("tag", "time", "EC1", "EC2", "w_interface", "sigma_interface",
                   "v_interface", "p_interface", "alpha1_min", "alpha1_max")


def _log(msg):
    print(msg, file=sys.stderr, flush=True)


def _apply_overrides(cfg, args):
    changes = {}
    if args.cfl is not None:
        changes["cfl"] = args.cfl
    if args.quadrature_order is not None:
        changes["quadrature_order"] = args.quadrature_order
    if args.fixed_lambda is not None:
        changes["fixed_lambda"] = args.fixed_lambda
    if args.output_dir is not None:
        changes["output_dir"] = args.output_dir
    if changes:
        cfg = replace(cfg, **changes)
    if args.cells is not None:
        if args.cells < 2:
            raise ConfigError("--cells must be at least 2")
        cfg = cfg.with_cells(args.cells)
    return cfg


def _load(args):
    return _apply_overrides(load_config(args.config), args)


def summary_row(snap):
    """Interface diagnostics of one snapshot, in ``SUMMARY_COLUMNS`` order."""
    w, sigma = snap.column("w")[-1], snap.column("sigma")[-1]
    v, p = snap.column("v")[0], snap.column("p")[0]
    a = snap.column("alpha1")
    return [snap.tag, snap.time, abs(v - w), abs(p + sigma), w, sigma, v, p, a.min(), a.max()]


def write_summary(snaps, path):
    try:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(SUMMARY_COLUMNS)
            for snap in snaps:
                wr.writerow([format(float(v), ".16e") for v in summary_row(snap)])
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
    return path


def cmd_run(args):
    from .fvm import run
    from .snapshots import write_snapshot_csv

    cfg = _load(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    _log(f"{cfg.scenario}: {cfg.n_solid}+{cfg.n_fluid} cells, t_end={cfg.t_end:g} s, "
         f"backend={args.backend or 'default'}")

    def progress(t, stats):
        _log(f"  t={t:.6e}  steps={stats['steps']}  ({time.perf_counter() - t0:.1f} s)")

    snaps = run(cfg, backend=args.backend, progress=progress)
    for snap in snaps:
        write_snapshot_csv(snap, out)
    write_summary(snaps, out / "summary.csv")
    stats = run.last_stats
    print(f"{len(snaps)} snapshot(s) written to {out}; {stats['steps']} steps, "
          f"max coupling residual {stats['max_residual']:.2e}")
    return EXIT_OK


def cmd_converge(args):
    from .experiments import run_convergence

    cfg = _load(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()

    def progress(n, stats):
        tag = " (cached)" if stats.get("cached") else ""
        _log(f"  N={n}: {stats['steps']} steps{tag}  ({time.perf_counter() - t0:.1f} s)")

    report, _ = run_convergence(cfg, cache_dir=args.cache_dir, backend=args.backend,
                                jobs=args.jobs, progress=progress,
                                with_reference=not args.no_reference)
    path = report.write_csv(out / "convergence.csv")
    print(report.format())
    print(f"written to {path}")
    return EXIT_OK


TRACE_KEYS = ("solid.w", "solid.sigma", "fluid.alpha1", "fluid.m1", "fluid.q1", "fluid.m2",
              "fluid.q2")
TRACE_OPTIONAL = ("flux.V0", "speed.lambda_bar", "speed.lambda", "solid.rho", "solid.c",
                  "phase1.c", "phase1.pi", "phase2.c", "phase2.pi")


def parse_traces(text, source="<string>"):
    """Read a trace-state file (flat ``key = value`` lines).

    Required: ``solid.w``, ``solid.sigma`` and the conserved fluid state
    ``fluid.alpha1, fluid.m1, fluid.q1, fluid.m2, fluid.q2``. Optional:
    ``flux.V0`` (five comma separated values, default ``F(U_0)``),
    ``speed.lambda_bar`` (default ``c_s``), ``speed.lambda`` (default the
    fluid wave bound of ``U_0``) and material overrides as in the
    simulation config. Returns ``(traces, mat, eos1, eos2)``.
    """
    from .coupling import TraceStates
    from .eos import STEEL, VAPOR, WATER, ElasticMaterial, GasEos, fluid_wave_bound
    from .states import FluidConserved, fluid_flux

    vals = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (s.strip() for s in line.partition("="))
        if not sep or key not in TRACE_KEYS + TRACE_OPTIONAL:
            raise ConfigError(f"{source}:{lineno}: unexpected line {raw.strip()!r}")
        try:
            vals[key] = [float(v) for v in value.split(",")] if key == "flux.V0" else float(value)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {value!r}") from None
    missing = [k for k in TRACE_KEYS if k not in vals]
    if missing:
        raise ConfigError(f"{source}: missing {', '.join(missing)}")
    mat = ElasticMaterial(vals.get("solid.rho", STEEL.rho_s), vals.get("solid.c", STEEL.c_s))
    eos1 = GasEos(vals.get("phase1.c", VAPOR.c), vals.get("phase1.pi", VAPOR.pi))
    eos2 = GasEos(vals.get("phase2.c", WATER.c), vals.get("phase2.pi", WATER.pi))
    U0 = FluidConserved(*(vals[k] for k in TRACE_KEYS[2:]))
    try:
        V0 = np.asarray(vals["flux.V0"]) if "flux.V0" in vals else np.asarray(fluid_flux(U0, eos1, eos2))
        if V0.shape != (5,):
            raise ConfigError(f"{source}: flux.V0 needs five values")
        lam = vals.get("speed.lambda", fluid_wave_bound(np.asarray(U0), eos1, eos2))
        traces = TraceStates.from_cells((vals["solid.w"], vals["solid.sigma"]), U0, V0, mat,
                                        vals.get("speed.lambda_bar", mat.c_s), lam)
    except (InvalidStateError, DegenerateError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{source}: {exc}") from exc
    return traces, mat, eos1, eos2


def riemann_rows(cs, residuals):
    rows = [("w_R", cs.Ubar_R[0]), ("sigma_R", cs.Ubar_R[1]),
            ("Vbar_R_w", cs.Vbar_R[0]), ("Vbar_R_sigma", cs.Vbar_R[1])]
    names = ("alpha1", "m1", "q1", "m2", "q2")
    rows += [(f"U_L_{n}", v) for n, v in zip(names, cs.U_L)]
    rows += [(f"V_L_{n}", v) for n, v in zip(names, cs.V_L)]
    rows += [(f"residual_{i + 1}", r) for i, r in enumerate(residuals)]
    rows += [(f"R1_root_{i + 1}", r) for i, r in enumerate(cs.roots)]
    return rows


def cmd_riemann(args):
    from .coupling import coupling_residuals, solve_coupling

    path = Path(args.traces)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    traces, mat, eos1, eos2 = parse_traces(text, str(path))
    cs = solve_coupling(traces, mat, eos1, eos2)
    rows = riemann_rows(cs, coupling_residuals(cs, traces, mat, eos1, eos2))
    streams = [sys.stdout]
    fh = None
    if args.output_dir is not None:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        fh = open(out / "riemann.csv", "w", newline="")
        streams.append(fh)
    try:
        for stream in streams:
            wr = csv.writer(stream)
            wr.writerow(("quantity", "value"))
            for name, value in rows:
                wr.writerow((name, format(float(value), ".16e")))
    finally:
        if fh is not None:
            fh.close()
    return EXIT_OK


def cmd_check(args):
    from .checks import run_all

    ok, results, elapsed = run_all(report=print)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed in {elapsed:.1f} s")
    return EXIT_OK if ok else EXIT_FAILURE


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser():
    from .backend import KERNELS

    parser = argparse.ArgumentParser(prog="fsirelax", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def sim_flags(p):
        p.add_argument("config", help="simulation config file")
        p.add_argument("--output-dir", help="override output.dir")
        p.add_argument("--cfl", type=float, help="override time.cfl")
        p.add_argument("--cells", type=int, help="cells per subdomain (same extents)")
        p.add_argument("--quadrature-order", type=int, help="Gauss-Legendre points for path integrals")
        p.add_argument("--fixed-lambda", type=float,
                       help="fixed fluid relaxation speed (0 = adaptive)")
        p.add_argument("--backend", choices=sorted(KERNELS), help="time-stepping kernel")

    p = sub.add_parser("run", help="single simulation: snapshots and summary")
    sim_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("converge", help="grid ladder with EoC table")
    sim_flags(p)
    p.add_argument("--cache-dir", help="reuse and store final fields here")
    p.add_argument("--jobs", type=_positive_int, default=1, help="ladder members run concurrently")
    p.add_argument("--no-reference", action="store_true",
                   help="skip the reference run; report coupling errors only")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("riemann", help="single interface coupling solve")
    p.add_argument("traces", help="trace-state file")
    p.add_argument("--output-dir", help="also write riemann.csv here")
    p.set_defaults(func=cmd_riemann)

    p = sub.add_parser("check", help="built-in structural property checks")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except ConfigError as exc:
        _log(f"fsirelax {args.command}: configuration error: {exc}")
        return EXIT_USAGE
    except (CouplingSolverError, SimulationAbort, ArithmeticError, InvalidStateError,
            DegenerateError, OSError) as exc:
        _log(f"fsirelax {args.command}: {type(exc).__name__}: {exc}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
