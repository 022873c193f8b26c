"""Time per step of the compiled and the numpy kernel on the bubble scenario.

Usage::

    python benchmarks/bench_kernels.py [--cells 100 200 400] [--steps 200] [--repeat 3]

Both kernels start from the same initial field; the table lists the best of
``--repeat`` runs and the largest relative difference of the final fields.
"""

import argparse
import time

import numpy as np

from fsirelax.backend import KERNELS
from fsirelax.config import SimulationConfig
from fsirelax.fvm import StepOptions, advance
from fsirelax.scenarios import initial_field


def time_kernel(cfg, name, steps, repeat):
    best, fld = np.inf, None
    for _ in range(repeat):
        fld = initial_field(cfg)
        opts = StepOptions(backend=name)
        t0 = time.perf_counter()
        advance(fld, cfg.model(), cfg.time_control(), np.inf, opts, clip=False, max_steps=steps)
        best = min(best, time.perf_counter() - t0)
    return best / steps, fld


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, nargs="+", default=[100, 200, 400, 800])
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    names = [n for n in ("c", "python") if n in KERNELS]
    if "c" not in names:
        print("compiled kernel not built; timing the numpy kernel only")
    print(f"{'N':>6} " + " ".join(f"{n + ' [us/step]':>18}" for n in names)
          + f" {'speed-up':>9} {'max rel diff':>13} {'ns/cell-step (c)':>17}")
    for n in args.cells:
        cfg = SimulationConfig(n_solid=n, n_fluid=n, t_end=1.0)
        res = {name: time_kernel(cfg, name, args.steps, args.repeat) for name in names}
        cells = [f"{res[name][0] * 1e6:18.2f}" for name in names]
        if len(names) == 2:
            a, b = res["c"][1], res["python"][1]
            diff = max(np.max(np.abs(a.fluid - b.fluid) / np.max(np.abs(b.fluid), axis=1, keepdims=True)),
                       np.max(np.abs(a.solid - b.solid) / np.max(np.abs(b.solid), axis=1, keepdims=True)))
            extra = (f" {res['python'][0] / res['c'][0]:9.1f} {diff:13.1e}"
                     f" {res['c'][0] / (2 * n) * 1e9:17.1f}")
        else:
            extra = ""
        print(f"{n:>6} " + " ".join(cells) + extra)


if __name__ == "__main__":
    main()
