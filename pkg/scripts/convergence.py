"""Spatial convergence in the manifold distance against a fine reference.

Default: the baseline island, tau = 1e-5, N = 32..256 against N_ref = 1024 at
t = 0.5 and 2.0.  ``--sweep`` repeats the t = 0.5 study over contact angles and
initial shapes.
"""

import argparse
import math
from pathlib import Path

from dewetting import experiments as ex
from dewetting.cli import output_root, write_convergence_csv


def _study(label, shape, theta, args, times):
    rows = ex.convergence(shape, theta, tau=args.tau, meshes=args.meshes, n_ref=args.n_ref,
                          times=times, cache_dir=output_root() / "reference_cache")
    write_convergence_csv(rows, args.out / f"{label}.csv")
    print(f"# {label}")
    print(f"{'N':>6} {'t':>6} {'error':>12} {'order':>7}")
    for r in rows:
        order = "" if r.order is None else f"{r.order:.2f}"
        print(f"{r.N:>6} {r.t:>6g} {r.error:>12.4e} {order:>7}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tau", type=float, default=1e-5)
    ap.add_argument("--meshes", type=lambda s: [int(v) for v in s.split(",")],
                    default=[32, 64, 128, 256])
    ap.add_argument("--n-ref", type=int, default=1024)
    ap.add_argument("--sweep", action="store_true")
    ap.add_argument("--out", type=Path, default=Path("runs/convergence"))
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    _study("shape2_theta150", "shape2", ex.THETA_BASE, args, (0.5, 2.0))
    if args.sweep:
        for deg in (45, 90, 120):
            _study(f"shape2_theta{deg}", "shape2", math.radians(deg), args, (0.5,))
        for kind in ("shape1", "shape3", "shape4"):
            _study(f"{kind}_theta150", kind, ex.THETA_BASE, args, (0.5,))


if __name__ == "__main__":
    main()
