"""Mesh ratio and curvature variation of the baseline island over a long run.

Runs to the energy-rate stop, then optionally keeps going to show how the mesh
ratio keeps relaxing after the energy has settled.
"""

import argparse

from dewetting import experiments as ex
from dewetting.geometry import mesh_ratio
from dewetting.shapes import ShapeSpec, generate
from dewetting.solver import SimParams, StopRule, evolve


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=128)
    ap.add_argument("--tau", type=float, default=0.01)
    ap.add_argument("--continue-to", type=lambda s: [float(v) for v in s.split(",")],
                    default=[200.0, 400.0, 800.0])
    args = ap.parse_args(argv)
    info = ex.long_time_indicators(args.N, args.tau)
    print(f"stop={info['stop']} t={info['t_stop']:.3f} steps={info['steps']} "
          f"Psi={info['Psi_final']:.6f} Psi_max={info['Psi_max']:.4f} "
          f"first D<1e-10 at step {info['first_small_D_step']} D_final={info['D_final']:.3e}")
    if not args.continue_to:
        return
    params = SimParams.from_angle(ex.THETA_BASE, args.tau)
    traj = evolve(generate(ShapeSpec("shape2", args.N)), params,
                  StopRule(max_time=max(args.continue_to), energy_rate=None),
                  snapshot_times=args.continue_to)
    for t in args.continue_to:
        print(f"t={t:g}: Psi={mesh_ratio(traj.snapshots[t]):.9f}")


if __name__ == "__main__":
    main()
