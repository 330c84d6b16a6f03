"""Area loss and contact-angle error at equilibrium with tau tied to h^2."""

import argparse

from dewetting import experiments as ex


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--meshes", type=lambda s: [int(v) for v in s.split(",")],
                    default=[64, 128, 256, 512])
    args = ap.parse_args(argv)
    rows = ex.equilibrium_rates(args.meshes)
    print(f"{'N':>5} {'tau':>10} {'t_e':>9} {'dA':>11} {'ratio':>6} "
          f"{'theta_e-theta_i':>15} {'ratio':>6}")
    prev = None
    for r in rows:
        ra = rt = ""
        if prev is not None:
            ra = f"{prev['dA'] / r['dA']:.2f}"
            rt = f"{prev['theta_err'] / r['theta_err']:.2f}"
        print(f"{r['N']:>5} {r['tau']:>10.3e} {r['t_e']:>9.3f} {r['dA']:>11.3e} {ra:>6} "
              f"{r['theta_err']:>15.3e} {rt:>6}")
        prev = r


if __name__ == "__main__":
    main()
