"""Print the closed-form boundary constants next to fitted profile amplitudes.

For each (mu, gamma) the profile is built, its small-s amplitude fitted, and
compared with both the published closed form and the ODE-balance value.
"""

import argparse

from quasilab.coefficients import make_example_family
from quasilab.phi import build_phi, constant_table, fit_phi_rate
from quasilab.transform import build_transform


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mu", type=float, nargs="+", default=[0.0, 0.25, 0.5])
    ap.add_argument("--gamma", type=float, nargs="+", default=[1.5, 2.0, 3.0, 4.0])
    ap.add_argument("--ell", type=float, default=0.0)
    args = ap.parse_args()

    print(f"{'mu':>5} {'gamma':>6} {'beta':>8} {'published':>10} {'oracle':>10} {'fitted':>10} {'fit/oracle':>11}")
    for mu in args.mu:
        for gamma in args.gamma:
            pack = build_transform(make_example_family(mu, gamma))
            fit = fit_phi_rate(build_phi(pack, ell=args.ell), (1e-8, 1e-5))
            t = constant_table(mu, 1.0, gamma, 1.0)
            print(f"{mu:5.2f} {gamma:6.2f} {t['exponent']:8.5f} {t['paper']:10.6f} {t['oracle']:10.6f} "
                  f"{fit.amplitude:10.6f} {fit.amplitude / t['oracle']:11.6f}")


if __name__ == "__main__":
    main()
