"""Partial integrals of phi h(phi) and discrete Dirichlet energies on either side of gamma = 3 - 2mu."""

import argparse

from quasilab.analysis import h1_criterion
from quasilab.bvp import Interval, build_mesh, solve
from quasilab.coefficients import make_example_family
from quasilab.phi import build_phi
from quasilab.transform import build_transform


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mu", type=float, default=0.0)
    ap.add_argument("--gamma", type=float, nargs="+", default=[2.0, 3.0, 4.0])
    ap.add_argument("--ns", type=int, nargs="+", default=[256, 512, 1024, 2048])
    args = ap.parse_args()

    for gamma in args.gamma:
        pack = build_transform(make_example_family(args.mu, gamma))
        prof = build_phi(pack)
        sols = [solve(pack, build_mesh(Interval(1.0), n, q=2.0), profile=prof) for n in args.ns]
        ev = h1_criterion(pack, prof, gamma, args.mu, solutions=sols)
        print(f"gamma={gamma:g}  verdict in H1_0: {ev.verdict}  integrand exponent {ev.integrand_exponent:.4f}")
        for s, p in zip(ev.s, ev.partial_integrals):
            print(f"    s={s:.0e}  partial integral {p:.6g}")
        print(f"    growth exponent {ev.growth_exponent:.4f}")
        for n, e in zip(args.ns, ev.energies):
            print(f"    n={n:5d}  energy {e:.6g}")
        print(f"    energy trend: {ev.energy_verdict}")


if __name__ == "__main__":
    main()
