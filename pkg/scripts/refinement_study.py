"""Mesh refinement: quasilinear residual on a fixed region, manufactured-solution order, self-convergence."""

import argparse

import numpy as np

from quasilab.bvp import Interval, build_mesh, manufactured_solve, sine_profile, solve
from quasilab.coefficients import make_example_family
from quasilab.phi import build_phi
from quasilab.transform import build_transform


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mu", type=float, default=0.5)
    ap.add_argument("--gamma", type=float, default=2.0)
    ap.add_argument("--ns", type=int, nargs="+", default=[128, 256, 512, 1024, 2048])
    ap.add_argument("--q", type=float, default=2.0)
    args = ap.parse_args()

    fam = make_example_family(args.mu, args.gamma)
    pack = build_transform(fam)
    prof = build_phi(pack)
    # cut two cells of the coarsest mesh: the same physical region for all n
    d_cut = build_mesh(Interval(1.0), args.ns[0], q=args.q).d[2]

    print(f"quasilinear residual relative to f(u) on d >= {d_cut:.3g}")
    prev = None
    centre = []
    for n in args.ns:
        sol = solve(pack, build_mesh(Interval(1.0), n, q=args.q), profile=prof)
        keep = sol.mesh.d >= d_cut
        res = float(np.max(np.abs(sol.residual_quasilinear[keep]) / fam.f(sol.u[keep])))
        centre.append(float(sol.v[n // 2]))
        ratio = "" if prev is None else f"  ratio {prev / res:6.3f}"
        print(f"  n={n:5d}  max rel residual {res:.3e}{ratio}")
        prev = res

    print("self-convergence of v(1/2)")
    for k in range(1, len(centre)):
        print(f"  n={args.ns[k]:5d}  change {abs(centre[k] - centre[k - 1]):.3e}")

    print("manufactured sin(pi x), uniform meshes")
    rep = manufactured_solve(pack, Interval(1.0), sine_profile(1.0), ns=(64, 128, 256, 512))
    for n, e, o in zip(rep.n, rep.errors, rep.orders):
        print(f"  n={n:4d}  error {e:.3e}  order {o:.3f}")


if __name__ == "__main__":
    main()
