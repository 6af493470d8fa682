"""Fitted boundary exponent of u against 2/(1+gamma-2mu) over a gamma range."""

import argparse
import csv
import sys

import numpy as np

from quasilab.analysis import fit_boundary_rate, fit_gradient_rate
from quasilab.bvp import Interval, build_mesh, solve
from quasilab.coefficients import make_example_family
from quasilab.phi import build_phi
from quasilab.transform import build_transform


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mu", type=float, default=0.0)
    ap.add_argument("--gamma", type=float, nargs="+", default=list(np.arange(1.25, 4.01, 0.25)))
    ap.add_argument("--n", type=int, default=2048)
    ap.add_argument("--q", type=float, default=3.0)
    ap.add_argument("--window-max", type=float, default=1e-4)
    ap.add_argument("--csv", help="also write the table here")
    args = ap.parse_args()

    rows = []
    for gamma in args.gamma:
        pack = build_transform(make_example_family(args.mu, gamma))
        mesh = build_mesh(Interval(1.0), args.n, q=args.q)
        sol = solve(pack, mesh, profile=build_phi(pack))
        win = (5 * mesh.smallest_cell, args.window_max)
        u = fit_boundary_rate(sol.u, mesh, win)
        du = fit_gradient_rate(sol, win)
        expected = 2 / (1 + gamma - 2 * args.mu)
        rows.append((gamma, expected, u.exponent, u.exponent / expected - 1, du.exponent, expected - 1))

    out = csv.writer(sys.stdout, delimiter="\t", lineterminator="\n")
    header = ("gamma", "expected", "fitted", "rel_err", "grad_fitted", "grad_expected")
    out.writerow(header)
    for r in rows:
        out.writerow([f"{x:.5f}" for x in r])
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)


if __name__ == "__main__":
    main()
