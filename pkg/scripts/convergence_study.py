"""Error of the DPP scheme against analytic oracles as epsilon shrinks.

Two tables are printed: the 1D heat mode sin(pi x) at t = 0.25, and the
unit-disk stationary problem for j = 1 against the convex envelope of
cos(2 theta).  Pass ``--csv PATH`` to also write the rows.
"""

import argparse
import csv
import math

import numpy as np

from eigflow.core import PayoffData, ball, build_grid, constant, static
from eigflow.dpp import DppConfig, solve_elliptic, solve_parabolic
from eigflow.envelope import boundary_data, convex_envelope


def cos2(x, t=None):
    r2 = np.maximum(np.sum(x ** 2, axis=1), 1e-300)
    return (x[:, 0] ** 2 - x[:, 1] ** 2) / r2


def heat_rows(eps_list):
    interval = ball([0.5], 0.5)
    payoff = PayoffData(g=static(constant(0.0)), u0=lambda x: np.sin(np.pi * x[:, 0]))
    for eps in eps_list:
        res = solve_parabolic(interval, payoff, DppConfig(epsilon=eps, h=eps, T=0.25, resolution=1), keep=None)
        g, last = res.grid, res.slices[-1]
        exact = math.exp(-math.pi ** 2 * last.t) * np.sin(np.pi * g.points[g.interior, 0])
        yield "heat1d", eps, float(np.max(np.abs(last.values[g.interior] - exact)))


def envelope_rows(eps_list):
    disk = ball([0.0, 0.0], 1.0)
    for eps in eps_list:
        cfg = DppConfig(epsilon=eps, h=eps, resolution=60)
        grid = build_grid(disk, cfg.spacing, eps)
        env = convex_envelope(disk, boundary_data(disk, cos2, cfg.spacing), grid)
        z = solve_elliptic(disk, cos2, cfg, grid=grid)
        I = grid.interior
        yield "envelope", eps, float(np.max(np.abs(z.slice.values[I] - env.values[I])))


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--csv")
    args = ap.parse_args()
    rows = list(heat_rows([0.1, 0.05, 0.025, 0.0125])) + list(envelope_rows([0.2, 0.1, 0.05]))
    prev = {}
    for name, eps, err in rows:
        rate = ""
        if name in prev:
            e0, r0 = prev[name]
            rate = f"  order {math.log(r0 / err) / math.log(e0 / eps):.2f}" if err > 0 else ""
        prev[name] = (eps, err)
        print(f"{name:9s} eps={eps:<7g} sup_error={err:.3e}{rate}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["case", "epsilon", "sup_error"])
            w.writerows(rows)
