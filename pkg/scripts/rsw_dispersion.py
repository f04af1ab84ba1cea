"""Inertia-gravity waves of the rotating channel: measured vs sqrt(1 + k^2 + m^2)/eps."""

import argparse
import math

import numpy as np

from machlab import geometry as geo
from machlab.compressible import SolverConfig
from machlab.config import cached_grid
from machlab.rsw import poincare_mode, rsw_integrate


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--eps", type=float, default=0.1)
    parser.add_argument("--modes", default="1,1 2,1 1,2 3,1")
    args = parser.parse_args()
    grid = cached_grid("channel", 64, 33)
    for pair in args.modes.split():
        k, m = (int(x) for x in pair.split(","))
        U0, omega = poincare_mode(grid, k, m, epsilon=args.eps)
        M90, _ = poincare_mode(grid, k, m, phase=math.pi / 2, epsilon=args.eps)
        traj = rsw_integrate(U0, SolverConfig(t_end=3 * 2 * math.pi / omega, nonlinear=False))
        a = [geo.inner(grid, s.packed(), U0.packed()) for s in traj.snapshots]
        b = [geo.inner(grid, s.packed(), M90.packed()) for s in traj.snapshots]
        got = abs(np.polyfit(traj.times, np.unwrap(np.arctan2(b, a)), 1)[0])
        print(f"k={k} m={m}: measured {got:10.5f}  expected {omega:10.5f}  rel err {abs(got - omega) / omega:.1e}")


if __name__ == "__main__":
    main()
