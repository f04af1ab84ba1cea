"""Measure the linear acoustic frequency of the cos x cos y mode against sqrt(2)/eps."""

import argparse
import math

import numpy as np

from machlab import geometry as geo
from machlab.compressible import SolverConfig, integrate
from machlab.config import cached_grid
from machlab.initial import fast_mode
from machlab.projection import State


def measured_frequency(grid, eps, periods=5):
    omega = math.sqrt(2.0) / eps
    m = fast_mode(grid)
    gm = geo.gradient(grid, m)
    U0 = State(grid, m, np.zeros((2,) + grid.shape), eps)
    traj = integrate(U0, SolverConfig(t_end=periods * 2 * math.pi / omega, nonlinear=False))
    a = np.array([geo.inner(grid, s.rho, m) for s in traj.snapshots]) / geo.inner(grid, m, m)
    b = np.array([geo.inner(grid, s.u, gm) for s in traj.snapshots]) / geo.inner(grid, gm, gm)
    phase = np.unwrap(np.arctan2(-b * math.sqrt(2.0), a))
    return abs(np.polyfit(traj.times, phase, 1)[0]), omega


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--eps", type=float, nargs="+", default=[0.2, 0.1, 0.05])
    args = parser.parse_args()
    grid = cached_grid("channel", 64, 33)
    for eps in args.eps:
        got, want = measured_frequency(grid, eps)
        print(f"eps={eps:<6g} measured {got:12.6f}  expected {want:12.6f}  rel err {abs(got - want) / want:.1e}")


if __name__ == "__main__":
    main()
