"""Incompressible Euler equations with slip walls, advanced in projected form
``dv/dt = -P(v.grad v)``; the pressure never enters the state."""

from __future__ import annotations

import math

import numpy as np

from . import geometry as geo
from .compressible import BLOWUP_FACTOR, plan_steps, rk4
from .elliptic import solve_neumann
from .errors import BlowUpError, ConfigError
from .projection import normal_wall_data, project_velocity


def _reproject(grid, v):
    v = project_velocity(grid, v)
    v[grid.normal_index][:, [0, -1]] = 0.0
    return v


def inc_tendency(grid, v, dealias=True):
    adv = geo.advect_vector(grid, v, v)
    if dealias:
        adv = geo.dealias(grid, adv)
    return -project_velocity(grid, adv)


def inc_step(grid, v, dt, dealias=True):
    """One RK4 step; every stage is re-projected onto divergence-free wall-tangent fields."""
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    return rk4(lambda x: inc_tendency(grid, x, dealias), v, dt, lambda x: _reproject(grid, x))


def inc_dt(grid, v, cfl):
    speed = float(np.sqrt((v**2).sum(axis=0)).max())
    return cfl * grid.dx_min / max(speed, 1e-12)


def inc_integrate(grid, v0, t_end, cfl=0.4, record_every=1, dealias=True):
    """Trajectory ``[(t, v), ...]`` on [0, t_end] with a uniform step."""
    if not t_end > 0:
        raise ConfigError(f"t_end must be positive, got {t_end}")
    if not 0.0 < cfl <= 1.0:
        raise ConfigError(f"cfl must lie in (0, 1], got {cfl}")
    n_steps, dt = plan_steps(inc_dt(grid, v0, cfl), t_end, record_every)
    v = _reproject(grid, np.array(v0, dtype=float))
    norm0 = geo.l2_norm(grid, v) + 1e-300
    out = [(0.0, v.copy())]
    for n in range(1, n_steps + 1):
        v = inc_step(grid, v, dt, dealias)
        if n % record_every == 0:
            nrm = geo.l2_norm(grid, v)
            if not math.isfinite(nrm) or nrm > BLOWUP_FACTOR * norm0:
                raise BlowUpError(n * dt, nrm / norm0)
            out.append((n * dt, v.copy()))
    return out


def kinetic_energy(grid, v):
    return 0.5 * geo.integrate(grid, (v**2).sum(axis=0))


def enstrophy(grid, v):
    return 0.5 * geo.integrate(grid, geo.curl2d(grid, v) ** 2)


def pressure(grid, v, dealias=True):
    """Kinematic pressure q with grad q = -(I - P)(v.grad v), zero mean."""
    adv = geo.advect_vector(grid, v, v)
    if dealias:
        adv = geo.dealias(grid, adv)
    return -solve_neumann(grid, geo.divergence(grid, adv), normal_wall_data(grid, adv))
