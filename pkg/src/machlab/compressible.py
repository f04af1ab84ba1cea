"""Barotropic compressible Euler equations in the low-Mach scaling.

Unknowns are the density perturbation ``rho = (rho_hat - 1)/eps`` and velocity
``u``; the system is ``dU/dt + N(U, grad U; eps) = -L U / eps`` with solid walls.
Time stepping is classical RK4 with the acoustic CFL restriction.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .errors import BlowUpError, ConfigError, VacuumError
from .projection import State

log = logging.getLogger(__name__)

SERIES_THRESHOLD = 1e-6
VACUUM_FLOOR = 0.5
BLOWUP_FACTOR = 1e6


@dataclass(frozen=True)
class PressureLaw:
    """gamma-law p(rho_hat) = (rho_hat**gamma - 1)/gamma, so p(1) = 0 and p'(1) = 1."""

    gamma: float = 1.4

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")

    def p(self, rho_hat):
        return np.expm1(self.gamma * np.log(rho_hat)) / self.gamma

    def dp(self, rho_hat):
        return rho_hat ** (self.gamma - 1.0)

    def d2p(self, rho_hat):
        return (self.gamma - 1.0) * rho_hat ** (self.gamma - 2.0)

    def p_inverse(self, pressure):
        return np.exp(np.log1p(self.gamma * pressure) / self.gamma)

    def internal_energy(self, rho_hat):
        """rho_hat * int_1^rho_hat p(s)/s^2 ds; vanishes quadratically at rho_hat = 1."""
        g = self.gamma
        if g == 1.0:
            inner = np.log(rho_hat) + 1.0 / rho_hat - 1.0
        else:
            inner = (np.expm1((g - 1.0) * np.log(rho_hat)) / (g - 1.0) + 1.0 / rho_hat - 1.0) / g
        return rho_hat * inner


@dataclass(frozen=True)
class SolverConfig:
    cfl: float = 0.4
    t_end: float = 0.5
    dealias: bool = True
    pressure: PressureLaw = field(default_factory=PressureLaw)
    record_every: int = 1
    nonlinear: bool = True
    max_t_end: float = 4.0

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.t_end > 0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ConfigError(f"record_every must be a positive integer, got {self.record_every}")


@dataclass
class Trajectory:
    snapshots: list
    epsilon: float
    config: SolverConfig
    dt: float = 0.0
    corrections: dict = field(default_factory=dict)

    @property
    def times(self):
        return np.array([s.time for s in self.snapshots])

    @property
    def grid(self):
        return self.snapshots[0].grid

    def __len__(self):
        return len(self.snapshots)


def check_vacuum(rho, epsilon):
    total = 1.0 + epsilon * np.asarray(rho)
    worst = float(total.min())
    if worst < VACUUM_FLOOR:
        raise VacuumError(worst, np.unravel_index(np.argmin(total), total.shape))


def g_coeff(rho, epsilon, law):
    """g(rho; eps) = (p'(1 + eps rho)/(1 + eps rho) - 1)/eps, pointwise."""
    rho = np.asarray(rho, dtype=float)
    check_vacuum(rho, epsilon)
    a = law.gamma - 2.0
    x = epsilon * rho
    # (1 + x)**a - 1 expanded to third order
    series = a * rho * (1.0 + (a - 1.0) * x / 2.0 + (a - 1.0) * (a - 2.0) * x * x / 6.0)
    if epsilon == 0.0:
        return series
    small = np.abs(x) < SERIES_THRESHOLD
    direct = np.expm1(a * np.log1p(np.where(small, 0.0, x))) / epsilon
    return np.where(small, series, direct)


def _nonlinear_arrays(grid, rho1, u1, rho2, u2, epsilon, law, dealias):
    F = (lambda f: geo.dealias(grid, f)) if dealias else (lambda f: f)
    if dealias:
        rho1, u1, rho2, u2 = F(rho1), F(u1), F(rho2), F(u2)
    n_rho = geo.advect_scalar(grid, u1, rho2) + rho1 * geo.divergence(grid, u2)
    n_u = geo.advect_vector(grid, u1, u2) + g_coeff(rho1, epsilon, law) * geo.gradient(grid, rho2)
    return F(n_rho), F(n_u)


def nonlinear_term(U1, U2, epsilon, law, dealias=True):
    """N(U1, grad U2; eps) = (u1.grad rho2 + rho1 div u2, u1.grad u2 + g(rho1) grad rho2)."""
    n_rho, n_u = _nonlinear_arrays(U1.grid, U1.rho, U1.u, U2.rho, U2.u, epsilon, law, dealias)
    return State(U1.grid, n_rho, n_u, U1.epsilon, U1.time)


def tendency(grid, q, epsilon, config, enforce_walls=True):
    """dU/dt for the packed state ``q = (rho, u1, u2)``.

    The density flux uses the divergence form div(rho u), identical to
    u.grad rho + rho div u for the self-interaction but conservative discretely.
    """
    rho, u = q[0], q[1:]
    out = np.empty_like(q)
    out[0] = -geo.divergence(grid, u) / epsilon
    out[1:] = -geo.gradient(grid, rho) / epsilon
    if config.nonlinear:
        law = config.pressure
        F = (lambda f: geo.dealias(grid, f)) if config.dealias else (lambda f: f)
        out[0] -= geo.divergence(grid, F(rho * u))
        grad_rho = geo.gradient(grid, rho)
        out[1:] -= F(geo.advect_vector(grid, u, u) + g_coeff(rho, epsilon, law) * grad_rho)
    if enforce_walls:
        out[1 + grid.normal_index][:, [0, -1]] = 0.0
    return out


class _Corrections:
    def __init__(self):
        self.mass = 0.0
        self.wall = 0.0

    def apply(self, grid, q):
        m = geo.mean(grid, q[0])
        q[0] -= m
        un = q[1 + grid.normal_index]
        w = max(np.abs(un[:, 0]).max(), np.abs(un[:, -1]).max())
        un[:, [0, -1]] = 0.0
        self.mass = max(self.mass, abs(m))
        self.wall = max(self.wall, float(w))
        return q


def rk4(rhs, q, dt, fix=None):
    """One classical RK4 step; ``fix`` is applied after every stage."""
    fix = fix or (lambda x: x)
    k1 = rhs(q)
    q2 = fix(q + 0.5 * dt * k1)
    k2 = rhs(q2)
    q3 = fix(q + 0.5 * dt * k2)
    k3 = rhs(q3)
    q4 = fix(q + dt * k3)
    k4 = rhs(q4)
    return fix(q + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))


def step(U, dt, config, corrections=None):
    """Advance a compressible state by one RK4 step of size ``dt``."""
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    grid, eps = U.grid, U.epsilon
    check_vacuum(U.rho, eps)
    corr = corrections if corrections is not None else _Corrections()
    q = rk4(lambda x: tendency(grid, x, eps, config), U.packed(), dt,
            lambda x: corr.apply(grid, x))
    return State.from_packed(grid, q, eps, U.time + dt)


def stable_dt(U, config):
    c_max = float(np.sqrt(config.pressure.dp(1.0 + U.epsilon * U.rho)).max())
    speed = c_max / U.epsilon + float(np.sqrt((U.u**2).sum(axis=0)).max())
    return config.cfl * U.grid.dx_min / speed


def plan_steps(dt0, t_end, record_every):
    """Uniform step count (multiple of ``record_every``) covering [0, t_end]."""
    n = max(1, math.ceil(t_end / dt0 - 1e-9))
    n = record_every * math.ceil(n / record_every)
    return n, t_end / n


def march(U0, config, rhs, dt0):
    """Uniform-step RK4 loop shared by the compressible and shallow-water solvers.

    ``rhs`` maps a packed state to its tendency.  Returns the snapshots, the step
    size and the largest stage corrections.
    """
    grid, eps = U0.grid, U0.epsilon
    n_steps, dt = plan_steps(dt0, config.t_end, config.record_every)
    corr = _Corrections()
    fix = lambda x: corr.apply(grid, x)
    cls = type(U0)

    q = U0.packed().copy()
    norm0 = geo.l2_norm(grid, q) + 1e-300
    snaps = [cls.from_packed(grid, q.copy(), eps, 0.0)]
    for n in range(1, n_steps + 1):
        q = rk4(rhs, q, dt, fix)
        if n % config.record_every == 0:
            t = n * dt
            nrm = geo.l2_norm(grid, q)
            if not math.isfinite(nrm) or nrm > BLOWUP_FACTOR * norm0:
                raise BlowUpError(t, nrm / norm0)
            check_vacuum(q[0], eps)
            snaps.append(cls.from_packed(grid, q.copy(), eps, t))
    log.debug("eps=%g: %d steps, dt=%.3e, mass corr %.1e, wall corr %.1e",
              eps, n_steps, dt, corr.mass, corr.wall)
    return snaps, dt, {"mass": corr.mass, "wall": corr.wall}


def integrate(U0, config):
    """Integrate to ``config.t_end`` with a uniform step, recording every
    ``config.record_every`` steps (the initial state is always recorded)."""
    if config.t_end > config.max_t_end:
        raise ConfigError(f"t_end = {config.t_end} exceeds the desk-scale guard {config.max_t_end}")
    grid, eps = U0.grid, U0.epsilon
    check_vacuum(U0.rho, eps)
    rhs = lambda x: tendency(grid, x, eps, config)
    snaps, dt, corr = march(U0, config, rhs, stable_dt(U0, config))
    return Trajectory(snaps, eps, config, dt, corr)


def rescale_to_V(U, law):
    """Pressure-type unknown r = p(1 + eps rho)/eps; returns (r, u)."""
    eps = U.epsilon
    rho = np.asarray(U.rho, dtype=float)
    check_vacuum(rho, eps)
    g = law.gamma
    x = eps * rho
    series = rho * (1.0 + (g - 1.0) * x / 2.0 + (g - 1.0) * (g - 2.0) * x * x / 6.0)
    small = np.abs(x) < SERIES_THRESHOLD
    direct = law.p(1.0 + np.where(small, 0.0, x)) / eps
    return np.where(small, series, direct), U.u


def rescale_from_V(r, epsilon, law):
    """Inverse of :func:`rescale_to_V` for the density component."""
    r = np.asarray(r, dtype=float)
    g = law.gamma
    y = epsilon * r
    # (1 + g y)**(1/g) - 1 expanded to third order
    a = 1.0 / g
    series = r * (1.0 + (a - 1.0) * g * y / 2.0 + (a - 1.0) * (a - 2.0) * g * g * y * y / 6.0)
    small = np.abs(y) < SERIES_THRESHOLD
    direct = np.expm1(np.log1p(g * np.where(small, 0.0, y)) / g) / epsilon if epsilon else series
    return np.where(small, series, direct)


def energy(U, law):
    """Conserved total energy int( rho_hat |u|^2 / 2 + e(rho_hat)/eps^2 )."""
    grid, eps = U.grid, U.epsilon
    rho_hat = 1.0 + eps * U.rho
    kinetic = 0.5 * rho_hat * (U.u**2).sum(axis=0)
    return geo.integrate(grid, kinetic + law.internal_energy(rho_hat) / eps**2)


def vorticity_residual(U, config):
    """L2 norm of d_t omega + div(u omega), with d_t omega from the discrete tendency.

    The singular 1/eps terms are curl-free, so this stays at truncation level
    independently of eps.
    """
    grid = U.grid
    du = tendency(grid, U.packed(), U.epsilon, config, enforce_walls=False)[1:]
    omega = geo.curl2d(grid, U.u)
    flux = geo.dealias(grid, U.u * omega) if config.dealias else U.u * omega
    res = geo.curl2d(grid, du) + geo.divergence(grid, flux)
    return geo.l2_norm(grid, res)
