"""Rotating shallow water equations in the small-Froude scaling.

``d rho/dt + div(rho u) + div u / eps = 0`` and
``du/dt + u.grad u + (grad rho + u_perp) / eps = 0`` with ``u_perp = (-u2, u1)``.
The slow projection is ``P U = (phi, perp_grad phi)`` where ``(lap - 1) phi = K U``
with homogeneous Dirichlet data and ``K U = curl u - rho``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import geometry as geo
from .compressible import Trajectory, _Corrections, check_vacuum, march, rk4
from .elliptic import DIRICHLET, HELMHOLTZ_MINUS_ONE, EllipticProblem, solve
from .errors import ConfigError
from .projection import State

ELLIPTIC = "elliptic"
LEAST_SQUARES = "least_squares"


@dataclass(frozen=True, eq=False)
class RswState(State):
    """Height perturbation ``rho`` and velocity ``u``; ``epsilon`` is the Froude number."""


def _as_rsw(grid, rho, u, like):
    return RswState(grid, rho, u, like.epsilon, like.time)


def rsw_L(U):
    """L U = (div u, grad rho + u_perp)."""
    g = U.grid
    return geo.divergence(g, U.u), geo.gradient(g, U.rho) + geo.perp(U.u)


def rsw_K(U):
    """K U = curl u - rho."""
    return geo.curl2d(U.grid, U.u) - U.rho


def rsw_K_adjoint(grid, f):
    """Formal adjoint of K for ``f`` vanishing on the walls: K* f = (-f, -perp_grad f)."""
    return -f, -geo.perp_gradient(grid, f)


def _dirichlet_helmholtz(grid, rhs):
    return solve(grid, EllipticProblem(HELMHOLTZ_MINUS_ONE, DIRICHLET, rhs))


@functools.lru_cache(maxsize=4)
def _KKstar_factor(grid):
    """LU factors of f -> K(K* f) on interior nodes, f vanishing on the walls.

    Assembled column by column from the collocation operators, independently of
    the per-mode elliptic solver.
    """
    n_int = grid.n_wall - 2
    size = grid.n_periodic * n_int
    A = np.empty((size, size))
    e = np.zeros(grid.shape)
    for j in range(size):
        e[:, 1:-1].flat[j] = 1.0
        rho, u = rsw_K_adjoint(grid, e)
        A[:, j] = (geo.curl2d(grid, u) - rho)[:, 1:-1].ravel()
        e[:, 1:-1].flat[j] = 0.0
    return scipy.linalg.lu_factor(A)


def rsw_project_P(U, method=ELLIPTIC):
    """Slow part of an RSW state, onto ker L."""
    g = U.grid
    k = rsw_K(U)
    if method == ELLIPTIC:
        phi = _dirichlet_helmholtz(g, k)
        return _as_rsw(g, phi, geo.perp_gradient(g, phi), U)
    if method == LEAST_SQUARES:
        f = np.zeros(g.shape)
        f[:, 1:-1] = scipy.linalg.lu_solve(_KKstar_factor(g), k[:, 1:-1].ravel()).reshape(
            g.n_periodic, g.n_wall - 2)
        rho, u = rsw_K_adjoint(g, f)
        return _as_rsw(g, rho, u, U)
    raise ConfigError(f"unknown projection method {method!r}")


def rsw_project_Q(U, method=ELLIPTIC):
    slow = rsw_project_P(U, method)
    return _as_rsw(U.grid, U.rho - slow.rho, U.u - slow.u, U)


def rsw_quadratic(grid, rho, u, dealias=True):
    """Quadratic terms (div(rho u), u.grad u) of the shallow-water system."""
    F = (lambda f: geo.dealias(grid, f)) if dealias else (lambda f: f)
    return geo.divergence(grid, F(rho * u)), F(geo.advect_vector(grid, u, u))


def rsw_tendency(grid, q, epsilon, config, enforce_walls=True):
    rho, u = q[0], q[1:]
    out = np.empty_like(q)
    out[0] = -geo.divergence(grid, u) / epsilon
    out[1:] = -(geo.gradient(grid, rho) + geo.perp(u)) / epsilon
    if config.nonlinear:
        n_rho, n_u = rsw_quadratic(grid, rho, u, config.dealias)
        out[0] -= n_rho
        out[1:] -= n_u
    if enforce_walls:
        out[1 + grid.normal_index][:, [0, -1]] = 0.0
    return out


def rsw_stable_dt(U, config):
    # gravity-wave speed sqrt(1 + eps rho) and inertial frequency 1/eps
    c_max = float(np.sqrt(np.maximum(1.0 + U.epsilon * U.rho, 0.0)).max())
    speed = c_max / U.epsilon + float(np.sqrt((U.u**2).sum(axis=0)).max())
    return config.cfl * U.grid.dx_min / (speed + U.grid.dx_min / U.epsilon)


def rsw_step(U, dt, config):
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    grid, eps = U.grid, U.epsilon
    check_vacuum(U.rho, eps)
    corr = _Corrections()
    q = rk4(lambda x: rsw_tendency(grid, x, eps, config), U.packed(), dt,
            lambda x: corr.apply(grid, x))
    return RswState.from_packed(grid, q, eps, U.time + dt)


def rsw_integrate(U0, config):
    if config.t_end > config.max_t_end:
        raise ConfigError(f"t_end = {config.t_end} exceeds the desk-scale guard {config.max_t_end}")
    if not isinstance(U0, RswState):
        U0 = RswState(U0.grid, U0.rho, U0.u, U0.epsilon, U0.time)
    grid, eps = U0.grid, U0.epsilon
    check_vacuum(U0.rho, eps)
    rhs = lambda x: rsw_tendency(grid, x, eps, config)
    snaps, dt, corr = march(U0, config, rhs, rsw_stable_dt(U0, config))
    return Trajectory(snaps, eps, config, dt, corr)


def rsw_fast_fast_residual(U, dealias=True, project=True):
    """||P(div(rho^Q u^Q), u^Q.grad u^Q)|| / ||U^Q||_{H^1}^2, zero when U^Q vanishes.

    ``project=False`` feeds ``U`` itself instead of its fast part (negative control).
    """
    g = U.grid
    fast = rsw_project_Q(U) if project else U
    q = fast.packed()
    if geo.l2_norm(g, q) <= 1e-12 * max(U.norm(), 1e-300):
        return 0.0
    n_rho, n_u = rsw_quadratic(g, fast.rho, fast.u, dealias)
    out = rsw_project_P(_as_rsw(g, n_rho, n_u, U))
    return geo.l2_norm(g, out.packed()) / geo.sobolev_norm(g, q, 1) ** 2


def k_integral(U):
    return geo.integrate(U.grid, rsw_K(U))


def rsw_vorticity_budget(snapshots):
    """max_t |int K U(t) - int K U(0)| over a sequence of RSW states."""
    snaps = list(getattr(snapshots, "snapshots", snapshots))
    if len(snaps) < 3:
        raise ConfigError("vorticity budget needs at least 3 snapshots")
    k0 = k_integral(snaps[0])
    return max(abs(k_integral(s) - k0) for s in snaps)


def rsw_vorticity_residuals(U, config):
    """L2 residuals of two candidate potential-vorticity equations at one state.

    ``transport``: d_t(KU) + div(u KU).  ``printed``: d_t(KU) + div(rho u KU), the
    closest divergence-form reading that keeps rho as the weight (a bare scalar
    rho KU has no divergence).  Returns a dict with both norms and ||d_t KU||.
    """
    g = U.grid
    dq = rsw_tendency(g, U.packed(), U.epsilon, config, enforce_walls=False)
    dK = geo.curl2d(g, dq[1:]) - dq[0]
    k = rsw_K(U)
    F = (lambda f: geo.dealias(g, f)) if config.dealias else (lambda f: f)
    transport = dK + geo.divergence(g, F(U.u * k))
    printed = dK + geo.divergence(g, F(U.rho * U.u * k))
    return {
        "transport": geo.l2_norm(g, transport),
        "printed": geo.l2_norm(g, printed),
        "dt_K": geo.l2_norm(g, dK),
    }


def poincare_mode(grid, k=1, m=1, amplitude=1.0, phase=0.0, epsilon=1.0):
    """Linear inertia-gravity wave of the channel with frequency sqrt(1 + k^2 + m^2)/eps.

    The wall-normal velocity is ``sin(m y) cos(k x - phase)``, which vanishes on
    the walls; ``phase = omega t`` gives the exact linear solution at time t.
    """
    if grid.kind != geo.CHANNEL:
        raise ConfigError("inertia-gravity modes are provided for the channel only")
    omega = math.sqrt(1.0 + k * k + m * m)
    y = grid.Y - grid.w[0]
    arg = k * grid.X - phase
    d = k * k - omega * omega
    A = (omega * m * np.cos(m * y) - k * np.sin(m * y)) / d
    B = (k * m * np.cos(m * y) - omega * np.sin(m * y)) / d
    rho = -A * np.sin(arg)
    u = np.stack([-B * np.sin(arg), np.sin(m * y) * np.cos(arg)])
    return RswState(grid, amplitude * rho, amplitude * u, epsilon, 0.0), omega / epsilon
