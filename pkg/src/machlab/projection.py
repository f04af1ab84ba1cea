"""Helmholtz projections onto the slow (P) and fast (Q) parts of a state.

``Q U = (rho, grad phi)`` with ``lap phi = div u`` and ``d phi/dn = u.n`` on the
walls; ``P = I - Q``.  Both are orthogonal in the quadrature-weighted discrete L2
product.  On domains with two wall components the harmonic fields are untouched
by ``Q`` and therefore end up in ``P U``; their coefficients are reported.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry as geo
from .elliptic import harmonic_basis, solve_neumann
from .errors import ConfigError

STATE_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class State:
    """Density perturbation ``rho`` and velocity ``u`` at one time."""

    grid: geo.Grid
    rho: np.ndarray
    u: np.ndarray
    epsilon: float = 1.0
    time: float = 0.0

    def packed(self):
        return np.concatenate([self.rho[None], self.u])

    @classmethod
    def from_packed(cls, grid, q, epsilon=1.0, time=0.0):
        return cls(grid, q[0], q[1:], epsilon, time)

    def norm(self):
        return geo.l2_norm(self.grid, self.packed())

    def check(self, vacuum_floor=0.5):
        """Raise ConfigError unless the solution-space invariants hold."""
        g = self.grid
        if not (np.all(np.isfinite(self.rho)) and np.all(np.isfinite(self.u))):
            raise ConfigError("state contains non-finite values")
        if not 0.0 < self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        rho_norm = geo.l2_norm(g, self.rho)
        if abs(geo.integrate(g, self.rho)) > STATE_RTOL * max(rho_norm, 1e-300) + 1e-14:
            raise ConfigError("density perturbation does not have zero mean")
        un = geo.wall_values(self.u[g.normal_index])
        if np.max(np.abs(un)) > STATE_RTOL * max(geo.l2_norm(g, self.u), 1e-300) + 1e-14:
            raise ConfigError("velocity is not tangent to the walls")
        total = 1.0 + self.epsilon * self.rho
        if total.min() < vacuum_floor:
            node = np.unravel_index(np.argmin(total), total.shape)
            raise ConfigError(f"vacuum: 1 + eps*rho = {total.min():.4f} at node {node}")
        return self


@dataclass(frozen=True)
class Decomposition:
    slow: State
    fast: State
    potential: np.ndarray
    harmonic_coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))


def normal_wall_data(grid, v):
    """Outward normal component of ``v`` on both walls, shape (Np, 2)."""
    vn = geo.wall_values(v[grid.normal_index])
    return np.stack([-vn[:, 0], vn[:, 1]], axis=1)


def leray(grid, v):
    """Split a vector field into ``(v - grad phi, phi)`` with ``grad phi`` its gradient part.

    ``v`` need not be wall tangent; the Neumann data are its normal trace.
    """
    phi = solve_neumann(grid, geo.divergence(grid, v), normal_wall_data(grid, v))
    return v - geo.gradient(grid, phi), phi


def project_velocity(grid, v):
    """Velocity-restricted P applied to a vector field."""
    return leray(grid, v)[0]


@functools.lru_cache(maxsize=16)
def _harmonic(grid):
    basis = tuple(harmonic_basis(grid))
    for b in basis:
        b.setflags(write=False)
    return basis


def harmonic_coefficients(grid, u):
    return np.array([geo.inner(grid, u, h) for h in _harmonic(grid)])


def project_Q(U):
    """Fast/slow decomposition of a state."""
    g = U.grid
    slow_u, phi = leray(g, U.u)
    fast = State(g, U.rho.copy(), U.u - slow_u, U.epsilon, U.time)
    slow = State(g, np.zeros_like(U.rho), slow_u, U.epsilon, U.time)
    return Decomposition(slow, fast, phi, harmonic_coefficients(g, slow_u))


def project_P(U):
    return project_Q(U).slow


def Q(U):
    return project_Q(U).fast


def P(U):
    return project_Q(U).slow


def apply_L(grid, rho, u):
    """Singular operator L(rho, u) = (div u, grad rho)."""
    return geo.divergence(grid, u), geo.gradient(grid, rho)


def apply_K(grid, u):
    """Vorticity operator K(rho, u) = curl u (2D)."""
    return geo.curl2d(grid, u)


def state_inner(U, V):
    """<(rho, u), (rho', u')> = int rho rho' + u.u'."""
    return geo.inner(U.grid, U.rho, V.rho) + geo.inner(U.grid, U.u, V.u)


def verify_Q_bound(U):
    """Ratio ||Q U||_{H^1} / ||L(Q U)||_{L^2}; ``inf`` when Q U vanishes."""
    g = U.grid
    fast = Q(U)
    q = fast.packed()
    if geo.l2_norm(g, q) <= 1e-12 * max(U.norm(), 1e-300):
        return math.inf
    div, grad = apply_L(g, fast.rho, fast.u)
    denom = math.sqrt(geo.inner(g, div, div) + geo.inner(g, grad, grad))
    if denom == 0.0:
        return math.inf
    return geo.sobolev_norm(g, q, 1) / denom


def duality_preimage(U):
    """A state U'' with L U'' = Q U, built from two Neumann solves.

    ``U'' = (phi, grad psi)`` where ``grad phi`` is the fast velocity and
    ``lap psi = rho`` with homogeneous Neumann data.
    """
    g = U.grid
    dec = project_Q(U)
    psi = solve_neumann(g, U.rho)
    return State(g, dec.potential, geo.gradient(g, psi), U.epsilon, U.time)


def with_time(U, t):
    return replace(U, time=t)
