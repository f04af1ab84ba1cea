"""Initial-condition generators.

All velocities are built from a stream function vanishing on the walls and a
potential with zero normal derivative there, so wall tangency holds up to
round-off; the wall-normal nodal values are then zeroed and the density re-centred
so the discrete invariants hold exactly.
"""

from __future__ import annotations

import math

import numpy as np

from . import geometry as geo
from .elliptic import harmonic_basis
from .errors import ConfigError
from .projection import State

PRESETS = (
    "ill_prepared_default",
    "well_prepared",
    "acoustic_only",
    "annulus_harmonic",
    "rsw_geostrophic",
    "rsw_ill_prepared",
)


def wall_coordinate(grid):
    """Wall-normal coordinate rescaled to [0, 1]."""
    a, b = grid.w[0], grid.w[-1]
    return (grid.W - a) / (b - a)


def periodic_phase(grid, k):
    return 2 * math.pi * k * grid.S / grid.period


def clean(grid, rho, u):
    """Re-centre rho and zero the wall-normal velocity at wall nodes."""
    rho = rho - geo.mean(grid, rho)
    u = np.array(u, dtype=float)
    u[grid.normal_index][:, [0, -1]] = 0.0
    return rho, u


def slow_mode(grid):
    """Stream-function mode vanishing on the walls: sin x sin y on the default channel."""
    return np.sin(periodic_phase(grid, 1)) * np.sin(math.pi * wall_coordinate(grid))


def fast_mode(grid):
    """Neumann mode with zero mean: cos x cos y on the default channel."""
    return np.cos(periodic_phase(grid, 1)) * np.cos(math.pi * wall_coordinate(grid))


def random_fields(grid, rng, kmax=3, lmax=3):
    """Random stream function, potential and density built from low modes."""
    s = wall_coordinate(grid)
    psi = np.zeros(grid.shape)
    chi = np.zeros(grid.shape)
    rho = np.zeros(grid.shape)
    for k in range(kmax + 1):
        ph = periodic_phase(grid, k)
        for l in range(lmax + 1):
            damp = 1.0 / (1.0 + k + l)
            a = rng.standard_normal(6) * damp
            trig = (a[0] * np.cos(ph) + a[1] * np.sin(ph),
                    a[2] * np.cos(ph) + a[3] * np.sin(ph),
                    a[4] * np.cos(ph) + a[5] * np.sin(ph))
            if l > 0:
                psi += trig[0] * np.sin(l * math.pi * s)
            if k + l > 0:
                chi += trig[1] * np.cos(l * math.pi * s)
                rho += trig[2] * np.cos(l * math.pi * s)
    return psi, chi, rho


def random_state(grid, rng, epsilon=0.1, amplitude=1.0, slow=True, fast=True, density=True,
                 harmonic=True, kmax=3, lmax=3):
    """Random band-limited state with unit-scale components.

    ``amplitude`` scales the whole state; the vacuum floor is not checked here.
    """
    psi, chi, rho = random_fields(grid, rng, kmax, lmax)
    u = np.zeros((2,) + grid.shape)
    if slow:
        u += geo.perp_gradient(grid, psi)
    if fast:
        u += geo.gradient(grid, chi)
    if harmonic:
        for h in harmonic_basis(grid):
            u += rng.standard_normal() * h * math.sqrt(grid.area) * 0.3
    if not density:
        rho = np.zeros(grid.shape)
    rho, u = clean(grid, amplitude * rho, amplitude * u)
    return State(grid, rho, u, epsilon, 0.0)


def make_initial_state(cfg, epsilon):
    """Initial state for an :class:`~machlab.config.ExperimentConfig` preset."""
    grid = cfg.grid()
    preset = cfg.ic_preset
    a_slow, a_fast = cfg.amplitude_slow, cfg.amplitude_fast
    zero = np.zeros(grid.shape)
    if preset in ("ill_prepared_default", "well_prepared", "acoustic_only"):
        u = a_slow * geo.perp_gradient(grid, slow_mode(grid))
        rho = a_fast * fast_mode(grid)
        if preset == "well_prepared":
            rho = zero
        if preset == "acoustic_only":
            u = np.zeros((2,) + grid.shape)
    elif preset == "annulus_harmonic":
        basis = harmonic_basis(grid)
        if not basis:
            raise ConfigError(f"grid kind {grid.kind!r} has no harmonic field")
        u = a_slow * math.sqrt(grid.area) * basis[0]
        rho = zero
    elif preset in ("rsw_geostrophic", "rsw_ill_prepared"):
        phi0 = a_slow * slow_mode(grid)
        u = geo.perp_gradient(grid, phi0)
        rho = phi0
        if preset == "rsw_ill_prepared":
            rho = rho + a_fast * fast_mode(grid)
    else:
        raise ConfigError(f"unknown ic_preset {preset!r}; choose from {PRESETS}")

    if cfg.amplitude_noise > 0:
        noise = random_state(grid, np.random.default_rng(cfg.seed), epsilon,
                             cfg.amplitude_noise, harmonic=False)
        u = u + noise.u
        rho = rho + noise.rho
    rho, u = clean(grid, rho, u)
    total = 1.0 + epsilon * rho
    if total.min() < 0.5:
        raise ConfigError(
            f"preset {preset!r} violates the non-vacuum floor at eps={epsilon}: "
            f"min(1 + eps*rho) = {total.min():.3f}"
        )
    return State(grid, rho, u, epsilon, 0.0)
