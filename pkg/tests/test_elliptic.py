import math

import numpy as np
import pytest

from machlab import geometry as geo
from machlab.elliptic import (DIRICHLET, HELMHOLTZ_MINUS_ONE, LAPLACE, NEUMANN,
                              EllipticProblem, harmonic_basis, harmonic_nullspace_dims,
                              residuals, solve, solve_neumann)
from machlab.errors import CompatibilityError, ConfigError


def test_neumann_cosine_mode(channel):
    X, Y = channel.X, channel.Y
    exact = np.cos(X) * np.cos(Y)
    phi = solve_neumann(channel, -2 * exact)
    assert np.abs(phi - exact).max() < 1e-10


def test_dirichlet_helmholtz_sine_mode(channel):
    X, Y = channel.X, channel.Y
    exact = np.sin(X) * np.sin(2 * Y)
    prob = EllipticProblem(HELMHOLTZ_MINUS_ONE, DIRICHLET, -6 * exact)
    phi = solve(channel, prob)
    assert np.abs(phi - exact).max() < 1e-10
    interior, bc = residuals(channel, prob, phi)
    assert interior < 1e-8 and bc < 1e-12


def test_annulus_neumann_with_data(annulus):
    r, th = annulus.W, annulus.S
    exact = r**2 * np.cos(th)
    data = np.stack([-2 * r[:, 0] * np.cos(th[:, 0]), 2 * r[:, -1] * np.cos(th[:, -1])], axis=1)
    phi = solve_neumann(annulus, 3 * np.cos(th), data)
    assert np.abs(phi - exact).max() < 1e-9


def test_dirichlet_data_is_imposed(annulus):
    data = np.stack([np.ones(64), 2 * np.ones(64)], axis=1)
    phi = solve(annulus, EllipticProblem(LAPLACE, DIRICHLET, np.zeros(annulus.shape), data))
    # harmonic radial profile 1 + log r / log 2
    assert np.abs(phi - (1 + np.log(annulus.W) / math.log(2))).max() < 1e-10


def test_incompatible_neumann_raises(channel):
    with pytest.raises(CompatibilityError):
        solve_neumann(channel, np.ones(channel.shape))


def test_unknown_operator_raises(channel):
    with pytest.raises(ConfigError):
        solve(channel, EllipticProblem("biharmonic", NEUMANN, np.zeros(channel.shape)))
    with pytest.raises(ConfigError):
        solve(channel, EllipticProblem(LAPLACE, "robin", np.zeros(channel.shape)))


def test_harmonic_dimensions(channel, annulus):
    assert sum(harmonic_nullspace_dims(annulus).values()) == 1
    # the uniform stream (1, 0) is divergence-, curl-free and tangent on the channel
    assert sum(harmonic_nullspace_dims(channel).values()) == 1


def test_annulus_harmonic_field_is_point_vortex(annulus):
    (h,) = harmonic_basis(annulus)
    assert np.abs(h[0]).max() < 1e-10
    c = h[1] * annulus.W
    assert np.ptp(c) < 1e-10 * np.abs(c).max()
    assert c.mean() < 0
    assert geo.l2_norm(annulus, h) == pytest.approx(1.0, rel=1e-12)
