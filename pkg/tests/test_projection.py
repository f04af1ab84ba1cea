import numpy as np
import pytest
from hypothesis import given, strategies as st

from machlab import geometry as geo
from machlab.config import cached_grid
from machlab.errors import ConfigError
from machlab.initial import random_state
from machlab.projection import (State, apply_K, apply_L, duality_preimage, project_Q,
                                state_inner, verify_Q_bound)

GRIDS = {kind: cached_grid(kind, 64, 33, None, 2 / 3) for kind in ("channel", "annulus")}


def rel(grid, a, n):
    return geo.l2_norm(grid, a) / n


@given(st.sampled_from(sorted(GRIDS)), st.integers(0, 2**32 - 1))
def test_projection_algebra(kind, seed):
    g = GRIDS[kind]
    U = random_state(g, np.random.default_rng(seed), 0.1, 0.5)
    n = U.norm()
    dec = project_Q(U)
    slow, fast = dec.slow, dec.fast
    again = project_Q(slow)
    assert rel(g, again.slow.packed() - slow.packed(), n) < 1e-10
    assert rel(g, project_Q(fast).fast.packed() - fast.packed(), n) < 1e-10
    assert rel(g, slow.packed() + fast.packed() - U.packed(), n) < 1e-14
    assert abs(state_inner(slow, fast)) / n**2 < 1e-10
    assert rel(g, apply_K(g, fast.u), n) < 1e-9
    div, grad = apply_L(g, slow.rho, slow.u)
    assert rel(g, div, n) < 1e-9 and rel(g, grad, n) == 0.0


def test_fast_part_is_a_gradient(channel, rng):
    U = random_state(channel, rng)
    dec = project_Q(U)
    assert np.abs(dec.fast.u - geo.gradient(channel, dec.potential)).max() < 1e-12
    assert np.array_equal(dec.fast.rho, U.rho)
    assert np.abs(geo.wall_values(dec.slow.u[1])).max() < 1e-10


def test_harmonic_coefficient_of_annulus_state(annulus, rng):
    U = random_state(annulus, rng, harmonic=True)
    dec = project_Q(U)
    assert dec.harmonic_coeffs.shape == (1,)
    h = project_Q(State(annulus, np.zeros(annulus.shape), U.u - dec.fast.u))
    assert abs(h.harmonic_coeffs[0] - dec.harmonic_coeffs[0]) < 1e-10


def test_q_bound_is_finite_and_positive(channel, rng):
    for _ in range(5):
        c = verify_Q_bound(random_state(channel, rng))
        assert 0 < c < 10
    slow = project_Q(random_state(channel, rng, density=False)).slow
    assert verify_Q_bound(slow) == np.inf


def test_duality_preimage(channel, rng):
    U = random_state(channel, rng)
    V = duality_preimage(U)
    div, grad = apply_L(channel, V.rho, V.u)
    fast = project_Q(U).fast
    n = U.norm()
    assert rel(channel, div - fast.rho, n) < 1e-8
    assert rel(channel, grad - fast.u, n) < 1e-8


def test_state_check(channel):
    z = np.zeros(channel.shape)
    State(channel, z, np.zeros((2,) + channel.shape), 0.1).check()
    with pytest.raises(ConfigError, match="zero mean"):
        State(channel, z + 1, np.zeros((2,) + channel.shape), 0.1).check()
    u = np.zeros((2,) + channel.shape)
    u[1] = 1.0
    with pytest.raises(ConfigError, match="tangent"):
        State(channel, z, u, 0.1).check()
    with pytest.raises(ConfigError, match="epsilon"):
        State(channel, z, np.zeros((2,) + channel.shape), 1.5).check()
    with pytest.raises(ConfigError, match="vacuum"):
        State(channel, 10 * np.cos(channel.X), np.zeros((2,) + channel.shape), 0.1).check()
    with pytest.raises(ConfigError, match="non-finite"):
        State(channel, z * np.nan, np.zeros((2,) + channel.shape), 0.1).check()
