"""Collocation grids and spectral differential operators.

Two solid-wall domains are supported:

* ``channel``: periodic in ``x`` on ``[0, Lx)`` with walls at ``y = 0`` and ``y = Ly``.
* ``annulus``: periodic in ``theta`` with walls at ``r = r0`` and ``r = r1``.

Fields are plain numpy arrays indexed ``[i_periodic, j_wall]``.  A scalar field has
shape ``(n_periodic, n_wall)``, a vector field ``(2, n_periodic, n_wall)``.  Vector
components are Cartesian ``(u_x, u_y)`` on the channel and cylindrical
``(u_r, u_theta)`` on the annulus.  The periodic direction uses trigonometric
collocation, the wall-normal direction Chebyshev-Gauss-Lobatto collocation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

CHANNEL = "channel"
ANNULUS = "annulus"


def cheb(n):
    """Chebyshev-Gauss-Lobatto nodes ``cos(pi j / n)`` and differentiation matrix."""
    if n == 0:
        return np.zeros((1, 1)), np.ones(1)
    x = np.cos(np.pi * np.arange(n + 1) / n)
    c = np.hstack([2.0, np.ones(n - 1), 2.0]) * (-1.0) ** np.arange(n + 1)
    dx = x[:, None] - x[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    d -= np.diag(d.sum(axis=1))
    return d, x


def clencurt(n):
    """Clenshaw-Curtis weights on [-1, 1] for the nodes of :func:`cheb`."""
    theta = np.pi * np.arange(n + 1) / n
    w = np.zeros(n + 1)
    ii = np.arange(1, n)
    v = np.ones(n - 1)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n * n - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k * k - 1)
        v -= np.cos(n * theta[ii]) / (n * n - 1)
    else:
        w[0] = w[n] = 1.0 / (n * n)
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k * k - 1)
    w[ii] = 2.0 * v / n
    return w


@dataclass(frozen=True, eq=False)
class Grid:
    """Tensor-product collocation grid.  Immutable; hashed by identity."""

    kind: str
    n_periodic: int
    n_wall: int
    extents: tuple
    dealias_fraction: float
    s: np.ndarray  # periodic coordinate nodes (x or theta)
    w: np.ndarray  # wall-normal nodes, ascending (y or r)
    period: float
    D: np.ndarray  # wall-normal differentiation matrix
    kd: np.ndarray  # first-derivative wavenumbers per rfft mode (Nyquist zeroed)
    mask: np.ndarray  # 2/3-rule keep mask per rfft mode
    weights: np.ndarray  # quadrature weights per node (include r on the annulus)
    wall_weights: np.ndarray  # 1D wall-normal weights without metric factor
    S: np.ndarray = field(repr=False)
    W: np.ndarray = field(repr=False)

    @property
    def shape(self):
        return (self.n_periodic, self.n_wall)

    @property
    def normal_index(self):
        """Vector component normal to the walls."""
        return 1 if self.kind == CHANNEL else 0

    @property
    def X(self):
        return self.S if self.kind == CHANNEL else self.W * np.cos(self.S)

    @property
    def Y(self):
        return self.W if self.kind == CHANNEL else self.W * np.sin(self.S)

    @property
    def area(self):
        if self.kind == CHANNEL:
            return self.extents[0] * self.extents[1]
        r0, r1 = self.extents
        return math.pi * (r1 * r1 - r0 * r0)

    @property
    def metric(self):
        """Radius on the annulus, ones on the channel (scale factor of d/ds)."""
        return self.W if self.kind == ANNULUS else np.ones(self.shape)

    @property
    def dx_min(self):
        dw = np.min(np.diff(self.w))
        ds = self.period / self.n_periodic
        if self.kind == ANNULUS:
            ds *= self.extents[0]
        return min(dw, ds)

    @property
    def wall_arclength(self):
        """Arc-length weights of the lower and upper wall nodes, shape (Np, 2)."""
        ds = np.full(self.n_periodic, self.period / self.n_periodic)
        if self.kind == CHANNEL:
            return np.stack([ds, ds], axis=1)
        return np.stack([ds * self.w[0], ds * self.w[-1]], axis=1)


def make_grid(kind="channel", n_periodic=32, n_wall=17, extents=None, dealias_fraction=2 / 3):
    """Build a channel or annulus grid.

    ``extents`` is ``(Lx, Ly)`` for the channel (default ``(2 pi, pi)``) and
    ``(r0, r1)`` for the annulus (default ``(1, 2)``).
    """
    if kind not in (CHANNEL, ANNULUS):
        raise ConfigError(f"unknown grid kind {kind!r}")
    if int(n_periodic) != n_periodic or n_periodic < 8:
        raise ConfigError(f"n_periodic must be an integer >= 8, got {n_periodic}")
    if int(n_wall) != n_wall or n_wall < 9 or n_wall % 2 == 0:
        raise ConfigError(f"n_wall must be an odd integer >= 9, got {n_wall}")
    if not 0.0 < dealias_fraction <= 1.0:
        raise ConfigError(f"dealias_fraction must lie in (0, 1], got {dealias_fraction}")
    n_periodic, n_wall = int(n_periodic), int(n_wall)

    if kind == CHANNEL:
        extents = (2 * math.pi, math.pi) if extents is None else tuple(float(e) for e in extents)
        if len(extents) != 2 or min(extents) <= 0:
            raise ConfigError(f"channel extents must be two positive lengths, got {extents}")
        period, (a, b) = extents[0], (0.0, extents[1])
    else:
        extents = (1.0, 2.0) if extents is None else tuple(float(e) for e in extents)
        if len(extents) != 2 or not 0 < extents[0] < extents[1]:
            raise ConfigError(f"annulus radii must satisfy 0 < r0 < r1, got {extents}")
        period, (a, b) = 2 * math.pi, extents

    n = n_wall - 1
    d, x = cheb(n)
    # x runs from +1 to -1, so this map gives ascending wall-normal nodes
    w = a + 0.5 * (b - a) * (1.0 - x)
    D = -2.0 / (b - a) * d
    wall_weights = 0.5 * (b - a) * clencurt(n)

    s = period * np.arange(n_periodic) / n_periodic
    modes = np.arange(n_periodic // 2 + 1)
    kd = 2 * math.pi / period * modes.astype(float)
    if n_periodic % 2 == 0:
        kd[-1] = 0.0
    cutoff = math.floor(dealias_fraction * n_periodic / 2 + 1e-12)
    mask = modes <= cutoff
    if n_periodic % 2 == 0 and dealias_fraction < 1.0:
        mask[-1] = False

    S, W = np.meshgrid(s, w, indexing="ij")
    weights = np.outer(np.full(n_periodic, period / n_periodic), wall_weights)
    if kind == ANNULUS:
        weights = weights * W

    return Grid(kind, n_periodic, n_wall, extents, float(dealias_fraction), s, w, period,
                D, kd, mask, weights, wall_weights, S, W)


# --- elementary derivatives -------------------------------------------------------

def d_periodic(grid, f):
    """Derivative along the periodic coordinate (x or theta)."""
    fh = np.fft.rfft(f, axis=-2)
    fh *= 1j * grid.kd[:, None]
    return np.fft.irfft(fh, n=grid.n_periodic, axis=-2)


def d_wall(grid, f):
    """Derivative along the wall-normal coordinate (y or r)."""
    return f @ grid.D.T


def dealias(grid, f):
    """Apply the 2/3-rule mask in the periodic direction."""
    if grid.mask.all():
        return f
    fh = np.fft.rfft(f, axis=-2)
    fh *= grid.mask[:, None]
    return np.fft.irfft(fh, n=grid.n_periodic, axis=-2)


# --- vector calculus --------------------------------------------------------------

def gradient(grid, f):
    if grid.kind == CHANNEL:
        return np.stack([d_periodic(grid, f), d_wall(grid, f)])
    return np.stack([d_wall(grid, f), d_periodic(grid, f) / grid.W])


def divergence(grid, v):
    if grid.kind == CHANNEL:
        return d_periodic(grid, v[0]) + d_wall(grid, v[1])
    r = grid.W
    return (d_wall(grid, r * v[0]) + d_periodic(grid, v[1])) / r


def curl2d(grid, v):
    """Scalar vorticity d_x v_y - d_y v_x."""
    if grid.kind == CHANNEL:
        return d_periodic(grid, v[1]) - d_wall(grid, v[0])
    r = grid.W
    return (d_wall(grid, r * v[1]) - d_periodic(grid, v[0])) / r


def perp(v):
    """Counter-clockwise rotation (v1, v2) -> (-v2, v1); frame independent."""
    return np.stack([-v[1], v[0]])


def perp_gradient(grid, f):
    """(grad f)^perp = (-d_y f, d_x f)."""
    return perp(gradient(grid, f))


def laplacian(grid, f):
    return divergence(grid, gradient(grid, f))


def advect_scalar(grid, u, f):
    """u . grad f."""
    g = gradient(grid, f)
    return u[0] * g[0] + u[1] * g[1]


def advect_vector(grid, u, w):
    """(u . grad) w, including the curvature terms on the annulus."""
    if grid.kind == CHANNEL:
        return np.stack([advect_scalar(grid, u, w[0]), advect_scalar(grid, u, w[1])])
    r = grid.W
    ar = advect_scalar(grid, u, w[0]) - u[1] * w[1] / r
    at = advect_scalar(grid, u, w[1]) + u[1] * w[0] / r
    return np.stack([ar, at])


def to_cartesian(grid, v):
    """Cartesian components of a vector field."""
    if grid.kind == CHANNEL:
        return v
    c, s = np.cos(grid.S), np.sin(grid.S)
    return np.stack([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def cartesian_derivative(grid, f, axis):
    """d/dx (axis 0) or d/dy (axis 1) of a scalar field."""
    if grid.kind == CHANNEL:
        return d_periodic(grid, f) if axis == 0 else d_wall(grid, f)
    c, s = np.cos(grid.S), np.sin(grid.S)
    fr, ft = d_wall(grid, f), d_periodic(grid, f) / grid.W
    return c * fr - s * ft if axis == 0 else s * fr + c * ft


# --- quadrature and norms ---------------------------------------------------------

def integrate(grid, f):
    """Quadrature of a scalar field over the domain."""
    return float(np.sum(grid.weights * f))


def mean(grid, f):
    return integrate(grid, f) / grid.area


def inner(grid, a, b):
    """Weighted discrete L2 inner product; sums over any leading component axes."""
    return float(np.sum(grid.weights * a * b))


def l2_norm(grid, f):
    return math.sqrt(max(inner(grid, f, f), 0.0))


def boundary_integral(grid, g):
    """Arc-length integral of wall data ``g`` of shape (Np, 2) [lower, upper]."""
    return float(np.sum(grid.wall_arclength * g))


def wall_values(f):
    """Values at the lower and upper wall, shape (Np, 2)."""
    return np.stack([f[:, 0], f[:, -1]], axis=1)


def _components(grid, f):
    f = np.asarray(f)
    if f.ndim == 2:
        return [f]
    if f.shape[0] == 2:
        return list(to_cartesian(grid, f))
    if f.shape[0] == 3:
        return [f[0]] + list(to_cartesian(grid, f[1:]))
    raise ConfigError(f"cannot interpret field of shape {f.shape}")


def sobolev_norm(grid, f, s=0):
    """Discrete H^s norm, sqrt(sum_{|beta| <= s} ||d^beta f||^2), 0 <= s <= 3.

    Accepts a scalar field, a vector field or a stacked (rho, u) triple.
    Derivatives are Cartesian on both domains.
    """
    if s not in (0, 1, 2, 3):
        raise ConfigError(f"Sobolev order must be 0..3, got {s}")
    total = 0.0
    for comp in _components(grid, f):
        # layer[b] holds d_x^(order - b) d_y^b comp
        layer = [comp]
        total += inner(grid, comp, comp)
        for _ in range(s):
            nxt = [cartesian_derivative(grid, g, 0) for g in layer]
            nxt.append(cartesian_derivative(grid, layer[-1], 1))
            layer = nxt
            total += sum(inner(grid, g, g) for g in layer)
    return math.sqrt(total)
