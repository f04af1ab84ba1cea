"""Quantities that measure the low-Mach limit along a trajectory, and rate fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.interpolate import CubicSpline

from . import geometry as geo
from .compressible import nonlinear_term
from .errors import ConfigError
from .initial import periodic_phase, wall_coordinate
from .projection import P, Q, project_Q, project_velocity

MIN_SNAPSHOTS = 5
ERROR_FLOOR = 1e-15


@dataclass
class ConvergenceReport:
    epsilons: list
    errors: list
    fitted_slope: float = math.nan
    intercept: float = math.nan
    fit_residual: float = math.nan
    floored: bool = False
    meta: dict = field(default_factory=dict)

    def accepted(self, min_slope=0.8, max_residual=0.3):
        return self.fitted_slope >= min_slope and self.fit_residual <= max_residual


def fit_rate(points, meta=None):
    """Least-squares slope of log(error) against log(eps)."""
    pts = sorted(((float(e), float(err)) for e, err in points), reverse=True)
    if len(pts) < 3:
        raise ConfigError(f"a rate fit needs at least 3 points, got {len(pts)}")
    eps = np.array([p[0] for p in pts])
    err = np.array([p[1] for p in pts])
    if np.any(eps <= 0) or len(set(eps)) != len(eps):
        raise ConfigError("epsilons must be positive and distinct")
    if not np.all(np.isfinite(err)) or np.any(err < 0):
        raise ConfigError("errors must be finite and non-negative")
    floored = bool(np.any(err < ERROR_FLOOR))
    err = np.maximum(err, ERROR_FLOOR)
    x, y = np.log(eps), np.log(err)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + intercept))))
    return ConvergenceReport(list(eps), list(err), float(slope), float(intercept), resid,
                             floored, dict(meta or {}))


def _snapshots(traj):
    snaps = list(getattr(traj, "snapshots", traj))
    if len(snaps) < MIN_SNAPSHOTS:
        raise ConfigError(f"need at least {MIN_SNAPSHOTS} snapshots, got {len(snaps)}")
    return snaps


def fast_fast_residual(U, law, dealias=True):
    """||P N(U^Q, grad U^Q; eps)|| / ||U^Q||_{H^1}^2; zero when U^Q vanishes."""
    g = U.grid
    fast = Q(U)
    q = fast.packed()
    if geo.l2_norm(g, q) <= 1e-12 * max(U.norm(), 1e-300):
        return 0.0
    n = nonlinear_term(fast, fast, U.epsilon, law, dealias)
    return geo.l2_norm(g, P(n).packed()) / geo.sobolev_norm(g, q, 1) ** 2


def slow_slow_residual(U, law, dealias=True):
    """||P N(U^P, grad U^P; 0)|| / ||U^P||_{H^1}^2, which is generically O(1)."""
    g = U.grid
    slow = P(U)
    n = nonlinear_term(slow, slow, 0.0, law, dealias)
    return geo.l2_norm(g, P(n).packed()) / geo.sobolev_norm(g, slow.packed(), 1) ** 2


def _cross_terms(U, law, dealias=True):
    dec = project_Q(U)
    a = nonlinear_term(dec.slow, dec.fast, 0.0, law, dealias)
    b = nonlinear_term(dec.fast, dec.slow, 0.0, law, dealias)
    return a.u + b.u


def fast_slow_average(traj, law, dealias=True, uniform=False):
    """||int_0^T P[N(U^P, grad U^Q; 0) + N(U^Q, grad U^P; 0)] dt|| by the trapezoid rule.

    With ``uniform=True`` the maximum over all recorded horizons t <= T of
    ||int_0^t ...|| is returned instead, which does not depend on the acoustic
    phase reached at the final time.
    """
    snaps = _snapshots(traj)
    g = snaps[0].grid
    times = np.array([s.time for s in snaps])
    terms = np.stack([_cross_terms(s, law, dealias) for s in snaps])
    # P is linear and time independent, so it is applied to the time integrals
    if not uniform:
        return geo.l2_norm(g, project_velocity(g, trapezoid(terms, times, axis=0)))
    running = cumulative_trapezoid(terms, times, axis=0, initial=0.0)
    return max(geo.l2_norm(g, project_velocity(g, c)) for c in running[1:])


def slow_residual(traj, dealias=True):
    """``(times, ||e(t)||)`` with e(t) = u^P(t) - u^P(0) + int_0^t P(u^P.grad u^P) ds."""
    snaps = _snapshots(traj)
    g = snaps[0].grid
    times = np.array([s.time for s in snaps])
    slow = np.stack([project_velocity(g, s.u) for s in snaps])
    adv = []
    for v in slow:
        a = geo.advect_vector(g, v, v)
        adv.append(project_velocity(g, geo.dealias(g, a) if dealias else a))
    integral = cumulative_trapezoid(np.stack(adv), times, axis=0, initial=0.0)
    resid = slow - slow[0] + integral
    norms = np.array([geo.l2_norm(g, r) for r in resid])
    norms[0] = 0.0
    return times, norms


def strong_convergence_error(traj, ref, s=0):
    """max over snapshot times of ||u^P(t) - v(t)||_{H^s}, v cubic-interpolated in time."""
    if s not in (0, 1, 2):
        raise ConfigError(f"s must be 0, 1 or 2, got {s}")
    snaps = list(getattr(traj, "snapshots", traj))
    g = snaps[0].grid
    t_ref = np.array([t for t, _ in ref])
    v_ref = np.stack([v for _, v in ref])
    if v_ref.shape[1:] != (2,) + g.shape:
        raise ConfigError(f"reference grid {v_ref.shape[1:]} does not match {(2,) + g.shape}")
    spline = CubicSpline(t_ref, v_ref, axis=0)
    worst = 0.0
    for snap in snaps:
        if snap.time > t_ref[-1] * (1 + 1e-12):
            continue
        diff = project_velocity(g, snap.u) - spline(snap.time)
        worst = max(worst, geo.sobolev_norm(g, diff, s))
    return worst


@dataclass(frozen=True)
class WeakTestFunction:
    """Separable test function ``b(t) * (rho'(x), u'(x))``.

    The envelope ``b = cos^2(pi t / 2T)`` vanishes with its derivative at ``T``, so
    the pairing is not sensitive to the acoustic phase reached at the final time.
    """

    name: str
    rho: np.ndarray
    u: np.ndarray
    t_end: float
    enveloped: bool = True

    def envelope(self, t):
        if not self.enveloped:
            return np.ones_like(np.asarray(t, dtype=float))
        return np.cos(0.5 * math.pi * np.asarray(t) / self.t_end) ** 2

    def envelope_rate(self, t):
        if not self.enveloped:
            return np.zeros_like(np.asarray(t, dtype=float))
        return -(0.5 * math.pi / self.t_end) * np.sin(math.pi * np.asarray(t) / self.t_end)


TEST_PRESETS = ("p_range", "q_range", "generic", "constant")


def make_test_function(grid, preset, t_end):
    """Closed-form test functions: ``p_range`` (divergence-free, no density),
    ``q_range`` (gradient velocity), ``generic`` (neither) and ``constant``
    (the ``q_range`` field without a time envelope)."""
    ph1, ph2 = periodic_phase(grid, 1), periodic_phase(grid, 2)
    s = wall_coordinate(grid)
    zero = np.zeros(grid.shape)
    if preset == "p_range":
        u = geo.perp_gradient(grid, np.sin(ph1) * np.sin(math.pi * s))
        return WeakTestFunction(preset, zero, u, t_end)
    if preset in ("q_range", "constant"):
        rho = np.cos(ph2) + np.cos(2 * math.pi * s)
        u = geo.gradient(grid, np.cos(ph2) * np.cos(2 * math.pi * s))
        return WeakTestFunction(preset, rho, u, t_end, enveloped=preset == "q_range")
    if preset == "generic":
        rho = (np.cos(ph1) * np.cos(math.pi * s) + 0.5 * np.cos(ph2) + 0.4 * np.cos(2 * math.pi * s)
               + 0.3 * np.sin(ph1) * s)
        u = np.stack([np.sin(ph1) * np.cos(math.pi * s) + 0.5, np.cos(ph2) * s * (1 - s) + 0.3 * s])
        return WeakTestFunction(preset, rho, u, t_end)
    raise ConfigError(f"unknown test preset {preset!r}; choose from {TEST_PRESETS}")


def weak_pairing(traj, test):
    """``(|int_0^T int rho rho' + u^Q.u' dx dt|, normalizer)``.

    The normalizer is ||U'||_{L^inf L^2} + ||d_t U'||_{L^2 L^2}.
    """
    snaps = _snapshots(traj)
    g = snaps[0].grid
    times = np.array([s.time for s in snaps])
    b = test.envelope(times)
    vals = []
    for snap, bt in zip(snaps, b):
        fast = Q(snap)
        vals.append(bt * (geo.inner(g, fast.rho, test.rho) + geo.inner(g, fast.u, test.u)))
    pairing = abs(trapezoid(np.array(vals), times))

    spatial = math.sqrt(geo.inner(g, test.rho, test.rho) + geo.inner(g, test.u, test.u))
    t_fine = np.linspace(times[0], times[-1], 2001)
    sup = spatial * float(np.max(np.abs(test.envelope(t_fine))))
    rate = spatial * math.sqrt(trapezoid(test.envelope_rate(t_fine) ** 2, t_fine))
    return pairing, sup + rate


def state_norms(U):
    """L2 norms used in time series: rho, u, u^Q, u^P."""
    g = U.grid
    dec = project_Q(U)
    return {
        "l2_rho": geo.l2_norm(g, U.rho),
        "l2_u": geo.l2_norm(g, U.u),
        "l2_uQ": geo.l2_norm(g, dec.fast.u),
        "l2_uP": geo.l2_norm(g, dec.slow.u),
    }

