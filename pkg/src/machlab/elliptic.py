"""Constant-coefficient elliptic boundary-value problems on the collocation grids.

The periodic direction is diagonalised by the FFT; each Fourier mode leaves a
two-point boundary-value problem in the wall-normal direction which is solved with
a dense direct factorisation computed once per (grid, operator, bc).  The discrete
Laplacian is the composition ``divergence(gradient(.))`` so that Leray-type
projections built on top of it are exactly idempotent.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import geometry as geo
from .errors import CompatibilityError, ConfigError, NumericalError

LAPLACE = "laplace"
HELMHOLTZ_MINUS_ONE = "helmholtz_minus_one"
NEUMANN = "neumann"
DIRICHLET = "dirichlet"

COMPAT_RTOL = 1e-10


@dataclass
class EllipticProblem:
    """Boundary-value problem ``A phi = rhs`` with wall data.

    ``bc_data`` has shape ``(n_periodic, 2)`` holding lower- and upper-wall values.
    For Neumann problems it is the *outward* normal derivative of ``phi``; for
    Dirichlet problems the trace of ``phi``.  ``None`` means homogeneous data.
    """

    operator: str
    bc: str
    rhs: np.ndarray
    bc_data: np.ndarray | None = None


def _mode_operator(grid, kd, operator):
    D = grid.D
    n = grid.n_wall
    if grid.kind == geo.CHANNEL:
        A = D @ D - kd * kd * np.eye(n)
    else:
        r = grid.w
        A = (D * r[None, :]) @ D / r[:, None] - np.diag(kd * kd / r**2)
    if operator == HELMHOLTZ_MINUS_ONE:
        A = A - np.eye(n)
    return A


@functools.lru_cache(maxsize=64)
def _solution_operators(grid, operator, bc):
    """Per-mode inverses of the bordered collocation matrices.

    Every mode uses an (n_wall + 1)-square system.  For the singular Neumann
    Laplace modes (zero effective wavenumber) the extra row pins the weighted mean
    and the extra column absorbs the compatibility defect as a constant shift of
    the interior equations; otherwise the border is a trivial identity.
    """
    n = grid.n_wall
    metric = grid.w if grid.kind == geo.ANNULUS else np.ones(n)
    ops = np.zeros((len(grid.kd), n + 1, n + 1))
    singular = np.zeros(len(grid.kd), dtype=bool)
    for m, kd in enumerate(grid.kd):
        B = np.zeros((n + 1, n + 1))
        A = _mode_operator(grid, kd, operator)
        if bc == NEUMANN:
            A[0], A[-1] = grid.D[0], grid.D[-1]
        else:
            A[0], A[-1] = np.eye(n)[0], np.eye(n)[-1]
        B[:n, :n] = A
        if operator == LAPLACE and bc == NEUMANN and kd == 0.0:
            singular[m] = True
            B[1:n - 1, n] = 1.0
            B[n, :n] = grid.wall_weights * metric
        else:
            B[n, n] = 1.0
        lu = scipy.linalg.lu_factor(B)
        ops[m] = scipy.linalg.lu_solve(lu, np.eye(n + 1))
    ops.setflags(write=False)
    singular.setflags(write=False)
    return ops, singular


def compatibility_defect(grid, rhs, bc_data):
    """int(rhs) - oint(bc_data) for the Neumann Laplace problem."""
    defect = geo.integrate(grid, rhs)
    if bc_data is not None:
        defect -= geo.boundary_integral(grid, bc_data)
    return defect


def solve(grid, problem):
    """Solve an :class:`EllipticProblem`; returns the scalar field ``phi``.

    Neumann Laplace solutions are returned with zero mean.  A compatibility defect
    below ``COMPAT_RTOL * (||rhs|| + ||bc||)`` is removed by a constant shift of
    the right-hand side; a larger one raises :class:`CompatibilityError`.
    """
    if problem.operator not in (LAPLACE, HELMHOLTZ_MINUS_ONE):
        raise ConfigError(f"unknown elliptic operator {problem.operator!r}")
    if problem.bc not in (NEUMANN, DIRICHLET):
        raise ConfigError(f"unknown boundary condition {problem.bc!r}")
    rhs = np.asarray(problem.rhs, dtype=float)
    bc_data = problem.bc_data
    if bc_data is not None:
        bc_data = np.asarray(bc_data, dtype=float)
        if bc_data.shape != (grid.n_periodic, 2):
            raise ConfigError(f"bc_data must have shape {(grid.n_periodic, 2)}")

    if problem.operator == LAPLACE and problem.bc == NEUMANN:
        defect = compatibility_defect(grid, rhs, bc_data)
        scale = geo.l2_norm(grid, rhs)
        if bc_data is not None:
            scale += math.sqrt(geo.boundary_integral(grid, bc_data**2))
        tol = COMPAT_RTOL * max(scale, 1e-300)
        if abs(defect) > tol and abs(defect) > 1e-14:
            raise CompatibilityError(defect, tol)

    n = grid.n_wall
    b = np.zeros((grid.n_periodic, n + 1))
    b[:, :n] = rhs
    if bc_data is None:
        b[:, 0] = b[:, n - 1] = 0.0
    elif problem.bc == NEUMANN:
        # rows hold d/dw phi; the outward normal points along -w at the lower wall
        b[:, 0] = -bc_data[:, 0]
        b[:, n - 1] = bc_data[:, 1]
    else:
        b[:, 0] = bc_data[:, 0]
        b[:, n - 1] = bc_data[:, 1]

    ops, _ = _solution_operators(grid, problem.operator, problem.bc)
    bh = np.fft.rfft(b, axis=0)
    ph = np.einsum("mij,mj->mi", ops, bh)
    phi = np.fft.irfft(ph[:, :n], n=grid.n_periodic, axis=0)
    if not np.all(np.isfinite(phi)):
        raise NumericalError("elliptic solve produced non-finite values")
    return phi


def solve_neumann(grid, rhs, normal_data=None):
    """Zero-mean solution of ``lap phi = rhs`` with outward ``d phi/dn = normal_data``."""
    return solve(grid, EllipticProblem(LAPLACE, NEUMANN, rhs, normal_data))


def residuals(grid, problem, phi):
    """Interior PDE residual and boundary residual (max norms) of a candidate solution."""
    A = geo.laplacian(grid, phi)
    if problem.operator == HELMHOLTZ_MINUS_ONE:
        A = A - phi
    interior = np.max(np.abs(A - problem.rhs)[:, 1:-1])
    bc = np.zeros((grid.n_periodic, 2)) if problem.bc_data is None else problem.bc_data
    if problem.bc == NEUMANN:
        dphi = geo.d_wall(grid, phi)
        got = np.stack([-dphi[:, 0], dphi[:, -1]], axis=1)
    else:
        got = geo.wall_values(phi)
    return float(interior), float(np.max(np.abs(got - bc)))


def _mode_div_curl(grid, kd):
    """Complex 1D matrices of div, curl and the wall condition for one Fourier mode."""
    n = grid.n_wall
    D = grid.D.astype(complex)
    ik = 1j * kd * np.eye(n)
    if grid.kind == geo.CHANNEL:
        div = np.hstack([ik, D])
        curl = np.hstack([-D, ik])
        bc_col = n  # u_y block
    else:
        r = grid.w
        Dr = (D * r[None, :]) / r[:, None]
        div = np.hstack([Dr, ik / r[:, None]])
        curl = np.hstack([-ik / r[:, None], Dr])
        bc_col = 0  # u_r block
    bcrows = np.zeros((2, 2 * n), dtype=complex)
    bcrows[0, bc_col] = 1.0
    bcrows[1, bc_col + n - 1] = 1.0
    return np.vstack([div, curl, bcrows])


def harmonic_nullspace_dims(grid, rcond=1e-10):
    """Dimension of the discrete (div, curl, u.n) nullspace per resolved Fourier mode."""
    dims = {}
    for m, kd in enumerate(grid.kd):
        if m > 0 and kd == 0.0:
            continue  # Nyquist mode: no resolved derivative
        M = _mode_div_curl(grid, kd)
        dims[m] = scipy.linalg.null_space(M, rcond=rcond).shape[1]
    return dims


def harmonic_basis(grid, rcond=1e-10):
    """L2-orthonormal basis of wall-tangent fields with zero divergence and curl.

    Computed as the nullspace of the discrete (div, curl, u.n) operator, mode by
    mode in the periodic direction.  Signs are fixed so that each element is
    positively aligned with the uniform stream ``(1, 0)`` on the channel and with
    ``(y, -x)/(x^2 + y^2)`` on the annulus.
    """
    n = grid.n_wall
    fields = []
    for m, kd in enumerate(grid.kd):
        if m > 0 and kd == 0.0:
            continue
        M = _mode_div_curl(grid, kd)
        if m == 0:
            ns = scipy.linalg.null_space(M.real, rcond=rcond)
            for vec in ns.T:
                v = np.stack([vec[:n], vec[n:]])
                fields.append(np.repeat(v[:, None, :], grid.n_periodic, axis=1))
            continue
        phase = np.exp(1j * m * 2 * math.pi * grid.s / grid.period)
        for vec in scipy.linalg.null_space(M, rcond=rcond).T:
            full = np.stack([vec[:n], vec[n:]])[:, None, :] * phase[None, :, None]
            fields.extend([full.real, full.imag])

    basis = []
    for f in fields:
        for b in basis:
            f = f - geo.inner(grid, f, b) * b
        nrm = geo.l2_norm(grid, f)
        if nrm > 1e-8:
            basis.append(f / nrm)

    ref = (np.stack([np.ones(grid.shape), np.zeros(grid.shape)]) if grid.kind == geo.CHANNEL
           else np.stack([np.zeros(grid.shape), -1.0 / grid.W]))
    return [b if geo.inner(grid, b, ref) >= 0 else -b for b in basis]
