"""Low-Mach-number limit of compressible Euler flows with solid walls: spectral
solvers, Helmholtz-type projections and convergence diagnostics."""

__version__ = "0.1.0"
