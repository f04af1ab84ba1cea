"""Print the harmonic-space dimension per Fourier mode on the channel and the annulus."""

import numpy as np

from machlab import geometry as geo
from machlab.config import cached_grid
from machlab.elliptic import harmonic_basis, harmonic_nullspace_dims

for kind in ("channel", "annulus"):
    grid = cached_grid(kind, 64, 33)
    dims = {m: d for m, d in harmonic_nullspace_dims(grid).items() if d}
    print(f"{kind}: nonzero per-mode dimensions {dims}")
    for h in harmonic_basis(grid):
        div = geo.l2_norm(grid, geo.divergence(grid, h))
        curl = geo.l2_norm(grid, geo.curl2d(grid, h))
        mean = [float(np.mean(c)) for c in h]
        print(f"  field mean components {mean[0]:+.4f} {mean[1]:+.4f}, |div| {div:.1e}, |curl| {curl:.1e}")
