"""
Radial eigenbasis and free evolution
====================================

Build the Dirichlet eigenbasis on the unit ball, check orthonormality under the
radial quadrature, and watch the free half-wave flow return to its start.
"""

import numpy as np

from gibbswave import build_basis, free_evolve, lp_norm_ball, sobolev_norm, spacetime_lp_norm

# 32 modes on the default 128-node Gauss-Legendre grid
quad = build_basis(32)
print("Gram error:", np.max(np.abs(quad.gram() - np.eye(32))))

# L^5 norms of single modes grow like n^(1 - 3/5)
n = np.array([1, 2, 4, 8, 16, 32])
norms = lp_norm_ball(np.eye(32)[n - 1], quad, 5.0)
print("log-log slope of ||e_n||_5:", np.polyfit(np.log(n), np.log(norms), 1)[0])

# a random state and its orbit under S(t); the flow has period 2
rng = np.random.default_rng(0)
u = (rng.standard_normal(32) + 1j * rng.standard_normal(32)) / np.arange(1, 33)
for t in (0.0, 0.5, 1.0, 2.0):
    print(f"t={t:3.1f}  H^0.4 norm {sobolev_norm(free_evolve(u, t), 0.4):.12f}"
          f"  distance to u {np.max(np.abs(free_evolve(u, t) - u)):.2e}")

# space-time L^5 norm over one period
print("||S(t)u||_{L^5((0,2) x ball)} =", spacetime_lp_norm(u, quad, 5.0))
