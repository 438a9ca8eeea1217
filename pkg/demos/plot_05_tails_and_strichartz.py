"""
Sub-Gaussian tails, moments and Strichartz ratios
=================================================

Fit log P(X > lambda) against lambda^2 for the H^0.4 norm of Gaussian data,
check that normalized Gaussian moments stay flat in q, and measure the
empirical Strichartz constant at two truncations.
"""

import numpy as np

from gibbswave import GibbsSpec, SeededStream, moment_growth, sample_ensemble, sobolev_norm, strichartz_ratio, tail_fit

spec = GibbsSpec.build(2.0, 64)
draws, _ = sample_ensemble(spec, seed=9, stream_ids=range(20000), measure="gaussian")
fit = tail_fit(sobolev_norm(draws, 0.4))
print(f"H^0.4 tail: slope {fit.slope:.3f}, R^2 {fit.r_squared:.4f}")

c = np.full(32, 1 / np.sqrt(32), dtype=complex)
for q, m in moment_growth(c, [2, 4, 8, 16], 100_000, SeededStream(10)):
    print(f"q={q:2d}  M_q^(1/q)/sqrt(q) = {m:.4f}")

for N in (32, 64):
    print(f"N={N}: max L^5/H^0.7 ratio {strichartz_ratio(200, N, 5.0, SeededStream(11)):.4f}")
