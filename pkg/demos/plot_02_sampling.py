"""
Gaussian and Gibbs ensembles
============================

Draw the truncated Gaussian measure and its Gibbs reweighting, compare the
acceptance rate with a direct Monte Carlo estimate of the normalizing constant.
"""

import numpy as np

from gibbswave import GibbsSpec, SeededStream, gibbs_weight, partition_estimate, sample_ensemble, sobolev_norm

spec = GibbsSpec.build(alpha=2.0, n_modes=16)

# every member has its own (seed, stream_id) generator
gauss, _ = sample_ensemble(spec, seed=1, stream_ids=range(4000), measure="gaussian")
gibbs, attempts = sample_ensemble(spec, seed=2, stream_ids=range(4000), measure="gibbs")

# E||u||^2 = 2 pi^-2 sum n^-2 under the Gaussian measure
expected = 2 * np.sum(1 / (np.pi * np.arange(1, 17)) ** 2)
print(f"mean ||u||^2: {np.mean(sobolev_norm(gauss, 0) ** 2):.4f} (exact {expected:.4f})")

# acceptance rate of the rejection sampler vs E[f_N]
mean, se = partition_estimate(spec, 20000, SeededStream(3))
print(f"acceptance rate {len(attempts) / attempts.sum():.4f}, E[f_N] = {mean:.4f} +- {se:.4f}")

# the reweighting favours states with small potential energy
print(f"mean weight: gaussian {gibbs_weight(gauss, spec).mean():.4f}, gibbs {gibbs_weight(gibbs, spec).mean():.4f}")
