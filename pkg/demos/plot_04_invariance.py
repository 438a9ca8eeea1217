"""
Invariance of the Gibbs ensemble
================================

Push a Gibbs ensemble through the flow and compare four scalar observables at
the start and end with two-sample KS tests. A short horizon keeps this quick;
the CLI ``invariance`` command runs the long version.
"""

from gibbswave import GibbsSpec, SeededStream, SimParams, invariance_test

spec = GibbsSpec.build(2.0, 16)
p = SimParams.from_spec(spec, 1e-3, 5.0, record_every=1000)

for measure in ("gibbs", "gaussian"):
    res = invariance_test(spec, p, 500, SeededStream(42), measure=measure)
    print(measure)
    for name, r in res.items():
        print(f"  {name:12s} D={r.statistic:.4f}  p={r.p_value:.3f}")
