"""Spectral Galerkin simulation of the radial nonlinear wave equation on the
unit ball with Gaussian and Gibbs random data."""
from .dynamics import (
    ConvergenceError,
    NumericalAbort,
    SimParams,
    Trajectory,
    evolve,
    flow_step,
    hamiltonian,
    nonlinearity,
    picard_duhamel,
)
from .sampling import (
    GibbsSpec,
    SeededStream,
    gibbs_weight,
    partition_estimate,
    sample_ensemble,
    sample_gaussian,
    sample_gibbs,
)
from .spectral import (
    FieldPair,
    RadialQuadrature,
    SmoothingProfile,
    apply_smoothing,
    build_basis,
    complex_to_pair,
    free_evolve,
    lp_norm_ball,
    pair_to_complex,
    sobolev_norm,
    spacetime_lp_norm,
)
from .statistics import (
    KSResult,
    TailFit,
    growth_tracker,
    invariance_test,
    ks_two_sample,
    moment_growth,
    strichartz_ratio,
    tail_fit,
)

__version__ = "0.1.0"
