"""Monte Carlo estimators and tests: tail fits, Gaussian moments, KS invariance,
long-time growth and empirical Strichartz ratios."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .dynamics import SimParams, evolve, hamiltonian
from .parallel import map_chunks
from .sampling import GibbsSpec, SeededStream, potential, sample_ensemble
from .spectral import (
    RadialQuadrature,
    build_basis,
    frequencies,
    sobolev_norm,
    spacetime_lp_norm,
)


@dataclass(frozen=True)
class TailFit:
    """Least-squares fit log P(X > lambda) ~ intercept + slope * lambda^2."""

    lambdas: np.ndarray
    log_counts: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    n_samples: int
    conclusive: bool = True

    @property
    def rate(self) -> float:
        """c in P(X > lambda) <= C exp(-c lambda^2)."""
        return -self.slope

    @property
    def prefactor(self) -> float:
        return float(np.exp(self.intercept))


def tail_fit(samples, min_count: int = 30, start_quantile: float = 0.5, n_bins: int = 24) -> TailFit:
    """Fit the empirical exceedance of ``samples`` against lambda^2.

    Thresholds are evenly spaced in lambda^2 from the ``start_quantile`` of the
    data up to the largest value still exceeded ``min_count`` times. Thresholds
    with fewer than ``min_count`` exceedances are dropped; fewer than four usable
    thresholds gives an inconclusive fit with NaN coefficients.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 1000:
        raise ValueError(f"tail_fit needs at least 1000 samples, got {n}")
    lo = np.quantile(x, start_quantile)
    hi = x[n - min_count] if n > min_count else lo
    nan = float("nan")
    if not hi > lo:
        return TailFit(np.empty(0), np.empty(0), nan, nan, nan, n, conclusive=False)
    lam = np.sqrt(np.linspace(lo**2, hi**2, n_bins))
    counts = n - np.searchsorted(x, lam, side="right")
    keep = counts >= min_count
    lam, counts = lam[keep], counts[keep]
    if lam.size < 4:
        return TailFit(lam, np.log(counts / n), nan, nan, nan, n, conclusive=False)
    logp = np.log(counts / n)
    res = stats.linregress(lam**2, logp)
    return TailFit(
        lambdas=lam,
        log_counts=logp,
        slope=float(res.slope),
        intercept=float(res.intercept),
        r_squared=float(res.rvalue**2),
        n_samples=n,
    )


def moment_growth(coeffs, q_list, n_samples: int, stream: SeededStream, batch: int = 20000):
    """Normalized moments (E|sum c_n g_n|^q)^{1/q} / sqrt(q) with g_n = h_n + i l_n.

    ``coeffs`` must have unit l^2 norm. Returns a list of ``(q, ratio)``.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    if not np.isclose(np.sum(np.abs(coeffs) ** 2), 1.0, rtol=1e-10):
        raise ValueError("coeffs must have unit l2 norm")
    q_arr = np.asarray(q_list, dtype=float)
    rng = stream.rng
    sums = np.zeros(q_arr.size)
    done = 0
    while done < n_samples:
        m = min(batch, n_samples - done)
        g = rng.standard_normal((m, coeffs.size, 2))
        x = np.abs((g[..., 0] + 1j * g[..., 1]) @ coeffs)
        sums += (x[:, None] ** q_arr).sum(axis=0)
        done += m
    moments = sums / n_samples
    return [(int(q), float(mq ** (1.0 / q) / np.sqrt(q))) for q, mq in zip(q_arr, moments)]


@dataclass(frozen=True)
class KSResult:
    statistic: float
    p_value: float
    n1: int
    n2: int


def ks_two_sample(a, b) -> KSResult:
    """Two-sided two-sample Kolmogorov-Smirnov test with the asymptotic p-value.

    The exact p-value is used only where the asymptotic one is undefined.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    with np.errstate(divide="ignore", invalid="ignore"):
        res = stats.ks_2samp(a, b, alternative="two-sided", method="asymp")
    pvalue = float(res.pvalue)
    if np.isnan(pvalue):
        # the asymptotic formula breaks down for single-element samples
        pvalue = float(stats.ks_2samp(a, b, alternative="two-sided", method="exact").pvalue)
    return KSResult(float(res.statistic), pvalue, a.size, b.size)


OBSERVABLES = ("hs_norm", "hamiltonian", "abs_c1", "lp_smoothed")


def observable_table(coeffs, spec: GibbsSpec, s: float = 0.4) -> dict:
    """The four scalar pushforwards used to test invariance."""
    coeffs = np.asarray(coeffs)
    p = spec.alpha + 2.0
    return {
        "hs_norm": sobolev_norm(coeffs, s),
        "hamiltonian": hamiltonian(coeffs, spec, truncated=True),
        "abs_c1": np.abs(coeffs[..., 0]),
        "lp_smoothed": (p * potential(coeffs, spec)) ** (1.0 / p),
    }


def _evolve_chunk(args):
    spec, p_sim, seed, ids, measure, s = args
    states, _ = sample_ensemble(spec, seed, ids, measure=measure)
    start = observable_table(states, spec, s)
    final = evolve(states, p_sim).final
    end = observable_table(final, spec, s)
    return {"ids": np.asarray(ids), "start": start, "end": end}


def _merge(chunks, key):
    names = chunks[0][key].keys()
    return {name: np.concatenate([c[key][name] for c in chunks]) for name in names}


def ensemble_observables(
    spec: GibbsSpec,
    p_sim: SimParams,
    n_ensemble: int,
    stream: SeededStream,
    measure: str = "gibbs",
    s: float = 0.4,
    workers: int = 1,
    chunk_size: int = 250,
):
    """Observables at t = 0 and t = t_final for ``n_ensemble`` members.

    Member ``k`` uses stream ``(stream.seed, stream.stream_id + k)``; members are
    grouped in fixed chunks so the output does not depend on ``workers``.
    """
    first = int(stream.stream_id)
    chunks = [
        (spec, p_sim, stream.seed, list(range(first + lo, first + min(lo + chunk_size, n_ensemble))), measure, s)
        for lo in range(0, n_ensemble, chunk_size)
    ]
    out = map_chunks(_evolve_chunk, chunks, workers)
    return _merge(out, "start"), _merge(out, "end")


def invariance_test(
    spec: GibbsSpec,
    p_sim: SimParams,
    n_ensemble: int,
    stream: SeededStream,
    observables=OBSERVABLES,
    measure: str = "gibbs",
    s: float = 0.4,
    workers: int = 1,
    chunk_size: int = 250,
) -> dict:
    """KS comparison of each observable between t = 0 and t = t_final.

    Returns ``{name: KSResult}`` in the order of ``observables``.
    """
    if n_ensemble < 500:
        raise ValueError("n_ensemble must be >= 500")
    start, end = ensemble_observables(spec, p_sim, n_ensemble, stream, measure, s, workers, chunk_size)
    return {name: ks_two_sample(start[name], end[name]) for name in observables}


def growth_envelope(t):
    return np.sqrt(1.0 + np.log1p(np.abs(np.asarray(t, dtype=float))))


@dataclass
class GrowthReport:
    times: np.ndarray
    norms: np.ndarray  # (n_records, n_ensemble)
    sup_ratio: np.ndarray  # (n_ensemble,)

    @property
    def max_sup_ratio(self) -> float:
        return float(np.max(self.sup_ratio))

    @property
    def median_sup_ratio(self) -> float:
        return float(np.median(self.sup_ratio))


def _growth_chunk(args):
    spec, p_sim, seed, ids, s = args
    states, _ = sample_ensemble(spec, seed, ids, measure="gibbs")
    tr = evolve(states, p_sim, {"norm": lambda t, c: sobolev_norm(c, s)})
    return tr.times, tr.observables["norm"]


def growth_tracker(
    spec: GibbsSpec,
    p_sim: SimParams,
    n_ensemble: int,
    stream: SeededStream,
    s: float = 0.4,
    workers: int = 1,
    chunk_size: int = 16,
) -> GrowthReport:
    """Long-horizon H^s norms of rho_N samples against sqrt(1 + log(1 + t))."""
    first = int(stream.stream_id)
    chunks = [
        (spec, p_sim, stream.seed, list(range(first + lo, first + min(lo + chunk_size, n_ensemble))), s)
        for lo in range(0, n_ensemble, chunk_size)
    ]
    out = map_chunks(_growth_chunk, chunks, workers)
    times = out[0][0]
    norms = np.concatenate([o[1] for o in out], axis=1)
    ratio = norms / growth_envelope(times)[:, None]
    return GrowthReport(times=times, norms=norms, sup_ratio=ratio.max(axis=0))


def strichartz_sigma(p: float) -> float:
    return 1.5 - 4.0 / p


def random_unit_states(n_trials: int, n_modes: int, sigma: float, stream: SeededStream) -> np.ndarray:
    """Complex Gaussian states with H^sigma energy ~ 1/n per mode, unit H^sigma norm.

    The 1/n energy profile spreads the norm evenly over dyadic scales.
    """
    g = stream.rng.standard_normal((n_trials, n_modes, 2))
    c = (g[..., 0] + 1j * g[..., 1]) * frequencies(n_modes) ** (-sigma) / np.sqrt(np.arange(1, n_modes + 1))
    return c / sobolev_norm(c, sigma)[:, None]


def strichartz_ratio(
    n_trials: int,
    n_modes: int,
    p: float,
    stream: SeededStream,
    quad: RadialQuadrature | None = None,
    batch: int = 32,
) -> float:
    """Largest observed ||S(t) f||_{L^p([-1,1] x ball)} / ||f||_{H^sigma}, sigma = 3/2 - 4/p.

    By 2-periodicity of S(t) the time window [-1, 1] is the same as (0, 2).
    """
    if not 4.0 < p < 6.0:
        raise ValueError("p must lie in (4, 6)")
    sigma = strichartz_sigma(p)
    quad = quad or build_basis(n_modes)
    f = random_unit_states(n_trials, n_modes, sigma, stream)
    ratios = np.concatenate(
        [spacetime_lp_norm(f[i : i + batch], quad, p) for i in range(0, n_trials, batch)]
    ) / sobolev_norm(f, sigma)
    return float(ratios.max())
