"""Samplers for the truncated Gaussian measure and its Gibbs reweighting.

Every ensemble member owns a :class:`SeededStream`; draws depend only on
``(seed, stream_id)`` so results do not depend on how members are scheduled.
Gaussians come from numpy's ziggurat ``standard_normal`` on a Philox
counter-based bit generator.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    RadialQuadrature,
    SmoothingProfile,
    apply_smoothing,
    build_basis,
    frequencies,
)

MAX_REJECTIONS = 1_000_000


class DegenerateSpecError(RuntimeError):
    """Rejection sampling never accepted a proposal."""


@dataclass(frozen=True, eq=False)
class GibbsSpec:
    """Nonlinearity exponent, truncation, smoothing and quadrature of rho_N."""

    alpha: float
    n_modes: int
    smoothing: SmoothingProfile
    quad: RadialQuadrature

    def __post_init__(self):
        if not 0.0 < self.alpha < 3.0:
            raise ValueError(f"alpha must lie in (0, 3), got {self.alpha}")
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")
        if len(self.smoothing) < self.n_modes:
            raise ValueError("smoothing profile does not cover n_modes")
        if self.quad.n_max < self.n_modes:
            raise ValueError("quadrature does not cover n_modes")

    @classmethod
    def build(cls, alpha: float, n_modes: int, n_quad: int | None = None) -> "GibbsSpec":
        return cls(
            alpha=alpha,
            n_modes=n_modes,
            smoothing=SmoothingProfile.build(n_modes),
            quad=build_basis(n_modes, n_quad),
        )

    @property
    def multipliers(self) -> np.ndarray:
        return self.smoothing.for_modes(self.n_modes)


@dataclass(frozen=True)
class SeededStream:
    seed: int
    stream_id: int = 0
    _rng: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ss = np.random.SeedSequence([int(self.seed), int(self.stream_id)])
        object.__setattr__(self, "_rng", np.random.Generator(np.random.Philox(ss)))

    @property
    def rng(self) -> np.random.Generator:
        return self._rng

    def spawn(self, stream_id: int) -> "SeededStream":
        return SeededStream(self.seed, stream_id)


def _gaussian_coeffs(rng: np.random.Generator, n_modes: int) -> np.ndarray:
    # (n, 2) layout: the first k modes of an N-mode draw coincide with a k-mode draw
    g = rng.standard_normal((n_modes, 2))
    return (g[:, 0] + 1j * g[:, 1]) / frequencies(n_modes)


def sample_gaussian(spec: GibbsSpec, stream: SeededStream) -> np.ndarray:
    """One draw of mu_N: c_n = (h_n + i l_n) / (pi n)."""
    return _gaussian_coeffs(stream.rng, spec.n_modes)


def potential(coeffs, spec: GibbsSpec) -> np.ndarray:
    """(1/(alpha+2)) ||S_N Re u||_{L^{alpha+2}}^{alpha+2}."""
    coeffs = np.asarray(coeffs)
    a = apply_smoothing(coeffs.real, spec.smoothing)
    vals = np.abs(spec.quad.synthesize(a))
    p = spec.alpha + 2.0
    return spec.quad.integrate(vals**p) / p


def gibbs_weight(coeffs, spec: GibbsSpec) -> np.ndarray:
    """f_N(u) = exp(-potential); depends on Re u only."""
    return np.exp(-potential(coeffs, spec))


def sample_gibbs(spec: GibbsSpec, stream: SeededStream) -> tuple[np.ndarray, int]:
    """Rejection sampler for the normalized rho_N with mu_N proposals.

    Exact because f_N <= 1. Returns the accepted state and the number of proposals.
    """
    rng = stream.rng
    for attempt in range(1, MAX_REJECTIONS + 1):
        u = _gaussian_coeffs(rng, spec.n_modes)
        if rng.random() < gibbs_weight(u, spec):
            return u, attempt
    raise DegenerateSpecError(
        f"no acceptance after {MAX_REJECTIONS} proposals (stream {stream.stream_id})"
    )


def sample_ensemble(
    spec: GibbsSpec, seed: int, stream_ids, measure: str = "gibbs"
) -> tuple[np.ndarray, np.ndarray]:
    """Draw one state per stream id; returns ``(states, attempts)``."""
    stream_ids = np.asarray(stream_ids, dtype=np.int64)
    states = np.empty((stream_ids.size, spec.n_modes), dtype=complex)
    attempts = np.ones(stream_ids.size, dtype=np.int64)
    for k, sid in enumerate(stream_ids):
        stream = SeededStream(seed, int(sid))
        if measure == "gibbs":
            states[k], attempts[k] = sample_gibbs(spec, stream)
        elif measure == "gaussian":
            states[k] = sample_gaussian(spec, stream)
        else:
            raise ValueError(f"unknown measure {measure!r}")
    return states, attempts


def partition_estimate(
    spec: GibbsSpec, n_samples: int, stream: SeededStream, batch: int = 4096
) -> tuple[float, float]:
    """Monte Carlo mean and standard error of E_mu_N[f_N] = rho_N(E_N).

    Batch ``k`` draws from its own ``(seed, stream_id, k)`` generator in mode-major
    order, so estimates at different N share the Gaussians of their common modes.
    """
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    weights = np.empty(n_samples)
    for k, start in enumerate(range(0, n_samples, batch)):
        stop = min(start + batch, n_samples)
        ss = np.random.SeedSequence([int(stream.seed), int(stream.stream_id), k])
        rng = np.random.Generator(np.random.Philox(ss))
        g = rng.standard_normal((spec.n_modes, batch, 2))[:, : stop - start]
        u = ((g[..., 0] + 1j * g[..., 1]) / frequencies(spec.n_modes)[:, None]).T
        weights[start:stop] = gibbs_weight(u, spec)
    return float(weights.mean()), float(weights.std(ddof=1) / np.sqrt(n_samples))
