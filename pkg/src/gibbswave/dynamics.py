"""Truncated Hamiltonian flow on E_N and an independent Duhamel solver.

The Galerkin system for u = sum c_n e_n reads

    dc_n/dt = -i pi n c_n - i m_n (pi n)^{-1} <F(S_N Re u), e_n>,   F(x) = |x|^alpha x,

with m_n the smoothing multipliers. The forcing is real, so its flow only moves
Im c and is an exact shear; the linear part is an exact rotation. Strang splitting
of the two is symmetric, second order and exactly volume preserving.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .sampling import GibbsSpec
from .spectral import RadialQuadrature, SmoothingProfile, frequencies, free_evolve


class NumericalAbort(RuntimeError):
    """Raised when a trajectory leaves the finite floats."""

    def __init__(self, message, members=None, time=None):
        super().__init__(message)
        self.members = members
        self.time = time


class ConvergenceError(RuntimeError):
    """Picard iteration failed to contract."""


def nonlinearity(x, alpha: float):
    """F(x) = |x|^alpha x."""
    x = np.asarray(x, dtype=float)
    return np.abs(x) ** alpha * x


@dataclass(frozen=True, eq=False)
class SimParams:
    """Time stepping for the truncated flow.

    ``dt`` may be negative to run the flow backward; ``t_final`` is the duration.
    ``nonlinear=False`` switches the forcing off (free evolution).
    """

    dt: float
    t_final: float
    alpha: float
    n_modes: int
    smoothing: SmoothingProfile
    quad: RadialQuadrature
    record_every: int = 1
    nonlinear: bool = True

    def __post_init__(self):
        if self.dt == 0 or not np.isfinite(self.dt):
            raise ValueError("dt must be finite and nonzero")
        if self.t_final < 0:
            raise ValueError("t_final must be >= 0")
        if not 0.0 < self.alpha < 3.0:
            raise ValueError(f"alpha must lie in (0, 3), got {self.alpha}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if len(self.smoothing) < self.n_modes or self.quad.n_max < self.n_modes:
            raise ValueError("smoothing/quadrature do not cover n_modes")

    @classmethod
    def from_spec(cls, spec: GibbsSpec, dt: float, t_final: float, **kw) -> "SimParams":
        return cls(
            dt=dt,
            t_final=t_final,
            alpha=spec.alpha,
            n_modes=spec.n_modes,
            smoothing=spec.smoothing,
            quad=spec.quad,
            **kw,
        )

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / abs(self.dt)))

    @property
    def multipliers(self) -> np.ndarray:
        return self.smoothing.for_modes(self.n_modes)


def default_dt(n_modes: int) -> float:
    return 1e-3 if n_modes <= 64 else 1e-3 * 64.0 / n_modes


def nonlinear_force(coeffs, alpha, quad: RadialQuadrature, multipliers=None):
    """Real vector (pi n)^{-1} m_n <F(S_N Re u), e_n>; ``multipliers=None`` drops S_N."""
    coeffs = np.asarray(coeffs)
    n_modes = coeffs.shape[-1]
    a = coeffs.real if multipliers is None else coeffs.real * multipliers
    proj = quad.project(nonlinearity(quad.synthesize(a), alpha), n_modes)
    if multipliers is not None:
        proj = proj * multipliers
    return proj / frequencies(n_modes)


def hamiltonian(coeffs, spec: GibbsSpec, truncated: bool = True):
    """Kinetic term 1/2 sum (pi n)^2 |c_n|^2 plus (1/(alpha+2)) ||Re u||^{alpha+2}.

    With ``truncated`` the potential is taken of S_N Re u, which is the quantity
    conserved by the Galerkin flow.
    """
    coeffs = np.asarray(coeffs)
    n_modes = coeffs.shape[-1]
    kinetic = 0.5 * np.sum(frequencies(n_modes) ** 2 * np.abs(coeffs) ** 2, axis=-1)
    a = coeffs.real
    if truncated:
        a = a * spec.smoothing.for_modes(n_modes)
    p = spec.alpha + 2.0
    pot = spec.quad.integrate(np.abs(spec.quad.synthesize(a)) ** p) / p
    return kinetic + pot


def _kick(coeffs, h, p: SimParams, mult):
    if not p.nonlinear:
        return coeffs
    return coeffs - 1j * h * nonlinear_force(coeffs, p.alpha, p.quad, mult)


def flow_step(coeffs, p: SimParams):
    """One Strang step: half kick, exact rotation by dt, half kick."""
    coeffs = np.asarray(coeffs, dtype=complex)
    mult = p.multipliers
    c = _kick(coeffs, 0.5 * p.dt, p, mult)
    c = free_evolve(c, p.dt)
    return _kick(c, 0.5 * p.dt, p, mult)


@dataclass
class Trajectory:
    times: np.ndarray
    observables: dict = field(default_factory=dict)
    final: np.ndarray | None = None


Observer = Callable[[float, np.ndarray], np.ndarray]


def evolve(coeffs0, p: SimParams, observers: Mapping[str, Observer] | None = None) -> Trajectory:
    """Integrate the truncated flow for ``p.t_final`` and sample observers.

    Observers are called as ``obs(t, coeffs)`` at t = 0 and every ``record_every``
    steps. Adjacent half kicks are fused, so a step costs one force evaluation.
    Raises :class:`NumericalAbort` when the state becomes non-finite.
    """
    observers = dict(observers or {})
    c = np.array(coeffs0, dtype=complex)
    n_steps = p.n_steps
    mult = p.multipliers
    rotate = np.exp(-1j * np.pi * np.mod(np.arange(1, c.shape[-1] + 1) * np.mod(p.dt, 2.0), 2.0))
    half = 0.5 * p.dt

    times = [0.0]
    series = {name: [np.asarray(obs(0.0, c))] for name, obs in observers.items()}

    k = 0
    while k < n_steps:
        block = min(p.record_every, n_steps - k)
        c = _kick(c, half, p, mult)
        for j in range(block):
            c = c * rotate
            h = half if j == block - 1 else p.dt
            c = _kick(c, h, p, mult)
        k += block
        bad = ~np.isfinite(c).all(axis=-1)
        if np.any(bad):
            members = np.flatnonzero(np.atleast_1d(bad))
            raise NumericalAbort(
                f"non-finite state at t={k * p.dt:g}; reduce dt", members=members, time=k * p.dt
            )
        t = k * p.dt
        times.append(t)
        for name, obs in observers.items():
            series[name].append(np.asarray(obs(t, c)))

    return Trajectory(
        times=np.asarray(times),
        observables={name: np.stack(vals) for name, vals in series.items()},
        final=c,
    )


def _collocation(order: int):
    """Gauss-Legendre nodes/weights on [0, 1] and the matrix Q with
    Q[k, m] = int_0^{x_k} l_m(x) dx for the Lagrange basis l_m on the nodes."""
    x, w = np.polynomial.legendre.leggauss(order)
    V = np.polynomial.legendre.legvander(x, order - 1)
    Vinv = np.linalg.inv(V)
    Q = np.empty((order, order))
    for m in range(order):
        coef = Vinv[:, m]
        anti = np.polynomial.legendre.legint(coef, lbnd=-1.0)
        Q[:, m] = np.polynomial.legendre.legval(x, anti)
    return 0.5 * (x + 1.0), 0.5 * w, 0.5 * Q


def _picard_fixed_grid(u0, spec, T, panels, order, tol, max_iter, truncated, nonlinear):
    n_modes = u0.shape[-1]
    x, w, Q = _collocation(order)
    h = T / panels
    tau = (np.arange(panels)[:, None] + x[None, :]) * h  # (P, q)
    n = np.arange(1, n_modes + 1)
    to_interaction = np.exp(1j * np.pi * np.mod(n * np.mod(tau[..., None], 2.0), 2.0))
    mult = spec.smoothing.for_modes(n_modes) if truncated else None

    def rhs(d):
        if not nonlinear:
            return np.zeros_like(d)
        u = d / to_interaction
        return -1j * to_interaction * nonlinear_force(u, spec.alpha, spec.quad, mult)

    d = np.broadcast_to(u0, tau.shape + (n_modes,)).astype(complex)
    residuals = []
    for _ in range(max_iter):
        g = rhs(d)
        panel_int = h * np.einsum("k,pkn->pn", w, g)
        start = u0 + np.concatenate([np.zeros((1, n_modes)), np.cumsum(panel_int, axis=0)[:-1]])
        new = start[:, None, :] + h * np.einsum("km,pmn->pkn", Q, g)
        res = float(np.max(np.abs(new - d)))
        d = new
        residuals.append(res)
        if not np.isfinite(res):
            break
        if res < tol:
            # endpoint from the forcing at the converged nodes
            g = rhs(d)
            end = u0 + h * np.einsum("k,pkn->n", w, g)
            return free_evolve(end, T), residuals
    raise ConvergenceError(
        f"Picard iteration did not converge in {max_iter} iterations "
        f"(last residual {residuals[-1]:.3e}); T={T} is beyond the contraction regime"
    )


def picard_duhamel(
    u0,
    spec: GibbsSpec,
    T: float,
    tol: float = 1e-12,
    max_iter: int = 200,
    truncated: bool = True,
    nonlinear: bool = True,
    order: int = 8,
    panels: int | None = None,
    max_refine: int = 8,
    full_output: bool = False,
):
    """Solve the Duhamel formulation by fixed-point iteration and return u(T).

    The iteration acts on d(t) = S(-t) u(t),

        d(t) = u0 - i int_0^t S(-tau) sqrt(-Lap)^{-1} F(Re u(tau)) dtau,

    discretized by ``order``-point Gauss collocation on ``panels`` equal panels.
    The panel count is doubled until successive endpoints agree to ``tol``.
    With ``truncated`` the forcing carries S_N on both sides as in the Galerkin
    flow; otherwise it is the plain projection of F(Re u) on the modes of ``u0``.

    Raises :class:`ConvergenceError` if the fixed point does not contract.
    """
    u0 = np.asarray(u0, dtype=complex)
    if T == 0:
        out = u0.copy()
        return (out, {"residuals": [], "panels": 0}) if full_output else out
    if panels is None:
        # panel width resolves the fastest interaction-picture phase
        panels = max(1, int(np.ceil(abs(T) * np.pi * u0.shape[-1] * 3 / order)))
    prev, residuals = _picard_fixed_grid(u0, spec, T, panels, order, tol, max_iter, truncated, nonlinear)
    change = np.inf
    for _ in range(max_refine):
        panels *= 2
        cur, residuals = _picard_fixed_grid(u0, spec, T, panels, order, tol, max_iter, truncated, nonlinear)
        change = float(np.max(np.abs(cur - prev)))
        prev = cur
        if change < max(tol, 1e-14 * (1.0 + float(np.max(np.abs(cur))))):
            break
    if full_output:
        return prev, {"residuals": residuals, "panels": panels, "refine_change": change}
    return prev
