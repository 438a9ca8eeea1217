"""Radial Dirichlet eigenbasis on the unit ball and the spectral operators built on it.

States are complex coefficient arrays ``c`` of shape ``(..., N)`` with ``c[..., n-1]``
the coefficient of ``e_n``; a leading batch axis is allowed everywhere. The radial
eigenfunctions are

    e_n(r) = sin(n pi r) / (r sqrt(2 pi)),    -Lap e_n = (pi n)^2 e_n,

normalized in L^2 of the ball, and integrals over the ball are realized by
Gauss-Legendre nodes on (0, 1) with the 4 pi r^2 volume factor folded into the weights.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

GRAM_TOL = 1e-8


def eigenvalues(n_modes: int) -> np.ndarray:
    """Dirichlet eigenvalues (pi n)^2 for n = 1..n_modes."""
    return (np.pi * np.arange(1, n_modes + 1)) ** 2


def frequencies(n_modes: int) -> np.ndarray:
    """Square roots of the eigenvalues, i.e. the symbol of sqrt(-Lap)."""
    return np.pi * np.arange(1, n_modes + 1, dtype=float)


def eigenfunction(n, r):
    """Evaluate e_n(r); broadcasts over ``n`` and ``r``.

    Written as ``n pi sinc(n r)`` so r = 0 is handled without a special case.
    """
    n = np.asarray(n, dtype=float)
    r = np.asarray(r, dtype=float)
    return n * np.pi * np.sinc(n * r) / np.sqrt(2.0 * np.pi)


def default_quad_order(n_max: int) -> int:
    return max(4 * n_max, 128)


@dataclass(frozen=True, eq=False)
class RadialQuadrature:
    """Quadrature on the ball for radial functions with cached basis samples.

    ``weights @ g(nodes)`` approximates ``4 pi int_0^1 g(r) r^2 dr`` and
    ``basis[n-1, j] = e_n(nodes[j])``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    basis: np.ndarray

    @property
    def n_max(self) -> int:
        return self.basis.shape[0]

    @property
    def n_quad(self) -> int:
        return self.nodes.shape[0]

    def gram(self, n_modes: int | None = None) -> np.ndarray:
        E = self.basis[:n_modes]
        return (E * self.weights) @ E.T

    def synthesize(self, coeffs) -> np.ndarray:
        """Grid values u(r_j) = sum_n c_n e_n(r_j)."""
        coeffs = np.asarray(coeffs)
        return coeffs @ self.basis[: coeffs.shape[-1]]

    def project(self, values, n_modes: int) -> np.ndarray:
        """Coefficients <g, e_n> for n <= n_modes of grid values g(r_j)."""
        return (np.asarray(values) * self.weights) @ self.basis[:n_modes].T

    def integrate(self, values) -> np.ndarray:
        return np.asarray(values) @ self.weights


def build_basis(n_max: int, n_quad: int | None = None) -> RadialQuadrature:
    """Gauss-Legendre quadrature on (0, 1) carrying e_1..e_{n_max}.

    Raises ``ValueError`` when the quadrature Gram matrix of the cached modes is
    not the identity to within ``GRAM_TOL``; that means ``n_quad`` is too small.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if n_quad is None:
        n_quad = default_quad_order(n_max)
    if n_quad < n_max + 1:
        raise ValueError(f"n_quad={n_quad} is below the floor n_max + 1 = {n_max + 1}")
    x, w = np.polynomial.legendre.leggauss(n_quad)
    r = 0.5 * (x + 1.0)
    weights = 4.0 * np.pi * r**2 * 0.5 * w
    basis = eigenfunction(np.arange(1, n_max + 1)[:, None], r[None, :])
    quad = RadialQuadrature(nodes=r, weights=weights, basis=basis)
    err = np.max(np.abs(quad.gram() - np.eye(n_max)))
    if err > GRAM_TOL:
        raise ValueError(
            f"Gram matrix deviates from identity by {err:.3e}; increase n_quad (got {n_quad})"
        )
    return quad


def _chi_step(y):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    pos = y > 0
    out[pos] = np.exp(-1.0 / y[pos])
    return out


def cutoff(x):
    """Smooth even cutoff: 1 on |x| <= 1/2, 0 on |x| >= 1, C-infinity in between."""
    ax = np.abs(np.asarray(x, dtype=float))
    a = _chi_step(2.0 * (1.0 - ax))
    b = _chi_step(2.0 * ax - 1.0)
    return a / (a + b)


@dataclass(frozen=True, eq=False)
class SmoothingProfile:
    """Multipliers m_n = cutoff(n^2 / N^2) for n = 1..n_max."""

    n_cut: int
    multipliers: np.ndarray

    @classmethod
    def build(cls, n_cut: int, n_max: int | None = None) -> "SmoothingProfile":
        if n_cut < 1:
            raise ValueError("n_cut must be >= 1")
        n_max = n_cut if n_max is None else n_max
        n = np.arange(1, n_max + 1, dtype=float)
        m = cutoff(n**2 / float(n_cut) ** 2)
        m.setflags(write=False)
        return cls(n_cut=n_cut, multipliers=m)

    def __len__(self) -> int:
        return self.multipliers.shape[0]

    def for_modes(self, n_modes: int) -> np.ndarray:
        if n_modes > len(self):
            raise ValueError(f"profile covers {len(self)} modes, state has {n_modes}")
        return self.multipliers[:n_modes]


def apply_smoothing(coeffs, profile: SmoothingProfile) -> np.ndarray:
    coeffs = np.asarray(coeffs)
    return coeffs * profile.for_modes(coeffs.shape[-1])


def sobolev_norm(coeffs, s: float) -> np.ndarray:
    """(sum_n (pi n)^{2s} |c_n|^2)^{1/2} along the last axis."""
    coeffs = np.asarray(coeffs)
    lam = frequencies(coeffs.shape[-1]) ** (2.0 * s)
    return np.sqrt(np.sum(lam * np.abs(coeffs) ** 2, axis=-1))


def lp_norm_ball(coeffs, quad: RadialQuadrature, p: float, real_part: bool = False):
    """L^p norm over the ball of u = sum c_n e_n.

    With ``real_part=True`` the norm of Re(u) is returned; that is the quantity
    entering the Hamiltonian and the Gibbs weight.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    coeffs = np.asarray(coeffs)
    if real_part:
        coeffs = coeffs.real
    vals = np.abs(quad.synthesize(coeffs))
    return quad.integrate(vals**p) ** (1.0 / p)


def free_evolve(coeffs, t: float) -> np.ndarray:
    """S(t) = exp(-i t sqrt(-Lap)): c_n -> exp(-i pi n t) c_n.

    The phase uses ``t mod 2`` so S(2) is the identity to rounding.
    """
    coeffs = np.asarray(coeffs)
    n = np.arange(1, coeffs.shape[-1] + 1)
    # n * (t mod 2) mod 2 keeps the argument in [0, 2pi) before the exp
    phase = np.mod(n * np.mod(t, 2.0), 2.0)
    return coeffs * np.exp(-1j * np.pi * phase)


def default_time_nodes(n_modes: int) -> int:
    return max(64, int(2 ** np.ceil(np.log2(4 * n_modes))))


def _spacetime_power_sum(coeffs, quad: RadialQuadrature, p: float, t_nodes: int):
    coeffs = np.asarray(coeffs)
    n_modes = coeffs.shape[-1]
    if t_nodes <= n_modes:
        raise ValueError(f"t_nodes={t_nodes} must exceed the number of modes {n_modes}")
    b = coeffs[..., :, None] * quad.basis[:n_modes]  # (..., N, nq)
    pad = np.zeros(coeffs.shape[:-1] + (t_nodes, quad.n_quad), dtype=complex)
    pad[..., 1 : n_modes + 1, :] = b
    # fft gives sum_n b_n exp(-2 pi i n k / M) = u(t_k, r_j) at t_k = 2k/M
    field = np.fft.fft(pad, axis=-2)
    inner = np.abs(field) ** p @ quad.weights  # (..., M)
    return 2.0 * inner.mean(axis=-1)


def spacetime_lp_norm(
    coeffs,
    quad: RadialQuadrature,
    p: float,
    t_nodes: int | None = None,
    rtol: float | None = None,
    max_doublings: int = 6,
):
    """(int_0^2 ||S(t) u||_{L^p(ball)}^p dt)^{1/p}.

    The time integrand is 2-periodic, so the rule in t is the uniform periodic
    trapezoid rule on ``t_nodes`` points, evaluated by FFT. With ``rtol`` set the
    node count is doubled until the relative change drops below it.
    """
    coeffs = np.asarray(coeffs)
    if t_nodes is None:
        t_nodes = default_time_nodes(coeffs.shape[-1])
    val = _spacetime_power_sum(coeffs, quad, p, t_nodes) ** (1.0 / p)
    if rtol is None:
        return val
    for _ in range(max_doublings):
        t_nodes *= 2
        new = _spacetime_power_sum(coeffs, quad, p, t_nodes) ** (1.0 / p)
        change = np.max(np.abs(new - val) / np.maximum(np.abs(new), np.finfo(float).tiny))
        val = new
        if change < rtol:
            break
    return val


class FieldPair(NamedTuple):
    """Real coefficients of w and of its time derivative."""

    w: np.ndarray
    wt: np.ndarray


def pair_to_complex(pair: FieldPair) -> np.ndarray:
    """u = w + i sqrt(-Lap)^{-1} w_t, coefficientwise c_n = w_n + i wt_n / (pi n)."""
    w = np.asarray(pair.w, dtype=float)
    wt = np.asarray(pair.wt, dtype=float)
    return w + 1j * wt / frequencies(w.shape[-1])


def complex_to_pair(coeffs) -> FieldPair:
    coeffs = np.asarray(coeffs)
    return FieldPair(coeffs.real.copy(), coeffs.imag * frequencies(coeffs.shape[-1]))
