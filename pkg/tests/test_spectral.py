import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from gibbswave.spectral import (
    FieldPair,
    SmoothingProfile,
    apply_smoothing,
    build_basis,
    complex_to_pair,
    cutoff,
    eigenfunction,
    eigenvalues,
    free_evolve,
    lp_norm_ball,
    pair_to_complex,
    sobolev_norm,
    spacetime_lp_norm,
)


@pytest.fixture(scope="module")
def quad64():
    return build_basis(64)


def unit(n, n_modes):
    c = np.zeros(n_modes, dtype=complex)
    c[n - 1] = 1.0
    return c


def radial_residual(n, r, h=1e-4):
    f = lambda x: eigenfunction(n, x)
    d1 = (f(r + h) - f(r - h)) / (2 * h)
    d2 = (f(r + h) - 2 * f(r) + f(r - h)) / h**2
    return d2 + 2.0 / r * d1 + (np.pi * n) ** 2 * f(r)


def test_eigenvalue_of_e3():
    assert eigenvalues(3)[2] == pytest.approx(88.826, abs=1e-3)


def test_e1_limit_at_origin_matches_independent_checks():
    # independent oracle: e_1 satisfies the radial ODE by finite differences
    # and has unit norm by adaptive quadrature; its r -> 0 value is then sqrt(pi/2)
    r = np.linspace(0.05, 0.95, 19)
    assert np.max(np.abs(radial_residual(1, r))) < 1e-4 * np.pi**2
    norm2, _ = integrate.quad(lambda x: 4 * np.pi * x**2 * eigenfunction(1, x) ** 2, 0, 1)
    assert norm2 == pytest.approx(1.0, abs=1e-12)
    assert eigenfunction(1, 1e-9) == pytest.approx(np.sqrt(np.pi / 2), rel=1e-12)
    assert eigenfunction(1, 0.0) == pytest.approx(1.2533, abs=1e-4)


def test_gram_identity(quad64):
    assert np.max(np.abs(quad64.gram() - np.eye(64))) <= 1e-8
    assert np.all(quad64.weights > 0)
    assert np.sum(quad64.weights * quad64.basis[0] ** 2) == pytest.approx(1.0, abs=1e-8)


def test_insufficient_quadrature_is_rejected():
    with pytest.raises(ValueError, match="Gram"):
        build_basis(64, 66)


@pytest.mark.parametrize("n", [1, 5, 17, 32, 64])
def test_eigen_relation(quad64, n):
    r = quad64.nodes[(quad64.nodes > 0.01) & (quad64.nodes < 0.99)]
    sup = np.max(np.abs(eigenfunction(n, np.linspace(0, 1, 4001))))
    assert np.max(np.abs(radial_residual(n, r))) <= 1e-4 * (np.pi * n) ** 2 * sup


def test_sobolev_single_modes():
    assert sobolev_norm(unit(1, 4), 0) == pytest.approx(1.0)
    assert sobolev_norm(unit(2, 4), 0.5) == pytest.approx(np.sqrt(2 * np.pi))
    assert sobolev_norm(unit(2, 4), 0.5) == pytest.approx(2.5066, abs=1e-4)


def test_sobolev_partial_sums_approach_one_sixth():
    # partial sums of sum (pi n)^-2 = zeta(2)/pi^2 = 1/6, tail below 1/(pi^2 N)
    for N in (10, 100, 1000):
        c = 1.0 / (np.pi * np.arange(1, N + 1))
        val = sobolev_norm(c, 0) ** 2
        assert 1 / 6 - 1 / (np.pi**2 * N) <= val <= 1 / 6


def test_lp_norm_basics(quad64):
    assert lp_norm_ball(unit(1, 8), quad64, 2) == pytest.approx(1.0, abs=1e-8)
    assert lp_norm_ball(np.zeros(8), quad64, 5) == 0.0


def test_parseval(quad64, rng):
    c = rng.standard_normal((10, 64)) + 1j * rng.standard_normal((10, 64))
    np.testing.assert_allclose(lp_norm_ball(c, quad64, 2), sobolev_norm(c, 0), rtol=1e-8)


def test_real_part_norm(quad64):
    c = 1j * unit(3, 8)
    assert lp_norm_ball(c, quad64, 4, real_part=True) == 0.0
    assert lp_norm_ball(c, quad64, 4) > 0


def test_e1_l4_norm_against_adaptive_quadrature(quad64):
    ref, _ = integrate.quad(lambda x: 4 * np.pi * x**2 * eigenfunction(1, x) ** 4, 0, 1, epsabs=1e-14)
    assert lp_norm_ball(unit(1, 4), quad64, 4) ** 4 == pytest.approx(ref, rel=1e-12)


def test_cutoff_shape():
    x = np.linspace(-1.5, 1.5, 3001)
    chi = cutoff(x)
    assert np.all(chi[np.abs(x) <= 0.5] == 1.0)
    assert np.all(chi[np.abs(x) >= 1.0] == 0.0)
    pos = x >= 0
    assert np.all(np.diff(chi[pos]) <= 0)
    np.testing.assert_array_equal(chi, cutoff(-x))


def test_smoothing_multipliers():
    prof = SmoothingProfile.build(10, 20)
    c = np.ones(20, dtype=complex)
    out = apply_smoothing(c, prof)
    assert out[6] == 1.0  # n = 7, n^2/N^2 = 0.49
    assert np.all(out[9:] == 0.0)  # n >= 10
    assert np.all(np.diff(prof.multipliers) <= 0)
    assert np.all((prof.multipliers >= 0) & (prof.multipliers <= 1))


def test_smoothing_identity_on_low_modes(rng):
    for N in (8, 10, 33):
        low = int(np.floor(N / np.sqrt(2)))
        c = np.zeros(N, dtype=complex)
        c[:low] = rng.standard_normal(low) + 1j * rng.standard_normal(low)
        np.testing.assert_array_equal(apply_smoothing(c, SmoothingProfile.build(N)), c)


def test_smoothing_profile_must_cover_state():
    with pytest.raises(ValueError):
        apply_smoothing(np.ones(12), SmoothingProfile.build(10))


def test_free_evolution_examples(rng):
    c = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    np.testing.assert_array_equal(free_evolve(c, 2.0), c)
    np.testing.assert_array_equal(free_evolve(c, 0.0), c)
    assert free_evolve(unit(1, 3), 1.0)[0] == pytest.approx(-1.0, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(t=st.floats(-50, 50), s=st.floats(-1, 1), seed=st.integers(0, 2**32 - 1))
def test_free_evolution_isometry_and_period(t, s, seed):
    r = np.random.default_rng(seed)
    c = r.standard_normal(32) + 1j * r.standard_normal(32)
    a = free_evolve(c, t)
    assert sobolev_norm(a, s) == pytest.approx(sobolev_norm(c, s), rel=1e-14)
    np.testing.assert_allclose(free_evolve(a, 2.0), a, rtol=0, atol=1e-14)
    np.testing.assert_allclose(free_evolve(a, -t), c, rtol=0, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(s=st.floats(-1, 1), seed=st.integers(0, 2**32 - 1), N=st.integers(2, 40))
def test_smoothing_contracts(s, seed, N):
    r = np.random.default_rng(seed)
    c = r.standard_normal(N) + 1j * r.standard_normal(N)
    assert sobolev_norm(apply_smoothing(c, SmoothingProfile.build(N)), s) <= sobolev_norm(c, s)


def test_spacetime_norm_examples(quad64):
    assert spacetime_lp_norm(np.zeros(4), quad64, 4) == 0.0
    assert spacetime_lp_norm(unit(1, 4), quad64, 2) == pytest.approx(np.sqrt(2), rel=1e-12)
    c = unit(1, 4) + unit(2, 4)
    base = spacetime_lp_norm(c, quad64, 4, t_nodes=64)
    assert abs(spacetime_lp_norm(c, quad64, 4, t_nodes=128) - base) <= 1e-6
    assert spacetime_lp_norm(c, quad64, 4, t_nodes=64, rtol=1e-6) == pytest.approx(base, abs=1e-6)


def test_spacetime_norm_against_direct_time_quadrature(quad64, rng):
    # independent route: Gauss-Legendre in t on (0, 2) with explicit phases
    c = (rng.standard_normal(6) + 1j * rng.standard_normal(6)) / np.arange(1, 7)
    x, w = np.polynomial.legendre.leggauss(400)
    t = x + 1.0
    vals = np.array([lp_norm_ball(free_evolve(c, tk), quad64, 5) ** 5 for tk in t])
    ref = (vals @ w) ** 0.2
    assert spacetime_lp_norm(c, quad64, 5, rtol=1e-10) == pytest.approx(ref, rel=1e-8)


def test_pair_conversion_examples(rng):
    e1 = unit(1, 5).real
    np.testing.assert_array_equal(pair_to_complex(FieldPair(e1, np.zeros(5))), unit(1, 5))
    c = pair_to_complex(FieldPair(np.zeros(5), e1))
    assert c[0] == pytest.approx(1j / np.pi)
    assert np.all(c[1:] == 0)
    w, wt = rng.standard_normal(30), rng.standard_normal(30)
    back = complex_to_pair(pair_to_complex(FieldPair(w, wt)))
    np.testing.assert_allclose(back.w, w, rtol=0, atol=1e-14)
    np.testing.assert_allclose(back.wt, wt, rtol=1e-14, atol=1e-14)


def test_lp_bound_surrogate_does_not_grow_with_N(rng):
    worst = {}
    for N in (8, 16, 32, 64):
        quad = build_basis(2 * N)
        prof = SmoothingProfile.build(N, 2 * N)
        g = rng.standard_normal((100, 2 * N)) + 1j * rng.standard_normal((100, 2 * N))
        c = g / (np.pi * np.arange(1, 2 * N + 1))
        ratio = lp_norm_ball(apply_smoothing(c, prof), quad, 5) / lp_norm_ball(c, quad, 5)
        worst[N] = ratio.max()
    assert worst[64] <= 1.2 * worst[8]
