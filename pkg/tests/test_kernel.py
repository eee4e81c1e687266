import math

import numpy as np
import pytest

from conftest import f_imag_pair, mp_phi, random_lambda
from lspline.errors import DomainError
from lspline.expcore import ExpPoly, classify, ep_mul, ep_shift_op
from lspline.kernel import (
    dominance_bound,
    kernel_build,
    local_max_at_zero,
    rho0_eval,
    rho_eval,
    rho_is_odd,
    rho_odd_condition,
    sigma_eval,
    sigma_is_odd,
    tau_eval,
    tau_taylor2,
)


def mp_rho_sigma(lam, x):
    """rho and sigma from contour-integral values of the fundamental functions."""
    phi = mp_phi(lam, x)
    dphi = mp_phi(lam[:3], x) + lam[3] * phi
    p01 = mp_phi(lam[:2], x)
    dp01 = mp_phi(lam[:1], x) + lam[1] * p01
    p23 = mp_phi(lam[2:], x)
    den = p01 * p23
    return (dphi * p01 - phi * dp01) / den, phi / den


# --- construction -------------------------------------------------------------


def test_polynomial_rho0():
    ctx = kernel_build((0, 0, 0, 0))
    np.testing.assert_allclose(ctx.rho0.coeffs_at(0), [0, 0, 0, 1 / 3], atol=1e-15)


def test_symmetric_rho0_closed_form():
    a, b = 1.0, 2.0
    ctx = kernel_build((a, -a, -b, b))
    xs = np.linspace(-2, 2, 9)
    want = ((b - a) * np.sinh((a + b) * xs) - (a + b) * np.sinh((b - a) * xs)) / (2 * a * b * (b * b - a * a))
    np.testing.assert_allclose(np.asarray(ctx.rho0(xs)).real, want, atol=1e-13)
    np.testing.assert_allclose(np.asarray(rho0_eval(ctx, xs)).real, want, atol=1e-14)


def test_repeated_pairs_rho0_closed_form():
    ctx = kernel_build((3, 3, -1, -1))
    want = ExpPoly([(2, [-1 / 32, -1 / 8, -1 / 4]), (6, [1 / 32])])
    assert ctx.rho0.is_close(want, rtol=1e-12)
    xs = np.linspace(-1.5, 1.5, 7)
    ref = -xs**2 * np.exp(2 * xs) / 4 - xs * np.exp(2 * xs) / 8 + np.exp(6 * xs) / 32 - np.exp(2 * xs) / 32
    np.testing.assert_allclose(np.asarray(rho0_eval(ctx, xs)).real, ref, rtol=1e-11, atol=1e-16)


def test_kernel_build_needs_four():
    with pytest.raises(DomainError):
        kernel_build((1, 2, 3))


@pytest.mark.parametrize("seed", range(5))
def test_rho0_differential_identity(seed):
    rng = np.random.default_rng(seed)
    for _ in range(20):
        lam = random_lambda(rng, "complex")
        ctx = kernel_build(lam)
        lhs = ep_shift_op(ctx.rho0, ctx.C)
        assert lhs.is_close(ep_mul(ctx.phi01, ctx.phi23), rtol=1e-10)
        tol = 1e-9 * (1 + max(abs(v) for v in lam))
        for mu in (2 * lam[0], 2 * lam[1]):
            if min(abs(mu - m) for m in ctx.mu) > tol:
                assert all(abs(mu - f) > tol for f in ctx.rho0.frequencies)
        assert all(min(abs(f - m) for m in ctx.mu) <= tol for f in ctx.rho0.frequencies)


def test_rho0_initial_data(rng):
    for _ in range(30):
        lam = random_lambda(rng, "complex")
        p = kernel_build(lam).rho0
        for k in range(3):
            assert abs(p.deriv_at(0.0, k)) <= 1e-10
        assert p.deriv_at(0.0, 3) == pytest.approx(2, abs=1e-10)
        want = 5 * (lam[0] + lam[1]) + 3 * (lam[2] + lam[3])
        assert p.deriv_at(0.0, 4) == pytest.approx(want, abs=1e-10 * (1 + abs(want)))


# --- rho, sigma, tau ----------------------------------------------------------


def test_polynomial_kernels():
    ctx = kernel_build((0, 0, 0, 0))
    xs = np.array([-5, -1, -1e-9, 1e-7, 0.3, 4.0])
    np.testing.assert_allclose(np.asarray(rho_eval(ctx, xs)).real, xs / 3, rtol=1e-13)
    np.testing.assert_allclose(np.asarray(sigma_eval(ctx, xs)).real, xs / 6, rtol=1e-13)
    np.testing.assert_allclose(np.asarray(tau_eval(ctx, xs)).real, 0.5, rtol=1e-13)


def test_kernels_vanish_at_zero():
    ctx = kernel_build((1, -1j, 0.5, 2))
    assert rho_eval(ctx, 0.0) == 0
    assert sigma_eval(ctx, 0.0) == 0
    assert tau_eval(ctx, 0.0) == pytest.approx(0.5, abs=1e-15)


def test_symmetric_rho_at_one():
    ctx = kernel_build((1, -1, -2, 2))
    a, b = 1.0, 2.0
    rho0 = ((b - a) * math.sinh(a + b) - (a + b) * math.sinh(b - a)) / (2 * a * b * (b * b - a * a))
    want = rho0 / (math.sinh(1) * math.sinh(2) / 2)
    assert rho_eval(ctx, 1.0) == pytest.approx(want, rel=1e-13)


@pytest.mark.parametrize("kind", ["real", "conj", "complex"])
def test_rho_sigma_vs_contour_oracle(kind, rng):
    for _ in range(6):
        lam = random_lambda(rng, kind)
        ctx = kernel_build(lam)
        hmax = min(2.0, 0.9 * ctx.delta)
        for x in (-hmax, -0.37 * hmax, -1e-3, 1e-5, 0.05, 0.61 * hmax, hmax):
            r, s = mp_rho_sigma(lam, x)
            assert rho_eval(ctx, x) == pytest.approx(r, rel=1e-10)
            assert sigma_eval(ctx, x) == pytest.approx(s, rel=1e-10)
            assert tau_eval(ctx, x) == pytest.approx(-mp_rho_sigma(lam, -x)[1] / r, rel=1e-9)


def test_small_x_is_smooth_across_switch():
    # values straddling the Taylor switch must agree with the contour oracle
    lam = (0.7, -1.3, 0.4 + 0.9j, 0.4 - 0.9j)
    ctx = kernel_build(lam)
    for x in np.geomspace(1e-9, 1e-4, 11):
        for sx in (x, -x):
            r, s = mp_rho_sigma(lam, sx)
            assert rho_eval(ctx, sx) == pytest.approx(r, rel=1e-10)
            assert sigma_eval(ctx, sx) == pytest.approx(s, rel=1e-10)


def test_window_enforced():
    ctx = kernel_build((0, 0, 1j, -1j))
    with pytest.raises(DomainError):
        rho_eval(ctx, math.pi)
    with pytest.raises(DomainError):
        sigma_eval(ctx, -4.0)
    assert tau_eval(ctx, math.pi) == pytest.approx(1.0, rel=1e-12)


def test_tau_imaginary_pair_closed_form():
    ctx = kernel_build((0, 0, -1j, 1j))
    xs = np.linspace(0.05, 3.1, 40)
    got = np.asarray(tau_eval(ctx, xs)).real
    want = np.array([f_imag_pair(x) for x in xs])
    np.testing.assert_allclose(got, want, rtol=1e-10)
    np.testing.assert_allclose(np.asarray(tau_eval(ctx, -xs)).real, want, rtol=1e-10)


@pytest.mark.parametrize(
    "lam, want",
    [
        ((0, 0, 0, 0), (0.5, 0, 0)),
        ((1, -1, -2, 2), (0.5, 0, -1 / 8)),
    ],
)
def test_tau_taylor2_examples(lam, want):
    got = tau_taylor2(kernel_build(lam))
    np.testing.assert_allclose(np.array(got), np.array(want, dtype=complex), atol=1e-15)


def test_tau_taylor2_vs_finite_differences(rng):
    h = 1e-3
    for kind in ("real", "conj", "complex"):
        for _ in range(5):
            lam = random_lambda(rng, kind, scale=1.0)
            ctx = kernel_build(lam)
            c0, c1, c2 = tau_taylor2(ctx)
            tp, t0, tm = (complex(tau_eval(ctx, x)) for x in (h, 0.0, -h))
            assert abs(t0 - c0) <= 1e-14
            assert abs((tp - tm) / (2 * h) - c1) <= 1e-6
            assert abs((tp - 2 * t0 + tm) / (2 * h * h) - c2) <= 1e-6


def test_rho_quadratic_coefficient(rng):
    # for real frequencies the x^2 coefficient of rho is -(l2 + l3 - l0 - l1) / 24
    h = 1e-3
    for _ in range(10):
        lam = random_lambda(rng, "real", scale=1.0)
        ctx = kernel_build(lam)
        rp, rm = complex(rho_eval(ctx, h)), complex(rho_eval(ctx, -h))
        got = (rp + rm) / (2 * h * h)
        want = -(lam[2] + lam[3] - lam[0] - lam[1]) / 24
        assert abs(got - want) <= 1e-6


@pytest.mark.parametrize(
    "lam, want",
    [((1, -1, -2, 2), True), ((3, 3, -1, -1), False), ((0, 0, 0, 0), False), ((3, -3, -1, 1), True)],
)
def test_local_max_at_zero(lam, want):
    assert local_max_at_zero(lam) is want


def test_local_max_at_zero_agrees_with_taylor(rng):
    # when the first-order condition holds, local max <=> c2 < 0
    for _ in range(20):
        l0, l1, l2 = rng.uniform(-3, 3, 3)
        l3 = -(l0 + l1) / 3 - l2
        lam = (l0, l1, l2, l3)
        c0, c1, c2 = tau_taylor2(kernel_build(lam))
        assert abs(c1) < 1e-12
        assert local_max_at_zero(lam) == (c2.real < 0)


def test_local_max_needs_real():
    with pytest.raises(DomainError):
        local_max_at_zero((1j, -1j, 0, 0))


# --- dominance diagnostics ----------------------------------------------------


@pytest.mark.parametrize("d", [0.5, 1.0, 2.0, 3.0, math.pi / 2])
def test_dominance_imaginary_pair(d):
    rep = dominance_bound(kernel_build((0, 0, -1j, 1j)), delta=d)
    assert rep.M_delta_estimate == pytest.approx(max(0.5, f_imag_pair(d)), abs=1e-6)
    assert rep.hypothesis_checked


def test_dominance_at_pi_is_one():
    rep = dominance_bound(kernel_build((0, 0, -1j, 1j)))
    assert rep.delta == pytest.approx(math.pi)
    assert rep.M_delta_estimate == pytest.approx(1.0, abs=1e-9)
    assert abs(rep.argmax) == pytest.approx(math.pi)


def test_dominance_rejects_wide_window():
    ctx = kernel_build((0, 0, -1j, 1j))
    with pytest.raises(DomainError):
        dominance_bound(ctx, delta=3.2)
    with pytest.raises(DomainError):
        dominance_bound(ctx, delta=1.0, samples=1)


@pytest.mark.parametrize("d", [0.1, 1.0, 7.0])
def test_dominance_polynomial(d):
    rep = dominance_bound(kernel_build((0, 0, 0, 0)), delta=d)
    assert rep.M_delta_estimate == pytest.approx(0.5, abs=1e-12)
    assert rep.is_strictly_dominant


def test_dominance_unbounded_example():
    rep = dominance_bound(kernel_build((3, 3, -1, -1)))
    assert rep.edge_maximum
    assert rep.M_delta_estimate > 100
    assert not rep.is_strictly_dominant


def test_dominance_with_knots():
    ctx = kernel_build((1, -1, -2, 2))
    rep = dominance_bound(ctx, knots=[0, 0.5, 1.7, 2.0, 3.5])
    assert len(rep.per_row_ratios) == 3
    assert rep.is_strictly_dominant == all(r < 1 for r in rep.per_row_ratios)


def test_complex_hypothesis_not_claimed():
    rep = dominance_bound(kernel_build((1j, 0.3, -0.5, 2)), delta=1.0)
    assert not rep.hypothesis_checked


# --- sign and symmetry properties --------------------------------------------


def test_real_positivity(rng):
    xs = np.linspace(0.01, 10, 120)
    for _ in range(25):
        ctx = kernel_build(random_lambda(rng, "real", scale=2.0))
        for vals in (sigma_eval(ctx, xs), -np.asarray(sigma_eval(ctx, -xs)), rho_eval(ctx, xs), -np.asarray(rho_eval(ctx, -xs))):
            assert np.all(np.asarray(vals).real > 0)


def test_symmetric_real_tau(rng):
    xs = np.linspace(1e-3, 8, 200)
    for _ in range(20):
        a, b = rng.uniform(0, 5, 2)
        ctx = kernel_build((a, -a, -b, b))
        t = np.asarray(tau_eval(ctx, xs)).real
        assert np.all(t <= 0.5 + 1e-12)
        assert np.all(np.diff(t) <= 1e-12)


def test_zero_b_pair_tau_below_one(rng):
    for _ in range(10):
        b = rng.uniform(0.1, 4)
        ctx = kernel_build((0, b, 0, -b))
        xs = np.linspace(-8, 8, 401)
        assert np.all(np.abs(np.asarray(tau_eval(ctx, xs))) < 1)


def _symmetric_vector(rng):
    a, b = rng.uniform(-2, 2, 2) + 1j * rng.uniform(-2, 2, 2)
    if rng.random() < 0.5:
        return (a, -a, b, -b)
    return (a, b, -a, -b)


def test_sigma_odd_iff_symmetric(rng):
    for _ in range(20):
        for lam in (_symmetric_vector(rng), random_lambda(rng, "complex")):
            ctx = kernel_build(lam)
            assert sigma_is_odd(ctx) == classify(lam).is_symmetric


def test_rho_odd_iff_pair_sums_equal(rng):
    for _ in range(20):
        l0, l1, l2 = rng.uniform(-2, 2, 3) + 1j * rng.uniform(-1, 1, 3)
        good = (l0, l1, l2, l0 + l1 - l2)
        bad = (l0, l1, l2, l0 + l1 - l2 + 0.5)
        assert rho_odd_condition(good) and rho_is_odd(kernel_build(good))
        assert not rho_odd_condition(bad) and not rho_is_odd(kernel_build(bad))
