"""Time profiles and closed-form kernels against independent oracles.

mpmath (50 digits) plays the extended-precision oracle; quadrature oracles use
dense trapezoid sums on oversized boxes.
"""

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import kfprop as kp
from kfprop.kernels import SMALL_T_SWITCH

mp.mp.dps = 50


def mp_sigma(t):
    return t - 2 * mp.coth(t) + 2 * mp.csch(t)


def mp_theta(t):
    return 4 * mp.pi * mp.e ** (-t) * mp.sinh(t)


def mp_omega(t):
    return mp.coth(t) - mp.csch(t)


class TestTimeProfiles:
    def test_values_at_t1(self):
        prof = kp.time_profiles(1.0)
        assert prof.sigma == pytest.approx(float(mp_sigma(mp.mpf(1))), rel=1e-13)
        assert prof.theta == pytest.approx(float(mp_theta(mp.mpf(1))), rel=1e-13)
        assert prof.omega == pytest.approx(float(mp_omega(mp.mpf(1))), rel=1e-13)
        # 5-significant-digit anchors
        assert prof.sigma == pytest.approx(0.075766, rel=1e-4)
        assert prof.omega == pytest.approx(0.462117, rel=1e-4)

    def test_large_time_limits(self):
        prof = kp.time_profiles(40.0)
        assert prof.theta == pytest.approx(2.0 * math.pi, rel=1e-12)
        assert prof.omega == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("t", [1e-4, 1e-3, 1e-2])
    def test_small_time_against_extended_precision(self, t):
        # naive double-precision subtraction loses ~8 digits at t = 1e-4
        prof = kp.time_profiles(t)
        assert abs(prof.sigma / float(mp_sigma(mp.mpf(t))) - 1.0) < 1e-10
        assert abs(prof.omega / float(mp_omega(mp.mpf(t))) - 1.0) < 1e-10
        assert abs(prof.theta / float(mp_theta(mp.mpf(t))) - 1.0) < 1e-12

    def test_series_switch_is_seamless(self):
        for t in (SMALL_T_SWITCH * (1 - 1e-9), SMALL_T_SWITCH * (1 + 1e-9)):
            assert abs(kp.sigma_profile(t) / float(mp_sigma(mp.mpf(t))) - 1.0) < 1e-12

    def test_omega_identity_with_tanh(self):
        for t in np.geomspace(1e-8, 50, 60):
            direct = kp.omega_profile(t)
            assert abs(direct - math.tanh(t / 2)) <= 1e-13 * direct

    @given(st.floats(min_value=1e-6, max_value=50.0))
    @settings(max_examples=80, deadline=None)
    def test_profile_invariants(self, t):
        prof = kp.time_profiles(t)
        assert prof.sigma > 0 and prof.theta > 0 and prof.gamma > 0
        # omega < 1 strictly, except that tanh(t/2) saturates to 1.0 in
        # double precision once 2e^{-t} drops below the epsilon (t ~ 37)
        assert 0.0 < prof.omega <= 1.0
        if t <= 36.0:
            assert prof.omega < 1.0
        assert prof.gamma == prof.sigma * prof.theta

    def test_small_time_gamma_scaling(self):
        ts = np.geomspace(1e-4, 1e-1, 20)
        ratios = kp.gamma_profile(ts) / ts**4
        assert ratios.min() > 0.9  # tends to pi/3 ~ 1.047
        assert ratios.max() < 1.1

    def test_large_time_gamma_scaling(self):
        ts = np.linspace(20, 50, 16)
        ratios = kp.gamma_profile(ts) / ts
        assert np.all(np.abs(ratios / (2 * math.pi) - 1.0) < 0.15)

    def test_small_time_cubic_constant_is_one_twelfth(self):
        # the exact formula gives t^3/12; 1/6 is sometimes quoted for this
        # profile but does not match t - 2*tanh(t/2)
        t = 1e-3
        const = kp.sigma_profile(t) / t**3
        assert abs(const - 1.0 / 12.0) < 1e-7
        assert abs(const - 1.0 / 6.0) > 0.05

    @pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
    def test_rejects_bad_time(self, bad):
        with pytest.raises(ValueError):
            kp.time_profiles(bad)


class TestHarmonicKernel:
    def test_at_origin_equals_theta_power(self):
        for t in (0.1, 1.0, 5.0):
            prof = kp.time_profiles(t)
            assert kp.harmonic_kernel(0.0, 0.0, t) == pytest.approx(prof.theta**-0.5, rel=1e-14)
            assert kp.harmonic_kernel(np.zeros(3), np.zeros(3), t) == pytest.approx(
                prof.theta**-1.5, rel=1e-14
            )

    def test_symmetry(self, rng):
        for _ in range(20):
            v, vp = rng.uniform(-4, 4, 2)
            t = rng.uniform(0.05, 5.0)
            assert kp.harmonic_kernel(v, vp, t) == kp.harmonic_kernel(vp, v, t)

    def test_scale_relation_to_reference_kernel(self, rng):
        # K(v, v'; t) = e^{t/2} 2^{-1/2} E(v/sqrt2, v'/sqrt2; t/2) per coordinate
        for _ in range(25):
            v, vp = rng.uniform(-4, 4, 2)
            t = rng.uniform(0.1, 5.0)
            k = kp.harmonic_kernel(v, vp, t)
            e = kp.ho_heat_kernel_reference(v / math.sqrt(2), vp / math.sqrt(2), t / 2)
            assert abs(k - math.exp(t / 2) * e / math.sqrt(2)) < 1e-12 * k

    def test_large_velocity_underflows_to_zero(self):
        assert kp.harmonic_kernel(80.0, -80.0, 0.05) == 0.0

    def test_rejects_nonpositive_time(self):
        with pytest.raises(ValueError):
            kp.harmonic_kernel(0.0, 0.0, 0.0)


class TestReferenceKernel:
    def test_symmetry(self, rng):
        x, y = rng.uniform(-3, 3, 2)
        assert kp.ho_heat_kernel_reference(x, y, 0.7) == kp.ho_heat_kernel_reference(y, x, 0.7)

    def test_short_time_heat_limit(self):
        val = kp.ho_heat_kernel_reference(0.0, 0.0, 1e-3) * math.sqrt(4 * math.pi * 1e-3)
        assert abs(val - 1.0) < 1e-2

    def test_ground_state_decay_by_quadrature(self):
        # ground state of -d^2/dx^2 + x^2 is pi^{-1/4} e^{-x^2/2}, eigenvalue 1
        y = np.linspace(-10, 10, 4001)
        phi = np.pi**-0.25 * np.exp(-(y**2) / 2)
        t, x0 = 0.3, 0.4
        kernel_row = kp.ho_heat_kernel_reference(np.full_like(y, x0)[:, None], y[:, None], t)
        val = np.trapezoid(kernel_row * phi, y)
        expected = math.exp(-t) * np.pi**-0.25 * math.exp(-(x0**2) / 2)
        assert abs(val - expected) < 1e-8


class TestFreeKernel:
    def test_supremum_value_and_location(self):
        for t in (0.1, 1.0, 5.0):
            target = (4 * math.pi * kp.gamma_profile(t)) ** -0.5
            lo = np.full(3, -1.0)
            hi = np.full(3, 1.0)
            best, arg = 0.0, None
            for _ in range(6):
                axes = [np.linspace(lo[i], hi[i], 21) for i in range(3)]
                D, V, W = np.meshgrid(*axes, indexing="ij")
                vals = kp.free_kernel_values(
                    D[..., None], V[..., None], np.zeros_like(D)[..., None], W[..., None], t
                )
                i = np.unravel_index(np.argmax(vals), vals.shape)
                best, arg = vals[i], np.array([D[i], V[i], W[i]])
                span = (hi - lo) / 8
                lo, hi = arg - span, arg + span
            assert best <= target * (1 + 1e-10)
            assert best == pytest.approx(target, rel=1e-8)
            assert np.all(np.abs(arg) < 1e-6)  # x - x' = omega (v + v'), v = v' = 0

    def test_supremum_anchor_value(self):
        # (4 pi gamma(1))^{-1/2} from the 50-digit oracle
        oracle = float(1 / mp.sqrt(4 * mp.pi * mp_sigma(mp.mpf(1)) * mp_theta(mp.mpf(1))))
        assert kp.free_norm_1_to_inf(1.0, 1) == pytest.approx(oracle, rel=1e-13)
        assert oracle == pytest.approx(0.4396884, rel=1e-6)

    def test_factorizes_across_dimensions(self, rng):
        for _ in range(10):
            a = rng.uniform(-1, 1, (4, 2))
            t = rng.uniform(0.2, 3.0)
            p1 = kp.free_kernel_values(a[0, 0], a[1, 0], a[2, 0], a[3, 0], t)
            p2 = kp.free_kernel_values(a[0, 1], a[1, 1], a[2, 1], a[3, 1], t)
            p12 = kp.free_kernel_values(a[0], a[1], a[2], a[3], t)
            assert p12 == pytest.approx(p1 * p2, rel=1e-12)

    def test_kernel_point_wrapper(self):
        pt = kp.KernelPoint(x=[0.1], v=[0.2], xp=[-0.1], vp=[0.0], t=1.0)
        assert kp.free_kernel(pt) == pytest.approx(
            kp.free_kernel_values(0.1, 0.2, -0.1, 0.0, 1.0), rel=1e-15
        )
        with pytest.raises(ValueError):
            kp.KernelPoint(x=[0.1], v=[0.2], xp=[-0.1], vp=[0.0], t=-1.0)
        with pytest.raises(kp.CapabilityError):
            kp.KernelPoint(x=np.zeros(4), v=np.zeros(4), xp=np.zeros(4), vp=np.zeros(4), t=1.0)

    def test_composition_identity_by_quadrature(self):
        # integrating F(t) against F(s) over the intermediate point reproduces F(t+s)
        t = s = 0.5
        gx = np.linspace(-4, 4, 257)
        gv = np.linspace(-6, 6, 193)
        Y, W = np.meshgrid(gx, gv, indexing="ij")
        hx, hv = gx[1] - gx[0], gv[1] - gv[0]
        for (xq, vq, xpq, vpq) in [(0.0, 0.1, 0.0, -0.1), (0.2, 0.0, -0.1, 0.0)]:
            f1 = kp.free_kernel_values(
                np.full_like(Y, xq)[..., None], np.full_like(Y, vq)[..., None],
                Y[..., None], W[..., None], t,
            )
            f2 = kp.free_kernel_values(
                Y[..., None], W[..., None],
                np.full_like(Y, xpq)[..., None], np.full_like(Y, vpq)[..., None], s,
            )
            lhs = np.sum(f1 * f2) * hx * hv
            rhs = kp.free_kernel_values(xq, vq, xpq, vpq, t + s)
            assert abs(lhs - rhs) < 1e-4 * rhs


class TestFourierFactor:
    def test_unit_at_zero_frequency(self):
        assert kp.fourier_factor(0.3, -0.2, 0.0, 1.0) == 1.0

    def test_modulus_independent_of_velocities(self, rng):
        t = 0.8
        xi = 1.3
        expected = math.exp(-kp.sigma_profile(t) * xi**2)
        for _ in range(10):
            v, vp = rng.uniform(-5, 5, 2)
            assert abs(kp.fourier_factor(v, vp, xi, t)) == pytest.approx(expected, rel=1e-14)

    def test_inverse_transform_matches_position_factor(self):
        t = 0.7
        prof = kp.time_profiles(t)
        xi = np.linspace(-60, 60, 4001)
        v, vp, x = 0.8, -0.4, 0.9
        vals = kp.fourier_factor(
            np.full_like(xi, v)[:, None], np.full_like(xi, vp)[:, None], xi[:, None], t
        )
        integral = np.trapezoid(vals * np.exp(1j * x * xi), xi) / (2 * math.pi)
        expected = (4 * math.pi * prof.sigma) ** -0.5 * math.exp(
            -((x - prof.omega * (v + vp)) ** 2) / (4 * prof.sigma)
        )
        assert abs(integral - expected) < 1e-8 * expected


class TestMaxwellianSqrt:
    def test_free_case_independent_of_position(self):
        pot = kp.ZeroPotential()
        for x in (-3.0, 0.0, 2.0):
            val = kp.maxwellian_sqrt(x, 1.0, pot)
            assert val == pytest.approx((2 * math.pi) ** -0.25 * math.exp(-0.25), rel=1e-14)

    def test_even_in_velocity(self, rng):
        pot = kp.InversePowerPotential(0.5, 2.0)
        for _ in range(10):
            x, v = rng.uniform(-3, 3, 2)
            assert kp.maxwellian_sqrt(x, v, pot) == kp.maxwellian_sqrt(x, -v, pot)

    def test_square_integrates_to_boltzmann_weight(self):
        pot = kp.InversePowerPotential(0.5, 2.0)
        v = np.linspace(-14, 14, 20001)
        for x in (0.0, 1.3):
            m = kp.maxwellian_sqrt(np.full_like(v, x)[:, None], v[:, None], pot)
            integral = np.trapezoid(m**2, v)
            assert abs(integral - math.exp(-pot.value(np.array([x])))) < 1e-10
