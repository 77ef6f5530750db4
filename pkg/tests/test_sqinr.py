"""SQINR expressions: closed forms, coupling matrices, and model properties."""

import numpy as np
import pytest

from onebit_mubf.channel import ChannelSet, gen_rayleigh
from onebit_mubf.exceptions import ZeroGain
from onebit_mubf.optimizer import optimize, optimize_with_dither
from onebit_mubf.power_allocation import coupling_system, solve_balance
from onebit_mubf.quantize import QUANT_NOISE_FLOOR
from onebit_mubf.sqinr import (SystemNoise, build_d, build_psi, dl_sqinr_approx,
                               dl_sqinr_exact, dl_sqir, per_antenna_gains,
                               ul_sqinr_approx, ul_sqinr_combiner)

HALF_PI = np.pi / 2
QN_SLOPE = HALF_PI - 1


def unit_columns(a):
    return a / np.linalg.norm(a, axis=0)


def random_beams(n, k, rng):
    return unit_columns(rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k)))


class TestPerAntennaGains:
    def test_single_beam_on_one_antenna(self):
        t = np.zeros((4, 1), dtype=complex)
        t[0, 0] = 1.0
        np.testing.assert_allclose(per_antenna_gains(t, [2.0]),
                                   [np.sqrt(2), 0, 0, 0])

    def test_trace_identity(self):
        rng = np.random.default_rng(0)
        t = random_beams(8, 3, rng)
        q = np.array([0.5, 1.5, 2.0])
        g = per_antenna_gains(t, q)
        assert np.sum(g ** 2) == pytest.approx(q.sum(), rel=1e-10)

    def test_equal_modulus_beams(self):
        n, k = 8, 2
        rng = np.random.default_rng(1)
        phases = np.exp(2j * np.pi * rng.uniform(size=(n, k)))
        t = phases / np.sqrt(n)
        q = np.array([1.0, 3.0])
        np.testing.assert_allclose(per_antenna_gains(t, q),
                                   np.full(n, np.sqrt(q.sum() / n)), rtol=1e-12)


class TestDlExact:
    def test_scalar_closed_form(self):
        # single antenna, unit channel: gamma = (2/pi)P / (sigma2 + (1-2/pi)P)
        ch = ChannelSet(np.array([[1.0 + 0j]]))
        for p, sigma2 in [(2.0, 0.1), (0.5, 1.0), (10.0, 1e-3)]:
            noise = SystemNoise(sigma2=sigma2, p_bs=p)
            got = dl_sqinr_exact(np.ones((1, 1)), [p], ch, noise)[0]
            want = (2 / np.pi) * p / (sigma2 + QUANT_NOISE_FLOOR * p)
            assert got == pytest.approx(want, rel=1e-12)

    def test_zero_power(self):
        ch = gen_rayleigh(2, 4, 0)
        noise = SystemNoise(sigma2=1.0, p_bs=1.0)
        t = random_beams(4, 2, np.random.default_rng(0))
        np.testing.assert_array_equal(dl_sqinr_exact(t, [0, 0], ch, noise),
                                      np.zeros(2))

    def test_vanishes_with_noise(self):
        ch = gen_rayleigh(2, 8, 1)
        t = random_beams(8, 2, np.random.default_rng(1))
        q = [0.5, 0.5]
        g1 = dl_sqinr_exact(t, q, ch, SystemNoise(sigma2=1e2, p_bs=1.0))
        g2 = dl_sqinr_exact(t, q, ch, SystemNoise(sigma2=1e4, p_bs=1.0))
        assert np.all(g2 < g1)
        assert np.all(g2 < 1e-2)

    def test_matches_approx_when_distortion_uncorrelated(self):
        # a many-beam mix averages the off-diagonal correlations away; with
        # the diagonal metric above 0.99 the small-angle form agrees with the
        # exact law within 5%
        from onebit_mubf.sqinr import distortion_diag_metric
        rng = np.random.default_rng(0)
        k, n = 8, 8
        h = (rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))) / np.sqrt(2)
        ch = ChannelSet(h)
        t = h.conj().T / np.linalg.norm(h, axis=1)
        q = np.full(k, 1.0 / k)
        noise = SystemNoise(sigma2=1e-2, p_bs=1.0)
        assert distortion_diag_metric(t, q) >= 0.99
        exact = dl_sqinr_exact(t, q, ch, noise)
        approx = dl_sqinr_approx(t, q, ch, noise)
        np.testing.assert_allclose(exact, approx, rtol=0.05)


class TestDlApprox:
    def test_single_user_closed_form(self):
        rng = np.random.default_rng(2)
        h = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        ch = ChannelSet(h[None, :])
        t = (h / np.linalg.norm(h))[:, None]
        q, sigma2 = 1.7, 0.3
        got = dl_sqinr_approx(t, [q], ch, SystemNoise(sigma2=sigma2, p_bs=2.0))[0]
        gain = np.linalg.norm(h) ** 2
        qn = QN_SLOPE * q * np.sum(np.abs(h) ** 2 * np.abs(t[:, 0]) ** 2)
        want = q * gain / (HALF_PI * sigma2 + qn)
        assert got == pytest.approx(want, rel=1e-12)

    def test_zero_mui_under_orthogonality(self):
        # beams orthogonal to the other user's channel: only noise and
        # quantization terms remain in the denominator
        h = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
        ch = ChannelSet(h.astype(complex))
        t = h.T.astype(complex)  # t_k = h_k (real case: conjugate pairing = plain)
        q = np.array([1.0, 2.0])
        noise = SystemNoise(sigma2=0.5, p_bs=3.0)
        got = dl_sqinr_approx(t, q, ch, noise)
        for k in range(2):
            qn = QN_SLOPE * np.sum(q * (np.abs(h[k]) ** 2 @ np.abs(t) ** 2))
            want = q[k] / (HALF_PI * noise.sigma2 + qn)
            assert got[k] == pytest.approx(want, rel=1e-12)

    def test_monotone_in_power_scale(self):
        ch = gen_rayleigh(3, 8, 4)
        t = random_beams(8, 3, np.random.default_rng(4))
        q = np.array([0.2, 0.3, 0.5])
        noise = SystemNoise(sigma2=0.1, p_bs=1.0)
        lo = dl_sqinr_approx(t, q, ch, noise)
        hi = dl_sqinr_approx(t, 2 * q, ch, noise)
        assert np.all(hi > lo)

    def test_sqir_scale_invariant(self):
        ch = gen_rayleigh(3, 8, 5)
        t = random_beams(8, 3, np.random.default_rng(5))
        q = np.array([0.2, 0.3, 0.5])
        np.testing.assert_allclose(dl_sqir(t, 2 * q, ch), dl_sqir(t, q, ch),
                                   rtol=1e-12)


class TestUlApprox:
    def test_single_user_matches_dl(self):
        rng = np.random.default_rng(6)
        h = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        ch = ChannelSet(h[None, :])
        t = (h / np.linalg.norm(h))[:, None]
        noise = SystemNoise(sigma2=0.2, p_bs=1.0)
        np.testing.assert_allclose(ul_sqinr_approx(t, [0.7], ch, noise),
                                   dl_sqinr_approx(t, [0.7], ch, noise), rtol=1e-12)

    def test_zero_power(self):
        ch = gen_rayleigh(2, 4, 7)
        t = random_beams(4, 2, np.random.default_rng(7))
        noise = SystemNoise(sigma2=0.2, p_bs=1.0)
        np.testing.assert_array_equal(ul_sqinr_approx(t, [0, 0], ch, noise), [0, 0])

    def test_combiner_identity(self):
        # constraint form vs original combiner form with u_k = A_u^{-1} t_k
        ch = gen_rayleigh(4, 12, 8)
        t = random_beams(12, 4, np.random.default_rng(8))
        p = np.array([0.1, 0.4, 0.2, 0.3])
        noise = SystemNoise(sigma2=0.05, p_bs=1.0)
        a = ul_sqinr_approx(t, p, ch, noise)
        b = ul_sqinr_combiner(t, p, ch, noise)
        np.testing.assert_allclose(a, b, rtol=1e-9)


class TestCouplingMatrices:
    def test_build_d_identity_when_targets_equal_gains(self):
        ch = gen_rayleigh(3, 6, 9)
        t = random_beams(6, 3, np.random.default_rng(9))
        gains = np.abs(np.sum(ch.H.conj() * t.T, axis=1)) ** 2
        np.testing.assert_allclose(build_d(t, ch, gains), np.ones(3), rtol=1e-12)

    def test_build_d_scalar(self):
        ch = ChannelSet(np.array([[2.0 + 0j]]))
        t = np.ones((1, 1), dtype=complex)
        assert build_d(t, ch, [2.0])[0] == pytest.approx(0.5)

    def test_build_d_linear_in_targets(self):
        ch = gen_rayleigh(2, 4, 10)
        t = random_beams(4, 2, np.random.default_rng(10))
        d1 = build_d(t, ch, [1.0, 2.0])
        d3 = build_d(t, ch, [3.0, 6.0])
        np.testing.assert_allclose(d3, 3 * d1, rtol=1e-12)

    def test_build_d_zero_gain(self):
        ch = ChannelSet(np.array([[1.0, 0.0]], dtype=complex))
        t = np.array([[0.0], [1.0]], dtype=complex)  # orthogonal to the channel
        with pytest.raises(ZeroGain):
            build_d(t, ch, [1.0])

    def test_psi_scalar_diagonal(self):
        h = 1.3 - 0.4j
        ch = ChannelSet(np.array([[h]]))
        t = np.ones((1, 1), dtype=complex)
        psi = build_psi(t, ch)
        assert psi[0, 0] == pytest.approx(QN_SLOPE * abs(h) ** 2, rel=1e-12)

    def test_psi_off_diagonal_reduces_to_diag_term(self):
        # t_2 orthogonal to h_1 but sharing antenna support: the rank-one
        # interference term dies, the diagonal quantization term survives
        h1 = np.array([1.0, 1.0], dtype=complex)
        h2 = np.array([1.0, -1.0], dtype=complex)
        ch = ChannelSet(np.vstack([h1, h2]))
        t = unit_columns(np.column_stack([h1, h2]).astype(complex))
        psi = build_psi(t, ch)
        want = QN_SLOPE * np.sum(np.abs(t[:, 1]) ** 2 * np.abs(h1) ** 2)
        assert psi[0, 1] == pytest.approx(want, rel=1e-12)

    def test_psi_nonnegative(self):
        rng = np.random.default_rng(11)
        for trial in range(100):
            ch = gen_rayleigh(3, 6, 100 + trial)
            t = random_beams(6, 3, rng)
            assert np.all(build_psi(t, ch) >= 0)

    def test_fixed_point_identity_at_level_one(self):
        # scale targets onto the balance point, then q = D Psi q + (pi s2/2) D 1
        ch = gen_rayleigh(4, 16, 12)
        t = random_beams(16, 4, np.random.default_rng(12))
        noise = SystemNoise(sigma2=1e-3, p_bs=1.0)
        targets = np.full(4, 2.0)
        level = solve_balance(coupling_system(t, ch, targets, noise), "dl").level
        scaled = targets * level
        system = coupling_system(t, ch, scaled, noise)
        q = solve_balance(system, "dl").power
        rhs = system.d * (system.psi @ q) + (np.pi * noise.sigma2 / 2) * system.d
        np.testing.assert_allclose(q, rhs, rtol=1e-8)

    def test_feasible_targets_have_spectral_radius_below_one(self):
        ch = gen_rayleigh(4, 16, 13)
        t = random_beams(16, 4, np.random.default_rng(13))
        noise = SystemNoise(sigma2=1e-3, p_bs=1.0)
        targets = np.full(4, 2.0)
        level = solve_balance(coupling_system(t, ch, targets, noise), "dl").level
        feasible = targets * level * 0.9
        system = coupling_system(t, ch, feasible, noise)
        dpsi = system.d[:, None] * system.psi
        assert np.max(np.abs(np.linalg.eigvals(dpsi))) < 1.0
        assert np.max(np.abs(np.linalg.eigvals(dpsi.T))) < 1.0
