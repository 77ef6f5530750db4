"""Balancing eigensystems: structure, balance property, duality."""

import numpy as np
import pytest

from onebit_mubf.channel import ChannelSet, gen_rayleigh
from onebit_mubf.exceptions import NonPositiveEigenvector
from onebit_mubf.power_allocation import (CouplingSystem, build_extended_dl,
                                          build_extended_ul, closed_form_power,
                                          coupling_system, solve_balance,
                                          verify_duality)
from onebit_mubf.sqinr import SystemNoise, dl_sqinr_approx

NOISE = SystemNoise(sigma2=1e-3, p_bs=1.0)


def random_beams(n, k, rng):
    t = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    return t / np.linalg.norm(t, axis=0)


def random_instance(k, n, seed):
    ch = gen_rayleigh(k, n, seed)
    t = random_beams(n, k, np.random.default_rng(seed + 10_000))
    return ch, t


class TestExtendedStructure:
    def test_scalar_blocks(self):
        d = np.array([0.5])
        psi = np.array([[2.0]])
        ext = build_extended_dl(d, psi, NOISE)
        s = np.pi * NOISE.sigma2 / 2
        np.testing.assert_allclose(
            ext, [[1.0, 0.5 * s], [1.0 / NOISE.p_bs, 0.5 * s / NOISE.p_bs]])
        # last row is the first block row divided by the power budget
        np.testing.assert_allclose(ext[1], ext[0] / NOISE.p_bs)

    def test_top_bottom_identity(self):
        rng = np.random.default_rng(0)
        d = rng.uniform(0.1, 1.0, size=4)
        psi = rng.uniform(0.0, 1.0, size=(4, 4))
        ext = build_extended_dl(d, psi, NOISE)
        np.testing.assert_allclose(np.ones(4) @ ext[:4], NOISE.p_bs * ext[4],
                                   rtol=1e-12)

    def test_nonnegative(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            d = rng.uniform(0.0, 1.0, size=3)
            psi = rng.uniform(0.0, 1.0, size=(3, 3))
            assert np.all(build_extended_dl(d, psi, NOISE) >= 0)
            assert np.all(build_extended_ul(d, psi, NOISE) >= 0)

    def test_ul_is_transposed_coupling(self):
        rng = np.random.default_rng(2)
        d = rng.uniform(0.1, 1.0, size=3)
        psi = rng.uniform(0.0, 1.0, size=(3, 3))
        dl = build_extended_dl(d, psi, NOISE)
        ul = build_extended_ul(d, psi, NOISE)
        np.testing.assert_allclose(ul[:3, :3], d[:, None] * psi.T)
        # stripping D from both top-left blocks recovers Psi and Psi^T
        np.testing.assert_allclose((dl[:3, :3] / d[:, None]).T,
                                   ul[:3, :3] / d[:, None], rtol=1e-12)

    def test_symmetric_psi_gives_equal_systems(self):
        rng = np.random.default_rng(3)
        d = rng.uniform(0.1, 1.0, size=3)
        a = rng.uniform(0.0, 1.0, size=(3, 3))
        psi = 0.5 * (a + a.T)
        np.testing.assert_array_equal(build_extended_dl(d, psi, NOISE),
                                      build_extended_ul(d, psi, NOISE))

    def test_scalar_systems_always_equal(self):
        d = np.array([0.7])
        psi = np.array([[1.3]])
        np.testing.assert_array_equal(build_extended_dl(d, psi, NOISE),
                                      build_extended_ul(d, psi, NOISE))


class TestSolveBalance:
    def test_single_user_closed_form(self):
        ch, _ = random_instance(1, 4, 42)
        t = (ch.H[0] / np.linalg.norm(ch.H[0]))[:, None]
        targets = np.array([2.0])
        system = coupling_system(t, ch, targets, NOISE)
        res = solve_balance(system, "dl")
        assert res.power[0] == pytest.approx(NOISE.p_bs, rel=1e-10)
        achieved = dl_sqinr_approx(t, res.power, ch, NOISE)[0]
        assert res.level * targets[0] == pytest.approx(achieved, rel=1e-9)

    def test_balanced_ratios(self):
        for seed in range(10):
            ch, t = random_instance(4, 16, seed)
            targets = np.full(4, 2.0)
            res = solve_balance(coupling_system(t, ch, targets, NOISE), "dl")
            ratios = dl_sqinr_approx(t, res.power, ch, NOISE) / targets
            assert ratios.max() / ratios.min() - 1 <= 1e-8

    def test_feasibility_via_level(self):
        ch, t = random_instance(3, 12, 5)
        targets = np.full(3, 2.0)
        level = solve_balance(coupling_system(t, ch, targets, NOISE), "dl").level
        harder = solve_balance(
            coupling_system(t, ch, targets * level * 1.1, NOISE), "dl").level
        easier = solve_balance(
            coupling_system(t, ch, targets * level * 0.9, NOISE), "dl").level
        assert harder < 1.0 < easier

    def test_strictly_positive_power_and_budget(self):
        for seed in range(20):
            ch, t = random_instance(4, 16, 100 + seed)
            res = solve_balance(coupling_system(t, ch, np.full(4, 2.0), NOISE), "ul")
            assert np.all(res.power > 0)
            assert res.power.sum() == pytest.approx(NOISE.p_bs, rel=1e-8)

    def test_degenerate_system_rejected(self):
        # a zero target row starves one user of power
        d = np.array([0.0, 1.0])
        psi = np.array([[0.1, 0.2], [0.3, 0.1]])
        system = CouplingSystem(d=d, psi=psi, noise=NOISE,
                                upsilon=build_extended_dl(d, psi, NOISE),
                                lam=build_extended_ul(d, psi, NOISE))
        with pytest.raises(NonPositiveEigenvector):
            solve_balance(system, "dl")


class TestDuality:
    def test_single_user_exact(self):
        ch, _ = random_instance(1, 6, 7)
        t = (ch.H[0] / np.linalg.norm(ch.H[0]))[:, None]
        report = verify_duality(t, [2.0], ch, NOISE)
        np.testing.assert_allclose(report.p, report.q, rtol=1e-12)

    def test_random_instances(self):
        for seed in range(10):
            ch, t = random_instance(4, 16, 200 + seed)
            report = verify_duality(t, np.full(4, 2.0), ch, NOISE)
            assert report.ok
            assert report.power_gap <= 1e-8 * NOISE.p_bs
            assert report.level_gap <= 1e-8
            assert report.closed_form_gap <= 1e-7

    def test_symmetric_coupling_gives_equal_powers(self):
        # real channel rows with unit norms and matched beams make the
        # coupling matrix symmetric, so both link directions share powers
        rng = np.random.default_rng(11)
        h = rng.standard_normal((3, 8))
        h /= np.linalg.norm(h, axis=1, keepdims=True)
        ch = ChannelSet(h.astype(complex))
        t = h.T.astype(complex)
        report = verify_duality(t, np.full(3, 1.5), ch, NOISE)
        np.testing.assert_allclose(report.p, report.q, rtol=1e-10)

    def test_closed_form_route(self):
        ch, t = random_instance(3, 10, 17)
        targets = np.full(3, 2.0)
        system = coupling_system(t, ch, targets, NOISE)
        level = solve_balance(system, "dl").level
        scaled = coupling_system(t, ch, targets * level, NOISE)
        q_cf = closed_form_power(scaled, "dl")
        q_eig = solve_balance(scaled, "dl").power
        np.testing.assert_allclose(q_cf, q_eig, rtol=1e-7)
        p_cf = closed_form_power(scaled, "ul")
        p_eig = solve_balance(scaled, "ul").power
        np.testing.assert_allclose(p_cf, p_eig, rtol=1e-7)
        # the fixed-point solve is well conditioned for feasible targets
        dpsi = scaled.d[:, None] * scaled.psi
        assert np.linalg.cond(np.eye(3) - dpsi) < 1e6
