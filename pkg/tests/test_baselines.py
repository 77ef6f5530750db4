"""Zero-forcing baselines: nulling geometry, power policies, dithering."""

import numpy as np
import pytest

from onebit_mubf.baselines import (ZfDither, tune_zf_dither, zf_beamformers,
                                   zf_dither, zf_power)
from onebit_mubf.channel import ChannelSet, gen_rayleigh
from onebit_mubf.exceptions import SingularGram
from onebit_mubf.sqinr import SystemNoise, dl_sqinr_exact

NOISE = SystemNoise(sigma2=1e-3, p_bs=1.0)


class TestZfBeamformers:
    def test_orthonormal_channel_rows(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        q_mat, _ = np.linalg.qr(a)
        h = q_mat[:, :3].T.conj()  # orthonormal rows
        ch = ChannelSet(h)
        t_hat, norms = zf_beamformers(ch)
        np.testing.assert_allclose(norms, np.ones(3), rtol=1e-10)
        np.testing.assert_allclose(h.conj() @ t_hat, np.eye(3), atol=1e-10)

    def test_nulls_the_measured_interference(self):
        # ZF must kill the cross gains that the SQINR expressions use,
        # i.e. h_k^H t_i = 0 for i != k
        ch = gen_rayleigh(4, 16, 1)
        t_hat, _ = zf_beamformers(ch)
        cross = ch.H.conj() @ t_hat
        off = cross - np.diag(np.diag(cross))
        assert np.max(np.abs(off)) <= 1e-10 * np.linalg.norm(ch.H)

    def test_raw_inverse_property(self):
        ch = gen_rayleigh(3, 8, 2)
        t_hat, norms = zf_beamformers(ch)
        np.testing.assert_allclose(ch.H.conj() @ (t_hat * norms), np.eye(3),
                                   atol=1e-10)

    def test_single_user_is_matched_filter(self):
        ch = gen_rayleigh(1, 8, 3)
        t_hat, _ = zf_beamformers(ch)
        mrt = ch.H[0] / np.linalg.norm(ch.H[0])
        assert abs(abs(np.vdot(mrt, t_hat[:, 0])) - 1) < 1e-12

    def test_singular_gram(self):
        h = np.vstack([np.ones(4), np.ones(4) * (1 + 1e-15)]).astype(complex)
        with pytest.raises(SingularGram):
            zf_beamformers(ChannelSet(h))


class TestZfPower:
    @pytest.mark.parametrize("policy", ["opt", "zf", "equal"])
    def test_power_budget(self, policy):
        ch = gen_rayleigh(4, 16, 4)
        t_hat, norms = zf_beamformers(ch)
        q, g = zf_power(policy, t_hat, norms, ch, NOISE, np.full(4, 2.0))
        assert np.sum(g ** 2) == pytest.approx(NOISE.p_bs, rel=1e-10)
        assert np.all(q >= 0)

    def test_symmetric_channel_splits_equally(self):
        # DFT rows: orthogonal, equal norms, constant modulus, so both the
        # interference and the quantization couplings are fully symmetric
        n = 8
        dft = np.exp(-2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n)
        h = 1.7 * dft[:3] / np.sqrt(n)
        ch = ChannelSet(h)
        t_hat, norms = zf_beamformers(ch)
        q_zf, _ = zf_power("zf", t_hat, norms, ch, NOISE, np.full(3, 2.0))
        np.testing.assert_allclose(q_zf, np.full(3, NOISE.p_bs / 3), rtol=1e-10)
        q_opt, _ = zf_power("opt", t_hat, norms, ch, NOISE, np.full(3, 2.0))
        np.testing.assert_allclose(q_opt, q_zf, rtol=1e-8)

    def test_unknown_policy(self):
        ch = gen_rayleigh(2, 4, 6)
        t_hat, norms = zf_beamformers(ch)
        with pytest.raises(ValueError):
            zf_power("mrt", t_hat, norms, ch, NOISE, np.full(2, 2.0))


class TestZfDither:
    def test_samples_live_in_nullspace(self):
        ch = gen_rayleigh(3, 12, 7)
        dither = zf_dither(ch, sigma_d2=0.05)
        rng = np.random.default_rng(7)
        d = dither.sample(rng, 64)
        assert np.max(np.abs(ch.H.conj() @ d)) <= 1e-10 * np.linalg.norm(ch.H)

    def test_zero_variance(self):
        ch = gen_rayleigh(2, 6, 8)
        d = zf_dither(ch, 0.0).sample(np.random.default_rng(0), 5)
        np.testing.assert_array_equal(d, np.zeros((6, 5)))

    def test_empirical_covariance(self):
        ch = gen_rayleigh(2, 6, 9)
        sigma_d2 = 0.3
        dither = zf_dither(ch, sigma_d2)
        rng = np.random.default_rng(9)
        d = dither.sample(rng, 100_000)
        emp = d @ d.conj().T / d.shape[1]
        want = sigma_d2 * dither.projector
        assert np.max(np.abs(emp - want)) <= 0.05 * sigma_d2

    def test_projector_idempotent_hermitian(self):
        ch = gen_rayleigh(3, 10, 10)
        p = zf_dither(ch, 1.0).projector
        np.testing.assert_allclose(p @ p, p, atol=1e-12)
        np.testing.assert_allclose(p, p.conj().T, atol=1e-12)

    def test_tuning_never_hurts(self):
        ch = gen_rayleigh(2, 12, 11)
        t_hat, norms = zf_beamformers(ch)
        q, g = zf_power("zf", t_hat, norms, ch, NOISE, np.full(2, 2.0))
        best = tune_zf_dither(ch, t_hat, q, g, NOISE)
        score0 = float(np.min(dl_sqinr_exact(t_hat, q, ch, NOISE, q_antenna=g)))
        score = float(np.min(dl_sqinr_exact(
            t_hat, q, ch, NOISE, q_antenna=g,
            extra_cov=best.covariance() if best.sigma_d2 else None)))
        assert score >= score0 - 1e-12
        assert isinstance(best, ZfDither)
