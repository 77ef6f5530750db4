"""Estimator-style precoders: fit on a channel matrix, transform symbol blocks.

The estimators wrap the functional optimization and baseline routines behind
the familiar ``fit`` / ``transform`` / ``get_params`` surface so precoders
compose with pipelines, grid searches, and cloning. ``fit`` consumes the
K x N_BS complex channel matrix; fitted attributes carry the beams, power
vectors, and per-antenna gains. ``transform`` maps a K x n block of unit-power
constellation symbols to the N_BS x n quantized antenna signal actually
radiated (dummy beams and dither included), which an evaluation layer then
pushes through a channel.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from . import baselines, optimizer
from .channel import ChannelSet
from .exceptions import BadDims
from .quantize import one_bit
from .sqinr import SystemNoise, dl_sqinr_exact
from .units import dbm_to_watt, thermal_noise_dbm
from .validation import as_complex_matrix

DEFAULT_P_BS_DBM = 24.0
DEFAULT_BANDWIDTH_HZ = 8e6


def default_sigma2_dbm(bandwidth_hz: float = DEFAULT_BANDWIDTH_HZ) -> float:
    """Thermal receiver noise over the default bandwidth, 0 dB noise figure."""
    return thermal_noise_dbm(bandwidth_hz)


class BasePrecoder(BaseEstimator):
    """Shared parameter handling and the symbol-level transmit chain."""

    def __init__(self, targets_db=3.0, p_bs_dbm=DEFAULT_P_BS_DBM, sigma2_dbm=None):
        self.targets_db = targets_db
        self.p_bs_dbm = p_bs_dbm
        self.sigma2_dbm = sigma2_dbm

    def _noise(self) -> SystemNoise:
        sigma2_dbm = self.sigma2_dbm
        if sigma2_dbm is None:
            sigma2_dbm = default_sigma2_dbm()
        return SystemNoise(sigma2=dbm_to_watt(sigma2_dbm),
                           p_bs=dbm_to_watt(self.p_bs_dbm))

    def _targets(self, k: int) -> np.ndarray:
        g = np.asarray(self.targets_db, dtype=float)
        if g.ndim == 0:
            g = np.full(k, float(g))
        if g.shape != (k,):
            raise BadDims(f"targets_db must be scalar or length {k}")
        return 10.0 ** (g / 10.0)

    def _check_fitted(self):
        if not hasattr(self, "t_mat_"):
            raise BadDims("precoder is not fitted; call fit(H) first")

    # -- symbol chain -----------------------------------------------------

    def transform(self, S, rng=None) -> np.ndarray:
        """Quantized antenna signal for a block of user symbols.

        Parameters
        ----------
        S : (K, n_slots) complex symbols for the true users.
        rng : numpy Generator for dummy-user symbols and dither draws;
            required only when the fitted precoder carries either.

        Returns
        -------
        (N_BS, n_slots) complex transmit matrix, per-antenna gains applied
        after the 1-bit quantizer.
        """
        self._check_fitted()
        S = np.asarray(S, dtype=np.complex128)
        if S.ndim == 1:
            S = S[:, None]
        k_true = self.n_true_users_
        if S.shape[0] != k_true:
            raise BadDims(f"symbol block has {S.shape[0]} rows, expected {k_true}")
        n_slots = S.shape[1]
        t_mat, q = self.t_mat_, self.q_
        needs_rng = self.n_dummies_ > 0 or self.dither_ is not None
        if needs_rng and rng is None:
            raise BadDims("fitted precoder transmits dither; pass an rng")

        amps = np.sqrt(q)
        drive = (t_mat[:, :k_true].conj() * amps[:k_true]) @ S
        if self.n_dummies_ > 0:
            s_dummy = (rng.standard_normal((self.n_dummies_, n_slots))
                       + 1j * rng.standard_normal((self.n_dummies_, n_slots))) / np.sqrt(2.0)
            drive += (t_mat[:, k_true:].conj() * amps[k_true:]) @ s_dummy
        if self.dither_ is not None:
            drive += self.dither_.sample(rng, n_slots)
        return self.q_antenna_[:, None] * one_bit(drive)

    def sqinr(self, H=None) -> np.ndarray:
        """Exact per-user SQINR on the fitted (or a supplied true) channel."""
        self._check_fitted()
        ch = self.channel_ if H is None else ChannelSet(as_complex_matrix(H))
        extra = self.dither_.covariance() if self.dither_ is not None else None
        return dl_sqinr_exact(self.t_mat_, self.q_, ch, self._noise(),
                              q_antenna=self.q_antenna_, extra_cov=extra)


class MaxMinPrecoder(BasePrecoder):
    """Alternating max-min beamformer and power-allocation precoder.

    Parameters mirror the optimization knobs: linear-dB per-user targets, the
    power budget, the receiver noise level, the eigenvalue-improvement
    stopping threshold, and the sweep budget.
    """

    def __init__(self, targets_db=3.0, p_bs_dbm=DEFAULT_P_BS_DBM, sigma2_dbm=None,
                 epsilon=optimizer.DEFAULT_EPSILON,
                 max_outer_iters=optimizer.DEFAULT_MAX_OUTER_ITERS):
        super().__init__(targets_db=targets_db, p_bs_dbm=p_bs_dbm,
                         sigma2_dbm=sigma2_dbm)
        self.epsilon = epsilon
        self.max_outer_iters = max_outer_iters

    def _solve(self, ch: ChannelSet) -> optimizer.PrecoderSolution:
        return optimizer.optimize(ch, self._targets(ch.n_users), self._noise(),
                                  epsilon=self.epsilon,
                                  max_outer_iters=self.max_outer_iters)

    def fit(self, X, y=None):
        ch = ChannelSet(as_complex_matrix(X, "channel matrix"))
        sol = self._solve(ch)
        self.channel_ = ch
        self.solution_ = sol
        self.t_mat_ = sol.t_mat
        self.q_ = sol.q
        self.p_ = sol.p
        self.q_antenna_ = sol.q_antenna
        self.r_opt_ = sol.r_opt
        self.lambda_trace_ = sol.lambda_trace
        self.n_iters_ = sol.n_iters
        self.n_dummies_ = sol.n_dummies
        self.n_true_users_ = sol.n_true_users
        self.gamma_bar_ = sol.gamma_bar
        self.gamma_d_ = sol.gamma_d
        self.dither_ = None
        return self


class DitheredMaxMinPrecoder(MaxMinPrecoder):
    """Max-min precoder with optimized dummy-user dithering."""

    def __init__(self, targets_db=3.0, p_bs_dbm=DEFAULT_P_BS_DBM, sigma2_dbm=None,
                 epsilon=optimizer.DEFAULT_EPSILON,
                 max_outer_iters=optimizer.DEFAULT_MAX_OUTER_ITERS,
                 gamma_d_init=optimizer.DEFAULT_GAMMA_D_INIT,
                 gamma_d_max=None, n_steps=optimizer.DEFAULT_DITHER_STEPS):
        super().__init__(targets_db=targets_db, p_bs_dbm=p_bs_dbm,
                         sigma2_dbm=sigma2_dbm, epsilon=epsilon,
                         max_outer_iters=max_outer_iters)
        self.gamma_d_init = gamma_d_init
        self.gamma_d_max = gamma_d_max
        self.n_steps = n_steps

    def _solve(self, ch: ChannelSet) -> optimizer.PrecoderSolution:
        return optimizer.optimize_with_dither(
            ch, self._targets(ch.n_users), self._noise(),
            epsilon=self.epsilon, max_outer_iters=self.max_outer_iters,
            gamma_d_init=self.gamma_d_init, gamma_d_max=self.gamma_d_max,
            n_steps=self.n_steps)


class ZeroForcingPrecoder(BasePrecoder):
    """Zero-forcing baseline with a selectable power policy.

    ``power`` picks the per-antenna policy ("opt", "zf", or "equal");
    ``dither="auto"`` grid-searches a nullspace dither variance, a float pins
    it, and ``None`` disables dithering.
    """

    def __init__(self, targets_db=3.0, p_bs_dbm=DEFAULT_P_BS_DBM, sigma2_dbm=None,
                 power="opt", dither=None):
        super().__init__(targets_db=targets_db, p_bs_dbm=p_bs_dbm,
                         sigma2_dbm=sigma2_dbm)
        self.power = power
        self.dither = dither

    def fit(self, X, y=None):
        ch = ChannelSet(as_complex_matrix(X, "channel matrix"))
        noise = self._noise()
        t_hat, raw_norms = baselines.zf_beamformers(ch)
        q, q_antenna = baselines.zf_power(self.power, t_hat, raw_norms, ch, noise,
                                          self._targets(ch.n_users))
        self.channel_ = ch
        self.t_mat_ = t_hat
        self.raw_norms_ = raw_norms
        self.q_ = q
        self.p_ = None
        self.q_antenna_ = q_antenna
        self.n_iters_ = 1
        self.n_dummies_ = 0
        self.n_true_users_ = ch.n_users
        self.lambda_trace_ = np.empty(0)
        if self.dither == "auto":
            self.dither_ = baselines.tune_zf_dither(ch, t_hat, q, q_antenna, noise)
            if self.dither_.sigma_d2 == 0.0:
                self.dither_ = None
        elif self.dither is not None:
            self.dither_ = baselines.zf_dither(ch, float(self.dither))
        else:
            self.dither_ = None
        gammas = self.sqinr()
        self.gamma_bar_ = float(np.min(gammas))
        self.r_opt_ = float(np.min(gammas / self._targets(ch.n_users)))
        self.gamma_d_ = 0.0
        return self
