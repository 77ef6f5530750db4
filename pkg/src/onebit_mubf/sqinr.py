"""Per-user SQINR evaluation and the coupling matrices it induces.

Downlink SQINR comes in two forms. The exact form drives evaluation: it
builds the pre-quantization covariance of the transmitted beams, applies the
arcsine law for the distortion covariance, and scores each user against
multi-user interference, thermal noise, and quantization noise. The
small-angle form drops the per-antenna matrix entirely and is what the
balancing/optimization machinery is built on, together with the diagonal
target matrix D and the non-negative coupling matrix Psi.

Beamformer matrices may carry more columns than the evaluated channel has
users (dummy-user beams); the extra columns are treated as interference and
enter the pre-quantization covariance, since they are physically transmitted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .exceptions import BadDims, ZeroGain
from .quantize import arcsine_covariance, bussgang_gain, diagonal_metric
from .validation import as_complex_matrix, as_power_vector

HALF_PI = np.pi / 2.0
QN_SLOPE = HALF_PI - 1.0  # weight of the diagonal quantization-noise term


@dataclass(frozen=True)
class SystemNoise:
    """Receiver noise variance and total transmit power, both in Watts."""

    sigma2: float
    p_bs: float

    def __post_init__(self):
        if not (self.sigma2 > 0.0 and np.isfinite(self.sigma2)):
            raise BadDims(f"sigma2 must be positive, got {self.sigma2}")
        if not (self.p_bs > 0.0 and np.isfinite(self.p_bs)):
            raise BadDims(f"p_bs must be positive, got {self.p_bs}")


def per_antenna_gains(t_mat, q) -> np.ndarray:
    """Diagonal of the per-antenna power allocation matrix Q.

    Q = diag(sum_i q_i t_i t_i^H)^(1/2); with unit-norm columns this makes
    tr(Q Q^H) equal the allocated sum power, i.e. the per-antenna powers after
    quantization match what the same beams would radiate unquantized.
    """
    t_mat = as_complex_matrix(t_mat, "beamformer matrix")
    q = as_power_vector(q, t_mat.shape[1])
    per_antenna = (np.abs(t_mat) ** 2) @ q
    return np.sqrt(per_antenna)


def beam_covariance(t_mat, q) -> np.ndarray:
    """Pre-quantization covariance sum_i q_i t_i^* t_i^T of the beam mix."""
    t_mat = as_complex_matrix(t_mat, "beamformer matrix")
    q = as_power_vector(q, t_mat.shape[1])
    return (t_mat.conj() * q) @ t_mat.T


def _gain_tables(h: np.ndarray, t_mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cross-gain tables used by every small-angle expression.

    Returns (G, P) with G[k, i] = |h_k^H t_i|^2 = t_i^H R_k t_i and
    P[k, i] = sum_n |h_k[n]|^2 |t_i[n]|^2 = t_i^H diag(R_k) t_i.
    """
    g = np.abs(h.conj() @ t_mat) ** 2
    p = (np.abs(h) ** 2) @ (np.abs(t_mat) ** 2)
    return g, p


def dl_sqinr_exact(t_mat, q, ch: ChannelSet, noise: SystemNoise,
                   q_antenna=None, extra_cov=None) -> np.ndarray:
    """Exact downlink SQINR of each channel user, no small-angle approximation.

    Parameters
    ----------
    t_mat : (N, K_tot) beamformer matrix; columns beyond ``ch.n_users`` are
        dummy beams and count as interference.
    q : (K_tot,) downlink power allocation.
    q_antenna : optional (N,) diagonal of the per-antenna matrix Q; defaults
        to the canonical ``per_antenna_gains(t_mat, q)``.
    extra_cov : optional (N, N) covariance of additional pre-quantization
        input (transmit-time dither); it widens the quantizer drive and adds
        a linearized leakage term.

    Returns
    -------
    (ch.n_users,) array of per-user SQINR values.
    """
    t_mat = as_complex_matrix(t_mat, "beamformer matrix")
    n, k_tot = t_mat.shape
    if ch.n_antennas != n:
        raise BadDims(f"channel has {ch.n_antennas} antennas, beamformers have {n}")
    q = as_power_vector(q, k_tot)
    k_users = ch.n_users
    if k_tot < k_users:
        raise BadDims(f"{k_tot} beams cannot serve {k_users} users")

    r_y = beam_covariance(t_mat, q)
    if extra_cov is not None:
        r_y = r_y + as_complex_matrix(extra_cov, "extra covariance")
    if not np.any(q) and extra_cov is None:
        return np.zeros(k_users)

    qd = per_antenna_gains(t_mat, q) if q_antenna is None else np.asarray(q_antenna, float)
    if qd.shape != (n,):
        raise BadDims(f"q_antenna must have shape ({n},), got {qd.shape}")

    model = arcsine_covariance(r_y)
    a = model.bussgang
    weights = a * qd  # diagonal of A_d Q (real, commuting diagonals)

    gammas = np.empty(k_users)
    # effective cross gains |h_k^H A Q t_i|^2 for all beams at once
    eff = np.abs((ch.H.conj() * weights) @ t_mat) ** 2
    for k in range(k_users):
        hk = ch.H[k]
        u = qd * hk
        quant_noise = float(np.real(u @ model.r_eta @ u.conj()))
        leak = 0.0
        if extra_cov is not None:
            v = weights * hk
            leak = float(np.real(v @ np.asarray(extra_cov) @ v.conj()))
        signal = q[k] * eff[k, k]
        mui = float(q @ eff[k]) - signal
        gammas[k] = signal / (mui + noise.sigma2 + quant_noise + leak)
    return gammas


def distortion_diag_metric(t_mat, q, extra_cov=None) -> float:
    """Diagonal metric of the exact distortion covariance of a beam mix."""
    r_y = beam_covariance(t_mat, q)
    if extra_cov is not None:
        r_y = r_y + as_complex_matrix(extra_cov, "extra covariance")
    return diagonal_metric(arcsine_covariance(r_y).r_eta)


def dl_sqinr_approx(t_mat, q, ch: ChannelSet, noise: SystemNoise) -> np.ndarray:
    """Small-angle downlink SQINR; the per-antenna matrix cancels out.

    gamma_k = q_k t_k^H R_k t_k / (sum_{i != k} q_i t_i^H R_k t_i
              + (pi/2) sigma2 + (pi/2 - 1) sum_i q_i t_i^H diag(R_k) t_i)
    """
    t_mat = as_complex_matrix(t_mat, "beamformer matrix")
    q = as_power_vector(q, t_mat.shape[1])
    if ch.n_users != t_mat.shape[1]:
        raise BadDims(
            f"channel has {ch.n_users} users, beamformers have {t_mat.shape[1]} columns")
    g, p = _gain_tables(ch.H, t_mat)
    signal = q * np.diag(g)
    mui = g @ q - signal
    qn = QN_SLOPE * (p @ q)
    return signal / (mui + HALF_PI * noise.sigma2 + qn)


def dl_sqir(t_mat, q, ch: ChannelSet) -> np.ndarray:
    """Noise-free ratio (thermal term dropped); invariant to scaling q."""
    t_mat = as_complex_matrix(t_mat, "beamformer matrix")
    q = as_power_vector(q, t_mat.shape[1])
    g, p = _gain_tables(ch.H, t_mat)
    signal = q * np.diag(g)
    mui = g @ q - signal
    qn = QN_SLOPE * (p @ q)
    return signal / (mui + qn)


def ul_sqinr_approx(t_mat, p_vec, ch: ChannelSet, noise: SystemNoise) -> np.ndarray:
    """Small-angle uplink SQINR of each user under combiner-induced beams.

    gamma_k = p_k t_k^H R_k t_k / (sum_{i != k} p_i t_k^H R_i t_k
              + (pi/2) sigma2 + (pi/2 - 1) sum_i p_i t_k^H diag(R_i) t_k)
    """
    t_mat = as_complex_matrix(t_mat, "beamformer matrix")
    p_vec = as_power_vector(p_vec, t_mat.shape[1])
    if ch.n_users != t_mat.shape[1]:
        raise BadDims(
            f"channel has {ch.n_users} users, beamformers have {t_mat.shape[1]} columns")
    g, pt = _gain_tables(ch.H, t_mat)
    # uplink couples through the transposed tables: user k's combiner t_k
    # collects energy from every channel R_i
    signal = p_vec * np.diag(g)
    mui = g.T @ p_vec - signal
    qn = QN_SLOPE * (pt.T @ p_vec)
    return signal / (mui + HALF_PI * noise.sigma2 + qn)


def ul_sqinr_combiner(t_mat, p_vec, ch: ChannelSet, noise: SystemNoise) -> np.ndarray:
    """Uplink SQINR evaluated through the original combiner expression.

    Recovers the combiners u_k proportional to A_u^{-1} t_k, then scores them
    against the linearized uplink model with uncorrelated distortion
    (1 - 2/pi) I. Algebraically identical to ``ul_sqinr_approx``; kept as an
    independent code path for consistency checks.
    """
    t_mat = as_complex_matrix(t_mat, "beamformer matrix")
    p_vec = as_power_vector(p_vec, t_mat.shape[1])
    h = ch.H
    n = h.shape[1]
    # sum_i p_i R_i with R_i = h_i h_i^H (rows of H hold h_i entries)
    r_yu = (h.T * p_vec) @ h.conj() + noise.sigma2 * np.eye(n)
    a = bussgang_gain(r_yu)
    gammas = np.empty(ch.n_users)
    for k in range(ch.n_users):
        u = t_mat[:, k] / a
        u = u / np.linalg.norm(u)
        au = a * u
        num = p_vec[k] * np.abs(np.vdot(ch.H[k], au)) ** 2
        mui = 0.0
        for i in range(ch.n_users):
            if i != k:
                mui += p_vec[i] * np.abs(np.vdot(ch.H[i], au)) ** 2
        iid = noise.sigma2 * float(np.real(np.vdot(au, au)))
        qn = (1.0 - 2.0 / np.pi) * float(np.real(np.vdot(u, u)))
        gammas[k] = num / (mui + iid + qn)
    return gammas


def build_d(t_mat, ch: ChannelSet, targets) -> np.ndarray:
    """Diagonal of the target-over-gain matrix D: gamma_k / (t_k^H R_k t_k)."""
    t_mat = as_complex_matrix(t_mat, "beamformer matrix")
    targets = as_power_vector(targets, t_mat.shape[1], "targets")
    if ch.n_users != t_mat.shape[1]:
        raise BadDims(
            f"channel has {ch.n_users} users, beamformers have {t_mat.shape[1]} columns")
    own_gain = np.abs(np.sum(ch.H.conj() * t_mat.T, axis=1)) ** 2
    floor = 1e-14 * ch.row_norms_sq()
    if np.any(own_gain <= floor):
        k = int(np.argmin(own_gain - floor))
        raise ZeroGain(f"beamformer {k} is orthogonal to its own channel")
    return targets / own_gain


def build_psi(t_mat, ch: ChannelSet) -> np.ndarray:
    """Non-negative coupling matrix Psi.

    Off-diagonal (k, i): t_i^H (R_k + (pi/2 - 1) diag(R_k)) t_i.
    Diagonal (k, k):     t_k^H ((pi/2 - 1) diag(R_k)) t_k.
    """
    t_mat = as_complex_matrix(t_mat, "beamformer matrix")
    if ch.n_users != t_mat.shape[1]:
        raise BadDims(
            f"channel has {ch.n_users} users, beamformers have {t_mat.shape[1]} columns")
    g, p = _gain_tables(ch.H, t_mat)
    psi = g + QN_SLOPE * p
    np.fill_diagonal(psi, QN_SLOPE * np.diag(p))
    return psi
