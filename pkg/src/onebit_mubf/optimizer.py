"""Joint beamformer and power-allocation optimization.

The alternating scheme fixes the uplink powers and updates every beamformer
as the dominant generalized eigenvector of its channel covariance against the
interference-plus-quantization metric, then re-solves the uplink balancing
eigensystem for the new beams; the dominant eigenvalue decreases monotonically
and the loop stops once the improvement drops below a threshold. The dithered
variant appends nullspace dummy users and walks their common target upward on
a fixed grid while the exact minimum SQINR of the true users keeps improving,
returning the best iterate encountered.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .channel import ChannelSet
from .exceptions import BadDims, MaxIters
from .numerics import generalized_dominant_eigvec, nullspace
from .power_allocation import coupling_system, solve_balance
from .sqinr import HALF_PI, QN_SLOPE, SystemNoise, dl_sqinr_exact, per_antenna_gains
from .validation import as_power_vector, as_targets

DEFAULT_EPSILON = 1e-4
DEFAULT_MAX_OUTER_ITERS = 100
DEFAULT_GAMMA_D_INIT = 1e-3  # "approximately zero" initial dummy target
DEFAULT_DITHER_STEPS = 16


@dataclass(frozen=True)
class PrecoderSolution:
    """Fitted precoder: beams, both power vectors, and the iteration record.

    ``t_mat`` has unit-norm columns (true users first, then dummies),
    ``q``/``p`` are the downlink/uplink power vectors (both summing to the
    power budget), and ``q_antenna`` is the diagonal of the per-antenna
    matrix. ``gamma_bar`` is the exact minimum SQINR over true users when it
    was computed, ``gamma_d`` the dummy target in force for this iterate.
    """

    t_mat: np.ndarray
    q: np.ndarray
    p: np.ndarray
    q_antenna: np.ndarray
    r_opt: float
    lambda_trace: np.ndarray
    n_iters: int
    n_dummies: int
    gamma_bar: float | None = None
    gamma_d: float = 0.0

    @property
    def n_true_users(self) -> int:
        return self.t_mat.shape[1] - self.n_dummies


def qk_matrix(p_vec, ch: ChannelSet, noise: SystemNoise, k: int) -> np.ndarray:
    """Interference-plus-quantization metric for user k's beamformer update.

    Q_k(p) = sum_{i != k} p_i R_i + (pi/2 - 1) sum_i p_i diag(R_i)
             + (pi/2) sigma^2 I. Hermitian positive definite by the noise term.
    """
    p_vec = as_power_vector(p_vec, ch.n_users)
    if not 0 <= k < ch.n_users:
        raise BadDims(f"user index {k} out of range for {ch.n_users} users")
    h = ch.H
    interference = (h.T * p_vec) @ h.conj()
    interference -= p_vec[k] * ch.covariance(k)
    diag_term = (np.abs(h) ** 2 * p_vec[:, None]).sum(axis=0)
    qk = interference
    idx = np.arange(h.shape[1])
    qk[idx, idx] += QN_SLOPE * diag_term + HALF_PI * noise.sigma2
    return qk


def _beamformer_pass(p_vec: np.ndarray, ch: ChannelSet, noise: SystemNoise) -> np.ndarray:
    """One sweep of per-user generalized-eigenvector updates.

    Each beam is rotated so its own-channel gain h_k^H t_k is real positive:
    the SQINR machinery only sees magnitudes, but the symbol chain needs the
    effective gain phase-aligned for minimum-distance decoding with a real
    blind amplitude.
    """
    k_tot, n = ch.H.shape
    h = ch.H
    coupled = (h.T * p_vec) @ h.conj()
    diag_term = QN_SLOPE * (np.abs(h) ** 2 * p_vec[:, None]).sum(axis=0) \
        + HALF_PI * noise.sigma2
    idx = np.arange(n)
    t_mat = np.empty((n, k_tot), dtype=np.complex128)
    for k in range(k_tot):
        qk = coupled - p_vec[k] * ch.covariance(k)
        qk[idx, idx] += diag_term
        t_k = generalized_dominant_eigvec(ch.covariance(k), qk)
        gain = np.vdot(h[k], t_k)
        if abs(gain) > 0.0:
            t_k = t_k * (gain.conj() / abs(gain))
        t_mat[:, k] = t_k
    return t_mat


def optimize(ch: ChannelSet, targets, noise: SystemNoise,
             epsilon: float = DEFAULT_EPSILON,
             max_outer_iters: int = DEFAULT_MAX_OUTER_ITERS) -> PrecoderSolution:
    """Alternating max-min beamformer and power-allocation optimization.

    Starts from zero uplink power, so the first sweep reduces to matched
    filtering against the pure noise metric; subsequent sweeps tilt each beam
    away from the other users' channels and the quantization-noise diagonal.

    Raises
    ------
    MaxIters
        If the dominant-eigenvalue improvement never drops below ``epsilon``
        within ``max_outer_iters`` sweeps.
    """
    if epsilon <= 0:
        raise BadDims(f"epsilon must be positive, got {epsilon}")
    k_users, n_bs = ch.H.shape
    if k_users > n_bs:
        raise BadDims(f"need K <= N_BS, got K={k_users}, N_BS={n_bs}")
    targets = as_targets(targets, k_users)

    p_vec = np.zeros(k_users)
    lam_prev = np.inf
    trace: list[float] = []
    t_mat = None
    system = None
    for n_iter in range(1, max_outer_iters + 1):
        t_mat = _beamformer_pass(p_vec, ch, noise)
        system = coupling_system(t_mat, ch, targets, noise)
        ul = solve_balance(system, "ul")
        p_vec = ul.power
        trace.append(ul.eigenvalue)
        improvement = lam_prev - ul.eigenvalue
        if improvement < epsilon:
            break
        lam_prev = ul.eigenvalue
    else:
        raise MaxIters(f"no convergence within {max_outer_iters} iterations "
                       f"(last improvement {improvement:.3e})")

    dl = solve_balance(system, "dl")
    return PrecoderSolution(
        t_mat=t_mat, q=dl.power, p=p_vec,
        q_antenna=per_antenna_gains(t_mat, dl.power),
        r_opt=dl.level, lambda_trace=np.asarray(trace),
        n_iters=n_iter, n_dummies=0)


def optimize_with_dither(ch: ChannelSet, targets, noise: SystemNoise,
                         epsilon: float = DEFAULT_EPSILON,
                         max_outer_iters: int = DEFAULT_MAX_OUTER_ITERS,
                         gamma_d_init: float = DEFAULT_GAMMA_D_INIT,
                         gamma_d_max: float | None = None,
                         n_steps: int = DEFAULT_DITHER_STEPS) -> PrecoderSolution:
    """Optimized dithering: dummy users on the channel nullspace.

    Runs the plain optimization first, then appends ``N_BS - K`` dummy users
    whose channels span the nullspace of the true channel matrix and re-runs
    the alternating updates over all users while stepping the common dummy
    target ``gamma_d`` from near zero toward ``gamma_d_max`` (default
    ``max_k targets_k / (N_BS - K)``) in ``n_steps`` equal increments. Each
    iteration scores the exact minimum SQINR over the true users; the search
    stops once that minimum starts decreasing (with the eigenvalue criterion
    already met) and returns the best dithered iterate seen. The first iterate
    runs at a near-zero dummy target, so it essentially reproduces the
    undithered solution and the search can only move up from there.
    """
    k_users, n_bs = ch.H.shape
    base = optimize(ch, targets, noise, epsilon, max_outer_iters)
    gbar0 = float(np.min(dl_sqinr_exact(base.t_mat, base.q, ch, noise)))
    base = replace(base, gamma_bar=gbar0)
    if k_users == n_bs:
        warnings.warn("K equals N_BS: no nullspace available, returning the "
                      "undithered solution", stacklevel=2)
        return base

    targets = as_targets(targets, k_users)
    n_dummies = n_bs - k_users
    dummy_rows = nullspace(ch.H)
    ch_ext = ch.stacked(dummy_rows)
    if gamma_d_max is None:
        gamma_d_max = float(targets.max()) / n_dummies
    delta = gamma_d_max / n_steps

    gamma_d = gamma_d_init
    increments = 0
    p_vec = np.concatenate([base.p, np.zeros(n_dummies)])
    lam_prev = np.inf
    gbar_prev = gbar0
    best: PrecoderSolution | None = None
    trace: list[float] = []
    for n_iter in range(1, max_outer_iters + 1):
        targets_ext = np.concatenate([targets, np.full(n_dummies, gamma_d)])
        t_mat = _beamformer_pass(p_vec, ch_ext, noise)
        system = coupling_system(t_mat, ch_ext, targets_ext, noise)
        ul = solve_balance(system, "ul")
        dl = solve_balance(system, "dl")
        p_vec = ul.power
        trace.append(ul.eigenvalue)
        gbar = float(np.min(dl_sqinr_exact(t_mat, dl.power, ch, noise)))

        if best is None or gbar > best.gamma_bar:
            best = PrecoderSolution(
                t_mat=t_mat, q=dl.power, p=p_vec,
                q_antenna=per_antenna_gains(t_mat, dl.power),
                r_opt=dl.level, lambda_trace=np.asarray(trace),
                n_iters=n_iter, n_dummies=n_dummies,
                gamma_bar=gbar, gamma_d=gamma_d)

        lam_converged = lam_prev - ul.eigenvalue < epsilon
        if lam_converged and gbar < gbar_prev:
            break
        at_cap = increments >= n_steps
        if lam_converged and at_cap and gbar <= gbar_prev:
            break  # grid exhausted on a plateau
        if gbar >= gbar_prev and not at_cap:
            gamma_d += delta
            increments += 1
        lam_prev = ul.eigenvalue
        gbar_prev = gbar
    else:
        warnings.warn("dither search exhausted its iteration budget; returning "
                      "the best iterate seen", stacklevel=2)
    return best
