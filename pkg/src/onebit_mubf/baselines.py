"""Zero-forcing precoding baselines and transmit-time nullspace dithering.

The ZF beams are the pseudo-inverse of the conjugated channel matrix, so each
beam nulls the cross gains |h_k^H t_i| that every SQINR expression measures.
Three per-antenna power policies ride on top: balanced-optimal power
allocation, the norm-proportional split that mimics unquantized ZF, and a
uniform per-antenna split. Dither noise projected onto the channel nullspace
can be added before the quantizer, with its variance tuned by the same
grid-search shape as the dummy-user procedure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .exceptions import BadDims, NegativePower, SingularGram
from .numerics import nullspace
from .power_allocation import coupling_system, solve_balance
from .sqinr import SystemNoise, dl_sqinr_exact, per_antenna_gains

POWER_POLICIES = ("opt", "zf", "equal")
_COND_LIMIT = 1e12


def zf_beamformers(ch: ChannelSet) -> tuple[np.ndarray, np.ndarray]:
    """Zero-forcing beams with unit-norm columns plus the raw column norms.

    The raw matrix T satisfies ``H^* T = I`` (conjugate pairing), i.e.
    ``h_k^H t_i = delta_ki``, which kills the multi-user interference terms of
    the downlink SQINR in the unquantized channel. The raw norms feed the
    norm-proportional power policy.
    """
    h = ch.H
    if ch.n_users > ch.n_antennas:
        raise BadDims(f"zero forcing needs K <= N_BS, got {h.shape}")
    gram = h.conj() @ h.T
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise SingularGram(f"channel Gram condition number {cond:.3e} exceeds 1e12")
    t_raw = np.linalg.solve(gram.T, h).T
    norms = np.linalg.norm(t_raw, axis=0)
    return t_raw / norms, norms


def zf_power(policy: str, t_hat: np.ndarray, raw_norms: np.ndarray,
             ch: ChannelSet, noise: SystemNoise, targets) -> tuple[np.ndarray, np.ndarray]:
    """Per-user powers q and per-antenna gains for one ZF power policy.

    "opt"   — balanced-optimal q from the downlink coupling eigensystem.
    "zf"    — q proportional to the squared raw beam norms, normalized to the
              budget (per-antenna powers then match unquantized ZF).
    "equal" — uniform per-antenna gains sqrt(P/N); q bookkeeping reuses the
              norm-proportional split so the SQINR expressions stay defined.
    """
    if policy not in POWER_POLICIES:
        raise ValueError(f"unknown power policy {policy!r}; pick from {POWER_POLICIES}")
    if policy == "opt":
        system = coupling_system(t_hat, ch, targets, noise)
        q = solve_balance(system, "dl").power
        return q, per_antenna_gains(t_hat, q)
    weights = raw_norms ** 2
    q = noise.p_bs * weights / weights.sum()
    if np.any(q < 0):
        raise NegativePower("norm-proportional split produced negative power")
    if policy == "zf":
        return q, per_antenna_gains(t_hat, q)
    n = t_hat.shape[0]
    return q, np.full(n, np.sqrt(noise.p_bs / n))


@dataclass(frozen=True)
class ZfDither:
    """Transmit-time dither descriptor: nullspace projector and variance.

    ``sample`` draws a fresh projected Gaussian per symbol slot; its
    covariance is ``sigma_d2 * projector``.
    """

    projector: np.ndarray
    sigma_d2: float

    def covariance(self) -> np.ndarray:
        return self.sigma_d2 * self.projector

    def sample(self, rng: np.random.Generator, n_slots: int = 1) -> np.ndarray:
        n = self.projector.shape[0]
        if self.sigma_d2 == 0.0:
            return np.zeros((n, n_slots), dtype=np.complex128)
        w = (rng.standard_normal((n, n_slots))
             + 1j * rng.standard_normal((n, n_slots))) / np.sqrt(2.0)
        return np.sqrt(self.sigma_d2) * (self.projector @ w)


def zf_dither(ch: ChannelSet, sigma_d2: float) -> ZfDither:
    """Dither descriptor for the nullspace of the (conjugated) channel.

    Samples d satisfy ``h_k^H d = 0`` for every user, so with the canonical
    per-antenna matrix the dither never leaks into the received signal; it
    only reshapes the quantizer drive.
    """
    if sigma_d2 < 0:
        raise NegativePower(f"dither variance must be >= 0, got {sigma_d2}")
    rows = nullspace(ch.H)
    projector = rows.T @ rows.conj()
    return ZfDither(projector=projector, sigma_d2=float(sigma_d2))


def tune_zf_dither(ch: ChannelSet, t_hat: np.ndarray, q: np.ndarray,
                   q_antenna: np.ndarray, noise: SystemNoise,
                   n_steps: int = 16) -> ZfDither:
    """Grid-search the dither variance until the minimum SQINR starts falling.

    Walks sigma_d2 over ``n_steps`` equal steps from 1e-3 P/N to P/N, scoring
    the exact minimum downlink SQINR with the dither covariance included, and
    returns the best variance seen (possibly zero).
    """
    base = zf_dither(ch, 0.0)
    best_score = float(np.min(dl_sqinr_exact(t_hat, q, ch, noise,
                                             q_antenna=q_antenna)))
    best = base
    prev = best_score
    top = noise.p_bs / ch.n_antennas
    for sigma_d2 in np.linspace(1e-3 * top, top, n_steps):
        cand = ZfDither(projector=base.projector, sigma_d2=float(sigma_d2))
        score = float(np.min(dl_sqinr_exact(
            t_hat, q, ch, noise, q_antenna=q_antenna, extra_cov=cand.covariance())))
        if score > best_score:
            best_score, best = score, cand
        if score < prev:
            break
        prev = score
    return best
