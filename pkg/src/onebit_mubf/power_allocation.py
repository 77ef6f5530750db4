"""SQINR-balancing power allocation through extended coupling eigensystems.

For a fixed beamformer matrix the max-min (achieved-to-target) power
allocation is the Perron eigenpair of a non-negative (K+1) x (K+1) matrix
that embeds the total-power constraint: the downlink system uses D Psi, the
uplink one D Psi^T, and both share the same dominant eigenvalue, whose
reciprocal is the achieved balance level. The closed-form solve
(pi sigma^2 / 2) (I - D Psi)^{-1} D 1 recovers the same powers whenever the
targets are exactly met (level 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .exceptions import BadDims, DualityViolation, NonPositiveEigenvector, OneBitError
from .numerics import dominant_nonneg_eigpair
from .sqinr import SystemNoise, build_d, build_psi
from .validation import as_power_vector

_EIG_TOL = 1e-12
_EIG_MAX_ITER = 20_000


@dataclass(frozen=True)
class CouplingSystem:
    """Coupling data for one beamformer matrix: D, Psi, and both extensions."""

    d: np.ndarray        # (K,) diagonal of the target-over-gain matrix
    psi: np.ndarray      # (K, K) non-negative coupling matrix
    noise: SystemNoise
    upsilon: np.ndarray  # (K+1, K+1) downlink extension
    lam: np.ndarray      # (K+1, K+1) uplink extension

    @property
    def n_users(self) -> int:
        return self.d.shape[0]


@dataclass(frozen=True)
class BalanceResult:
    """Outcome of one balancing solve."""

    power: np.ndarray   # strictly positive, sums to the power budget
    level: float        # achieved-to-target ratio, 1 / eigenvalue
    eigenvalue: float


def _extended(d: np.ndarray, coupling: np.ndarray, noise: SystemNoise) -> np.ndarray:
    k = d.shape[0]
    dc = d[:, None] * coupling
    rhs = (np.pi * noise.sigma2 / 2.0) * d
    ext = np.empty((k + 1, k + 1))
    ext[:k, :k] = dc
    ext[:k, k] = rhs
    ext[k, :k] = dc.sum(axis=0) / noise.p_bs
    ext[k, k] = rhs.sum() / noise.p_bs
    return ext


def build_extended_dl(d, psi, noise: SystemNoise) -> np.ndarray:
    """Extended downlink coupling matrix (blocks built on D Psi)."""
    d = as_power_vector(d, name="D diagonal")
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (d.size, d.size):
        raise BadDims(f"Psi must be ({d.size}, {d.size}), got {psi.shape}")
    return _extended(d, psi, noise)


def build_extended_ul(d, psi, noise: SystemNoise) -> np.ndarray:
    """Extended uplink coupling matrix (blocks built on D Psi^T)."""
    d = as_power_vector(d, name="D diagonal")
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (d.size, d.size):
        raise BadDims(f"Psi must be ({d.size}, {d.size}), got {psi.shape}")
    return _extended(d, psi.T, noise)


def coupling_system(t_mat, ch: ChannelSet, targets, noise: SystemNoise) -> CouplingSystem:
    """Assemble D, Psi, and both extended matrices for a beamformer matrix."""
    d = build_d(t_mat, ch, targets)
    psi = build_psi(t_mat, ch)
    return CouplingSystem(
        d=d, psi=psi, noise=noise,
        upsilon=_extended(d, psi, noise),
        lam=_extended(d, psi.T, noise),
    )


def solve_balance(system: CouplingSystem, side: str = "dl") -> BalanceResult:
    """Max-min power allocation for one link direction.

    The power vector is the leading K entries of the Perron eigenvector of
    the extended matrix, scaled so the last entry is one; the balance level
    is the reciprocal eigenvalue. The eigensystem structure forces the power
    sum onto the budget, which is re-checked here as a sanity gate.
    """
    if side not in ("dl", "ul"):
        raise ValueError(f"side must be 'dl' or 'ul', got {side!r}")
    ext = system.upsilon if side == "dl" else system.lam
    pair = dominant_nonneg_eigpair(ext, tol=_EIG_TOL, max_iter=_EIG_MAX_ITER)
    vec = pair.vector
    if pair.value <= 0.0 or vec[-1] <= 0.0:
        raise NonPositiveEigenvector(
            f"degenerate {side} coupling system (lambda={pair.value:.3g})")
    power = vec[:-1] / vec[-1]
    if np.any(power <= 0.0):
        raise NonPositiveEigenvector(
            f"{side} power vector is not strictly positive (min={power.min():.3g})")
    total = float(power.sum())
    if abs(total - system.noise.p_bs) > 1e-8 * system.noise.p_bs:
        raise OneBitError(
            f"sum-power identity violated: {total:.12g} != {system.noise.p_bs:.12g}")
    return BalanceResult(power=power, level=1.0 / pair.value, eigenvalue=pair.value)


def closed_form_power(system: CouplingSystem, side: str = "dl") -> np.ndarray:
    """Fixed-point solve (pi sigma^2/2) (I - D C)^{-1} D 1 with C = Psi or Psi^T.

    Valid when the targets are exactly met (balance level 1); away from that
    point the eigenvector extraction is the authoritative max-min answer.
    """
    coupling = system.psi if side == "dl" else system.psi.T
    k = system.n_users
    lhs = np.eye(k) - system.d[:, None] * coupling
    rhs = (np.pi * system.noise.sigma2 / 2.0) * system.d
    return np.linalg.solve(lhs, rhs)


@dataclass(frozen=True)
class DualityReport:
    """Numerical record of one uplink/downlink duality check."""

    q: np.ndarray
    p: np.ndarray
    level_dl: float
    level_ul: float
    sum_q: float
    sum_p: float
    power_gap: float        # | ||p||_1 - ||q||_1 |
    level_gap: float        # relative |R_ul - R_dl|
    closed_form_gap: float  # relative eigenvector-vs-fixed-point gap at level 1
    ok: bool


def verify_duality(t_mat, targets, ch: ChannelSet, noise: SystemNoise,
                   rtol: float = 1e-8) -> DualityReport:
    """Check that both link directions need the same power and balance level.

    Solves the downlink and uplink balancing problems for the same beams and
    targets, asserts total-power and level agreement, and cross-checks the
    eigenvector route against the closed-form fixed point after rescaling the
    targets so they are exactly met.
    """
    system = coupling_system(t_mat, ch, targets, noise)
    dl = solve_balance(system, "dl")
    ul = solve_balance(system, "ul")
    power_gap = abs(dl.power.sum() - ul.power.sum())
    level_gap = abs(ul.level - dl.level) / dl.level

    # at targets * level the balance point is exactly met, so the fixed-point
    # formula must reproduce the eigenvector powers
    scaled = coupling_system(t_mat, ch, np.asarray(targets, float) * dl.level, noise)
    q_eig = solve_balance(scaled, "dl").power
    q_cf = closed_form_power(scaled, "dl")
    closed_form_gap = float(np.max(np.abs(q_cf - q_eig)) / np.max(np.abs(q_eig)))

    ok = power_gap <= rtol * noise.p_bs and level_gap <= rtol
    if not ok:
        raise DualityViolation(
            f"duality violated: ||p||={ul.power.sum():.12g} vs ||q||={dl.power.sum():.12g}, "
            f"R_ul={ul.level:.12g} vs R_dl={dl.level:.12g}")
    return DualityReport(
        q=dl.power, p=ul.power, level_dl=dl.level, level_ul=ul.level,
        sum_q=float(dl.power.sum()), sum_p=float(ul.power.sum()),
        power_gap=power_gap, level_gap=level_gap,
        closed_form_gap=closed_form_gap, ok=ok)
