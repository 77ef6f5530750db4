"""Flat-fading channel sets: generation, file import/export, CEE perturbation.

A channel set is a K x N_BS complex matrix whose k-th row holds the entries
of user k's channel vector h_k; the rank-one covariance of user k is
R_k = h_k h_k^H. Generators are pure functions of (parameters, seed).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .exceptions import BadAlpha, BadDims, BadScenario, DimMismatch, ParseError
from .validation import as_complex_matrix

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class ChannelSet:
    """Collective channel matrix for K single-antenna users."""

    H: np.ndarray

    def __post_init__(self):
        h = as_complex_matrix(self.H, "channel matrix")
        if h.shape[0] < 1 or h.shape[1] < 1:
            raise BadDims(f"channel matrix must be non-empty, got shape {h.shape}")
        object.__setattr__(self, "H", h)

    @property
    def n_users(self) -> int:
        return self.H.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.H.shape[1]

    def covariance(self, k: int) -> np.ndarray:
        """Rank-one covariance R_k = h_k h_k^H of user k."""
        hk = self.H[k]
        return np.outer(hk, hk.conj())

    def covariances(self) -> list[np.ndarray]:
        return [self.covariance(k) for k in range(self.n_users)]

    def row_norms_sq(self) -> np.ndarray:
        return np.sum(np.abs(self.H) ** 2, axis=1)

    def stacked(self, extra_rows: np.ndarray) -> "ChannelSet":
        """Channel set extended by additional user rows (e.g. dummy users)."""
        return ChannelSet(np.vstack([self.H, extra_rows]))


@dataclass(frozen=True)
class GeometricScenario:
    """Single-cell line-of-sight placement over a sector around the array."""

    sector_deg: float = 120.0
    r_min: float = 50.0
    r_max: float = 150.0
    f_c: float = 60e9
    n_bs: int = 128
    spacing_wavelengths: float = 0.5
    element_gain_dbi: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.sector_deg <= 360.0):
            raise BadScenario(f"sector must be in (0, 360], got {self.sector_deg}")
        if not (0.0 < self.r_min < self.r_max):
            raise BadScenario(f"need 0 < r_min < r_max, got {self.r_min}, {self.r_max}")
        if self.f_c <= 0.0:
            raise BadScenario("carrier frequency must be positive")
        if self.n_bs < 1:
            raise BadScenario("need at least one antenna")
        if self.spacing_wavelengths <= 0.0:
            raise BadScenario("element spacing must be positive")


def gen_rayleigh(k: int, n_bs: int, seed: int) -> ChannelSet:
    """IID CN(0, 1) channel matrix, deterministic per seed."""
    if k < 1 or n_bs < k:
        raise BadDims(f"need 1 <= K <= N_BS, got K={k}, N_BS={n_bs}")
    rng = np.random.default_rng(seed)
    h = (rng.standard_normal((k, n_bs)) + 1j * rng.standard_normal((k, n_bs)))
    return ChannelSet(h / np.sqrt(2.0))


def free_space_amplitude(distance_m: float, f_c: float) -> float:
    """Free-space amplitude gain lambda / (4 pi d); squares to the FSPL power law."""
    return SPEED_OF_LIGHT / (4.0 * np.pi * distance_m * f_c)


def steering_vector(n_bs: int, angle_rad: float, spacing_wavelengths: float = 0.5) -> np.ndarray:
    """ULA steering vector, unit-modulus entries."""
    n = np.arange(n_bs)
    return np.exp(1j * 2.0 * np.pi * spacing_wavelengths * n * np.sin(angle_rad))


def gen_geometric(scenario: GeometricScenario, k: int, seed: int) -> ChannelSet:
    """LoS ULA channels for users placed uniformly over the scenario sector.

    Each user draws an angle uniform over the sector and a range uniform in
    [r_min, r_max]; its channel is the free-space amplitude times the array
    steering vector at that angle, with the propagation phase included.
    """
    if k < 1:
        raise BadScenario(f"need at least one user, got K={k}")
    rng = np.random.default_rng(seed)
    half = np.deg2rad(scenario.sector_deg) / 2.0
    wavelength = SPEED_OF_LIGHT / scenario.f_c
    element_amp = 10.0 ** (scenario.element_gain_dbi / 20.0)
    rows = np.empty((k, scenario.n_bs), dtype=np.complex128)
    for u in range(k):
        angle = rng.uniform(-half, half)
        dist = rng.uniform(scenario.r_min, scenario.r_max)
        gain = element_amp * free_space_amplitude(dist, scenario.f_c)
        phase = np.exp(-2j * np.pi * dist / wavelength)
        rows[u] = gain * phase * steering_vector(
            scenario.n_bs, angle, scenario.spacing_wavelengths)
    return ChannelSet(rows)


def save_channel(ch: ChannelSet, path: str | os.PathLike) -> None:
    """Write the bit-exact text format: header ``K N_BS``, then K rows of
    comma-separated ``re:im`` entries with round-trip decimal precision."""
    lines = [f"{ch.n_users} {ch.n_antennas}"]
    for row in ch.H:
        lines.append(",".join(f"{z.real:.17g}:{z.imag:.17g}" for z in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_channel(path: str | os.PathLike) -> ChannelSet:
    """Read a channel file written by ``save_channel`` (lossless round trip)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in (raw.strip() for raw in fh) if ln]
    if not lines:
        raise ParseError(f"{path}: empty channel file")
    header = lines[0].split()
    if len(header) != 2:
        raise ParseError(f"{path}:1: header must be 'K N_BS', got {lines[0]!r}")
    try:
        k, n_bs = int(header[0]), int(header[1])
    except ValueError as exc:
        raise ParseError(f"{path}:1: non-integer header token: {exc}") from exc
    body = lines[1:]
    if len(body) != k:
        raise DimMismatch(f"{path}: header declares K={k} but found {len(body)} rows")
    h = np.empty((k, n_bs), dtype=np.complex128)
    for i, line in enumerate(body):
        cells = line.split(",")
        if len(cells) != n_bs:
            raise DimMismatch(
                f"{path}:{i + 2}: expected {n_bs} entries, found {len(cells)}")
        for j, cell in enumerate(cells):
            re_im = cell.split(":")
            if len(re_im) != 2:
                raise ParseError(f"{path}:{i + 2}: malformed entry {cell!r}")
            try:
                h[i, j] = complex(float(re_im[0]), float(re_im[1]))
            except ValueError:
                raise ParseError(
                    f"{path}:{i + 2}: non-numeric token {cell!r} at column {j + 1}"
                ) from None
    return ChannelSet(h)


def perturb_channel(ch: ChannelSet, alpha: float, seed: int) -> ChannelSet:
    """Estimation-error model: h_hat = sqrt(1-a) h + sqrt(a) z.

    The perturbation z is IID complex Gaussian per entry with variance
    ||h_k||^2 / N_BS, so the expected perturbed norm matches the true one.
    """
    if not (0.0 <= alpha <= 1.0) or not np.isfinite(alpha):
        raise BadAlpha(f"alpha must lie in [0, 1], got {alpha}")
    rng = np.random.default_rng(seed)
    k, n = ch.H.shape
    z = (rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))) / np.sqrt(2.0)
    per_entry_std = np.sqrt(ch.row_norms_sq() / n)
    h_hat = np.sqrt(1.0 - alpha) * ch.H + np.sqrt(alpha) * per_entry_std[:, None] * z
    return ChannelSet(h_hat)
