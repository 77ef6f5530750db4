"""1-bit quantization chain.

Sign quantizer, Bussgang gain, exact arcsine-law covariances of the quantized
signal, the small-angle (uncorrelated distortion) approximation, and the
diagonal metric used to judge how close the distortion is to uncorrelated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import CorrelationOutOfRange, ZeroDiagonal, ZeroMatrix
from .validation import as_complex_matrix, check_hermitian

TWO_OVER_PI = 2.0 / np.pi
# distortion variance of one unit-power branch under the small-angle model
QUANT_NOISE_FLOOR = 1.0 - TWO_OVER_PI

_SQRT1_2 = 1.0 / np.sqrt(2.0)
_CLAMP_SLACK = 1e-12


@dataclass(frozen=True)
class QuantModel:
    """Second-order model of a 1-bit quantizer driven by a Gaussian vector.

    Attributes
    ----------
    r_y : pre-quantization covariance (Hermitian PSD)
    bussgang : diagonal of the Bussgang gain matrix, sqrt(2/pi)/sqrt(diag(r_y))
    r_r : covariance of the quantized signal (exact arcsine law), unit diagonal
    r_eta : distortion covariance r_r - A r_y A^H
    """

    r_y: np.ndarray
    bussgang: np.ndarray
    r_r: np.ndarray
    r_eta: np.ndarray


def one_bit(y) -> np.ndarray:
    """Component-wise sign quantizer, (sgn(Re) + j sgn(Im)) / sqrt(2).

    sgn(0) = +1 on both rails, so every output entry has unit modulus.
    """
    y = np.asarray(y, dtype=np.complex128)
    re = np.where(y.real >= 0.0, 1.0, -1.0)
    im = np.where(y.imag >= 0.0, 1.0, -1.0)
    return _SQRT1_2 * (re + 1j * im)


def bussgang_gain(r_y) -> np.ndarray:
    """Diagonal of the Bussgang gain for a 1-bit quantizer, as a 1-D array."""
    r_y = as_complex_matrix(r_y, "covariance")
    d = r_y.diagonal().real
    if np.any(d <= 0.0):
        raise ZeroDiagonal(f"covariance diagonal must be positive (min={d.min():.3g})")
    return np.sqrt(TWO_OVER_PI) / np.sqrt(d)


def correlation_parts(r_y) -> tuple[np.ndarray, np.ndarray]:
    """Real and imaginary parts of the normalized correlation coefficients.

    Magnitudes beyond 1 + 1e-12 raise ``CorrelationOutOfRange`` (the input was
    not PSD); values inside the slack are clamped to +/-1 so floating-point
    drift at the boundary stays harmless.
    """
    r_y = as_complex_matrix(r_y, "covariance")
    check_hermitian(r_y, name="covariance")
    d = r_y.diagonal().real
    if np.any(d <= 0.0):
        raise ZeroDiagonal(f"covariance diagonal must be positive (min={d.min():.3g})")
    inv_sqrt = 1.0 / np.sqrt(d)
    c = r_y * np.outer(inv_sqrt, inv_sqrt)
    x, y = c.real.copy(), c.imag.copy()
    # unit diagonal is exact by definition; rounding there would be amplified
    # by the infinite arcsine slope at 1
    np.fill_diagonal(x, 1.0)
    np.fill_diagonal(y, 0.0)
    worst = max(np.abs(x).max(), np.abs(y).max())
    if worst > 1.0 + _CLAMP_SLACK:
        raise CorrelationOutOfRange(
            f"normalized correlation magnitude {worst:.12f} exceeds 1 (non-PSD input)")
    return np.clip(x, -1.0, 1.0), np.clip(y, -1.0, 1.0)


def arcsine_covariance(r_y) -> QuantModel:
    """Exact second-order model of the quantized signal.

    The quantized-signal covariance follows the arcsine law
    ``(2/pi) (asin(X) + j asin(Y))`` applied element-wise to the normalized
    correlation parts, and the distortion covariance is what remains after
    removing the Bussgang-linearized term.
    """
    r_y = as_complex_matrix(r_y, "covariance")
    a = bussgang_gain(r_y)
    x, y = correlation_parts(r_y)
    r_r = TWO_OVER_PI * (np.arcsin(x) + 1j * np.arcsin(y))
    np.fill_diagonal(r_r, 1.0)  # unit output power per branch, exactly
    linear = np.outer(a, a) * r_y
    np.fill_diagonal(linear, TWO_OVER_PI)  # a_i^2 d_i = 2/pi, exactly
    r_eta = r_r - linear
    return QuantModel(r_y=r_y, bussgang=a, r_r=r_r, r_eta=r_eta)


def small_angle_eta(r_y) -> np.ndarray:
    """Distortion covariance under asin(x) ~ x: (1 - 2/pi) * I."""
    r_y = as_complex_matrix(r_y, "covariance")
    return QUANT_NOISE_FLOOR * np.eye(r_y.shape[0])


def diagonal_metric(b) -> float:
    """||diag(B)||_F / ||B||_F; equals 1 iff B is diagonal."""
    b = np.asarray(b, dtype=np.complex128)
    total = np.linalg.norm(b)
    if total == 0.0:
        raise ZeroMatrix("diagonal metric of the zero matrix is undefined")
    return float(np.linalg.norm(np.diag(b.diagonal())) / total)
