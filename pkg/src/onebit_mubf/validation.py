"""Input validation helpers shared by the functional API and the estimators."""

from __future__ import annotations

import numpy as np

from .exceptions import BadDims, NegativePower, NonHermitian

HERMITIAN_RTOL = 1e-10


def as_complex_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D complex128 array."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise BadDims(f"{name} must be 2-D, got ndim={a.ndim}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise BadDims(f"{name} contains non-finite entries")
    return a


def as_power_vector(q, n: int | None = None, name: str = "power vector") -> np.ndarray:
    """Coerce to a finite 1-D float array with non-negative entries."""
    q = np.asarray(q, dtype=float)
    if q.ndim != 1:
        raise BadDims(f"{name} must be 1-D, got ndim={q.ndim}")
    if not np.all(np.isfinite(q)):
        raise BadDims(f"{name} contains non-finite entries")
    if np.any(q < 0):
        raise NegativePower(f"{name} has negative entries (min={q.min():.3g})")
    if n is not None and q.shape[0] != n:
        raise BadDims(f"{name} has length {q.shape[0]}, expected {n}")
    return q


def check_square(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    if a.shape[0] != a.shape[1]:
        raise BadDims(f"{name} must be square, got shape {a.shape}")
    return a


def check_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL,
                    name: str = "matrix") -> np.ndarray:
    """Raise NonHermitian unless ||A - A^H||_F <= rtol * ||A||_F."""
    check_square(a, name)
    scale = np.linalg.norm(a)
    defect = np.linalg.norm(a - a.conj().T)
    if defect > rtol * max(scale, np.finfo(float).tiny):
        raise NonHermitian(
            f"{name} is not Hermitian: defect {defect:.3e} > {rtol:.0e} * {scale:.3e}")
    return a


def check_beamformer(T, n_antennas: int | None = None, tol: float = 1e-10) -> np.ndarray:
    """Validate a beamformer matrix: complex N x K with unit-norm columns."""
    T = as_complex_matrix(T, "beamformer matrix")
    if n_antennas is not None and T.shape[0] != n_antennas:
        raise BadDims(
            f"beamformer matrix has {T.shape[0]} rows, expected {n_antennas} antennas")
    norms = np.linalg.norm(T, axis=0)
    if np.any(np.abs(norms - 1.0) > tol):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise BadDims(f"beamformer columns must be unit norm (worst defect {worst:.3e})")
    return T


def as_targets(targets, k: int) -> np.ndarray:
    """Broadcast a scalar or length-K sequence of positive linear SQINR targets."""
    g = np.asarray(targets, dtype=float)
    if g.ndim == 0:
        g = np.full(k, float(g))
    if g.shape != (k,):
        raise BadDims(f"targets must be scalar or length {k}, got shape {g.shape}")
    if np.any(g <= 0) or not np.all(np.isfinite(g)):
        raise BadDims("targets must be positive and finite")
    return g
