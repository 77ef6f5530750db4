"""Dense complex linear-algebra substrate.

Hermitian eigendecomposition, Perron (dominant non-negative) eigenpairs,
dominant generalized eigenvectors of Hermitian pairs, and orthonormal
nullspaces. Everything here is pure and reentrant; matrices are small and
dense so LAPACK (via numpy/scipy) backs the direct decompositions, while the
Perron solve is a power iteration with a dense fallback for degenerate input.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .exceptions import (
    BadDims,
    NoConvergence,
    NonHermitian,
    NotPositiveDefinite,
    RankDeficient,
)
from .validation import as_complex_matrix, check_hermitian, check_square


class EigenPair(NamedTuple):
    """A real eigenvalue with its unit-norm eigenvector."""

    value: float
    vector: np.ndarray


def hermitian_eig(a, rtol: float = 1e-10) -> list[EigenPair]:
    """Full eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Parameters
    ----------
    a : array_like
        Square complex matrix, Hermitian within ``rtol`` (Frobenius-relative).
    rtol : float
        Symmetry tolerance; violation raises ``NonHermitian``.

    Returns
    -------
    list of EigenPair sorted by descending eigenvalue, vectors orthonormal.
    """
    a = as_complex_matrix(a, "matrix")
    check_hermitian(a, rtol)
    w, v = np.linalg.eigh(a)
    order = np.argsort(w)[::-1]
    return [EigenPair(float(w[i]), v[:, i].copy()) for i in order]


def _positive_phase(t: np.ndarray) -> np.ndarray:
    """Rotate so the largest-magnitude entry is real positive (deterministic sign)."""
    i = int(np.argmax(np.abs(t)))
    pivot = t[i]
    mag = abs(pivot)
    if mag == 0.0:
        return t
    return t * (pivot.conj() / mag)


def _dense_nonneg_fallback(m: np.ndarray, tol: float) -> EigenPair:
    """Dense eigensolve; pick the largest real eigenvalue with a non-negative vector."""
    w, v = np.linalg.eig(m)
    scale = max(np.linalg.norm(m), np.finfo(float).tiny)
    order = np.argsort(w.real)[::-1]
    for i in order:
        if abs(w[i].imag) > 1e-8 * scale:
            continue
        vec = _positive_phase(v[:, i])
        if np.linalg.norm(vec.imag) > 1e-8:
            continue
        vec = vec.real
        if np.any(vec < -1e-8):
            continue
        vec = np.clip(vec, 0.0, None)
        nrm = np.linalg.norm(vec)
        if nrm == 0.0:
            continue
        vec /= nrm
        lam = float(w[i].real)
        if np.linalg.norm(m @ vec - lam * vec) <= max(tol, 1e-8) * scale:
            return EigenPair(lam, vec)
    raise NoConvergence(
        "no eigenpair with a non-negative eigenvector found (degenerate matrix)")


def dominant_nonneg_eigpair(m, tol: float = 1e-10, max_iter: int = 10_000) -> EigenPair:
    """Perron eigenpair of an entrywise non-negative real matrix.

    Power iteration from a strictly positive start with a Rayleigh-quotient
    estimate, stopping when ``||Mv - lambda v|| <= tol * ||M||_F``. Reducible
    or numerically borderline matrices fall back to a full dense eigensolve;
    ``NoConvergence`` signals that no non-negative eigenpair exists.

    Returns
    -------
    EigenPair with an entrywise non-negative, unit-norm eigenvector.
    """
    m = np.asarray(m, dtype=float)
    check_square(m, "matrix")
    if np.any(m < 0):
        raise BadDims("matrix must be entrywise non-negative")
    n = m.shape[0]
    scale = np.linalg.norm(m)
    v = np.full(n, 1.0 / np.sqrt(n))
    if scale == 0.0:
        return EigenPair(0.0, v)
    lam = float(v @ m @ v)
    for _ in range(max_iter):
        w = m @ v
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            # start vector fell into the kernel: reducible structure
            return _dense_nonneg_fallback(m, tol)
        v = w / nrm
        lam = float(v @ (m @ v))
        if np.linalg.norm(m @ v - lam * v) <= tol * scale:
            return EigenPair(lam, v)
    return _dense_nonneg_fallback(m, tol)


def generalized_dominant_eigvec(r, qm) -> np.ndarray:
    """Unit vector maximizing the generalized Rayleigh quotient t^H R t / t^H Q t.

    Factors the Hermitian positive-definite metric ``qm = L L^H`` and solves
    the standard Hermitian problem on ``L^{-1} R L^{-H}`` (LAPACK's reduction).
    The returned vector has unit 2-norm and its largest-magnitude entry made
    real positive.

    Raises
    ------
    NotPositiveDefinite
        If the Cholesky factorization of ``qm`` fails.
    """
    r = as_complex_matrix(r, "numerator matrix")
    qm = as_complex_matrix(qm, "metric matrix")
    check_hermitian(r, name="numerator matrix")
    check_hermitian(qm, name="metric matrix")
    if r.shape != qm.shape:
        raise BadDims(f"shape mismatch: {r.shape} vs {qm.shape}")
    n = r.shape[0]
    # exact Hermitian parts keep LAPACK happy after round-off
    r = 0.5 * (r + r.conj().T)
    qm = 0.5 * (qm + qm.conj().T)
    try:
        _, vecs = scipy.linalg.eigh(r, qm, subset_by_index=(n - 1, n - 1))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"metric matrix is not positive definite: {exc}") from exc
    t = vecs[:, 0]
    t = t / np.linalg.norm(t)
    return _positive_phase(t)


def nullspace(h, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the right nullspace of a fat full-rank matrix.

    Parameters
    ----------
    h : array_like, shape (K, N) with K < N
    tol : float
        Singular values below ``tol * sigma_max`` count as zero.

    Returns
    -------
    (N - K, N) array whose rows w satisfy ``h @ w.conj() ~ 0`` and are
    mutually orthonormal.
    """
    h = as_complex_matrix(h, "matrix")
    k, n = h.shape
    if k >= n:
        raise BadDims(f"need more columns than rows, got shape {h.shape}")
    _, s, vh = np.linalg.svd(h)
    if s[-1] <= tol * s[0]:
        raise RankDeficient(
            f"matrix is rank deficient (sigma_min/sigma_max = {s[-1] / s[0]:.3e})")
    return vh[k:].copy()
