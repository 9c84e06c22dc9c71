"""Dense Hermitian linear algebra kernels.

Everything downstream (QFIM support tests, pseudoinverse bounds, span
tests) is built on the four primitives in this module.  Eigendecomposition
is the single factorization used for pseudoinverses and projectors, so all
numerical-rank decisions share one cutoff convention: eigenvalues below
``rank_tol * max|eigenvalue|`` count as zero, with ``rank_tol`` defaulting
to ``dim * machine epsilon``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

HERMITICITY_TOL = 1e-12


def _as_square(a, name: str) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(np.asarray(a, complex).imag)):
        raise InvalidInput(f"{name} has non-finite entries")
    return a


def assert_hermitian(h, tol: float = HERMITICITY_TOL, name: str = "matrix") -> np.ndarray:
    """Validate Hermiticity within ``tol`` (relative to scale) and return a complex copy."""
    h = _as_square(h, name).astype(complex)
    scale = max(1.0, float(np.abs(h).max(initial=0.0)))
    if np.abs(h - h.conj().T).max(initial=0.0) > tol * scale:
        raise InvalidInput(f"{name} is not Hermitian within {tol}")
    return 0.5 * (h + h.conj().T)


def assert_real_symmetric(s, tol: float = HERMITICITY_TOL, name: str = "matrix") -> np.ndarray:
    """Validate real symmetry within ``tol`` (relative to scale) and return a float copy."""
    s = _as_square(s, name)
    if np.iscomplexobj(s):
        if np.abs(s.imag).max(initial=0.0) > tol:
            raise InvalidInput(f"{name} has a non-real part beyond {tol}")
        s = s.real
    s = s.astype(float)
    scale = max(1.0, float(np.abs(s).max(initial=0.0)))
    if np.abs(s - s.T).max(initial=0.0) > tol * scale:
        raise InvalidInput(f"{name} is not symmetric within {tol}")
    return 0.5 * (s + s.T)


def default_rank_tol(dim: int) -> float:
    return dim * np.finfo(float).eps


def eig_hermitian(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and
    eigenvectors as orthonormal columns, so ``h = V @ diag(w) @ V.conj().T``.
    """
    h = assert_hermitian(h)
    w, v = np.linalg.eigh(h)
    return w, v


def _spectral_cutoff(eigenvalues: np.ndarray, rank_tol: float | None, dim: int) -> float:
    if rank_tol is None:
        rank_tol = default_rank_tol(dim)
    if rank_tol <= 0:
        raise InvalidInput("rank_tol must be positive")
    top = float(np.abs(eigenvalues).max(initial=0.0))
    if top < 1e-300:
        # Treat numerically zero matrices as rank 0.
        return np.inf
    return rank_tol * top


def pseudo_inverse(s, rank_tol: float | None = None) -> tuple[np.ndarray, int]:
    """Moore-Penrose pseudoinverse of a real symmetric matrix.

    Eigenvalues with magnitude below ``rank_tol * max|eigenvalue|`` are
    treated as zero.  Returns ``(pinv, rank)``.
    """
    s = assert_real_symmetric(s)
    w, v = np.linalg.eigh(s)
    cut = _spectral_cutoff(w, rank_tol, s.shape[0])
    keep = np.abs(w) > cut
    inv_w = np.zeros_like(w)
    inv_w[keep] = 1.0 / w[keep]
    pinv = (v * inv_w) @ v.T
    return 0.5 * (pinv + pinv.T), int(keep.sum())


def support_projector(s, rank_tol: float | None = None) -> np.ndarray:
    """Orthogonal projector onto the support (column space) of a real symmetric matrix."""
    s = assert_real_symmetric(s)
    w, v = np.linalg.eigh(s)
    cut = _spectral_cutoff(w, rank_tol, s.shape[0])
    keep = np.abs(w) > cut
    p = v[:, keep] @ v[:, keep].T
    return 0.5 * (p + p.T)


def vectorize_hermitian(h) -> np.ndarray:
    """Real coordinates of a Hermitian matrix: an isometry onto R^(dim^2).

    Layout: diagonal entries first, then sqrt(2) * real and sqrt(2) * imaginary
    parts of the strict upper triangle (row-major i < j), so the Euclidean norm
    equals the Frobenius norm.  Real coefficients suffice for span tests among
    Hermitian matrices: imaginary combination coefficients cancel.
    """
    h = assert_hermitian(h)
    d = h.shape[0]
    iu = np.triu_indices(d, k=1)
    upper = h[iu]
    return np.concatenate([h.diagonal().real, np.sqrt(2.0) * upper.real, np.sqrt(2.0) * upper.imag])


@dataclass(frozen=True)
class SpanVerdict:
    """Outcome of a least-squares membership test of ``target`` in span(basis).

    ``in_span`` holds iff ``residual_norm <= tolerance * target_norm`` (a zero
    target is in every span).  ``coefficients`` is the minimum-norm solution.
    """

    in_span: bool
    coefficients: np.ndarray
    residual_norm: float
    tolerance: float
    target_norm: float


def residual_in_span(target, basis, tol: float) -> SpanVerdict:
    """Least-squares fit of ``target`` onto the span of ``basis`` vectors."""
    if tol <= 0:
        raise InvalidInput("tol must be positive")
    t = np.asarray(target, dtype=float).ravel()
    if not np.all(np.isfinite(t)):
        raise InvalidInput("target has non-finite entries")
    tnorm = float(np.linalg.norm(t))
    if len(basis) == 0:
        return SpanVerdict(tnorm == 0.0, np.zeros(0), tnorm, tol, tnorm)
    b = np.column_stack([np.asarray(v, dtype=float).ravel() for v in basis])
    if b.shape[0] != t.size:
        raise InvalidInput("target and basis vectors have mismatched lengths")
    if tnorm == 0.0:
        return SpanVerdict(True, np.zeros(b.shape[1]), 0.0, tol, 0.0)
    coeff, _, _, _ = np.linalg.lstsq(b, t, rcond=None)
    residual = float(np.linalg.norm(b @ coeff - t))
    return SpanVerdict(residual <= tol * tnorm, coeff, residual, tol, tnorm)
