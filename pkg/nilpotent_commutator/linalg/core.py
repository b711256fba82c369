"""Dense matrix foundation: norms, singular values, roots and inverses."""

import logging

import numpy as np
from scipy import linalg

from .base import (
    DEFAULT_TOLERANCES,
    Matrix,
    MatrixFormatError,
    NotHermitian,
    NotPSD,
    ShapeMismatch,
    Tolerances,
)

logger = logging.getLogger(__name__)


def as_matrix(m) -> Matrix:
    """Coerce an array-like into a finite complex128 2D array."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2:
        raise ShapeMismatch(f"Expected a 2D matrix, got {arr.ndim} dimensions")
    if not np.all(np.isfinite(arr)):
        raise MatrixFormatError("Matrix has non-finite entries")
    return arr


def adjoint(m: Matrix) -> Matrix:
    return np.conj(m).T


def singular_values(m) -> np.ndarray:
    """Singular values in descending order, with multiplicity."""
    m = as_matrix(m)
    if m.size == 0:
        return np.zeros(0)
    return linalg.svdvals(m)


def op_norm(m) -> float:
    """Spectral norm; 0 for empty matrices."""
    s = singular_values(m)
    return float(s[0]) if s.size else 0.0


def fro_norm(m) -> float:
    return float(np.linalg.norm(m)) if np.size(m) else 0.0


def hermitian_part(m: Matrix) -> Matrix:
    return (m + adjoint(m)) / 2


def psd_root(m, p: int, tol: Tolerances = DEFAULT_TOLERANCES) -> Matrix:
    """Hermitian PSD p-th root through an eigendecomposition.

    Eigenvalues inside the negative tolerance are clipped to zero before the
    root is taken; anything further below raises `NotPSD`.
    """
    if p < 1:
        raise ValueError(f"Root order must be positive, got {p}")
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"psd_root needs a square matrix, got {m.shape}")
    if m.size == 0:
        return m.copy()

    scale = op_norm(m)
    asym = op_norm(m - adjoint(m))
    if asym > tol.herm * scale:
        raise NotHermitian(
            f"Symmetry residual {asym:.3e} exceeds {tol.herm:.1e} relative to {scale:.3e}"
        )
    if scale == 0.0:
        return np.zeros_like(m)

    w, v = linalg.eigh(hermitian_part(m))
    if w[0] < -tol.psd * scale:
        raise NotPSD(f"Eigenvalue {w[0]:.3e} below -{tol.psd:.1e} * {scale:.3e}")
    if w[0] < 0:
        logger.debug("Clipping %d negative eigenvalues (min %.3e)", int(np.sum(w < 0)), w[0])
    w = np.clip(w, 0.0, None)
    root = (v * w ** (1.0 / p)) @ adjoint(v)
    return hermitian_part(root)


def gram_root(k, p: int) -> Matrix:
    """`(K K*)^{1/p}` computed from the SVD of the factor K.

    Working on K instead of K K* keeps the small singular values of K out of
    the squared roundoff floor of an explicit Gram matrix.
    """
    if p < 1:
        raise ValueError(f"Root order must be positive, got {p}")
    k = as_matrix(k)
    rows = k.shape[0]
    if k.size == 0:
        return np.zeros((rows, rows), dtype=np.complex128)
    u, s, _ = linalg.svd(k, full_matrices=False)
    root = (u * s ** (2.0 / p)) @ adjoint(u)
    return hermitian_part(root)


def pinv(m) -> Matrix:
    """Moore-Penrose pseudoinverse with cutoff `max(rows, cols) * eps * s_1`."""
    m = as_matrix(m)
    if m.size == 0:
        return np.zeros((m.shape[1], m.shape[0]), dtype=np.complex128)
    return linalg.pinv(m)


def commutator(b, c) -> Matrix:
    b, c = as_matrix(b), as_matrix(c)
    if b.shape != c.shape or b.shape[0] != b.shape[1]:
        raise ShapeMismatch(f"Cannot commute {b.shape} with {c.shape}")
    return b @ c - c @ b


def embed_padded(a, size: int) -> Matrix:
    """`A ⊕ 0` on a `size`-dimensional space."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1] or a.shape[0] > size:
        raise ShapeMismatch(f"Cannot embed {a.shape} into {size}x{size}")
    out = np.zeros((size, size), dtype=np.complex128)
    out[: a.shape[0], : a.shape[1]] = a
    return out


def unitarity_residual(u) -> float:
    u = as_matrix(u)
    eye = np.eye(u.shape[0], dtype=np.complex128)
    return max(op_norm(u @ adjoint(u) - eye), op_norm(adjoint(u) @ u - eye))


def haar_unitary(dim: int, rng: np.random.Generator) -> Matrix:
    """Haar-distributed unitary from QR of a complex Gaussian matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = linalg.qr(z)
    d = np.diag(r)
    phases = np.where(np.abs(d) > 0, d / np.where(d == 0, 1, np.abs(d)), 1)
    return q * phases
