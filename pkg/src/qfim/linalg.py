"""Dense complex linear-algebra kernels.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.
Vectorization is column-major (columns stacked top to bottom), so that
``vec(A @ B @ C) == kron(C.T, A) @ vec(B)``.
"""

import numpy as np
from scipy.linalg import lapack

from .exceptions import DimensionError, SingularityError, ValidationError

EPS = np.finfo(np.float64).eps
HERM_RTOL = 1e-10


def as_matrix(a, name="matrix"):
    """Coerce to a finite 2-D complex128 array."""
    m = np.array(a, dtype=np.complex128, copy=True)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")
    if m.size == 0:
        raise DimensionError(f"{name} is empty")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} has non-finite entries", invariant="finite")
    return m


def max_abs(a):
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def hermitian_deviation(a):
    return max_abs(a - a.conj().T)


def hermitize(a, name="matrix"):
    """Return (A + A^dag)/2 after checking A is Hermitian to within
    ``HERM_RTOL * max|A|``."""
    a = as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    dev = hermitian_deviation(a)
    tol = HERM_RTOL * max(max_abs(a), np.finfo(float).tiny)
    if dev > tol:
        raise ValidationError(
            f"{name} is not Hermitian: max |A - A^dag| = {dev:.3e} > {tol:.3e}",
            invariant="hermitian",
            magnitude=dev,
        )
    return 0.5 * (a + a.conj().T)


def vectorize(a):
    """Stack the columns of ``a`` into a single vector."""
    return np.asarray(a).reshape(-1, order="F")


def unvectorize(v, n):
    v = np.asarray(v)
    if v.ndim != 1 or v.shape[0] != n * n:
        raise DimensionError(f"vector of length {v.shape} cannot be reshaped to {n}x{n}")
    return v.reshape((n, n), order="F")


def kron(a, b):
    return np.kron(np.asarray(a), np.asarray(b))


def hermitian_eig(a):
    """Eigendecomposition ``a = U diag(w) U^dag`` of a Hermitian matrix.

    Eigenvalues are returned in ascending order. Within a degenerate
    eigenspace the choice of eigenvectors is arbitrary.
    """
    h = hermitize(a)
    w, u = np.linalg.eigh(h)
    return w, u


def solve_hpd(m, rhs):
    """Solve ``m x = rhs`` for Hermitian positive definite ``m`` by Cholesky.

    ``rhs`` may be a vector or a matrix of column right-hand sides. Raises
    :class:`SingularityError` with the offending pivot when the
    factorization breaks down.
    """
    m = np.asarray(m, dtype=np.complex128)
    rhs = np.asarray(rhs, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"system matrix must be square, got {m.shape}")
    if rhs.shape[0] != m.shape[0]:
        raise DimensionError(f"rhs length {rhs.shape[0]} does not match system size {m.shape[0]}")
    c, info = lapack.zpotrf(m, lower=1, clean=1)
    if info > 0:
        pivot = float(np.real(c[info - 1, info - 1]))
        raise SingularityError(
            f"Cholesky factorization failed at leading minor {info} (pivot {pivot:.3e}); "
            "matrix is singular or indefinite",
            smallest_pivot=pivot,
        )
    if info < 0:  # pragma: no cover
        raise ValueError(f"zpotrf illegal argument {-info}")
    x, info = lapack.zpotrs(c, rhs, lower=1)
    if info != 0:  # pragma: no cover
        raise ValueError(f"zpotrs illegal argument {-info}")
    return x


def pseudoinverse_apply(m, rhs, rtol=None):
    """Apply the Moore-Penrose pseudoinverse of a Hermitian PSD matrix.

    Eigenvalues at or below ``rtol * lambda_max`` are treated as zero; the
    default ``rtol`` is ``n * eps``.
    """
    m = np.asarray(m, dtype=np.complex128)
    rhs = np.asarray(rhs, dtype=np.complex128)
    n = m.shape[0]
    if rtol is None:
        rtol = n * EPS
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    lam_max = max(float(w[-1]), 0.0)
    keep = w > rtol * lam_max
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    coeff = v.conj().T @ rhs
    if coeff.ndim == 1:
        return v @ (inv * coeff)
    return v @ (inv[:, None] * coeff)


def matrix_exp(a, scale=1.0):
    """``exp(scale * a)`` for Hermitian ``a`` via its eigendecomposition.

    ``scale`` may be complex; ``scale=-1j`` gives the unitary ``exp(-i a)``.
    """
    w, u = hermitian_eig(a)
    return (u * np.exp(scale * w)) @ u.conj().T


def matrix_exp_batch(a, scales):
    """Stack of ``exp(s * a)`` for each ``s`` in ``scales``, sharing one
    eigendecomposition of the Hermitian matrix ``a``."""
    w, u = hermitian_eig(a)
    scales = np.asarray(scales)
    expw = np.exp(np.multiply.outer(scales, w))
    return np.einsum("ij,nj,kj->nik", u, expw, u.conj(), optimize=True)
