"""Hot inner loops with a numba path and a pure-numpy path.

The backend is chosen once at import time. Set ``QFIM_DISABLE_NUMBA=1`` to
force the numpy implementations (useful for debugging, or where numba is
unavailable). Both implementations are always importable under explicit
names so they can be tested and benchmarked against each other.
"""

import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

_DISABLED = os.environ.get("QFIM_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")
USE_NUMBA = HAVE_NUMBA and not _DISABLED
BACKEND = "numba" if USE_NUMBA else "numpy"


def _njit(fn):
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# --- Kronecker sum  conj(A) (x) I + I (x) A -------------------------------

def kron_sum_numpy(a):
    n = a.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    return np.kron(a.conj(), eye) + np.kron(eye, a)


def _kron_sum_loops(a):
    n = a.shape[0]
    out = np.zeros((n * n, n * n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            aij = np.conj(a[i, j])
            # conj(A) (x) I : block (i, j) is conj(a_ij) * I
            for k in range(n):
                out[i * n + k, j * n + k] += aij
        # I (x) A : diagonal block (i, i) is A
        for k in range(n):
            for l in range(n):
                out[i * n + k, i * n + l] += a[k, l]
    return out


kron_sum_numba = _njit(_kron_sum_loops)


# --- Spectral-sum QFIM in the eigenbasis ----------------------------------
# dk[i] = U^dag d_i(rho) U ; p = eigenvalues ; pairs with p_k + p_l <= tol dropped

def spectral_qfim_numpy(dk, p, tol):
    s = p[:, None] + p[None, :]
    w = np.where(s > tol, 1.0 / np.where(s > tol, s, 1.0), 0.0)
    # H_ij = 2 sum_kl dk[i,k,l] dk[j,l,k] w_kl
    return 2.0 * np.einsum("ikl,jlk,kl->ij", dk, dk, w)


def _spectral_qfim_loops(dk, p, tol):
    n_par = dk.shape[0]
    d = dk.shape[1]
    h = np.zeros((n_par, n_par), dtype=np.complex128)
    for k in range(d):
        for l in range(d):
            s = p[k] + p[l]
            if s <= tol:
                continue
            inv = 1.0 / s
            for i in range(n_par):
                a = dk[i, k, l] * inv
                for j in range(n_par):
                    h[i, j] += a * dk[j, l, k]
    return 2.0 * h


spectral_qfim_numba = _njit(_spectral_qfim_loops)


def spectral_sld_numpy(dk, p, tol):
    s = p[:, None] + p[None, :]
    w = np.where(s > tol, 2.0 / np.where(s > tol, s, 1.0), 0.0)
    return dk * w[None, :, :]


def _spectral_sld_loops(dk, p, tol):
    n_par = dk.shape[0]
    d = dk.shape[1]
    out = np.zeros_like(dk)
    for k in range(d):
        for l in range(d):
            s = p[k] + p[l]
            if s <= tol:
                continue
            w = 2.0 / s
            for i in range(n_par):
                out[i, k, l] = dk[i, k, l] * w
    return out


spectral_sld_numba = _njit(_spectral_sld_loops)


if USE_NUMBA:
    kron_sum = kron_sum_numba
    spectral_qfim = spectral_qfim_numba
    spectral_sld = spectral_sld_numba
else:
    kron_sum = kron_sum_numpy
    spectral_qfim = spectral_qfim_numpy
    spectral_sld = spectral_sld_numpy

IMPLEMENTATIONS = {
    "kron_sum": {"numpy": kron_sum_numpy, "numba": kron_sum_numba},
    "spectral_qfim": {"numpy": spectral_qfim_numpy, "numba": spectral_qfim_numba},
    "spectral_sld": {"numpy": spectral_sld_numpy, "numba": spectral_sld_numba},
}
