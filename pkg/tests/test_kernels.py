import os
import subprocess
import sys

import numpy as np
import pytest

from qfim import _kernels
from qfim.ensembles import random_density, random_derivatives

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


def _inputs(dim, rng, rank=None):
    rho = random_density(dim, rng, rank)
    d = random_derivatives(dim, 3, rng).stack()
    u = rho.eigenvectors
    dk = np.ascontiguousarray(np.einsum("ak,iab,bl->ikl", u.conj(), d, u))
    return rho, dk


@pytest.mark.parametrize("dim", [1, 2, 5, 8])
def test_kron_sum_loops_match_numpy(rng, dim):
    a = random_density(dim, rng).matrix
    ref = _kernels.kron_sum_numpy(a)
    np.testing.assert_allclose(_kernels._kron_sum_loops(a), ref, atol=1e-15)
    eye = np.eye(dim)
    np.testing.assert_allclose(ref, np.kron(a.conj(), eye) + np.kron(eye, a), atol=0)


@pytest.mark.parametrize("dim,rank", [(2, None), (4, None), (6, 2), (4, 1)])
def test_spectral_loops_match_numpy(rng, dim, rank):
    rho, dk = _inputs(dim, rng, rank)
    tol = dim * np.finfo(float).eps
    p = np.where(rho.eigenvalues > rho.tol_rank, rho.eigenvalues, 0.0)
    np.testing.assert_allclose(
        _kernels._spectral_qfim_loops(dk, p, tol), _kernels.spectral_qfim_numpy(dk, p, tol), rtol=1e-12, atol=1e-12
    )
    np.testing.assert_allclose(
        _kernels._spectral_sld_loops(dk, p, tol), _kernels.spectral_sld_numpy(dk, p, tol), rtol=1e-13, atol=0
    )


@needs_numba
@pytest.mark.parametrize("name", sorted(_kernels.IMPLEMENTATIONS))
def test_numba_and_numpy_backends_agree(rng, name):
    rho, dk = _inputs(5, rng)
    args = {
        "kron_sum": (np.ascontiguousarray(rho.matrix),),
        "spectral_qfim": (dk, rho.eigenvalues, 5 * np.finfo(float).eps),
        "spectral_sld": (dk, rho.eigenvalues, 5 * np.finfo(float).eps),
    }[name]
    impls = _kernels.IMPLEMENTATIONS[name]
    np.testing.assert_allclose(impls["numba"](*args), impls["numpy"](*args), rtol=1e-12, atol=1e-13)


def test_selected_backend_matches_environment():
    disabled = os.environ.get("QFIM_DISABLE_NUMBA", "").lower() in ("1", "true", "yes", "on")
    assert _kernels.BACKEND == ("numpy" if disabled or not _kernels.HAVE_NUMBA else "numba")


def test_env_flag_forces_numpy_path():
    code = "from qfim import _kernels as k; print(k.BACKEND, k.kron_sum is k.kron_sum_numpy)"
    env = dict(os.environ, QFIM_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "True"]
