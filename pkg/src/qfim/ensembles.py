"""Seeded random states and derivatives for tests and benchmarks."""

import numpy as np

from .states import DerivativeSet, validate_density


def ginibre(dim, rng, cols=None):
    cols = dim if cols is None else cols
    return (rng.standard_normal((dim, cols)) + 1j * rng.standard_normal((dim, cols))) / np.sqrt(2)


def random_density(dim, rng, rank=None):
    """``G G^dag / tr(G G^dag)`` with complex Gaussian ``G`` of shape dim x rank."""
    g = ginibre(dim, rng, rank)
    r = g @ g.conj().T
    return validate_density(r / np.trace(r).real)


def random_hermitian(dim, rng):
    g = ginibre(dim, rng)
    return 0.5 * (g + g.conj().T)


def random_traceless_hermitian(dim, rng):
    h = random_hermitian(dim, rng)
    return h - (np.trace(h) / dim) * np.eye(dim)


def random_derivatives(dim, n_params, rng):
    return DerivativeSet([random_traceless_hermitian(dim, rng) for _ in range(n_params)])


def random_unitary(dim, rng):
    q, r = np.linalg.qr(ginibre(dim, rng))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_tangent_derivatives(rho, n_params, rng):
    """Derivatives of a rank-preserving family through ``rho``.

    Each partial is ``i [G, rho] + U diag(dp) U^dag`` with ``dp`` supported on
    the range of ``rho`` and summing to zero, so the block on the kernel of
    ``rho`` vanishes as it must for a smooth family of states.
    """
    rho = validate_density(rho)
    d = rho.dim
    support = rho.eigenvalues > rho.tol_rank
    u = rho.eigenvectors
    out = []
    for _ in range(n_params):
        g = random_hermitian(d, rng)
        part = 1j * (g @ rho.matrix - rho.matrix @ g)
        dp = np.zeros(d)
        if support.sum() > 1:
            dp[support] = rng.standard_normal(support.sum())
            dp[support] -= dp[support].mean()
        part = part + (u * dp) @ u.conj().T
        out.append(part)
    return DerivativeSet(out)
