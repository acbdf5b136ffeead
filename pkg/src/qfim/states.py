"""Density matrices, parametrized state families and their derivatives."""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import DimensionError, DomainError, ValidationError
from .linalg import EPS, as_matrix, hermitian_deviation, hermitize, matrix_exp, max_abs

TRACE_TOL = 1e-10
PSD_TOL = 1e-10
DERIV_TOL = 1e-8
COMMUTE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated density matrix together with its spectrum.

    Build instances with :func:`validate_density`; the constructor itself
    trusts its arguments.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def tol_rank(self) -> float:
        return self.dim * EPS * max(float(self.eigenvalues[-1]), 0.0)

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.eigenvalues > self.tol_rank))

    @property
    def full_rank(self) -> bool:
        return self.rank == self.dim

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def validate_density(m) -> DensityMatrix:
    """Check Hermiticity, unit trace and positivity, then cache the spectrum."""
    if isinstance(m, DensityMatrix):
        return m
    h = hermitize(m, "density matrix")
    tr = complex(np.trace(h))
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValidationError(
            f"density matrix trace is {tr.real:.12g}, expected 1", invariant="trace", magnitude=tr.real
        )
    w, u = np.linalg.eigh(h)
    if w[0] < -PSD_TOL:
        raise ValidationError(
            f"density matrix has negative eigenvalue {w[0]:.3e}",
            invariant="positive-semidefinite",
            magnitude=float(w[0]),
        )
    return DensityMatrix(h, w, u)


def regularize(rho: DensityMatrix, nu: float) -> DensityMatrix:
    """White-noise mixture ``(1 - nu) rho + (nu / dim) I``, full rank for 0 < nu < 1."""
    if not 0.0 < nu < 1.0:
        raise DomainError(f"nu must lie in (0, 1), got {nu}")
    rho = validate_density(rho)
    d = rho.dim
    mat = (1.0 - nu) * rho.matrix + (nu / d) * np.eye(d)
    w = (1.0 - nu) * rho.eigenvalues + nu / d
    return DensityMatrix(mat, w, rho.eigenvectors)


class DerivativeSet(Sequence):
    """Partial derivatives of a density matrix, one per parameter.

    Each partial must be Hermitian and traceless to within ``tol``; it is
    stored Hermitized.
    """

    def __init__(self, partials, tol=DERIV_TOL):
        mats = []
        for i, p in enumerate(partials):
            a = as_matrix(p, f"derivative {i}")
            if a.shape[0] != a.shape[1]:
                raise DimensionError(f"derivative {i} must be square, got {a.shape}")
            scale = max(1.0, max_abs(a))
            dev = hermitian_deviation(a)
            if dev > tol * scale:
                raise ValidationError(
                    f"derivative {i} is not Hermitian (max deviation {dev:.3e})",
                    invariant="hermitian",
                    magnitude=dev,
                )
            a = 0.5 * (a + a.conj().T)
            tr = abs(np.trace(a))
            if tr > tol * scale:
                raise ValidationError(
                    f"derivative {i} is not traceless (|tr| = {tr:.3e})", invariant="traceless", magnitude=tr
                )
            mats.append(a)
        if mats and len({m.shape for m in mats}) != 1:
            raise DimensionError("derivatives have inconsistent shapes")
        self.partials = mats

    def __len__(self):
        return len(self.partials)

    def __getitem__(self, i):
        return self.partials[i]

    @property
    def n_params(self) -> int:
        return len(self.partials)

    def stack(self) -> np.ndarray:
        return np.array(self.partials, dtype=np.complex128)

    def combine(self, deps) -> np.ndarray:
        """Total differential ``sum_i d_i(rho) * deps_i``."""
        deps = np.asarray(deps, dtype=float)
        if deps.shape != (len(self),):
            raise DimensionError(f"expected {len(self)} parameter increments, got {deps.shape}")
        return np.tensordot(deps, self.stack(), axes=1)


def as_derivatives(d) -> DerivativeSet:
    if isinstance(d, DerivativeSet):
        return d
    if isinstance(d, np.ndarray) and d.ndim == 2:
        d = [d]
    return DerivativeSet(d)


def _fd_step(x):
    return np.cbrt(EPS) * max(1.0, abs(x))


@dataclass
class StateFamily:
    """A map from a real parameter vector to a density matrix.

    ``evaluate`` returns the matrix at a parameter point. When ``derivative``
    is given it must return the list of analytic partials; otherwise central
    finite differences are used.
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    n_params: int
    dim: int
    derivative: Optional[Callable[[np.ndarray], Sequence[np.ndarray]]] = None
    parameter_names: list = field(default_factory=list)

    def __post_init__(self):
        if not self.parameter_names:
            self.parameter_names = [f"p{i}" for i in range(self.n_params)]

    @property
    def derivative_mode(self) -> str:
        return "analytic" if self.derivative is not None else "finite-difference"

    def density(self, eps) -> DensityMatrix:
        return validate_density(self.evaluate(self._check(eps)))

    def derivatives(self, eps) -> DerivativeSet:
        eps = self._check(eps)
        if self.derivative is None:
            return finite_difference_derivatives(self, eps)
        return DerivativeSet(self.derivative(eps))

    def at(self, eps):
        return self.density(eps), self.derivatives(eps)

    def _check(self, eps):
        eps = np.atleast_1d(np.asarray(eps, dtype=float))
        if eps.shape != (self.n_params,):
            raise DimensionError(f"expected {self.n_params} parameters, got shape {eps.shape}")
        return eps


def finite_difference_derivatives(family: StateFamily, eps) -> DerivativeSet:
    """Central differences with step ``cbrt(eps_machine) * max(1, |eps_i|)``.

    Shifted points are evaluated without density validation so that families
    touching the boundary of state space can still be differenced. Results
    are Hermitized and projected onto the traceless subspace.
    """
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    partials = []
    for i in range(eps.shape[0]):
        h = _fd_step(eps[i])
        up, down = eps.copy(), eps.copy()
        up[i] += h
        down[i] -= h
        try:
            rp = as_matrix(family.evaluate(up))
            rm = as_matrix(family.evaluate(down))
        except Exception as exc:
            err = DomainError(f"state family evaluation failed while differencing parameter {i}: {exc}")
            err.parameter_index = i
            raise err from exc
        # true step actually taken, in case eps[i] +- h rounded
        g = (rp - rm) / (up[i] - down[i])
        g = 0.5 * (g + g.conj().T)
        g -= (np.trace(g) / g.shape[0]) * np.eye(g.shape[0])
        partials.append(g)
    return DerivativeSet(partials)


class UnitaryEncoding:
    """``rho(eps) = U(eps) rho0 U(eps)^dag`` with ``U = exp(-i sum_j K_j eps_j)``."""

    def __init__(self, generators, initial_state):
        self.initial_state = validate_density(initial_state)
        d = self.initial_state.dim
        gens = []
        for j, k in enumerate(generators):
            k = hermitize(k, f"generator {j}")
            if k.shape != (d, d):
                raise DomainError(f"generator {j} has shape {k.shape}, state has dimension {d}")
            gens.append(k)
        if not gens:
            raise DomainError("at least one generator is required")
        self.generators = gens

    @property
    def n_params(self) -> int:
        return len(self.generators)

    @property
    def dim(self) -> int:
        return self.initial_state.dim

    def max_commutator(self) -> float:
        worst = 0.0
        for a in range(len(self.generators)):
            for b in range(a + 1, len(self.generators)):
                ka, kb = self.generators[a], self.generators[b]
                c = max_abs(ka @ kb - kb @ ka) / max(1.0, max_abs(ka) * max_abs(kb))
                worst = max(worst, c)
        return worst

    def commuting(self) -> bool:
        return self.max_commutator() <= COMMUTE_TOL

    def unitary(self, eps) -> np.ndarray:
        eps = np.atleast_1d(np.asarray(eps, dtype=float))
        if eps.shape != (self.n_params,):
            raise DomainError(f"expected {self.n_params} parameters, got shape {eps.shape}")
        ksum = sum(e * k for e, k in zip(eps, self.generators))
        return matrix_exp(ksum, scale=-1j)

    def generator_derivatives(self, rho0=None):
        """``-i [K_j, rho0]`` for each generator."""
        r = self.initial_state.matrix if rho0 is None else np.asarray(rho0)
        return [-1j * (k @ r - r @ k) for k in self.generators]

    def as_family(self) -> StateFamily:
        r0 = self.initial_state.matrix

        def evaluate(eps):
            u = self.unitary(eps)
            return u @ r0 @ u.conj().T

        deriv = None
        if self.commuting():
            def deriv(eps):
                u = self.unitary(eps)
                return [u @ g @ u.conj().T for g in self.generator_derivatives()]

        return StateFamily(evaluate, self.n_params, self.dim, deriv)


def encode_unitary(enc: UnitaryEncoding, eps):
    """Return the encoded state and its parameter derivatives at ``eps``.

    For commuting generators the derivatives are analytic,
    ``U (-i [K_i, rho0]) U^dag``; otherwise they are finite differences of
    the encoding map.
    """
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    if eps.shape != (enc.n_params,):
        raise DomainError(f"expected {enc.n_params} parameters (one per generator), got shape {eps.shape}")
    fam = enc.as_family()
    return fam.density(eps), fam.derivatives(eps)
