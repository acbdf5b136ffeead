"""Quantum Fisher information matrix and symmetric logarithmic derivatives.

Six independent routes are provided:

``vectorized``
    ``H_ij = 2 vec(d_i rho)^dag M^{-1} vec(d_j rho)`` with the Kronecker sum
    ``M = conj(rho) (x) I + I (x) rho``, solved by Cholesky.
``eigen``
    spectral sum over eigenpairs with ``p_k + p_l > 0``; handles singular states.
``eigen-matrix-form``
    the same spectral formula written as ``(conj(U) (x) U) diag^{-1} (conj(U) (x) U)^dag``.
``integral``
    Gauss-Legendre quadrature of ``2 int_0^inf tr[e^{-rho t} d_i rho e^{-rho t} d_j rho] dt``.
``regularized-limit``
    vectorized route on ``(1 - nu) rho + nu I / dim`` as ``nu -> 0``.
``pseudoinverse``
    vectorized route with the Moore-Penrose pseudoinverse of ``M``.

Every route returns a :class:`QfimResult` carrying a real symmetric ``h``,
the SLDs and numerical diagnostics.
"""

import time
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import _kernels
from .exceptions import (
    ConvergenceError,
    DimensionError,
    DiscontinuityWarning,
    DivergenceError,
    DomainError,
    QfimError,
    SingularityError,
)
from .linalg import EPS, matrix_exp_batch, max_abs, pseudoinverse_apply, solve_hpd, unvectorize, vectorize
from .states import DensityMatrix, DerivativeSet, UnitaryEncoding, as_derivatives, regularize, validate_density

DISCONTINUITY_TOL = 1e-5
AGREEMENT_TOL = 1e-6


class Method(str, Enum):
    VECTORIZED = "vectorized"
    EIGEN = "eigen"
    EIGEN_MATRIX_FORM = "eigen-matrix-form"
    INTEGRAL = "integral"
    REGULARIZED_LIMIT = "regularized-limit"
    PSEUDOINVERSE = "pseudoinverse"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        aliases = {"eigen-matrix": "eigen-matrix-form", "regularized": "regularized-limit", "pinv": "pseudoinverse"}
        return cls(aliases.get(key, key))


ALL_METHODS = tuple(Method)


@dataclass
class NuSchedule:
    """Geometric schedule ``nu_k = nu0 * ratio**k`` for the regularized limit.

    The schedule is rescaled by ``min(1, dim * lambda_min)`` where
    ``lambda_min`` is the smallest non-zero eigenvalue, so that the expansion
    parameter of ``H(rho_nu)`` in ``nu`` starts at ``nu0`` or below. ``tol`` is
    relative to ``max(1, max|H|)``.
    """

    nu0: float = 1e-3
    ratio: float = 0.1
    max_steps: int = 6
    tol: float = 1e-7

    def __post_init__(self):
        if not 0.0 < self.nu0 < 1.0:
            raise DomainError(f"nu0 must lie in (0, 1), got {self.nu0}")
        if not 0.0 < self.ratio < 1.0:
            raise DomainError(f"nu ratio must lie in (0, 1), got {self.ratio}")
        if self.max_steps < 2:
            raise DomainError(f"at least two nu steps are needed, got {self.max_steps}")
        if not self.tol > 0:
            raise DomainError(f"tolerance must be positive, got {self.tol}")


@dataclass
class Quadrature:
    """Gauss-Legendre panels on ``[0, t_max_factor / lambda_min]``.

    Panels are geometrically graded from ``1 / lambda_max`` and bisected
    until successive estimates agree to ``tol`` (relative).
    """

    nodes: int = 16
    t_max_factor: float = 50.0
    tol: float = 1e-8
    max_refinements: int = 6

    def __post_init__(self):
        if self.nodes < 8:
            raise DomainError(f"quadrature needs at least 8 nodes per panel, got {self.nodes}")
        if not self.t_max_factor > 0:
            raise DomainError(f"t_max_factor must be positive, got {self.t_max_factor}")


@dataclass
class MethodChoice:
    strategy: str = "auto"
    nu_schedule: NuSchedule = field(default_factory=NuSchedule)
    quadrature: Quadrature = field(default_factory=Quadrature)

    def __post_init__(self):
        if self.strategy != "auto":
            self.strategy = Method.parse(self.strategy).value


@dataclass
class Diagnostics:
    max_asymmetry: float = 0.0
    imag_discard: float = 0.0
    max_lyapunov_residual: Optional[float] = None
    nu_sequence_used: Optional[list] = None
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "max_asymmetry": self.max_asymmetry,
            "imag_discard": self.imag_discard,
            "max_lyapunov_residual": self.max_lyapunov_residual,
            "nu_sequence_used": self.nu_sequence_used,
        }
        out.update(self.extras)
        return out


@dataclass
class QfimResult:
    h: np.ndarray
    method: str
    slds: Optional[list] = None
    diagnostics: Diagnostics = field(default_factory=Diagnostics)

    @property
    def n_params(self):
        return self.h.shape[0]


def _prepare(rho, d):
    rho = validate_density(rho)
    d = as_derivatives(d)
    for i, p in enumerate(d):
        if p.shape != rho.matrix.shape:
            raise DimensionError(f"derivative {i} has shape {p.shape}, state has shape {rho.matrix.shape}")
    return rho, d


def _vec_columns(d):
    if len(d) == 0:
        return None
    return np.stack([vectorize(p) for p in d], axis=1)


def lyapunov_residual(rho, sld, drho):
    """``max |(L rho + rho L)/2 - d rho|``."""
    r = np.asarray(rho)
    return max_abs(0.5 * (sld @ r + r @ sld) - drho)


def _finalize(hc, method, rho, d, slds=None, extras=None, nus=None):
    hc = np.asarray(hc, dtype=np.complex128).reshape(len(d), len(d))
    re = hc.real
    diag = Diagnostics(
        max_asymmetry=max_abs(re - re.T),
        imag_discard=max_abs(hc.imag),
        nu_sequence_used=nus,
        extras=dict(extras or {}),
    )
    if slds is not None:
        slds = [0.5 * (s + s.conj().T) for s in slds]
        diag.max_lyapunov_residual = max((lyapunov_residual(rho.matrix, s, p) for s, p in zip(slds, d)), default=0.0)
    return QfimResult(0.5 * (re + re.T), Method(method).value, slds, diag)


def _require_full_rank(rho, method, exc=SingularityError):
    if not rho.full_rank:
        lam = float(rho.eigenvalues[0])
        msg = (
            f"{method}: density matrix is rank deficient (rank {rho.rank} of {rho.dim}, "
            f"smallest eigenvalue {lam:.3e}); use the 'eigen', 'pseudoinverse' or "
            "'regularized-limit' method"
        )
        if exc is SingularityError:
            raise SingularityError(msg, smallest_pivot=lam)
        raise exc(msg)


def build_m(rho) -> np.ndarray:
    """Kronecker sum ``conj(rho) (x) I + I (x) rho`` of size dim^2."""
    r = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    return _kernels.kron_sum(np.ascontiguousarray(r, dtype=np.complex128))


def _vectorized_core(rho, d):
    n = rho.dim
    if len(d) == 0:
        return np.zeros((0, 0), complex), []
    b = _vec_columns(d)
    x = solve_hpd(build_m(rho), b)
    hc = 2.0 * (b.conj().T @ x)
    slds = [unvectorize(2.0 * x[:, i], n) for i in range(len(d))]
    return hc, slds


def sld_vectorized(rho, drho) -> np.ndarray:
    """Solve ``(L rho + rho L)/2 = drho`` through ``vec(L) = 2 M^{-1} vec(drho)``."""
    rho, d = _prepare(rho, [drho])
    _require_full_rank(rho, "sld_vectorized")
    _, slds = _vectorized_core(rho, d)
    s = slds[0]
    return 0.5 * (s + s.conj().T)


def qfim_vectorized(rho, d) -> QfimResult:
    rho, d = _prepare(rho, d)
    _require_full_rank(rho, "vectorized")
    hc, slds = _vectorized_core(rho, d)
    return _finalize(hc, Method.VECTORIZED, rho, d, slds)


def _clean_spectrum(rho):
    p = np.where(rho.eigenvalues > rho.tol_rank, rho.eigenvalues, 0.0)
    return p, rho.dim * EPS


def qfim_eigen(rho, d) -> QfimResult:
    """Spectral sum over eigenpairs with ``p_k + p_l > dim * eps``.

    Eigenvalues at or below the rank tolerance are treated as exact zeros.
    Works for singular states, where it gives the QFIM proper (which may
    differ from the Bures metric at removable discontinuities).
    """
    rho, d = _prepare(rho, d)
    if len(d) == 0:
        return _finalize(np.zeros((0, 0)), Method.EIGEN, rho, d, [])
    p, tol = _clean_spectrum(rho)
    u = rho.eigenvectors
    dk = np.ascontiguousarray(np.einsum("ak,iab,bl->ikl", u.conj(), d.stack(), u))
    hc = _kernels.spectral_qfim(dk, p, tol)
    lk = _kernels.spectral_sld(dk, p, tol)
    slds = [u @ lk[i] @ u.conj().T for i in range(len(d))]
    return _finalize(hc, Method.EIGEN, rho, d, slds, extras={"tol_sum": tol, "rank": rho.rank})


def qfim_eigen_matrix_form(rho, d) -> QfimResult:
    """Eigenbasis route in Kronecker form with a diagonal middle factor."""
    rho, d = _prepare(rho, d)
    _require_full_rank(rho, "eigen-matrix-form")
    n = rho.dim
    if len(d) == 0:
        return _finalize(np.zeros((0, 0)), Method.EIGEN_MATRIX_FORM, rho, d, [])
    u = rho.eigenvectors
    w = np.kron(u.conj(), u)
    # diagonal of D (x) I + I (x) D
    mid = np.add.outer(rho.eigenvalues, rho.eigenvalues).ravel()
    b = _vec_columns(d)
    x = w @ ((w.conj().T @ b) / mid[:, None])
    hc = 2.0 * (b.conj().T @ x)
    slds = [unvectorize(2.0 * x[:, i], n) for i in range(len(d))]
    return _finalize(hc, Method.EIGEN_MATRIX_FORM, rho, d, slds)


def _panel_edges(lam_min, lam_max, t_max_factor):
    t_end = t_max_factor / lam_min
    t0 = min(1.0 / lam_max, t_end)
    edges = [0.0, t0]
    while edges[-1] < t_end:
        edges.append(min(2.0 * edges[-1], t_end))
    return np.array(edges)


def _gl_rule(edges, nodes, level):
    x, w = np.polynomial.legendre.leggauss(nodes)
    sub = 2**level
    fine = [np.linspace(a, b, sub + 1)[:-1] for a, b in zip(edges[:-1], edges[1:])]
    lo = np.concatenate(fine)
    width = np.repeat(np.diff(edges) / sub, sub)
    t = (lo + 0.5 * width)[:, None] + 0.5 * width[:, None] * x[None, :]
    wt = 0.5 * width[:, None] * w[None, :]
    return t.ravel(), wt.ravel()


def qfim_integral(rho, d, quad: Optional[Quadrature] = None) -> QfimResult:
    """Quadrature of the exponential-integral representation.

    ``L_i = 2 int_0^inf e^{-rho t} d_i rho e^{-rho t} dt`` is integrated
    numerically and ``H_ij = tr[d_i rho L_j]``. This route does not share any
    solve with the others and serves as an independent oracle.
    """
    quad = quad or Quadrature()
    rho, d = _prepare(rho, d)
    _require_full_rank(rho, "integral", exc=DivergenceError)
    if len(d) == 0:
        return _finalize(np.zeros((0, 0)), Method.INTEGRAL, rho, d, [])
    lam_min, lam_max = float(rho.eigenvalues[0]), float(rho.eigenvalues[-1])
    edges = _panel_edges(lam_min, lam_max, quad.t_max_factor)
    dstack = d.stack()

    def estimate(level):
        t, wt = _gl_rule(edges, quad.nodes, level)
        e = matrix_exp_batch(rho.matrix, -t)
        acc = np.einsum("n,nab,ibc,ncd->iad", wt, e, dstack, e, optimize=True)
        slds = 2.0 * acc
        hc = np.einsum("iab,jba->ij", dstack, slds)
        return hc, slds, t.size

    prev, _, _ = estimate(0)
    change = np.inf
    for level in range(1, quad.max_refinements + 1):
        hc, slds, n_nodes = estimate(level)
        change = max_abs(hc - prev)
        if change <= quad.tol * max(max_abs(hc), np.finfo(float).tiny):
            break
        prev = hc
    else:
        raise ConvergenceError(
            f"integral quadrature did not settle after {quad.max_refinements} refinements "
            f"(last change {change:.3e})"
        )
    extras = {"quad_panels": len(edges) - 1, "quad_level": level, "quad_nodes": n_nodes, "quad_change": change}
    return _finalize(hc, Method.INTEGRAL, rho, d, list(slds), extras=extras)


def _nu_scale(rho):
    support = rho.eigenvalues[rho.eigenvalues > rho.tol_rank]
    if support.size == 0:
        return 1.0
    return min(1.0, rho.dim * float(support[0]))


def _regularized_core(rho, d, schedule, derivs_at=None):
    """Richardson-extrapolated ``nu -> 0`` limit of the vectorized QFIM.

    ``derivs_at(nu, rho_nu)`` gives the derivatives of the regularized state;
    the default is ``(1 - nu) d_i rho``.
    """
    schedule = schedule or NuSchedule()
    if derivs_at is None:
        def derivs_at(nu, _rho_nu):
            return [(1.0 - nu) * p for p in d]

    scale = _nu_scale(rho)
    nus, hs, ls, extrap = [], [], [], []
    for k in range(schedule.max_steps):
        nu = schedule.nu0 * schedule.ratio**k * scale
        r_nu = regularize(rho, nu)
        hc, slds = _vectorized_core(r_nu, derivs_at(nu, r_nu))
        nus.append(nu)
        hs.append(0.5 * (hc + hc.conj().T))
        ls.append(np.array(slds))
        if k == 0:
            continue
        c = nus[-1] / (nus[-2] - nus[-1])
        h_ex = hs[-1] + c * (hs[-1] - hs[-2])
        l_ex = ls[-1] + c * (ls[-1] - ls[-2])
        extrap.append((h_ex, l_ex))
        if len(extrap) >= 2:
            change = max_abs(extrap[-1][0] - extrap[-2][0])
            if change <= schedule.tol * max(1.0, max_abs(h_ex)):
                return h_ex, list(l_ex), nus, change, hs
    history = [h.real.tolist() for h in hs]
    raise ConvergenceError(
        f"regularized limit did not converge within {schedule.max_steps} steps "
        f"(nu down to {nus[-1]:.3e})",
        history=history,
    )


def qfim_regularized_limit(rho, d, schedule: Optional[NuSchedule] = None) -> QfimResult:
    """QFIM as the ``nu -> 0`` limit over ``(1 - nu) rho + nu I / dim``.

    Designed for rank-deficient states; for a parametrized family evaluate
    ``family.at(eps)`` first.
    """
    rho, d = _prepare(rho, d)
    if len(d) == 0:
        return _finalize(np.zeros((0, 0)), Method.REGULARIZED_LIMIT, rho, d, [])
    h, slds, nus, change, _ = _regularized_core(rho, d, schedule)
    return _finalize(h, Method.REGULARIZED_LIMIT, rho, d, slds, extras={"limit_change": change}, nus=nus)


def qfim_pseudoinverse(rho, d) -> QfimResult:
    rho, d = _prepare(rho, d)
    if len(d) == 0:
        return _finalize(np.zeros((0, 0)), Method.PSEUDOINVERSE, rho, d, [])
    b = _vec_columns(d)
    x = pseudoinverse_apply(build_m(rho), b)
    hc = 2.0 * (b.conj().T @ x)
    slds = [unvectorize(2.0 * x[:, i], rho.dim) for i in range(len(d))]
    return _finalize(hc, Method.PSEUDOINVERSE, rho, d, slds)


def qfim_unitary_commuting(enc: UnitaryEncoding, schedule: Optional[NuSchedule] = None) -> QfimResult:
    """Parameter-independent QFIM for commuting unitary generators.

    Uses the commutators ``-i [K_j, rho0]`` as derivatives. A singular
    ``rho0`` is regularized and the commutators are taken with the
    regularized state at each ``nu``.
    """
    worst = enc.max_commutator()
    if worst > 1e-10:
        raise DomainError(f"generators do not commute (max |[K_a, K_b]| = {worst:.3e})")
    rho0 = enc.initial_state
    d = DerivativeSet(enc.generator_derivatives())
    if rho0.full_rank:
        res = qfim_vectorized(rho0, d)
        res.diagnostics.extras["encoding"] = "unitary-commuting"
        return res

    def derivs_at(_nu, r_nu):
        return enc.generator_derivatives(r_nu.matrix)

    h, slds, nus, change, _ = _regularized_core(rho0, d, schedule, derivs_at)
    extras = {"limit_change": change, "encoding": "unitary-commuting"}
    return _finalize(h, Method.REGULARIZED_LIMIT, rho0, d, slds, extras=extras, nus=nus)


def bures_infinitesimal(rho, drho_total) -> float:
    """Squared Bures distance between ``rho`` and ``rho + drho_total``,
    ``vec(drho)^dag M^{-1} vec(drho) / 2``."""
    rho, d = _prepare(rho, [drho_total])
    _require_full_rank(rho, "bures_infinitesimal")
    b = vectorize(d[0])
    x = solve_hpd(build_m(rho), b)
    return float(0.5 * np.real(np.vdot(b, x)))


_DISPATCH = {
    Method.VECTORIZED: lambda r, d, c: qfim_vectorized(r, d),
    Method.EIGEN: lambda r, d, c: qfim_eigen(r, d),
    Method.EIGEN_MATRIX_FORM: lambda r, d, c: qfim_eigen_matrix_form(r, d),
    Method.INTEGRAL: lambda r, d, c: qfim_integral(r, d, c.quadrature),
    Method.REGULARIZED_LIMIT: lambda r, d, c: qfim_regularized_limit(r, d, c.nu_schedule),
    Method.PSEUDOINVERSE: lambda r, d, c: qfim_pseudoinverse(r, d),
}


def relative_deviation(a, b):
    """``max|a - b| / max(max|a|, max|b|)``, absolute when both are ~0."""
    diff = max_abs(np.asarray(a) - np.asarray(b))
    scale = max(max_abs(a), max_abs(b))
    return diff / scale if scale > 1e-12 else diff


def compute(rho, d, choice: Optional[MethodChoice] = None) -> QfimResult:
    """Dispatch on ``choice.strategy``.

    ``auto`` uses the vectorized route on full-rank states. On singular
    states it uses the spectral sum and confirms it against the regularized
    limit; a disagreement beyond 1e-5 raises :class:`DiscontinuityWarning`
    and both values are kept in the diagnostics.
    """
    choice = choice or MethodChoice()
    rho, d = _prepare(rho, d)
    if choice.strategy != "auto":
        return _DISPATCH[Method(choice.strategy)](rho, d, choice)
    if rho.full_rank:
        return qfim_vectorized(rho, d)
    res = qfim_eigen(rho, d)
    extras = res.diagnostics.extras
    try:
        lim = qfim_regularized_limit(rho, d, choice.nu_schedule)
    except ConvergenceError as exc:
        extras["regularized_limit_h"] = None
        extras["discontinuity"] = True
        warnings.warn(
            f"regularized limit failed at a rank-deficient point ({exc}); reporting the spectral-sum value",
            DiscontinuityWarning,
            stacklevel=2,
        )
        return res
    dev = relative_deviation(res.h, lim.h)
    extras["regularized_limit_h"] = lim.h.tolist()
    extras["regularized_deviation"] = dev
    extras["discontinuity"] = dev > DISCONTINUITY_TOL
    if extras["discontinuity"]:
        warnings.warn(
            f"spectral sum and regularized limit differ by {dev:.3e} at a rank-deficient point "
            f"(removable discontinuity); eigen H={res.h.tolist()}, limit H={lim.h.tolist()}",
            DiscontinuityWarning,
            stacklevel=2,
        )
    return res


def compute_unitary(enc: UnitaryEncoding, choice: Optional[MethodChoice] = None) -> QfimResult:
    """QFIM for a unitary encoding; ``auto`` uses the commutator formula."""
    choice = choice or MethodChoice()
    if choice.strategy == "auto" and enc.commuting():
        return qfim_unitary_commuting(enc, choice.nu_schedule)
    d = DerivativeSet(enc.generator_derivatives())
    return compute(enc.initial_state, d, choice)


@dataclass
class Comparison:
    results: dict
    errors: dict
    timings: dict
    deviations: dict
    tol: float = AGREEMENT_TOL

    @property
    def flagged(self):
        return [pair for pair, dev in self.deviations.items() if dev > self.tol]

    @property
    def ok(self):
        return not self.flagged and bool(self.results)

    def to_dict(self):
        return {
            "methods": {
                m: {
                    "qfim": r.h.tolist(),
                    "time_s": self.timings[m],
                    "diagnostics": r.diagnostics.to_dict(),
                }
                for m, r in self.results.items()
            },
            "errors": dict(self.errors),
            "deviations": [{"a": a, "b": b, "relative": dev} for (a, b), dev in self.deviations.items()],
            "flagged": [list(p) for p in self.flagged],
            "tolerance": self.tol,
            "ok": self.ok,
        }


def compare_methods(rho, d, choice: Optional[MethodChoice] = None, methods=ALL_METHODS, tol=AGREEMENT_TOL):
    """Run every method, record failures, and compute pairwise deviations.

    Methods run sequentially in the fixed order of :class:`Method`, so the
    report is deterministic.
    """
    choice = choice or MethodChoice()
    rho, d = _prepare(rho, d)
    results, errors, timings = {}, {}, {}
    for m in methods:
        m = Method.parse(m)
        start = time.perf_counter()
        try:
            results[m.value] = _DISPATCH[m](rho, d, choice)
        except QfimError as exc:
            errors[m.value] = f"{type(exc).__name__}: {exc}"
        timings[m.value] = time.perf_counter() - start
    names = list(results)
    deviations = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            deviations[(a, b)] = relative_deviation(results[a].h, results[b].h)
    return Comparison(results, errors, timings, deviations, tol)
