"""Cramer-Rao bound analysis and optimal measurement bases."""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from .linalg import EPS, hermitian_eig

TIE_RTOL = 1e-9


def _fmt(x):
    return f"{float(x):.8g}"


@dataclass
class Constraint:
    """One scalar inequality implied by ``Cov - H^-1 >= 0``.

    ``kind`` is ``"variance_floor"``, ``"covariance_product"`` or
    ``"principal_minor"``; ``indices`` are the parameters involved.
    """

    kind: str
    indices: tuple
    text: str
    h_inverse: np.ndarray = field(repr=False)

    def margin(self, cov) -> float:
        """Non-negative iff the inequality holds for covariance ``cov``."""
        cov = np.asarray(cov, dtype=float)
        g = cov - self.h_inverse
        idx = list(self.indices)
        if self.kind == "variance_floor":
            return float(g[idx[0], idx[0]])
        if self.kind == "covariance_product":
            a, b = idx
            return float(g[a, a] * g[b, b] - g[a, b] ** 2)
        return float(np.linalg.det(g[np.ix_(idx, idx)]))

    def satisfied(self, cov, tol=0.0) -> bool:
        return self.margin(cov) >= -tol


@dataclass
class MeasurementBasis:
    eigenvalues: np.ndarray
    vectors: np.ndarray  # columns are basis vectors

    def __iter__(self):
        return iter(self.vectors.T)


@dataclass
class CrbReport:
    h_inverse: np.ndarray
    variance_floors: np.ndarray
    constraints: list
    parameter_names: list
    null_space: np.ndarray
    optimal_bases: Optional[list] = None

    @property
    def identifiable(self) -> bool:
        return self.null_space.shape[1] == 0

    def render(self):
        return [c.text for c in self.constraints]

    def to_dict(self):
        out = {
            "h_inverse": self.h_inverse.tolist(),
            "variance_floors": [float(v) if np.isfinite(v) else None for v in self.variance_floors],
            "constraints": self.render(),
            "parameter_names": list(self.parameter_names),
            "identifiable": self.identifiable,
            "null_space": self.null_space.T.tolist(),
        }
        if self.optimal_bases is not None:
            out["optimal_bases"] = [
                {
                    "eigenvalues": b.eigenvalues.tolist(),
                    "vectors": {"re": b.vectors.T.real.tolist(), "im": b.vectors.T.imag.tolist()},
                }
                for b in self.optimal_bases
            ]
        return out


def _render_constraints(hinv, names):
    n = hinv.shape[0]
    var = [f"Var({p})" for p in names]
    out = []
    for i in range(n):
        out.append(Constraint("variance_floor", (i,), f"{var[i]} >= {_fmt(hinv[i, i])}", hinv))
    if n == 2:
        c = hinv[0, 1]
        cov = f"Cov({names[0]}, {names[1]})"
        if abs(c) <= 1e-12 * max(1.0, abs(hinv).max()):
            lhs = f"{cov}^2"
        else:
            lhs = f"({cov} {'-' if c > 0 else '+'} {_fmt(abs(c))})^2"
        text = f"{lhs} <= ({var[0]} - {_fmt(hinv[0, 0])}) * ({var[1]} - {_fmt(hinv[1, 1])})"
        out.append(Constraint("covariance_product", (0, 1), text, hinv))
    elif n > 2:
        for k in range(2, n + 1):
            for idx in combinations(range(n), k):
                sub = ", ".join(names[i] for i in idx)
                text = f"det[(Cov - H^-1) restricted to ({sub})] >= 0"
                out.append(Constraint("principal_minor", idx, text, hinv))
    return out


def cramer_rao(h, parameter_names=None, slds=None) -> CrbReport:
    """Covariance bound ``Cov >= H^-1`` and its scalar consequences.

    ``h`` may be a :class:`~qfim.solvers.QfimResult`, whose SLDs are then
    used for the optimal bases. Singular ``H`` gives a pseudo-inverse bound on
    its range, infinite floors for parameters touching the null space, and the
    null-space basis of unidentifiable combinations.
    """
    if hasattr(h, "h"):
        slds = h.slds if slds is None else slds
        h = h.h
    h = np.asarray(h, dtype=float)
    n = h.shape[0]
    names = list(parameter_names) if parameter_names else [f"p{i}" for i in range(n)]
    w, v = np.linalg.eigh(0.5 * (h + h.T))
    tol = n * EPS * max(float(np.abs(w).max(initial=0.0)), np.finfo(float).tiny)
    keep = w > tol
    hinv = (v[:, keep] / w[keep]) @ v[:, keep].T
    hinv = 0.5 * (hinv + hinv.T)
    null = v[:, ~keep]
    floors = np.diag(hinv).copy()
    if null.shape[1]:
        touched = np.einsum("ik,ik->i", null, null) > np.sqrt(EPS)
        floors[touched] = np.inf
    bases = optimal_bases(slds) if slds is not None else None
    return CrbReport(hinv, floors, _render_constraints(hinv, names), names, null, bases)


def _fix_phase(vec):
    mag = np.abs(vec)
    ties = np.flatnonzero(mag >= mag.max() * (1.0 - TIE_RTOL))
    k = ties[-1]
    return vec * (np.conj(vec[k]) / mag[k])


def optimal_bases(slds):
    """Eigenbases of the SLDs, one :class:`MeasurementBasis` per parameter.

    Each vector is normalized with its largest-magnitude entry real and
    positive (ties go to the last such entry).
    """
    out = []
    for lop in slds:
        w, u = hermitian_eig(lop)
        cols = [_fix_phase(u[:, k] / np.linalg.norm(u[:, k])) for k in range(u.shape[1])]
        out.append(MeasurementBasis(w, np.stack(cols, axis=1)))
    return out
