"""Builtin state families with analytic derivatives.

``phase-noise-qubit``
    ``(1 - nu) |psi_theta><psi_theta| + nu I / 2`` with
    ``|psi_theta> = (|0> + e^{-i theta}|1>) / sqrt(2)``; parameters ``(theta, nu)``.
``bell-phase``
    Bell state ``(|00> + |11>) / sqrt(2)`` with the phase imprinted by the
    total number operator ``N (x) I + I (x) N``; one parameter ``theta``.
"""

import numpy as np

from .exceptions import DomainError
from .states import StateFamily, UnitaryEncoding, validate_density


def phase_noise_matrix(theta, nu):
    e = np.exp(1j * theta)
    return 0.5 * np.array([[1.0, (1.0 - nu) * e], [(1.0 - nu) / e, 1.0]])


def phase_noise_derivatives(theta, nu):
    e = np.exp(1j * theta)
    d_theta = 0.5 * np.array([[0.0, 1j * (1.0 - nu) * e], [-1j * (1.0 - nu) / e, 0.0]])
    d_nu = -0.5 * np.array([[0.0, e], [1.0 / e, 0.0]])
    return [d_theta, d_nu]


def phase_noise_qubit() -> StateFamily:
    return StateFamily(
        evaluate=lambda eps: phase_noise_matrix(eps[0], eps[1]),
        n_params=2,
        dim=2,
        derivative=lambda eps: phase_noise_derivatives(eps[0], eps[1]),
        parameter_names=["theta", "nu"],
    )


def number_operator_two_qubits():
    n = np.diag([0.0, 1.0])
    eye = np.eye(2)
    return np.kron(n, eye) + np.kron(eye, n)


def bell_state():
    psi = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2)
    return np.outer(psi, psi.conj())


def bell_phase() -> UnitaryEncoding:
    return UnitaryEncoding([number_operator_two_qubits()], validate_density(bell_state()))


BUILTIN = {
    "phase-noise-qubit": {"parameters": ["theta", "nu"], "kind": "family"},
    "bell-phase": {"parameters": ["theta"], "kind": "unitary"},
}


def load_builtin(name):
    """Return ``("family", StateFamily)`` or ``("unitary", UnitaryEncoding)``."""
    if name == "phase-noise-qubit":
        return "family", phase_noise_qubit()
    if name == "bell-phase":
        return "unitary", bell_phase()
    raise DomainError(f"unknown builtin family {name!r}; choose from {sorted(BUILTIN)}")
