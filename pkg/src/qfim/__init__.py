"""Quantum Fisher information matrix, symmetric logarithmic derivatives,
infinitesimal Bures distance and Cramer-Rao bounds for finite-dimensional
density matrices."""

from .exceptions import (
    ConvergenceError,
    DimensionError,
    DiscontinuityWarning,
    DivergenceError,
    DomainError,
    QfimError,
    SingularityError,
    ValidationError,
)
from .families import bell_phase, load_builtin, phase_noise_qubit
from .linalg import (
    hermitian_eig,
    kron,
    matrix_exp,
    pseudoinverse_apply,
    solve_hpd,
    unvectorize,
    vectorize,
)
from .metrology import CrbReport, cramer_rao, optimal_bases
from .solvers import (
    Method,
    MethodChoice,
    NuSchedule,
    QfimResult,
    Quadrature,
    build_m,
    bures_infinitesimal,
    compare_methods,
    compute,
    compute_unitary,
    qfim_eigen,
    qfim_eigen_matrix_form,
    qfim_integral,
    qfim_pseudoinverse,
    qfim_regularized_limit,
    qfim_unitary_commuting,
    qfim_vectorized,
    sld_vectorized,
)
from .states import (
    DensityMatrix,
    DerivativeSet,
    StateFamily,
    UnitaryEncoding,
    encode_unitary,
    finite_difference_derivatives,
    regularize,
    validate_density,
)

__version__ = "0.1.0"
