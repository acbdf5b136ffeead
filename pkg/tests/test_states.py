import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfim.ensembles import random_density, random_hermitian, random_unitary
from qfim.exceptions import DimensionError, DomainError, ValidationError
from qfim.families import bell_phase, bell_state, number_operator_two_qubits, phase_noise_qubit
from qfim.states import (
    DerivativeSet,
    StateFamily,
    UnitaryEncoding,
    encode_unitary,
    finite_difference_derivatives,
    regularize,
    validate_density,
)

seeds = st.integers(0, 2**32 - 1)


class TestValidateDensity:
    def test_maximally_mixed_is_full_rank(self):
        rho = validate_density(np.eye(2) / 2)
        assert rho.full_rank and rho.rank == 2

    def test_pure_state_flagged(self):
        rho = validate_density(np.diag([1.0, 0.0]))
        assert not rho.full_rank and rho.rank == 1

    def test_trace_violation(self):
        with pytest.raises(ValidationError) as err:
            validate_density(np.diag([0.6, 0.6]))
        assert err.value.invariant == "trace"
        assert err.value.magnitude == pytest.approx(1.2)

    def test_negative_eigenvalue(self):
        with pytest.raises(ValidationError) as err:
            validate_density(np.diag([1.2, -0.2]))
        assert err.value.invariant == "positive-semidefinite"
        assert err.value.magnitude == pytest.approx(-0.2)

    def test_non_hermitian(self):
        with pytest.raises(ValidationError) as err:
            validate_density(np.array([[0.5, 0.3], [0.0, 0.5]]))
        assert err.value.invariant == "hermitian"

    def test_tiny_negative_eigenvalue_tolerated(self):
        rho = validate_density(np.diag([1.0 + 1e-12, -1e-12]))
        assert rho.rank == 1

    def test_non_square(self):
        with pytest.raises((DimensionError, ValidationError)):
            validate_density(np.ones((2, 3)) / 2)

    def test_result_is_symmetrized(self):
        m = np.array([[0.5, 0.1 + 1e-13j], [0.1, 0.5]])
        rho = validate_density(m)
        np.testing.assert_array_equal(rho.matrix, rho.matrix.conj().T)


class TestRegularize:
    def test_pure_qubit(self):
        np.testing.assert_allclose(regularize(np.diag([1.0, 0.0]), 0.5).matrix, np.diag([0.75, 0.25]))

    @pytest.mark.parametrize("nu", [0.01, 0.3, 0.99])
    def test_maximally_mixed_fixed_point(self, nu):
        np.testing.assert_allclose(regularize(np.eye(2) / 2, nu).matrix, np.eye(2) / 2, atol=1e-16)

    @pytest.mark.parametrize("nu", [0.0, 1.0, -0.1, 1.5])
    def test_domain(self, nu):
        with pytest.raises(DomainError):
            regularize(np.eye(2) / 2, nu)

    @pytest.mark.parametrize("nu", [1e-3, 0.2, 0.7])
    def test_bell_state_display(self, nu):
        expected = 0.5 * np.array(
            [
                [1 - nu / 2, 0, 0, 1 - nu],
                [0, nu / 2, 0, 0],
                [0, 0, nu / 2, 0],
                [1 - nu, 0, 0, 1 - nu / 2],
            ]
        )
        np.testing.assert_allclose(regularize(bell_state(), nu).matrix, expected, atol=1e-15)

    @given(seeds, st.integers(1, 8), st.floats(1e-6, 1 - 1e-6))
    @settings(max_examples=60)
    def test_trace_and_spectrum_bounds(self, seed, dim, nu):
        rng = np.random.default_rng(seed)
        rank = int(rng.integers(1, dim + 1))
        r = regularize(random_density(dim, rng, rank), nu)
        assert abs(np.trace(r.matrix) - 1) <= 1e-12
        w = np.linalg.eigvalsh(r.matrix)
        slack = 1e-12
        assert w[0] >= nu / dim - slack
        assert w[-1] <= 1 - nu * (1 - 1 / dim) + slack
        # cached spectrum agrees with a fresh decomposition
        np.testing.assert_allclose(np.sort(r.eigenvalues), w, atol=1e-12)


class TestDerivativeSet:
    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError) as err:
            DerivativeSet([np.array([[0.0, 1.0], [0.0, 0.0]])])
        assert err.value.invariant == "hermitian"

    def test_rejects_trace(self):
        with pytest.raises(ValidationError) as err:
            DerivativeSet([np.eye(2)])
        assert err.value.invariant == "traceless"

    def test_rejects_mixed_shapes(self):
        with pytest.raises(DimensionError):
            DerivativeSet([np.zeros((2, 2)), np.zeros((3, 3))])

    def test_combine(self):
        d = DerivativeSet([np.diag([1.0, -1.0]), np.array([[0, 1.0], [1.0, 0]])])
        np.testing.assert_allclose(d.combine([2.0, 3.0]), [[2, 3], [3, -2]])
        with pytest.raises(DimensionError):
            d.combine([1.0])


class TestFiniteDifferences:
    def test_constant_family(self):
        fam = StateFamily(lambda e: np.diag([0.3, 0.7]), 2, 2)
        for p in finite_difference_derivatives(fam, [0.1, -2.0]):
            np.testing.assert_array_equal(p, np.zeros((2, 2)))

    def test_linear_family(self):
        fam = StateFamily(lambda e: np.diag([0.5 + e[0], 0.5 - e[0]]), 1, 2)
        (p,) = finite_difference_derivatives(fam, [0.0])
        np.testing.assert_allclose(p, np.diag([1.0, -1.0]), atol=1e-10)

    def test_qubit_example_against_displayed_vectors(self):
        theta, nu = 0.3, 0.2
        fam = phase_noise_qubit()
        fd = finite_difference_derivatives(fam, [theta, nu])
        e = np.exp(1j * theta)
        vec_theta = np.array([0, -1j / e * (1 - nu) / 2, 1j * e * (1 - nu) / 2, 0])
        vec_nu = np.array([0, -0.5 / e, -0.5 * e, 0])
        assert np.max(np.abs(fd[0].ravel(order="F") - vec_theta)) <= 1e-8
        assert np.max(np.abs(fd[1].ravel(order="F") - vec_nu)) <= 1e-8
        for a, b in zip(fd, fam.derivatives([theta, nu])):
            assert np.max(np.abs(a - b)) <= 1e-8

    @pytest.mark.parametrize("eps", [[0.0, 0.5], [1.7, 0.9], [np.pi, 0.1]])
    def test_builtin_families_within_1e6(self, eps):
        fam = phase_noise_qubit()
        for a, b in zip(finite_difference_derivatives(fam, eps), fam.derivatives(eps)):
            assert np.max(np.abs(a - b)) <= 1e-6

    def test_unitary_builtin_within_1e6(self):
        enc = bell_phase()
        fam = enc.as_family()
        for eps in ([0.0], [0.4], [2.5]):
            for a, b in zip(finite_difference_derivatives(fam, eps), fam.derivatives(eps)):
                assert np.max(np.abs(a - b)) <= 1e-6

    @given(seeds)
    @settings(max_examples=25)
    def test_projection_gives_hermitian_traceless(self, seed):
        rng = np.random.default_rng(seed)
        a, b = random_hermitian(3, rng), random_hermitian(3, rng)

        def evaluate(e):
            # deliberately not a valid state; only the projection is under test
            return np.eye(3) / 3 + e[0] * a + e[1] ** 2 * b + 1e-3j * e[0] * b

        for p in finite_difference_derivatives(StateFamily(evaluate, 2, 3), rng.standard_normal(2)):
            assert np.max(np.abs(p - p.conj().T)) <= 1e-8
            assert abs(np.trace(p)) <= 1e-8

    def test_failure_carries_parameter_index(self):
        def evaluate(e):
            if e[1] > 0.5:
                raise RuntimeError("outside domain")
            return np.eye(2) / 2

        with pytest.raises(DomainError) as err:
            finite_difference_derivatives(StateFamily(evaluate, 2, 2), [0.0, 0.5])
        assert err.value.parameter_index == 1


class TestUnitaryEncoding:
    def test_zero_parameters(self, rng):
        rho0 = random_density(3, rng)
        gens = [np.diag([0.0, 1.0, 2.0]), np.diag([1.0, -1.0, 0.0])]
        enc = UnitaryEncoding(gens, rho0)
        rho, d = encode_unitary(enc, [0.0, 0.0])
        np.testing.assert_allclose(rho.matrix, rho0.matrix, atol=1e-15)
        for k, p in zip(gens, d):
            np.testing.assert_allclose(p, -1j * (k @ rho0.matrix - rho0.matrix @ k), atol=1e-15)

    def test_bell_commutator_display(self):
        k = number_operator_two_qubits()
        np.testing.assert_array_equal(k, np.diag([0.0, 1.0, 1.0, 2.0]))
        for nu in (1e-3, 0.25, 0.6):
            r = regularize(bell_state(), nu).matrix
            expected = np.zeros((4, 4))
            expected[0, 3], expected[3, 0] = nu - 1, 1 - nu
            np.testing.assert_allclose(k @ r - r @ k, expected, atol=1e-15)

    def test_identity_proportional_state(self):
        enc = UnitaryEncoding([np.diag([0.0, 1.0])], np.eye(2) / 2)
        _, d = encode_unitary(enc, [0.7])
        np.testing.assert_allclose(d[0], np.zeros((2, 2)), atol=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            UnitaryEncoding([np.eye(3)], np.eye(2) / 2)
        with pytest.raises(DomainError):
            encode_unitary(UnitaryEncoding([np.eye(2)], np.eye(2) / 2), [0.1, 0.2])

    def test_unitary_is_unitary(self, rng):
        enc = UnitaryEncoding([random_hermitian(4, rng)], random_density(4, rng))
        u = enc.unitary([1.3])
        np.testing.assert_allclose(u @ u.conj().T, np.eye(4), atol=1e-13)

    @given(seeds)
    @settings(max_examples=25)
    def test_commuting_derivatives_transport(self, seed):
        rng = np.random.default_rng(seed)
        v = random_unitary(3, rng)
        gens = [v @ np.diag(rng.standard_normal(3)) @ v.conj().T for _ in range(2)]
        enc = UnitaryEncoding(gens, random_density(3, rng))
        assert enc.commuting()
        _, d0 = encode_unitary(enc, [0.0, 0.0])
        eps = rng.standard_normal(2)
        _, d = encode_unitary(enc, eps)
        u = enc.unitary(eps)
        for a, b in zip(d, d0):
            assert np.max(np.abs(a - u @ b @ u.conj().T)) <= 1e-10

    def test_non_commuting_falls_back_to_differences(self):
        sx = np.array([[0, 1.0], [1.0, 0]])
        sz = np.diag([1.0, -1.0])
        enc = UnitaryEncoding([sx, sz], np.diag([0.8, 0.2]))
        assert not enc.commuting()
        assert enc.as_family().derivative_mode == "finite-difference"
        _, d = encode_unitary(enc, [0.0, 0.0])
        r = np.diag([0.8, 0.2])
        for k, p in zip((sx, sz), d):
            np.testing.assert_allclose(p, -1j * (k @ r - r @ k), atol=1e-8)
