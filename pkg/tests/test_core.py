import numpy as np
import pytest

from nvholo.core import (
    ConfigError,
    DensityMatrix,
    OperatorMatrix,
    StateVector,
    eig_hermitian,
    fidelity,
    inner_product,
    matrix_exponential,
    partial_population,
    state_density_fidelity,
)

SQRT_HALF = 0.7071067811865476

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def random_state(rng, dim):
    amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector.normalized(amps)


def random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return OperatorMatrix((a + a.conj().T) / 2)


class TestStateVector:
    def test_basis_state(self):
        psi = StateVector.basis(4, 2)
        assert psi.dim == 4
        assert psi.amps[2] == 1.0
        assert np.allclose(psi.populations(), [0, 0, 1, 0])

    def test_normalized_factory(self):
        psi = StateVector.normalized([3.0, 4.0])
        assert np.allclose(psi.amps, [0.6, 0.8])

    def test_rejects_unsupported_dim(self):
        with pytest.raises(ConfigError):
            StateVector(np.array([1.0, 0.0, 0.0]))

    def test_rejects_unnormalized(self):
        with pytest.raises(ConfigError):
            StateVector(np.array([1.0, 1.0]))

    def test_rejects_non_finite(self):
        with pytest.raises(ConfigError):
            StateVector(np.array([np.nan, 0.0]))
        with pytest.raises(ConfigError):
            StateVector.normalized([np.inf, 1.0])

    def test_amplitudes_are_read_only(self):
        psi = StateVector.basis(2, 0)
        with pytest.raises(ValueError):
            psi.amps[0] = 0.0

    def test_populations_sum_to_one(self):
        rng = np.random.default_rng(11)
        for dim in (2, 4, 8):
            for _ in range(20):
                psi = random_state(rng, dim)
                assert abs(psi.populations().sum() - 1.0) < 1e-9


class TestInnerProduct:
    def test_self_product_is_one(self):
        rng = np.random.default_rng(3)
        for dim in (2, 4, 8):
            psi = random_state(rng, dim)
            assert abs(inner_product(psi, psi) - 1.0) < 1e-12

    def test_orthogonal_basis_states(self):
        a = StateVector.basis(8, 0)
        b = StateVector.basis(8, 1)
        assert inner_product(a, b) == 0.0

    def test_superposition_overlap(self):
        plus = StateVector.normalized([1.0, 1.0])
        one = StateVector.basis(2, 0)
        assert abs(inner_product(plus, one) - SQRT_HALF) < 1e-12

    def test_conjugate_linear_in_first_argument(self):
        rng = np.random.default_rng(7)
        a = random_state(rng, 4)
        b = random_state(rng, 4)
        phase = np.exp(1j * np.pi / 3)
        a_rot = StateVector(phase * a.amps)
        expected = np.conj(phase) * inner_product(a, b)
        assert abs(inner_product(a_rot, b) - expected) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigError):
            inner_product(StateVector.basis(2, 0), StateVector.basis(4, 0))


class TestFidelity:
    def test_self_fidelity(self):
        psi = StateVector.normalized([1.0, 2.0j, -1.0, 0.5])
        assert fidelity(psi, psi) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_states(self):
        assert fidelity(StateVector.basis(8, 0), StateVector.basis(8, 7)) == 0.0

    def test_half_overlap(self):
        plus = StateVector.normalized([1.0, 1.0])
        assert fidelity(StateVector.basis(2, 0), plus) == pytest.approx(0.5, abs=1e-12)

    def test_symmetric_and_bounded(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            a = random_state(rng, 8)
            b = random_state(rng, 8)
            f_ab = fidelity(a, b)
            assert f_ab == fidelity(b, a)
            assert 0.0 <= f_ab <= 1.0


class TestPartialPopulation:
    def test_basis_state_levels(self):
        psi = StateVector.basis(8, 0)
        assert partial_population(psi, 0) == 1.0
        assert partial_population(psi, 4) == 0.0

    def test_superposition(self):
        plus = StateVector.normalized([1.0, 1.0])
        assert partial_population(plus, 0) == pytest.approx(0.5, abs=1e-12)

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            partial_population(StateVector.basis(2, 0), 2)


class TestOperatorMatrix:
    def test_identity_flags(self):
        m = OperatorMatrix.identity(4)
        assert m.dim == 4
        assert m.hermitian and m.unitary

    def test_hermitian_flag_validated(self):
        with pytest.raises(ConfigError):
            OperatorMatrix(np.array([[0.0, 1.0], [0.0, 0.0]]), hermitian=True)

    def test_unitary_flag_validated(self):
        with pytest.raises(ConfigError):
            OperatorMatrix(np.diag([2.0, 1.0]), unitary=True)

    def test_rejects_non_square(self):
        with pytest.raises(ConfigError):
            OperatorMatrix(np.zeros((2, 3)))

    def test_rejects_non_finite(self):
        with pytest.raises(ConfigError):
            OperatorMatrix(np.array([[np.inf, 0.0], [0.0, 0.0]]))


class TestEigHermitian:
    def test_identity(self):
        values, vectors = eig_hermitian(OperatorMatrix.identity(2))
        assert np.allclose(values, [1.0, 1.0])
        assert np.allclose(vectors.conj().T @ vectors, np.eye(2))

    def test_diagonal_matrix(self):
        values, vectors = eig_hermitian(OperatorMatrix(np.diag([-3.0, 0.0, 5.0])))
        assert np.allclose(values, [-3.0, 0.0, 5.0])
        # eigenvectors are the standard basis up to phase
        assert np.allclose(np.abs(vectors), np.eye(3))

    def test_symmetric_swap_closed_form(self):
        values, vectors = eig_hermitian(OperatorMatrix(PAULI_X))
        assert np.allclose(values, [-1.0, 1.0])
        low = np.array([1.0, -1.0]) * SQRT_HALF
        high = np.array([1.0, 1.0]) * SQRT_HALF
        assert abs(abs(np.vdot(low, vectors[:, 0])) - 1.0) < 1e-12
        assert abs(abs(np.vdot(high, vectors[:, 1])) - 1.0) < 1e-12

    def test_random_matrices(self):
        rng = np.random.default_rng(42)
        for dim in (2, 3, 4, 8):
            for _ in range(10):
                m = random_hermitian(rng, dim)
                values, vectors = eig_hermitian(m)
                assert np.all(np.diff(values) >= 0)
                gram = vectors.conj().T @ vectors
                assert np.max(np.abs(gram - np.eye(dim))) < 1e-10
                rebuilt = (vectors * values) @ vectors.conj().T
                scale = np.max(np.abs(m.entries))
                assert np.max(np.abs(rebuilt - m.entries)) < 1e-8 * scale

    def test_rejects_non_hermitian(self):
        with pytest.raises(ConfigError):
            eig_hermitian(OperatorMatrix(np.array([[0.0, 1.0], [0.0, 0.0]])))


class TestMatrixExponential:
    def test_zero_scale_is_identity(self):
        rng = np.random.default_rng(5)
        m = random_hermitian(rng, 4)
        result = matrix_exponential(m, 0.0)
        assert np.allclose(result.entries, np.eye(4), atol=1e-14)

    def test_quarter_turn_closed_form(self):
        result = matrix_exponential(OperatorMatrix(PAULI_X), -0.5j * np.pi)
        assert np.max(np.abs(result.entries - (-1j) * PAULI_X)) < 1e-12

    def test_diagonal_closed_form(self):
        m = OperatorMatrix(np.diag([1.5, -0.25]))
        result = matrix_exponential(m, 0.5)
        expected = np.diag([2.117000016612675, 0.8824969025845955])
        assert np.max(np.abs(result.entries - expected)) < 1e-12

    def test_nilpotent_series_truncates(self):
        n = np.array([[0.0, 1.0], [0.0, 0.0]])
        result = matrix_exponential(OperatorMatrix(n), 0.7)
        assert np.allclose(result.entries, np.eye(2) + 0.7 * n, atol=1e-12)

    def test_hermitian_imaginary_scale_is_unitary(self):
        rng = np.random.default_rng(17)
        for dim in (2, 4, 8):
            for _ in range(10):
                m = random_hermitian(rng, dim)
                t = rng.uniform(-5.0, 5.0)
                u = matrix_exponential(m, -1j * t).entries
                assert np.max(np.abs(u.conj().T @ u - np.eye(dim))) < 1e-10


class TestDensityMatrix:
    def test_from_pure_state(self):
        plus = StateVector.normalized([1.0, 1.0])
        rho = DensityMatrix.from_state(plus)
        assert np.allclose(rho.entries, 0.5 * np.ones((2, 2)))
        assert np.allclose(rho.populations(), [0.5, 0.5])

    def test_maximally_mixed(self):
        rho = DensityMatrix(np.eye(4) / 4)
        assert rho.populations() == pytest.approx([0.25] * 4)

    def test_rejects_wrong_trace(self):
        with pytest.raises(ConfigError):
            DensityMatrix(np.diag([0.6, 0.6]))

    def test_rejects_non_hermitian(self):
        with pytest.raises(ConfigError):
            DensityMatrix(np.array([[0.5, 0.3], [0.1, 0.5]]))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ConfigError):
            DensityMatrix(np.diag([1.5, -0.5]))

    def test_state_density_fidelity_matches_pure_case(self):
        rng = np.random.default_rng(29)
        for _ in range(20):
            a = random_state(rng, 4)
            b = random_state(rng, 4)
            rho = DensityMatrix.from_state(b)
            assert state_density_fidelity(a, rho) == pytest.approx(
                fidelity(a, b), abs=1e-12
            )
