import math

import numpy as np
import pytest

from nvholo.core import (
    ConfigError,
    NumericalError,
    OperatorMatrix,
    StateVector,
    unitary_deviation,
)
from nvholo.evolve import Trajectory
from nvholo.gates import (
    REFERENCE_PHASE_MATRIX,
    DarkStateParams,
    GateParams,
    PhaseEstimate,
    RotationPath,
    close_to_reference_phase_matrix,
    concatenate_paths,
    dark_alignment,
    dark_states,
    effective_phase_matrix,
    holonomic_unitary,
    orthogonal_dark_state,
    phase_from_discrepancy,
    rotation_axis,
    single_qubit_unitary,
)

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def amplitude_trajectory(amps_list, times=None):
    amps = np.asarray(amps_list, dtype=complex)
    if times is None:
        times = np.linspace(0.0, 1.0, amps.shape[0])
    return Trajectory(
        times=np.asarray(times, dtype=float),
        populations=np.abs(amps) ** 2,
        amplitudes=amps,
    )


class TestRotationAxis:
    def test_poles_and_equator(self):
        assert np.allclose(rotation_axis(0.0, 0.0), [0.0, 0.0, 1.0], atol=1e-15)
        assert np.allclose(rotation_axis(np.pi / 6, 0.0), [1.0, 0.0, 0.0], atol=1e-12)
        assert np.allclose(
            rotation_axis(np.pi / 6, np.pi / 6), [0.0, 1.0, 0.0], atol=1e-12
        )

    def test_unit_norm(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            theta, phi = rng.uniform(-2 * np.pi, 2 * np.pi, size=2)
            assert np.linalg.norm(rotation_axis(theta, phi)) == pytest.approx(
                1.0, abs=1e-12
            )

    def test_periodicity_two_pi_thirds(self):
        rng = np.random.default_rng(12)
        step = 2 * np.pi / 3
        for _ in range(20):
            theta, phi = rng.uniform(-np.pi, np.pi, size=2)
            base = rotation_axis(theta, phi)
            assert np.max(np.abs(rotation_axis(theta + step, phi) - base)) < 1e-12
            assert np.max(np.abs(rotation_axis(theta, phi + step) - base)) < 1e-12


class TestDarkStates:
    def test_beta_half_pi_selects_first_level(self):
        d_prime, _, _ = dark_states(DarkStateParams(beta=np.pi / 2, varphi=0.0))
        expected = np.zeros(8, dtype=complex)
        expected[0] = 1.0
        assert np.max(np.abs(d_prime.amps - expected)) < 1e-12

    def test_beta_zero_selects_second_levels(self):
        d_prime, d_double, _ = dark_states(DarkStateParams(beta=0.0, varphi=0.0))
        assert d_prime.population(1) == pytest.approx(1.0, abs=1e-12)
        assert d_double.population(3) == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_support_and_normalization(self):
        rng = np.random.default_rng(13)
        for _ in range(25):
            params = DarkStateParams(
                beta=rng.uniform(-np.pi, np.pi), varphi=rng.uniform(-np.pi, np.pi)
            )
            d_prime, d_double, d_full = dark_states(params)
            assert abs(np.vdot(d_prime.amps, d_double.amps)) == 0.0
            for state in (d_prime, d_double, d_full):
                assert np.linalg.norm(state.amps) == pytest.approx(1.0, abs=1e-12)
            combo = (d_prime.amps + d_double.amps) / math.sqrt(2.0)
            assert np.max(np.abs(d_full.amps - combo)) < 1e-12

    def test_phase_convention(self):
        d_prime, _, _ = dark_states(
            DarkStateParams(beta=np.pi / 4, varphi=np.pi / 3), dim=4
        )
        root_half = 1.0 / math.sqrt(2.0)
        assert d_prime.amps[0] == pytest.approx(
            root_half * np.exp(-1j * np.pi / 3), abs=1e-12
        )
        assert d_prime.amps[1] == pytest.approx(
            root_half * np.exp(1j * np.pi / 3), abs=1e-12
        )

    def test_dim_validation(self):
        with pytest.raises(ConfigError):
            dark_states(DarkStateParams(), dim=3)


class TestOrthogonalDarkState:
    def test_orthogonality(self):
        rng = np.random.default_rng(14)
        for _ in range(25):
            params = DarkStateParams(
                beta=rng.uniform(0, np.pi), varphi=rng.uniform(0, np.pi)
            )
            _, _, d_full = dark_states(params)
            partner = orthogonal_dark_state(d_full)
            assert abs(np.vdot(d_full.amps, partner.amps)) < 1e-12

    def test_deterministic_tie_break(self):
        # dark = e0 forces the partner onto the next basis vector
        partner = orthogonal_dark_state(StateVector.basis(4, 0))
        assert partner.population(1) == pytest.approx(1.0, abs=1e-15)

    def test_uniform_block_partner(self):
        _, _, d_full = dark_states(DarkStateParams(beta=np.pi / 4, varphi=0.0), dim=4)
        partner = orthogonal_dark_state(d_full)
        # projecting e0 out of the flat combination leaves (3,-1,-1,-1)/(2*sqrt(3))
        assert abs(partner.amps[0]) == pytest.approx(
            math.sqrt(3.0) / 2.0, abs=1e-12
        )


class TestHolonomicUnitary:
    def test_zero_phase_is_identity(self):
        _, _, d_full = dark_states(DarkStateParams())
        u = holonomic_unitary(0.0, d_full, orthogonal_dark_state(d_full))
        assert np.max(np.abs(u.entries - np.eye(8))) < 1e-15

    def test_full_loop_flips_partner(self):
        _, _, d_full = dark_states(DarkStateParams(beta=0.3, varphi=0.7))
        partner = orthogonal_dark_state(d_full)
        u = holonomic_unitary(2 * np.pi, d_full, partner)
        assert np.max(np.abs(u.entries @ d_full.amps - d_full.amps)) < 1e-12
        assert np.max(np.abs(u.entries @ partner.amps + partner.amps)) < 1e-12

    def test_partner_picks_up_half_phase(self):
        rng = np.random.default_rng(15)
        for _ in range(20):
            gamma = rng.uniform(-2 * np.pi, 2 * np.pi)
            params = DarkStateParams(
                beta=rng.uniform(0, np.pi), varphi=rng.uniform(0, np.pi)
            )
            _, _, d_full = dark_states(params)
            partner = orthogonal_dark_state(d_full)
            u = holonomic_unitary(gamma, d_full, partner)
            assert u.unitary
            got = u.entries @ partner.amps
            expected = np.exp(0.5j * gamma) * partner.amps
            assert np.max(np.abs(got - expected)) < 1e-12

    def test_commutes_with_dark_projector(self):
        _, _, d_full = dark_states(DarkStateParams(beta=1.1, varphi=0.4))
        u = holonomic_unitary(1.3, d_full, orthogonal_dark_state(d_full)).entries
        proj = np.outer(d_full.amps, np.conj(d_full.amps))
        assert np.max(np.abs(u @ proj - proj @ u)) <= 1e-12

    def test_rejects_non_orthogonal(self):
        a = StateVector.basis(4, 0)
        b = StateVector.normalized([1.0, 1.0, 0.0, 0.0])
        with pytest.raises(ConfigError):
            holonomic_unitary(1.0, a, b)

    def test_rejects_dim_mismatch(self):
        with pytest.raises(ConfigError):
            holonomic_unitary(1.0, StateVector.basis(4, 0), StateVector.basis(8, 1))


class TestGateParams:
    def test_ratio_consistency(self):
        GateParams(lam=0.5, detuning_mhz=5.0, rabi_mhz=10.0)
        with pytest.raises(ConfigError):
            GateParams(lam=0.4, detuning_mhz=5.0, rabi_mhz=10.0)

    def test_rejects_non_positive_rabi(self):
        with pytest.raises(ConfigError):
            GateParams(rabi_mhz=0.0)

    def test_from_drive_derives_ratio(self):
        params = GateParams.from_drive(
            theta=0.1, phi=0.2, detuning_mhz=3.0, rabi_mhz=12.0
        )
        assert params.lam == pytest.approx(0.25, abs=1e-15)


class TestSingleQubitUnitary:
    def test_identity(self):
        u = single_qubit_unitary(GateParams())
        assert np.max(np.abs(u.entries - np.eye(2))) < 1e-15

    def test_pi_rotation_is_x_up_to_phase(self):
        u = single_qubit_unitary(GateParams(theta=np.pi))
        assert np.max(np.abs(u.entries - (-1j) * PAULI_X)) < 1e-12

    def test_detuning_phase(self):
        # lam = 1 puts a quarter-turn z-phase in front
        u = single_qubit_unitary(GateParams(lam=1.0))
        expected = np.diag(
            [np.exp(-1j * np.pi / 4), np.exp(1j * np.pi / 4)]
        )
        assert np.max(np.abs(u.entries - expected)) < 1e-12

    def test_always_unitary(self):
        rng = np.random.default_rng(16)
        for _ in range(30):
            params = GateParams(
                theta=rng.uniform(-np.pi, np.pi),
                phi=rng.uniform(-np.pi, np.pi),
                lam=rng.uniform(-5, 5),
            )
            u = single_qubit_unitary(params)
            assert unitary_deviation(u.entries) < 1e-12


class TestConcatenatePaths:
    def test_identity_chain(self):
        total = concatenate_paths([np.eye(2)] * 3)
        assert np.max(np.abs(total.entries - np.eye(2))) < 1e-15

    def test_inverse_pair_cancels(self):
        u = single_qubit_unitary(GateParams(theta=0.7, phi=0.3, lam=0.2))
        total = concatenate_paths([u, u.entries.conj().T])
        assert np.max(np.abs(total.entries - np.eye(2))) < 1e-12

    def test_double_flip_is_identity_up_to_phase(self):
        x_like = single_qubit_unitary(GateParams(theta=np.pi))
        total = concatenate_paths([x_like, x_like])
        assert np.max(np.abs(total.entries + np.eye(2))) < 1e-12

    def test_execution_order(self):
        rx = single_qubit_unitary(GateParams(theta=np.pi / 2)).entries
        rz = single_qubit_unitary(GateParams(phi=np.pi / 2)).entries
        total = concatenate_paths([rx, rz])
        assert np.max(np.abs(total.entries - rz @ rx)) < 1e-15

    def test_preserves_unitarity(self):
        u = single_qubit_unitary(GateParams(theta=1.0, phi=0.5))
        assert concatenate_paths([u, u]).unitary

    def test_rejects_mismatched_dims(self):
        with pytest.raises(ConfigError):
            concatenate_paths([np.eye(2), np.eye(4)])

    def test_rejects_empty(self):
        with pytest.raises(ConfigError):
            concatenate_paths([])


class TestRotationPath:
    def test_closed_path_endpoints(self):
        RotationPath(
            waypoints=((np.pi / 3, 0.0), (0.0, np.pi / 3), (np.pi / 3, 0.0)),
            closed=True,
        )
        with pytest.raises(ConfigError):
            RotationPath(
                waypoints=((np.pi / 3, 0.0), (0.0, np.pi / 3)), closed=True
            )

    def test_needs_two_waypoints(self):
        with pytest.raises(ConfigError):
            RotationPath(waypoints=((0.0, 0.0),))


class TestEffectivePhaseMatrix:
    def test_identity_evolution(self):
        traj_a = amplitude_trajectory([[1.0, 0.0], [1.0, 0.0]])
        traj_b = amplitude_trajectory([[0.0, 1.0], [0.0, 1.0]])
        matrix, deviation = effective_phase_matrix(traj_a, traj_b)
        assert np.max(np.abs(matrix.entries - np.eye(2))) < 1e-12
        assert deviation < 1e-12

    def test_diagonal_phase_map(self):
        traj_a = amplitude_trajectory([[1.0, 0.0], [np.exp(1j * np.pi / 3), 0.0]])
        traj_b = amplitude_trajectory([[0.0, 1.0], [0.0, np.exp(-1j * np.pi / 5)]])
        matrix, deviation = effective_phase_matrix(traj_a, traj_b)
        assert matrix.entries[0, 0] == pytest.approx(
            np.exp(1j * np.pi / 3), abs=1e-12
        )
        assert matrix.entries[1, 1] == pytest.approx(
            np.exp(-1j * np.pi / 5), abs=1e-12
        )
        assert abs(matrix.entries[0, 1]) == 0.0
        assert deviation < 1e-12

    def test_reference_data_comparison(self):
        assert close_to_reference_phase_matrix(REFERENCE_PHASE_MATRIX)
        assert not close_to_reference_phase_matrix(np.eye(2))
        # the stored map is far from unitary and must stay diagnostic-only
        assert unitary_deviation(REFERENCE_PHASE_MATRIX) > 0.1
        assert np.linalg.norm(REFERENCE_PHASE_MATRIX[0]) > 1.0

    def test_rejects_mismatched_duration(self):
        traj_a = amplitude_trajectory([[1.0, 0.0], [1.0, 0.0]], times=[0.0, 1.0])
        traj_b = amplitude_trajectory([[0.0, 1.0], [0.0, 1.0]], times=[0.0, 2.0])
        with pytest.raises(ConfigError):
            effective_phase_matrix(traj_a, traj_b)

    def test_rejects_total_leakage(self):
        traj_a = amplitude_trajectory([[1, 0, 0, 0], [0, 0, 1, 0]])
        traj_b = amplitude_trajectory([[0, 1, 0, 0], [0, 1, 0, 0]])
        with pytest.raises(NumericalError):
            effective_phase_matrix(traj_a, traj_b)


class TestPhaseFromDiscrepancy:
    def test_identical_records(self):
        traj = amplitude_trajectory([[1.0, 0.0], [0.6, 0.8]])
        estimate = phase_from_discrepancy(traj, traj, level=0)
        assert estimate.discrepancy == 0.0
        assert estimate.magnitude_rad == 0.0
        assert not estimate.undefined

    def test_global_phase_shows_up_in_magnitude(self):
        base = np.array([[1.0, 0.0], [0.6, 0.8]], dtype=complex)
        ref = amplitude_trajectory(base)
        act = amplitude_trajectory(np.exp(1j * np.pi / 4) * base)
        estimate = phase_from_discrepancy(ref, act, level=0)
        assert estimate.discrepancy == 0.0
        assert estimate.magnitude_rad == pytest.approx(np.pi / 4, abs=1e-12)

    def test_orthogonal_finals_flagged_undefined(self):
        ref = amplitude_trajectory([[1.0, 0.0], [1.0, 0.0]])
        act = amplitude_trajectory([[1.0, 0.0], [0.0, 1.0]])
        estimate = phase_from_discrepancy(ref, act, level=0, reference_label="flip")
        assert estimate.undefined
        assert estimate.magnitude_rad == 0.0
        assert estimate.discrepancy == pytest.approx(1.0, abs=1e-12)
        assert estimate.reference_label == "flip"

    def test_rejects_grid_mismatch(self):
        ref = amplitude_trajectory([[1.0, 0.0], [1.0, 0.0]], times=[0.0, 1.0])
        act = amplitude_trajectory([[1.0, 0.0], [1.0, 0.0]], times=[0.0, 0.5])
        with pytest.raises(ConfigError):
            phase_from_discrepancy(ref, act, level=0)

    def test_estimate_validation(self):
        with pytest.raises(ConfigError):
            PhaseEstimate(magnitude_rad=4.0, discrepancy=0.1)
        with pytest.raises(ConfigError):
            PhaseEstimate(magnitude_rad=0.0, discrepancy=-0.1)


class TestDarkAlignment:
    def test_identical_and_orthogonal(self):
        a = StateVector.basis(8, 0)
        assert dark_alignment(a, a) == pytest.approx(1.0, abs=1e-15)
        assert dark_alignment(a, StateVector.basis(8, 1)) == 0.0

    def test_matches_projection(self):
        d_prime, _, _ = dark_states(DarkStateParams(beta=np.pi / 2, varphi=0.0))
        assert dark_alignment(d_prime, StateVector.basis(8, 0)) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_rejects_dim_mismatch(self):
        with pytest.raises(ConfigError):
            dark_alignment(StateVector.basis(4, 0), StateVector.basis(8, 0))
