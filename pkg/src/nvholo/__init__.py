"""Pulsed-drive simulator for holonomic control of NV-center qubit registers."""

__version__ = "0.1.0"

from nvholo.core import (
    ConfigError,
    DensityMatrix,
    NumericalError,
    OperatorMatrix,
    StateVector,
    eig_hermitian,
    fidelity,
    inner_product,
    matrix_exponential,
    partial_population,
    state_density_fidelity,
)
from nvholo.evolve import (
    EvolutionConfig,
    NoiseModel,
    Trajectory,
    convergence_check,
    evolve_lindblad,
    evolve_schrodinger,
    recommended_dt,
)
from nvholo.hamiltonians import (
    HERMITIZED,
    LITERAL,
    LevelSpec,
    PulseChannel,
    PulseSet,
    PulsedHamiltonian,
    build_interaction_4,
    build_interaction_8,
    build_rotating_frame_4,
    build_rotating_frame_8,
    silent_channel,
)
from nvholo.gates import (
    DarkStateParams,
    GateParams,
    PhaseEstimate,
    RotationPath,
    concatenate_paths,
    dark_states,
    holonomic_unitary,
    orthogonal_dark_state,
    phase_from_discrepancy,
    rotation_axis,
    single_qubit_unitary,
)
from nvholo.scenarios import (
    DarkSpectrum,
    ScenarioConfig,
    SweepResult,
    SweepSpec,
    compare_resonant_fidelity,
    resolved_dt_us,
    run_composite_gate_scenario,
    run_dark_state_spectrum,
    run_pi3_rotation,
    run_single_qubit_detuning_sweep,
    run_single_qubit_theta_sweep,
    run_three_qubit_detuning_sweep,
    run_three_qubit_time_evolution,
    run_two_qubit_pi2,
)
from nvholo.config import (
    CsvTable,
    RunManifest,
    parse_config,
    parse_manifest,
    render_config,
    write_csv,
)
from nvholo.cli import run_cli

__all__ = [
    "ConfigError",
    "CsvTable",
    "DarkSpectrum",
    "DarkStateParams",
    "DensityMatrix",
    "EvolutionConfig",
    "GateParams",
    "HERMITIZED",
    "LITERAL",
    "LevelSpec",
    "NoiseModel",
    "NumericalError",
    "OperatorMatrix",
    "PhaseEstimate",
    "PulseChannel",
    "PulseSet",
    "PulsedHamiltonian",
    "RotationPath",
    "RunManifest",
    "ScenarioConfig",
    "StateVector",
    "SweepResult",
    "SweepSpec",
    "Trajectory",
    "build_interaction_4",
    "build_interaction_8",
    "build_rotating_frame_4",
    "build_rotating_frame_8",
    "compare_resonant_fidelity",
    "concatenate_paths",
    "convergence_check",
    "dark_states",
    "eig_hermitian",
    "evolve_lindblad",
    "evolve_schrodinger",
    "fidelity",
    "holonomic_unitary",
    "inner_product",
    "matrix_exponential",
    "orthogonal_dark_state",
    "parse_config",
    "parse_manifest",
    "partial_population",
    "phase_from_discrepancy",
    "recommended_dt",
    "render_config",
    "resolved_dt_us",
    "rotation_axis",
    "run_cli",
    "run_composite_gate_scenario",
    "run_dark_state_spectrum",
    "run_pi3_rotation",
    "run_single_qubit_detuning_sweep",
    "run_single_qubit_theta_sweep",
    "run_three_qubit_detuning_sweep",
    "run_three_qubit_time_evolution",
    "run_two_qubit_pi2",
    "silent_channel",
    "single_qubit_unitary",
    "state_density_fidelity",
    "write_csv",
    "__version__",
]
