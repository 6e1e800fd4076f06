//! Steering n-level density matrices with engineered incoherent radiation
//! followed by coherent control.
//!
//! Units: ħ = 1 inside the dynamics, energies and rates in rad/s and 1/s,
//! couplings in rad/s per unit field. Operators on ℂⁿ⊗ℂⁿ act on column-stacked
//! density matrices, vec(ρ)[i + j·n] = ρ_ij.

pub mod control;
pub mod dynamics;
pub mod engineering;
pub mod error;
pub mod kraus;
pub mod linalg;
pub mod sampling;
pub mod state;
pub mod units;

pub use control::{
    apply_unitary, basis_rotation_unitary, lie_algebra_rank, pi_pulse_duration, propagate_coherent,
    propagator_path, synthesize_two_level_pulse, Pulse, UnitaryOperator,
};
pub use dynamics::{
    build_dissipator, coherence_decay_rates, energy_density, pauli_generator, propagate, stationary_state,
    Liouvillian, SpectralDensity, Trajectory,
};
pub use engineering::{
    execute, plan, stage1_duration, synthesize_spectral_density, verify_all_to_one, EngineeringPlan,
    EngineeringReport, Executor, PlanConfig, Stage1Length, Stage2Mode,
};
pub use error::{Error, Result};
pub use kraus::{all_to_one_map, apply_map, choi_matrix, compare_map_to_scheme, is_completely_positive, KrausMap};
pub use linalg::{ComplexMatrix, C64};
pub use state::{bloch_vector, density_from_pure, hs_distance, spectral_decomposition, DensityMatrix, QSystem};
