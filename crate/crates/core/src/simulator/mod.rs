//! Verification engine: non-unitary propagation, emission amplitudes,
//! fidelities and conservation audits.

mod audit;
pub mod closed_form;
mod emission;
mod pair;
mod propagate;
mod task;

pub use audit::{conservation_audit, emitted_so_far, internal_amplitude_check, ConservationReport, InternalAmplitudeCheck};
pub use emission::{branch_fidelity, emit_single, fidelity, overlap, EmissionResult, COND_MAX};
pub use pair::{emit_pair, marginals, PairEmission, PAIR_CROSS_CHECK_TOL};
pub use propagate::{propagate, ConvergenceWarning, PropagatorTrajectory, GRID_TOL};
pub use task::{simulate_task, simulate_task_with, SimulationReport, Thresholds};
