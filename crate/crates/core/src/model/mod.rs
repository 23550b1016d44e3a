//! Envelopes, schedules, atoms as open systems, and task descriptions.

mod component;
mod envelope;
mod schedule;
mod task;
mod two_photon;

pub use component::{build_component, AtomKind, Channel, CouplingTerm, HamiltonianTerm, SLHComponent};
pub use envelope::{make_envelope, phase_profile, Envelope, EnvelopeKind, PhaseSpec, EDGE_TOL, NORM_TOL};
pub use schedule::{ClampReason, ClampRecord, ControlSchedule, GAMMA_MAX};
pub use task::{check_alphas, TaskKind, TaskSpec, ALPHA_TOL};
pub(crate) use two_photon::row_offset;
pub use two_photon::TwoPhotonAmplitude;
