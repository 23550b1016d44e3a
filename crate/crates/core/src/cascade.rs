//! Series composition of a single-photon source with a downstream atom.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::{
    build_component, AtomKind, Channel, ControlSchedule, CouplingTerm, Envelope, HamiltonianTerm,
    SLHComponent,
};
use crate::numerics::{CMatrix, C64};
use crate::synthesis::synth_two_level_generate;

/// Two-level ancilla that, started excited, emits `xi` into its only channel.
pub fn make_photon_source(xi: &Envelope) -> Result<SLHComponent> {
    let schedule = synth_two_level_generate(xi)?;
    make_photon_source_from(&schedule)
}

/// Ancilla driven by an already synthesized one-channel schedule.
pub fn make_photon_source_from(schedule: &ControlSchedule) -> Result<SLHComponent> {
    build_component(AtomKind::TwoLevel, schedule)?.with_initial_level("e")
}

fn kron_left(a: &CMatrix, d: usize) -> CMatrix {
    a.kronecker(&CMatrix::identity(d, d))
}

fn kron_right(d: usize, b: &CMatrix) -> CMatrix {
    CMatrix::identity(d, d).kronecker(b)
}

/// Feeds the source's output into channel `into_channel` (0-based) of `atom`.
/// The composite basis is `source ⊗ atom` with labels `"{source},{atom}"`.
pub fn series_product(
    source: &SLHComponent,
    atom: &SLHComponent,
    into_channel: usize,
) -> Result<SLHComponent> {
    if source.channels() != 1 || !source.channel(0).upstream.is_empty() {
        return Err(Error::Structural("source must be a plain one-channel component".into()));
    }
    if into_channel >= atom.channels() {
        return Err(Error::Structural(format!(
            "atom has {} channel(s), cannot feed channel index {into_channel}",
            atom.channels()
        )));
    }
    if !atom.channel(into_channel).upstream.is_empty() {
        return Err(Error::Structural("target channel already has an upstream source".into()));
    }
    if source.grid() != atom.grid() {
        return Err(Error::Structural("source and atom use different grids".into()));
    }
    let (ds, da) = (source.dim(), atom.dim());

    let mut hamiltonian: Vec<HamiltonianTerm> = source
        .hamiltonian_terms()
        .iter()
        .map(|t| HamiltonianTerm {
            coeff: t.coeff.clone(),
            op: kron_left(&t.op, da),
        })
        .collect();
    hamiltonian.extend(atom.hamiltonian_terms().iter().map(|t| HamiltonianTerm {
        coeff: t.coeff.clone(),
        op: kron_right(ds, &t.op),
    }));

    let channels = (0..atom.channels())
        .map(|j| {
            let mut terms = Vec::new();
            let mut upstream = Vec::new();
            if j == into_channel {
                for t in &source.channel(0).terms {
                    upstream.push(terms.len());
                    terms.push(CouplingTerm {
                        rate: t.rate.clone(),
                        op: kron_left(&t.op, da),
                    });
                }
            }
            terms.extend(atom.channel(j).terms.iter().map(|t| CouplingTerm {
                rate: t.rate.clone(),
                op: kron_right(ds, &t.op),
            }));
            Channel { terms, upstream }
        })
        .collect();

    let mut basis = Vec::with_capacity(ds * da);
    let mut excitation = Vec::with_capacity(ds * da);
    for (a, ea) in source.basis().iter().zip(source.excitation()) {
        for (b, eb) in atom.basis().iter().zip(atom.excitation()) {
            basis.push(format!("{a},{b}"));
            excitation.push(ea + eb);
        }
    }
    let initial: DVector<C64> = source.initial_state().kronecker(atom.initial_state());
    SLHComponent::from_parts(*atom.grid(), basis, excitation, hamiltonian, channels, initial)
}
