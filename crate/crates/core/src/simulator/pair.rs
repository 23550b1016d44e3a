use nalgebra::DVector;
use rayon::prelude::*;

use super::closed_form::LadderIntegrals;
use super::emission::{sector_solve, sectors};
use super::propagate::PropagatorTrajectory;
use crate::error::{Error, Result};
use crate::model::{row_offset, ControlSchedule, SLHComponent, TwoPhotonAmplitude};
use crate::numerics::C64;

/// Largest tolerated gap between the generic and closed-form pair amplitudes.
pub const PAIR_CROSS_CHECK_TOL: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct PairEmission {
    pub amplitude: TwoPhotonAmplitude,
    /// Sup-norm gap between the generic amplitude and the ladder closed form.
    pub cross_check_residual: f64,
}

/// Recovers the schedule of a ladder atom built by `build_component(Xi, ..)`.
fn ladder_schedule(c: &SLHComponent) -> Result<ControlSchedule> {
    let one = |j: usize, r: usize, col: usize| {
        let ch = c.channel(j);
        ch.terms.len() == 1 && ch.upstream.is_empty() && ch.terms[0].op[(r, col)].norm() == 1.0
    };
    let h = c.hamiltonian_terms();
    let is_ladder = c.basis() == ["g", "e", "f"]
        && c.excitation() == [0, 1, 2]
        && c.channels() == 2
        && one(0, 1, 2)
        && one(1, 0, 1)
        && h.len() == 2
        && h[0].op[(2, 2)].norm() == 1.0
        && h[1].op[(1, 1)].norm() == 1.0;
    if !is_ladder {
        return Err(Error::Structural(
            "two-photon emission needs a ladder atom (f → e on channel 1, e → g on channel 2)".into(),
        ));
    }
    ControlSchedule::new(
        *c.grid(),
        vec![c.channel(0).terms[0].rate.clone(), c.channel(1).terms[0].rate.clone()],
        vec![h[0].coeff.clone(), h[1].coeff.clone()],
        Vec::new(),
    )
}

/// Two-photon amplitude with the first photon on channel 1 at τ₁ and the second
/// on channel 2 at τ₂ ≥ τ₁, atom left in |g⟩:
/// `⟨g|V(T)V(τ₂)⁻¹L₂(τ₂)V(τ₂)V(τ₁)⁻¹L₁(τ₁)V(τ₁)|ψ₀⟩`.
pub fn emit_pair(trajectory: &PropagatorTrajectory, component: &SLHComponent) -> Result<PairEmission> {
    let schedule = ladder_schedule(component)?;
    let grid = trajectory.grid;
    let n = grid.len();
    let secs = sectors(component);
    let g = component.index_of("g")?;

    let first: Vec<DVector<C64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let u = component.coupling_at(0, j as f64) * &trajectory.state[j];
            sector_solve(&trajectory.v[j], &u, &secs, false, grid.time(j))
        })
        .collect::<Result<_>>()?;

    let a = trajectory.v.last().unwrap().row(g).transpose();
    let rows: Vec<DVector<C64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let b = sector_solve(&trajectory.v[i], &a, &secs, true, grid.time(i))?;
            let m = component.coupling_at(1, i as f64) * &trajectory.v[i];
            Ok(m.transpose() * b)
        })
        .collect::<Result<_>>()?;

    let oracle = LadderIntegrals::new(&schedule);
    let mut values = vec![C64::new(0.0, 0.0); row_offset(n)];
    let mut slices: Vec<(usize, &mut [C64])> = Vec::with_capacity(n);
    let mut rest = values.as_mut_slice();
    for i in 0..n {
        let (row, tail) = rest.split_at_mut(i + 1);
        slices.push((i, row));
        rest = tail;
    }
    let residual = slices
        .into_par_iter()
        .map(|(i, row)| {
            let r = &rows[i];
            let mut worst: f64 = 0.0;
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = r.dot(&first[j]);
                worst = worst.max((*slot - oracle.pair(i, j)).norm());
            }
            worst
        })
        .reduce(|| 0.0, f64::max);

    if residual > PAIR_CROSS_CHECK_TOL {
        return Err(Error::InternalConsistency(format!(
            "two-photon amplitude differs from the ladder closed form by {residual:.3e}"
        )));
    }
    Ok(PairEmission {
        amplitude: TwoPhotonAmplitude::new(grid, values)?,
        cross_check_residual: residual,
    })
}

/// Arrival-time densities of the first and second photon.
pub fn marginals(amp: &TwoPhotonAmplitude) -> (Vec<f64>, Vec<f64>) {
    amp.marginals()
}
