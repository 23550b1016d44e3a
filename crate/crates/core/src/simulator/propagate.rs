use nalgebra::DVector;
use serde::Serialize;

use crate::error::Result;
use crate::model::SLHComponent;
use crate::numerics::{max_abs, propagate_substeps, CMatrix, TimeGrid, C64};

/// Step-doubling error above which a trajectory carries a [`ConvergenceWarning`].
pub const GRID_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceWarning {
    pub step_doubling_error: f64,
    pub tolerance: f64,
}

/// No-emission propagator V(t) on the grid, with V(t_start) = I.
#[derive(Debug, Clone)]
pub struct PropagatorTrajectory {
    pub grid: TimeGrid,
    pub v: Vec<CMatrix>,
    /// `V(t)ψ₀` at every sample.
    pub state: Vec<DVector<C64>>,
    /// `|⟨k|V(t)|ψ₀⟩|²`, indexed `[basis][sample]`.
    pub populations: Vec<Vec<f64>>,
    pub step_doubling_error: f64,
    pub warning: Option<ConvergenceWarning>,
}

impl PropagatorTrajectory {
    pub fn population(&self, k: usize) -> &[f64] {
        &self.populations[k]
    }

    /// `‖V(t)ψ₀‖²` at every sample.
    pub fn norm_sqr(&self) -> Vec<f64> {
        self.state.iter().map(|s| s.norm_squared()).collect()
    }

    pub fn final_state(&self) -> &DVector<C64> {
        self.state.last().unwrap()
    }

    /// Largest increase of any column norm between consecutive samples.
    pub fn max_column_norm_growth(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for w in self.v.windows(2) {
            for c in 0..w[0].ncols() {
                worst = worst.max(w[1].column(c).norm() - w[0].column(c).norm());
            }
        }
        worst
    }
}

pub fn propagate(component: &SLHComponent) -> Result<PropagatorTrajectory> {
    let grid = *component.grid();
    let d = component.dim();
    let id = CMatrix::identity(d, d);
    let v = propagate_substeps(component, &id, &grid, 1)?;
    let fine = propagate_substeps(component, &id, &grid, 2)?;
    let err = v
        .iter()
        .zip(&fine)
        .map(|(a, b)| max_abs(&(a - b)))
        .fold(0.0, f64::max);
    let psi0 = component.initial_state();
    let state: Vec<DVector<C64>> = v.iter().map(|m| m * psi0).collect();
    let populations = (0..d)
        .map(|k| state.iter().map(|s| s[k].norm_sqr()).collect())
        .collect();
    Ok(PropagatorTrajectory {
        grid,
        v,
        state,
        populations,
        step_doubling_error: err,
        warning: (err > GRID_TOL).then_some(ConvergenceWarning {
            step_doubling_error: err,
            tolerance: GRID_TOL,
        }),
    })
}
