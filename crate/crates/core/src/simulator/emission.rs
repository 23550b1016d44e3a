use std::collections::BTreeMap;

use nalgebra::DVector;

use super::propagate::PropagatorTrajectory;
use crate::error::{Error, Result};
use crate::model::{Envelope, SLHComponent, TwoPhotonAmplitude};
use crate::numerics::{integral_hi, CMatrix, TimeGrid, C64};

/// Largest tolerated condition number of an excitation-sector block of V(τ).
pub const COND_MAX: f64 = 1e12;

/// Emission amplitudes of one run, indexed by channel and terminal basis state.
#[derive(Debug, Clone)]
pub struct EmissionResult {
    pub grid: TimeGrid,
    pub basis: Vec<String>,
    /// `single[j][x][i]` = ξⱼˣ(tᵢ): one photon in channel `j`, atom left in `x`.
    pub single: Vec<Vec<Vec<C64>>>,
    /// `⟨x|V(t_end)|ψ₀⟩`.
    pub vacuum: Vec<C64>,
    pub two_photon: Option<TwoPhotonAmplitude>,
    /// Branch probabilities: `vacuum`, `single_ch{j}_{x}` and `pair`.
    pub probabilities: BTreeMap<String, f64>,
}

impl EmissionResult {
    pub fn amplitude(&self, channel: usize, label: &str) -> Result<&[C64]> {
        let x = self
            .basis
            .iter()
            .position(|b| b == label)
            .ok_or_else(|| Error::Structural(format!("no basis state labelled {label:?}")))?;
        Ok(&self.single[channel][x])
    }

    /// Sum of all branch probabilities.
    pub fn total_probability(&self) -> f64 {
        self.probabilities.values().sum()
    }

    pub fn attach_pair(&mut self, amp: TwoPhotonAmplitude) {
        self.probabilities.insert("pair".into(), amp.total_probability());
        self.two_photon = Some(amp);
    }
}

/// Solves `V x = rhs` (or `Vᵀ x = rhs`) one excitation sector at a time.
pub(crate) fn sector_solve(
    v: &CMatrix,
    rhs: &DVector<C64>,
    sectors: &[Vec<usize>],
    transpose: bool,
    time: f64,
) -> Result<DVector<C64>> {
    let mut out = DVector::zeros(rhs.len());
    for idx in sectors {
        if idx.iter().all(|&k| rhs[k] == C64::new(0.0, 0.0)) {
            continue;
        }
        let m = idx.len();
        let block = CMatrix::from_fn(m, m, |r, c| {
            if transpose {
                v[(idx[c], idx[r])]
            } else {
                v[(idx[r], idx[c])]
            }
        });
        let condition = if m == 1 {
            if block[(0, 0)].norm() > 0.0 { 1.0 } else { f64::INFINITY }
        } else {
            let sv = block.clone().svd(false, false).singular_values;
            let hi = sv.iter().cloned().fold(0.0, f64::max);
            let lo = sv.iter().cloned().fold(f64::INFINITY, f64::min);
            hi / lo
        };
        if !(condition <= COND_MAX) {
            return Err(Error::SectorIllConditioned { time, condition });
        }
        let b = DVector::from_iterator(m, idx.iter().map(|&k| rhs[k]));
        let x = block
            .lu()
            .solve(&b)
            .ok_or(Error::SectorIllConditioned { time, condition: f64::INFINITY })?;
        for (r, &k) in idx.iter().enumerate() {
            out[k] = x[r];
        }
    }
    Ok(out)
}

pub(crate) fn sectors(component: &SLHComponent) -> Vec<Vec<usize>> {
    let top = component.excitation().iter().copied().max().unwrap_or(0);
    (0..=top)
        .map(|k| component.sector(k))
        .filter(|s| !s.is_empty())
        .collect()
}

/// Single-photon amplitudes `ξⱼˣ(τ) = ⟨x|V(T) V(τ)⁻¹ Lⱼ(τ) V(τ)|ψ₀⟩`.
pub fn emit_single(trajectory: &PropagatorTrajectory, component: &SLHComponent) -> Result<EmissionResult> {
    let grid = trajectory.grid;
    if grid != *component.grid() {
        return Err(Error::Structural("trajectory and component grids differ".into()));
    }
    let n = grid.len();
    let d = component.dim();
    let secs = sectors(component);
    let v_end = trajectory.v.last().unwrap();
    let mut single = vec![vec![vec![C64::new(0.0, 0.0); n]; d]; component.channels()];
    for (j, per_channel) in single.iter_mut().enumerate() {
        for i in 0..n {
            let u = component.coupling_at(j, i as f64) * &trajectory.state[i];
            if u.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                continue;
            }
            let y = sector_solve(&trajectory.v[i], &u, &secs, false, grid.time(i))?;
            let z = v_end * y;
            for x in 0..d {
                per_channel[x][i] = z[x];
            }
        }
    }
    let vacuum: Vec<C64> = trajectory.final_state().iter().copied().collect();
    let h = grid.dt();
    let mut probabilities = BTreeMap::new();
    probabilities.insert("vacuum".to_string(), trajectory.final_state().norm_squared());
    for (j, per_channel) in single.iter().enumerate() {
        for (x, amp) in per_channel.iter().enumerate() {
            let p = integral_hi(&amp.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>(), h);
            if p > 0.0 {
                probabilities.insert(format!("single_ch{}_{}", j + 1, component.basis()[x]), p);
            }
        }
    }
    Ok(EmissionResult {
        grid,
        basis: component.basis().to_vec(),
        single,
        vacuum,
        two_photon: None,
        probabilities,
    })
}

fn check_grid(len: usize, grid: &TimeGrid) -> Result<()> {
    if len != grid.len() {
        return Err(Error::Structural(format!(
            "achieved series has {len} samples, target grid has {}",
            grid.len()
        )));
    }
    Ok(())
}

/// `∫ a*(t) b(t) dt` with the fourth-order rule.
pub fn overlap(a: &[C64], b: &[C64], h: f64) -> C64 {
    let prod: Vec<C64> = a.iter().zip(b).map(|(x, y)| x.conj() * y).collect();
    let re: Vec<f64> = prod.iter().map(|z| z.re).collect();
    let im: Vec<f64> = prod.iter().map(|z| z.im).collect();
    C64::new(integral_hi(&re, h), integral_hi(&im, h))
}

/// `|∫ target* · achieved|²`; amplitude lost by `achieved` lowers the score.
pub fn fidelity(achieved: &[C64], target: &Envelope) -> Result<f64> {
    check_grid(achieved.len(), target.grid())?;
    Ok(overlap(target.values(), achieved, target.grid().dt()).norm_sqr())
}

/// Overlap with the branch renormalized: `|⟨target|a⟩|² / ⟨a|a⟩`.
pub fn branch_fidelity(achieved: &[C64], target: &Envelope) -> Result<f64> {
    check_grid(achieved.len(), target.grid())?;
    let h = target.grid().dt();
    let norm = overlap(achieved, achieved, h).re;
    if norm <= 0.0 {
        return Ok(0.0);
    }
    Ok(overlap(target.values(), achieved, h).norm_sqr() / norm)
}
