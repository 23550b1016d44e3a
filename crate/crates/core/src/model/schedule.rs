use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::TimeGrid;

/// Default upper bound on any coupling rate (rad/μs).
pub const GAMMA_MAX: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClampReason {
    /// Denominator below the floor; γ forced to zero.
    DenominatorFloor,
    /// Raw γ above `gamma_max`; capped.
    GammaCap,
    /// Closed-form envelope mass lying outside the window.
    TruncatedWindow,
}

/// One contiguous run of clamped samples on a channel (1-based).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClampRecord {
    pub channel: usize,
    pub t_from_us: f64,
    pub t_to_us: f64,
    pub reason: ClampReason,
    /// Target probability mass whose emission or absorption the clamp gives up.
    pub mass: f64,
}

/// Per-channel coupling rates γⱼ(t) ≥ 0 and detunings εⱼ(t), both in rad/μs.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule {
    grid: TimeGrid,
    gamma: Vec<Vec<f64>>,
    epsilon: Vec<Vec<f64>>,
    clamp_report: Vec<ClampRecord>,
}

impl ControlSchedule {
    pub fn new(
        grid: TimeGrid,
        gamma: Vec<Vec<f64>>,
        epsilon: Vec<Vec<f64>>,
        clamp_report: Vec<ClampRecord>,
    ) -> Result<Self> {
        if gamma.is_empty() || gamma.len() != epsilon.len() {
            return Err(Error::Structural(format!(
                "{} gamma channels but {} epsilon channels",
                gamma.len(),
                epsilon.len()
            )));
        }
        for series in gamma.iter().chain(&epsilon) {
            if series.len() != grid.len() {
                return Err(Error::Structural(format!(
                    "schedule series has {} samples, grid has {}",
                    series.len(),
                    grid.len()
                )));
            }
        }
        for g in &gamma {
            if let Some(index) = g.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "gamma", index });
            }
            if let Some(i) = g.iter().position(|&v| v < 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "negative coupling rate {} at t = {}",
                    g[i],
                    grid.time(i)
                )));
            }
        }
        for e in &epsilon {
            if let Some(index) = e.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "epsilon", index });
            }
        }
        Ok(Self {
            grid,
            gamma,
            epsilon,
            clamp_report,
        })
    }

    /// Constant-rate, zero-detuning schedule.
    pub fn constant(grid: TimeGrid, gammas: &[f64]) -> Result<Self> {
        let n = grid.len();
        Self::new(
            grid,
            gammas.iter().map(|&g| vec![g; n]).collect(),
            vec![vec![0.0; n]; gammas.len()],
            Vec::new(),
        )
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// γ of channel `j` (0-based).
    pub fn gamma(&self, j: usize) -> &[f64] {
        &self.gamma[j]
    }

    pub fn epsilon(&self, j: usize) -> &[f64] {
        &self.epsilon[j]
    }

    pub fn clamp_report(&self) -> &[ClampRecord] {
        &self.clamp_report
    }

    /// Total mass given up by denominator-floor clamps.
    pub fn skipped_mass(&self) -> f64 {
        self.clamp_report
            .iter()
            .filter(|r| r.reason == ClampReason::DenominatorFloor)
            .map(|r| r.mass)
            .sum()
    }

    /// Reorders channels: channel `j` of the result is channel `perm[j]` here.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_perm(perm, self.channels())?;
        let report = self
            .clamp_report
            .iter()
            .map(|r| ClampRecord {
                channel: perm.iter().position(|&p| p + 1 == r.channel).unwrap() + 1,
                ..r.clone()
            })
            .collect();
        Ok(Self {
            grid: self.grid,
            gamma: perm.iter().map(|&p| self.gamma[p].clone()).collect(),
            epsilon: perm.iter().map(|&p| self.epsilon[p].clone()).collect(),
            clamp_report: report,
        })
    }

    /// Samples in reverse time order on the same grid.
    pub fn time_reversed(&self) -> Self {
        let rev = |v: &Vec<f64>| v.iter().rev().copied().collect::<Vec<_>>();
        let (a, b) = (self.grid.t_start(), self.grid.t_end());
        Self {
            grid: self.grid,
            gamma: self.gamma.iter().map(rev).collect(),
            // time reversal flips the sign of a phase rate
            epsilon: self
                .epsilon
                .iter()
                .map(|e| e.iter().rev().map(|v| -v).collect())
                .collect(),
            clamp_report: self
                .clamp_report
                .iter()
                .map(|r| ClampRecord {
                    t_from_us: a + b - r.t_to_us,
                    t_to_us: a + b - r.t_from_us,
                    ..r.clone()
                })
                .collect(),
        }
    }
}

pub(crate) fn check_perm(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::Structural(format!(
            "permutation of length {} for {n} channels",
            perm.len()
        )));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::Structural(format!("invalid channel permutation {perm:?}")));
        }
        seen[p] = true;
    }
    Ok(())
}
