//! Closed-form coupling and detuning schedules for the supported control tasks.
//!
//! Every rate has the form `γ = numerator / denominator` with the numerator a
//! target density and the denominator a remaining (or already absorbed) mass.
//! The helpers below build those pairs per task; [`clamp_policy`] turns them into
//! a storable [`ControlSchedule`], and [`synthesize_raw`] keeps the unclamped
//! quotient for plotting.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    check_alphas, phase_profile, ClampReason, ClampRecord, ControlSchedule, Envelope, TaskKind,
    TaskSpec, GAMMA_MAX,
};
use crate::numerics::{derivative, TimeGrid, C64};

/// Fraction of the peak above which phases are compared (on |ξ|) and
/// realizability margins are enforced (on |ξ|²).
pub const ACTIVE_REL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    /// Denominators below `den_floor_rel × total_mass` switch the channel off.
    pub den_floor_rel: f64,
    pub gamma_max: f64,
    pub margin_tol: f64,
    pub phase_tol: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            den_floor_rel: 1e-8,
            gamma_max: GAMMA_MAX,
            margin_tol: 1e-10,
            phase_tol: 1e-6,
        }
    }
}

/// Outcome of the tail-dominance test between a leading and a trailing photon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizabilityReport {
    pub realizable: bool,
    /// Closed time ranges (μs) where the margin is not strictly positive.
    pub violation_times: Vec<[f64; 2]>,
    pub first_violation_us: Option<f64>,
    pub min_margin: f64,
    /// `∫ₜ^∞|ξ₂|² − ∫ₜ^∞|ξ₁|²` at every sample.
    #[serde(skip)]
    pub margin: Vec<f64>,
}

/// Rate numerator/denominator pair for one channel.
#[derive(Debug, Clone, PartialEq)]
struct RatePlan {
    numerator: Vec<f64>,
    denominator: Vec<f64>,
    total_mass: f64,
}

impl RatePlan {
    fn off(n: usize) -> Self {
        Self {
            numerator: vec![0.0; n],
            denominator: vec![1.0; n],
            total_mass: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Plan {
    grid: TimeGrid,
    rates: Vec<RatePlan>,
    epsilon: Vec<Vec<f64>>,
    truncated: Vec<(usize, f64)>,
}

/// Unclamped schedule for figure reproduction: γ may be negative or infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSchedule {
    pub grid: TimeGrid,
    pub gamma: Vec<Vec<f64>>,
    pub epsilon: Vec<Vec<f64>>,
    /// True where γ is negative, non-finite, or its denominator is not positive.
    pub flagged: Vec<Vec<bool>>,
}

/// Per-sample quadrature weights summing to the trapezoid rule.
fn trapezoid_weight(i: usize, n: usize, h: f64) -> f64 {
    if i == 0 || i + 1 == n {
        0.5 * h
    } else {
        h
    }
}

/// Turns `numerator / denominator` into a clamped rate.
///
/// Where `denominator < den_floor_rel × total_mass` the rate is set to zero and
/// the target mass over that run is recorded; elsewhere the rate is capped at
/// `gamma_max`. Channels in the report are 1-based.
pub fn clamp_policy(
    numerator: &[f64],
    denominator: &[f64],
    total_mass: f64,
    grid: &TimeGrid,
    channel: usize,
    opts: &SynthOptions,
) -> (Vec<f64>, Vec<ClampRecord>) {
    let n = numerator.len();
    let h = grid.dt();
    let floor = opts.den_floor_rel * total_mass;
    let mut gamma = vec![0.0; n];
    let mut reason = vec![None; n];
    for i in 0..n {
        let (num, den) = (numerator[i], denominator[i]);
        if num == 0.0 {
            continue;
        }
        if !(den >= floor) || den <= 0.0 {
            reason[i] = Some(ClampReason::DenominatorFloor);
            continue;
        }
        let raw = num / den;
        if raw > opts.gamma_max {
            gamma[i] = opts.gamma_max;
            reason[i] = Some(ClampReason::GammaCap);
        } else {
            gamma[i] = raw;
        }
    }
    let mut records = Vec::new();
    let mut i = 0;
    while i < n {
        let Some(r) = reason[i] else {
            i += 1;
            continue;
        };
        let start = i;
        let mut mass = 0.0;
        while i < n && reason[i] == Some(r) {
            mass += numerator[i] * trapezoid_weight(i, n, h);
            i += 1;
        }
        records.push(ClampRecord {
            channel,
            t_from_us: grid.time(start),
            t_to_us: grid.time(i - 1),
            reason: r,
            mass,
        });
    }
    (gamma, records)
}

fn finish(plan: Plan, opts: &SynthOptions) -> Result<ControlSchedule> {
    let mut gammas = Vec::new();
    let mut report = Vec::new();
    for (j, r) in plan.rates.iter().enumerate() {
        let (g, rec) = clamp_policy(&r.numerator, &r.denominator, r.total_mass, &plan.grid, j + 1, opts);
        gammas.push(g);
        report.extend(rec);
    }
    for &(channel, mass) in &plan.truncated {
        if mass > 0.0 {
            report.push(ClampRecord {
                channel,
                t_from_us: plan.grid.t_start(),
                t_to_us: plan.grid.t_end(),
                reason: ClampReason::TruncatedWindow,
                mass,
            });
        }
    }
    ControlSchedule::new(plan.grid, gammas, plan.epsilon, report)
}

fn raw(plan: Plan) -> RawSchedule {
    let mut gamma = Vec::new();
    let mut flagged = Vec::new();
    for r in &plan.rates {
        let g: Vec<f64> = r
            .numerator
            .iter()
            .zip(&r.denominator)
            .map(|(&a, &b)| if a == 0.0 { 0.0 } else { a / b })
            .collect();
        flagged.push(
            g.iter()
                .zip(&r.denominator)
                .zip(&r.numerator)
                .map(|((&v, &d), &a)| a != 0.0 && (!v.is_finite() || v < 0.0 || d <= 0.0))
                .collect(),
        );
        gamma.push(g);
    }
    RawSchedule {
        grid: plan.grid,
        gamma,
        epsilon: plan.epsilon,
        flagged,
    }
}

fn same_grid(a: &Envelope, b: &Envelope) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::Structural("envelopes are sampled on different grids".into()));
    }
    Ok(())
}

/// φ̇ by central differences on the unwrapped phase.
fn detuning(e: &Envelope) -> Vec<f64> {
    derivative(&phase_profile(e), e.grid()).expect("grid-aligned phase")
}

fn above_peak_fraction(v: &[f64]) -> Vec<bool> {
    let peak = v.iter().cloned().fold(0.0, f64::max);
    v.iter().map(|&m| m > ACTIVE_REL * peak).collect()
}

fn active_mask(e: &Envelope) -> Vec<bool> {
    let mags: Vec<f64> = e.values().iter().map(|z| z.norm()).collect();
    above_peak_fraction(&mags)
}

/// Margin `tail₂ − tail₁ = head₁ − head₂`, each sample taking whichever form
/// subtracts smaller numbers. The choice depends only on symmetric sums, so
/// swapping the arguments negates the result exactly.
fn margin(a: &Envelope, b: &Envelope) -> Vec<f64> {
    let (ha, ta) = (a.head_mass(), a.tail_mass());
    let (hb, tb) = (b.head_mass(), b.tail_mass());
    (0..ha.len())
        .map(|i| {
            if ta[i] + tb[i] <= ha[i] + hb[i] {
                tb[i] - ta[i]
            } else {
                ha[i] - hb[i]
            }
        })
        .collect()
}

pub fn check_tail_dominance(xi1: &Envelope, xi2: &Envelope) -> RealizabilityReport {
    check_tail_dominance_with(xi1, xi2, &SynthOptions::default())
}

pub fn check_tail_dominance_with(xi1: &Envelope, xi2: &Envelope, opts: &SynthOptions) -> RealizabilityReport {
    let m = margin(xi1, xi2);
    let grid = xi1.grid();
    let (a1, a2) = (above_peak_fraction(&xi1.density()), above_peak_fraction(&xi2.density()));
    let mut ranges: Vec<[f64; 2]> = Vec::new();
    let mut min_margin = f64::INFINITY;
    let mut open = false;
    for i in 0..m.len() {
        let active = a1[i] || a2[i];
        if active {
            min_margin = min_margin.min(m[i]);
        }
        let bad = active && !(m[i] > opts.margin_tol);
        let t = grid.time(i);
        match (bad, open) {
            (true, false) => {
                ranges.push([t, t]);
                open = true;
            }
            (true, true) => ranges.last_mut().unwrap()[1] = t,
            (false, _) => open = false,
        }
    }
    RealizabilityReport {
        realizable: ranges.is_empty(),
        first_violation_us: ranges.first().map(|r| r[0]),
        violation_times: ranges,
        min_margin,
        margin: m,
    }
}

/// Both phases re-anchored to 0 at the first sample where both magnitudes are
/// active; compared wherever both are active. Returns the worst deviation of
/// `φ₁ − φ₂ − offset` where `offset` is the anchored difference.
fn phase_offset(xi1: &Envelope, xi2: &Envelope) -> Result<(f64, f64)> {
    let (p1, p2) = (phase_profile(xi1), phase_profile(xi2));
    let (a1, a2) = (active_mask(xi1), active_mask(xi2));
    let both: Vec<usize> = (0..p1.len()).filter(|&i| a1[i] && a2[i]).collect();
    let Some(&anchor) = both.first() else {
        return Err(Error::PhaseMismatch("the two envelopes never overlap".into()));
    };
    let offset = p1[anchor] - p2[anchor];
    let worst = both
        .iter()
        .map(|&i| (p1[i] - p2[i] - offset).abs())
        .fold(0.0, f64::max);
    Ok((offset, worst))
}

fn tail_plan(xi: &Envelope, weight: f64) -> RatePlan {
    RatePlan {
        numerator: xi.density().iter().map(|d| weight * d).collect(),
        denominator: xi.tail_mass().iter().map(|d| weight * d).collect(),
        total_mass: weight * xi.total_mass(),
    }
}

fn head_plan(xi: &Envelope) -> RatePlan {
    RatePlan {
        numerator: xi.density(),
        denominator: xi.head_mass(),
        total_mass: xi.total_mass(),
    }
}

fn plan_two_level_generate(xi: &Envelope) -> Plan {
    Plan {
        grid: *xi.grid(),
        rates: vec![tail_plan(xi, 1.0)],
        epsilon: vec![detuning(xi)],
        truncated: vec![(1, xi.truncated_mass())],
    }
}

fn plan_two_level_catch(xi: &Envelope) -> Plan {
    Plan {
        grid: *xi.grid(),
        rates: vec![head_plan(xi)],
        epsilon: vec![detuning(xi)],
        truncated: vec![(1, xi.truncated_mass())],
    }
}

fn plan_lambda_generate(alphas: [C64; 2], xi1: &Envelope, xi2: &Envelope, opts: &SynthOptions) -> Result<Plan> {
    check_alphas(&alphas)?;
    same_grid(xi1, xi2)?;
    let (w1, w2) = (alphas[0].norm_sqr(), alphas[1].norm_sqr());
    if w1 > 0.0 && w2 > 0.0 {
        let (_, worst) = phase_offset(xi1, xi2)?;
        if worst > opts.phase_tol {
            return Err(Error::PhaseMismatch(format!(
                "generation needs identical phase profiles; they differ by up to {worst:.3e} rad"
            )));
        }
    }
    let n = xi1.grid().len();
    let (d1, d2) = (xi1.density(), xi2.density());
    let (t1, t2) = (xi1.tail_mass(), xi2.tail_mass());
    let shared: Vec<f64> = (0..n).map(|i| w1 * t1[i] + w2 * t2[i]).collect();
    let total = w1 * xi1.total_mass() + w2 * xi2.total_mass();
    let rate = |w: f64, d: &[f64]| RatePlan {
        numerator: d.iter().map(|v| w * v).collect(),
        denominator: shared.clone(),
        total_mass: total,
    };
    let (e1, e2) = (detuning(xi1), detuning(xi2));
    // phases agree, so take each sample's rate from the dominant photon
    let eps: Vec<f64> = (0..n)
        .map(|i| if w1 * d1[i] >= w2 * d2[i] { e1[i] } else { e2[i] })
        .collect();
    Ok(Plan {
        grid: *xi1.grid(),
        rates: vec![rate(w1, &d1), rate(w2, &d2)],
        epsilon: vec![eps, vec![0.0; n]],
        truncated: vec![(1, w1 * xi1.truncated_mass()), (2, w2 * xi2.truncated_mass())],
    })
}

fn require_realizable(xi1: &Envelope, xi2: &Envelope, opts: &SynthOptions) -> Result<Vec<f64>> {
    same_grid(xi1, xi2)?;
    let report = check_tail_dominance_with(xi1, xi2, opts);
    if !report.realizable {
        return Err(Error::NotRealizable(Box::new(report)));
    }
    Ok(report.margin)
}

fn plan_xi_pair(xi1: &Envelope, xi2: &Envelope, margin: Vec<f64>) -> Plan {
    let n = xi1.grid().len();
    Plan {
        grid: *xi1.grid(),
        rates: vec![
            tail_plan(xi1, 1.0),
            RatePlan {
                numerator: xi2.density(),
                denominator: margin,
                total_mass: 1.0,
            },
        ],
        epsilon: vec![vec![0.0; n]; 2],
        truncated: vec![(1, xi1.truncated_mass()), (2, xi2.truncated_mass())],
    }
}

fn plan_lambda_catch(xi: &Envelope) -> Plan {
    let n = xi.grid().len();
    let mut p = plan_two_level_catch(xi);
    p.rates.push(RatePlan::off(n));
    p.epsilon.push(vec![0.0; n]);
    p
}

fn plan_v_catch(xi1: &Envelope, xi2: &Envelope) -> Result<Plan> {
    same_grid(xi1, xi2)?;
    Ok(Plan {
        grid: *xi1.grid(),
        rates: vec![head_plan(xi1), head_plan(xi2)],
        epsilon: vec![detuning(xi1), detuning(xi2)],
        truncated: vec![(1, xi1.truncated_mass()), (2, xi2.truncated_mass())],
    })
}

fn check_inverted_phases(xi1: &Envelope, xi2: &Envelope, opts: &SynthOptions) -> Result<()> {
    let (diff, worst) = phase_offset(xi1, xi2)?;
    // distance of the difference from the nearest odd multiple of π
    let k = ((diff - PI) / (2.0 * PI)).round();
    let off_pi = (diff - PI - 2.0 * PI * k).abs();
    if worst > opts.phase_tol || off_pi > opts.phase_tol {
        return Err(Error::PhaseMismatch(format!(
            "conversion needs phases differing by an odd multiple of pi; difference is {diff:.6} rad \
             (varies by {worst:.3e} rad)"
        )));
    }
    Ok(())
}

fn plan_lambda_convert(xi1: &Envelope, xi2: &Envelope, opts: &SynthOptions, check: bool) -> Result<Plan> {
    same_grid(xi1, xi2)?;
    if check {
        check_inverted_phases(xi1, xi2, opts)?;
    }
    let margin = if check {
        require_realizable(xi1, xi2, opts)?
    } else {
        margin(xi1, xi2)
    };
    let n = xi1.grid().len();
    Ok(Plan {
        grid: *xi1.grid(),
        rates: vec![
            RatePlan {
                numerator: xi1.density(),
                denominator: margin.clone(),
                total_mass: 1.0,
            },
            RatePlan {
                numerator: xi2.density(),
                denominator: margin,
                total_mass: 1.0,
            },
        ],
        epsilon: vec![detuning(xi1), vec![0.0; n]],
        truncated: vec![(1, xi1.truncated_mass()), (2, xi2.truncated_mass())],
    })
}

/// Task dispatch with configurable thresholds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Synthesizer {
    pub opts: SynthOptions,
}

impl Synthesizer {
    pub fn new(opts: SynthOptions) -> Self {
        Self { opts }
    }

    pub fn two_level_generate(&self, xi: &Envelope) -> Result<ControlSchedule> {
        finish(plan_two_level_generate(xi), &self.opts)
    }

    pub fn two_level_catch(&self, xi: &Envelope) -> Result<ControlSchedule> {
        finish(plan_two_level_catch(xi), &self.opts)
    }

    pub fn lambda_generate(&self, alphas: [C64; 2], xi1: &Envelope, xi2: &Envelope) -> Result<ControlSchedule> {
        finish(plan_lambda_generate(alphas, xi1, xi2, &self.opts)?, &self.opts)
    }

    pub fn xi_pair(&self, xi1: &Envelope, xi2: &Envelope) -> Result<ControlSchedule> {
        let m = require_realizable(xi1, xi2, &self.opts)?;
        finish(plan_xi_pair(xi1, xi2, m), &self.opts)
    }

    pub fn lambda_catch(&self, xi: &Envelope) -> Result<ControlSchedule> {
        finish(plan_lambda_catch(xi), &self.opts)
    }

    pub fn v_catch(&self, alphas: [C64; 2], xi1: &Envelope, xi2: &Envelope) -> Result<ControlSchedule> {
        check_alphas(&alphas)?;
        finish(plan_v_catch(xi1, xi2)?, &self.opts)
    }

    pub fn lambda_convert(&self, xi1: &Envelope, xi2: &Envelope) -> Result<ControlSchedule> {
        finish(plan_lambda_convert(xi1, xi2, &self.opts, true)?, &self.opts)
    }

    fn plan(&self, spec: &TaskSpec) -> Result<Plan> {
        let t = &spec.targets;
        let alphas = || {
            spec.alphas
                .ok_or_else(|| Error::InvalidParameter(format!("{:?} requires alphas", spec.task)))
        };
        match spec.task {
            TaskKind::TwoLevelGenerate => Ok(plan_two_level_generate(&t[0])),
            TaskKind::TwoLevelCatch => Ok(plan_two_level_catch(&t[0])),
            TaskKind::LambdaGenerate => plan_lambda_generate(alphas()?, &t[0], &t[1], &self.opts),
            TaskKind::XiPair => {
                let m = require_realizable(&t[0], &t[1], &self.opts)?;
                Ok(plan_xi_pair(&t[0], &t[1], m))
            }
            TaskKind::LambdaCatch => Ok(plan_lambda_catch(&t[0])),
            TaskKind::VCatch => {
                check_alphas(&alphas()?)?;
                plan_v_catch(&t[0], &t[1])
            }
            TaskKind::LambdaConvert => plan_lambda_convert(&t[0], &t[1], &self.opts, true),
        }
    }

    pub fn synthesize(&self, spec: &TaskSpec) -> Result<ControlSchedule> {
        finish(self.plan(spec)?, &self.opts)
    }

    /// Unclamped denominator of each channel's rate (`None` for channels held off).
    pub fn denominators(&self, spec: &TaskSpec) -> Result<Vec<Option<Vec<f64>>>> {
        Ok(self
            .plan(spec)?
            .rates
            .into_iter()
            .map(|r| r.numerator.iter().any(|&v| v != 0.0).then_some(r.denominator))
            .collect())
    }
}

/// Unclamped quotients with signs preserved. Phase rules are still enforced
/// where a task has them; realizability is not.
pub fn synthesize_raw(spec: &TaskSpec) -> Result<RawSchedule> {
    let opts = SynthOptions::default();
    let t = &spec.targets;
    let alphas = || {
        spec.alphas
            .ok_or_else(|| Error::InvalidParameter(format!("{:?} requires alphas", spec.task)))
    };
    let plan = match spec.task {
        TaskKind::TwoLevelGenerate => plan_two_level_generate(&t[0]),
        TaskKind::TwoLevelCatch => plan_two_level_catch(&t[0]),
        TaskKind::LambdaGenerate => plan_lambda_generate(alphas()?, &t[0], &t[1], &opts)?,
        TaskKind::XiPair => {
            same_grid(&t[0], &t[1])?;
            plan_xi_pair(&t[0], &t[1], margin(&t[0], &t[1]))
        }
        TaskKind::LambdaCatch => plan_lambda_catch(&t[0]),
        TaskKind::VCatch => plan_v_catch(&t[0], &t[1])?,
        TaskKind::LambdaConvert => {
            check_inverted_phases(&t[0], &t[1], &opts)?;
            plan_lambda_convert(&t[0], &t[1], &opts, false)?
        }
    };
    Ok(raw(plan))
}

pub fn synth_two_level_generate(xi: &Envelope) -> Result<ControlSchedule> {
    Synthesizer::default().two_level_generate(xi)
}

pub fn synth_two_level_catch(xi: &Envelope) -> Result<ControlSchedule> {
    Synthesizer::default().two_level_catch(xi)
}

pub fn synth_lambda_generate(
    alpha1: C64,
    alpha2: C64,
    xi1: &Envelope,
    xi2: &Envelope,
) -> Result<ControlSchedule> {
    Synthesizer::default().lambda_generate([alpha1, alpha2], xi1, xi2)
}

pub fn synth_xi_pair(xi1: &Envelope, xi2: &Envelope) -> Result<ControlSchedule> {
    Synthesizer::default().xi_pair(xi1, xi2)
}

pub fn synth_lambda_catch(xi: &Envelope) -> Result<ControlSchedule> {
    Synthesizer::default().lambda_catch(xi)
}

pub fn synth_v_catch(alpha1: C64, alpha2: C64, xi1: &Envelope, xi2: &Envelope) -> Result<ControlSchedule> {
    Synthesizer::default().v_catch([alpha1, alpha2], xi1, xi2)
}

pub fn synth_lambda_convert(xi1: &Envelope, xi2: &Envelope) -> Result<ControlSchedule> {
    Synthesizer::default().lambda_convert(xi1, xi2)
}
