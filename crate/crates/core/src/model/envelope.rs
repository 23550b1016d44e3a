use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::numerics::{self, ComplexSeries, TimeGrid, C64};

/// Maximum ratio |ξ(edge)| / max|ξ| tolerated at the window boundaries.
pub const EDGE_TOL: f64 = 1e-4;
/// Normalization tolerance after construction.
pub const NORM_TOL: f64 = 1e-6;
/// Relative magnitude below which the phase of a sample is considered undefined.
pub const PHASE_FREEZE_REL: f64 = 1e-9;

/// Photon shape requested from [`make_envelope`]. Rates in rad/μs, times in μs.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvelopeKind {
    /// `√γ_c e^{−γ_c t/2}` for `t ≥ 0`, zero before the onset at `t = 0`.
    Exponential { gamma_c: f64 },
    /// `(Ω²/2π)^{1/4} e^{−(Ω(t−t_c)/2)²}`.
    Gaussian { omega: f64, t_center: f64 },
    /// Arbitrary samples on the grid; normalized on construction.
    Custom(Vec<C64>),
}

/// Phase imprinted on a closed-form shape: `ξ → ξ · e^{−iωt} · (−1 if global_pi)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseSpec {
    pub global_pi: bool,
    pub chirp_rad_per_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Exponential { gamma_c: f64 },
    Gaussian { omega: f64, t_center: f64 },
    Sampled,
}

/// A normalized single-photon wavepacket ξ(t) sampled on a grid (units μs^{-1/2}).
///
/// Closed-form shapes keep their analytic cumulative masses, so the synthesis
/// denominators `∫_t^∞ |ξ|²` and `∫_{-∞}^t |ξ|²` are exact at every sample. Sampled
/// shapes fall back to trapezoidal masses over the window.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    series: ComplexSeries,
    label: String,
    shape: Shape,
    truncated_mass: f64,
}

pub fn make_envelope(
    kind: EnvelopeKind,
    phase: PhaseSpec,
    grid: &TimeGrid,
    label: impl Into<String>,
) -> Result<Envelope> {
    let label = label.into();
    let (shape, magnitudes): (Shape, Vec<C64>) = match kind {
        EnvelopeKind::Exponential { gamma_c } => {
            positive("gamma_c", gamma_c)?;
            let mags = grid
                .times()
                .iter()
                .map(|&t| {
                    let m = if t >= 0.0 {
                        gamma_c.sqrt() * (-0.5 * gamma_c * t).exp()
                    } else {
                        0.0
                    };
                    C64::new(m, 0.0)
                })
                .collect();
            (Shape::Exponential { gamma_c }, mags)
        }
        EnvelopeKind::Gaussian { omega, t_center } => {
            positive("omega", omega)?;
            if !t_center.is_finite() {
                return Err(Error::InvalidParameter("t_center must be finite".into()));
            }
            let amp = (omega * omega / (2.0 * PI)).powf(0.25);
            let mags = grid
                .times()
                .iter()
                .map(|&t| {
                    let z = 0.5 * omega * (t - t_center);
                    C64::new(amp * (-z * z).exp(), 0.0)
                })
                .collect();
            (Shape::Gaussian { omega, t_center }, mags)
        }
        EnvelopeKind::Custom(values) => {
            let series = ComplexSeries::new(*grid, values)?;
            return Envelope::from_samples(series, label);
        }
    };

    let values: Vec<C64> = grid
        .times()
        .iter()
        .zip(magnitudes)
        .map(|(&t, m)| {
            let mut z = m;
            if phase.chirp_rad_per_us != 0.0 {
                z *= C64::from_polar(1.0, -phase.chirp_rad_per_us * t);
            }
            if phase.global_pi {
                z = -z;
            }
            // no signed zeros, so a negated real sample has arg exactly π
            C64::new(z.re + 0.0, z.im + 0.0)
        })
        .collect();
    let series = ComplexSeries::new(*grid, values)?;
    let mut env = Envelope {
        series,
        label,
        shape,
        truncated_mass: 0.0,
    };
    env.truncated_mass = env.head_at(grid.t_start()) + env.tail_at(grid.t_end());
    env.check_edges()?;
    Ok(env)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

impl Envelope {
    /// Wraps arbitrary samples, rescaling so that the trapezoidal norm is 1.
    pub fn from_samples(series: ComplexSeries, label: impl Into<String>) -> Result<Self> {
        let mass = numerics::quadrature(&series.norm_sqr(), series.grid())?;
        if !(mass > 0.0) {
            return Err(Error::InvalidParameter("envelope has zero norm".into()));
        }
        let env = Envelope {
            series,
            label: label.into(),
            shape: Shape::Sampled,
            truncated_mass: 0.0,
        }
        .normalized()?;
        env.check_edges()?;
        Ok(env)
    }

    /// Rescale sampled envelopes to unit trapezoidal norm. Closed-form shapes
    /// are normalized over the real line already and are returned unchanged.
    pub fn normalized(&self) -> Result<Self> {
        if self.shape != Shape::Sampled {
            return Ok(self.clone());
        }
        let mass = numerics::quadrature(&self.series.norm_sqr(), self.grid())?;
        if (mass - 1.0).abs() <= f64::EPSILON {
            return Ok(self.clone());
        }
        let s = 1.0 / mass.sqrt();
        let values = self.series.values().iter().map(|z| z * s).collect();
        Ok(Envelope {
            series: ComplexSeries::new(*self.grid(), values)?,
            ..self.clone()
        })
    }

    fn check_edges(&self) -> Result<()> {
        let mags: Vec<f64> = self.series.values().iter().map(|z| z.norm()).collect();
        let peak = mags.iter().cloned().fold(0.0, f64::max);
        let n = mags.len();
        // the exponential's onset is a genuine jump; only its trailing edge counts
        let start = match self.shape {
            Shape::Exponential { .. } if self.grid().t_start() <= 0.0 => 0.0,
            _ => mags[0],
        };
        let edge_ratio = start.max(mags[n - 1]) / peak;
        if edge_ratio > EDGE_TOL {
            let outside_mass = match self.shape {
                Shape::Sampled => f64::NAN,
                _ => self.truncated_mass,
            };
            return Err(Error::WindowTooNarrow {
                edge_ratio,
                edge_tol: EDGE_TOL,
                outside_mass,
            });
        }
        Ok(())
    }

    pub fn grid(&self) -> &TimeGrid {
        self.series.grid()
    }

    pub fn series(&self) -> &ComplexSeries {
        &self.series
    }

    pub fn values(&self) -> &[C64] {
        self.series.values()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn is_closed_form(&self) -> bool {
        self.shape != Shape::Sampled
    }

    /// Probability mass of the closed-form shape lying outside the window.
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    /// |ξ(t)|² at every sample.
    pub fn density(&self) -> Vec<f64> {
        self.series.norm_sqr()
    }

    /// Trapezoidal ∫|ξ|² over the window.
    pub fn norm(&self) -> f64 {
        numerics::quadrature(&self.density(), self.grid()).unwrap_or(f64::NAN)
    }

    /// Total mass the cumulative masses refer to (1 for closed forms).
    pub fn total_mass(&self) -> f64 {
        match self.shape {
            Shape::Sampled => self.norm(),
            _ => 1.0,
        }
    }

    fn head_at(&self, t: f64) -> f64 {
        match self.shape {
            Shape::Exponential { gamma_c } => {
                if t <= 0.0 {
                    0.0
                } else {
                    -(-gamma_c * t).exp_m1()
                }
            }
            Shape::Gaussian { omega, t_center } => 0.5 * erfc(-omega * (t - t_center) / SQRT_2),
            Shape::Sampled => f64::NAN,
        }
    }

    fn tail_at(&self, t: f64) -> f64 {
        match self.shape {
            Shape::Exponential { gamma_c } => {
                if t <= 0.0 {
                    1.0
                } else {
                    (-gamma_c * t).exp()
                }
            }
            Shape::Gaussian { omega, t_center } => 0.5 * erfc(omega * (t - t_center) / SQRT_2),
            Shape::Sampled => f64::NAN,
        }
    }

    /// ∫_{-∞}^{t} |ξ|² at every sample.
    pub fn head_mass(&self) -> Vec<f64> {
        match self.shape {
            Shape::Sampled => numerics::cumulative_integral(&self.density(), self.grid())
                .expect("grid-aligned density"),
            _ => self.grid().times().iter().map(|&t| self.head_at(t)).collect(),
        }
    }

    /// ∫_{t}^{∞} |ξ|² at every sample.
    pub fn tail_mass(&self) -> Vec<f64> {
        match self.shape {
            Shape::Sampled => numerics::tail_integral(&self.density(), self.grid())
                .expect("grid-aligned density"),
            _ => self.grid().times().iter().map(|&t| self.tail_at(t)).collect(),
        }
    }

    /// Envelope with time reversed about the window centre (`ξ(t) → ξ(t_s + t_e − t)`),
    /// as samples.
    /// Gaussians stay closed-form with the centre mirrored.
    pub fn time_reversed(&self) -> Result<Self> {
        let mut values = self.values().to_vec();
        values.reverse();
        let series = ComplexSeries::new(*self.grid(), values)?;
        match self.shape {
            Shape::Gaussian { omega, t_center } => {
                let g = self.grid();
                Ok(Envelope {
                    series,
                    label: self.label.clone(),
                    shape: Shape::Gaussian {
                        omega,
                        t_center: g.t_start() + g.t_end() - t_center,
                    },
                    truncated_mass: self.truncated_mass,
                })
            }
            _ => Envelope::from_samples(series, self.label.clone()),
        }
    }
}

/// Unwrapped phase φ(t) of `ξ = |ξ| e^{−iφ}`, starting from `−arg ξ(t_start)`.
/// Where |ξ| is negligible the phase is held at its last defined value.
pub fn phase_profile(e: &Envelope) -> Vec<f64> {
    phase_of(e.values())
}

fn phase_of(values: &[C64]) -> Vec<f64> {
    let peak = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let n = values.len();
    if peak == 0.0 {
        return vec![0.0; n];
    }
    let floor = PHASE_FREEZE_REL * peak;
    let first = values.iter().position(|z| z.norm() > floor).unwrap_or(0);
    let mut out = vec![0.0; n];
    let mut current = -values[first].arg();
    for i in 0..n {
        if i > first && values[i].norm() > floor {
            let raw = -values[i].arg();
            let mut d = raw - current;
            d -= 2.0 * PI * (d / (2.0 * PI)).round();
            current += d;
        }
        out[i] = current;
    }
    out
}
