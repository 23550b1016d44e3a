//! Closed-form emission amplitudes for the emitter layouts used by the tasks.
//!
//! Each formula integrates the same interpolant the propagator sees
//! (piecewise cubic or linear per [`interpolate_rate`]), so the only difference
//! from the generic path is the propagator's own truncation error.

use crate::model::ControlSchedule;
use crate::numerics::{integrate_piece, integrate_rate_piece, interpolate_rate, C64};

/// Running integral of a rate schedule's interpolant.
pub fn cumulative_rate(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for i in 1..values.len() {
        out[i] = out[i - 1] + integrate_rate_piece(values, i - 1, 1.0, h);
    }
    out
}

/// Running integral of a detuning schedule's interpolant.
pub fn cumulative_coeff(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for i in 1..values.len() {
        out[i] = out[i - 1] + integrate_piece(values, i - 1, 1.0, h);
    }
    out
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `e^{−Γ/2 − iΘ}`.
fn decay(gamma_int: f64, theta: f64) -> C64 {
    C64::from_polar((-0.5 * gamma_int).exp(), -theta)
}

/// One-channel emitter from the excited state: `√γ e^{−Γ/2 − iΘ}`.
pub fn two_level_emission(s: &ControlSchedule) -> Vec<C64> {
    let h = s.grid().dt();
    let big_g = cumulative_rate(s.gamma(0), h);
    let theta = cumulative_coeff(s.epsilon(0), h);
    (0..big_g.len())
        .map(|i| s.gamma(0)[i].sqrt() * decay(big_g[i], theta[i]))
        .collect()
}

/// Λ emitter from |f⟩: channel-`k` amplitudes `√γ_k e^{−(Γ₁+Γ₂)/2 − i(Θ₁+Θ₂)}`
/// with the atom left in |g⟩ (k = 1) or |e⟩ (k = 2).
pub fn lambda_emission(s: &ControlSchedule) -> [Vec<C64>; 2] {
    let h = s.grid().dt();
    let big_g = add(&cumulative_rate(s.gamma(0), h), &cumulative_rate(s.gamma(1), h));
    let theta = add(&cumulative_coeff(s.epsilon(0), h), &cumulative_coeff(s.epsilon(1), h));
    let amp = |k: usize| {
        (0..big_g.len())
            .map(|i| s.gamma(k)[i].sqrt() * decay(big_g[i], theta[i]))
            .collect()
    };
    [amp(0), amp(1)]
}

/// Cumulative integrals shared by the ladder (Ξ) formulas.
#[derive(Debug, Clone)]
pub struct LadderIntegrals {
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub th1: Vec<f64>,
    pub th2: Vec<f64>,
    pub sqrt_gamma1: Vec<f64>,
    pub sqrt_gamma2: Vec<f64>,
}

impl LadderIntegrals {
    pub fn new(s: &ControlSchedule) -> Self {
        let h = s.grid().dt();
        Self {
            g1: cumulative_rate(s.gamma(0), h),
            g2: cumulative_rate(s.gamma(1), h),
            th1: cumulative_coeff(s.epsilon(0), h),
            th2: cumulative_coeff(s.epsilon(1), h),
            sqrt_gamma1: s.gamma(0).iter().map(|g| g.sqrt()).collect(),
            sqrt_gamma2: s.gamma(1).iter().map(|g| g.sqrt()).collect(),
        }
    }

    /// First photon at τ = t_j with no second photon before the window ends
    /// (atom left in |e⟩).
    pub fn first_only(&self, j: usize) -> C64 {
        let last = self.g2.len() - 1;
        self.sqrt_gamma1[j]
            * decay(self.g1[j], self.th1[j])
            * decay(self.g2[last] - self.g2[j], self.th2[last] - self.th2[j])
    }

    /// ξ(τ₁ = t_j, τ₂ = t_i) for `j ≤ i`.
    pub fn pair(&self, i: usize, j: usize) -> C64 {
        self.sqrt_gamma1[j]
            * self.sqrt_gamma2[i]
            * decay(self.g1[j], self.th1[j])
            * decay(self.g2[i] - self.g2[j], self.th2[i] - self.th2[j])
    }
}

/// Λ conversion of the photon emitted by a source schedule: the amplitude that
/// leaves on channel 2 with the atom in |e⟩,
/// `−√γ₂(τ) e^{−Γ(τ)/2 − iΘ(τ)} ∫_{t₀}^{τ} e^{Γ/2 + iΘ} √γ₁ ξ_in`,
/// where `ξ_in = √γ_A e^{−Γ_A/2 − iΘ_A}`. The inner integral is Simpson's rule
/// per interval with interpolated midpoints.
pub fn conversion_output(source: &ControlSchedule, atom: &ControlSchedule) -> Vec<C64> {
    let h = atom.grid().dt();
    let n = atom.grid().len();
    let ga = source.gamma(0);
    let ea = source.epsilon(0);
    let (g1, g2) = (atom.gamma(0), atom.gamma(1));
    let (e1, e2) = (atom.epsilon(0), atom.epsilon(1));
    let big_ga = cumulative_rate(ga, h);
    let th_a = cumulative_coeff(ea, h);
    let big_g = add(&cumulative_rate(g1, h), &cumulative_rate(g2, h));
    let theta = add(&cumulative_coeff(e1, h), &cumulative_coeff(e2, h));

    // integrand e^{Γ/2 + iΘ} √γ₁ ξ_in at node i (f = 0) or mid-interval (f = 0.5)
    let integrand = |i: usize, f: f64| -> C64 {
        let x = i as f64 + f;
        let (gam_a, th_aa, gam, th) = if f == 0.0 {
            (big_ga[i], th_a[i], big_g[i], theta[i])
        } else {
            (
                big_ga[i] + integrate_rate_piece(ga, i, f, h),
                th_a[i] + integrate_piece(ea, i, f, h),
                big_g[i] + integrate_rate_piece(g1, i, f, h) + integrate_rate_piece(g2, i, f, h),
                theta[i] + integrate_piece(e1, i, f, h) + integrate_piece(e2, i, f, h),
            )
        };
        let xi_in = interpolate_rate(ga, x).max(0.0).sqrt() * decay(gam_a, th_aa);
        let rise = C64::from_polar((0.5 * gam).exp(), th);
        rise * interpolate_rate(g1, x).max(0.0).sqrt() * xi_in
    };
    let mut inner = C64::new(0.0, 0.0);
    let mut out = vec![C64::new(0.0, 0.0); n];
    let mut left = integrand(0, 0.0);
    for i in 0..n {
        if i > 0 {
            let right = integrand(i, 0.0);
            inner += (left + integrand(i - 1, 0.5) * 4.0 + right) * (h / 6.0);
            left = right;
        }
        out[i] = -g2[i].sqrt() * decay(big_g[i], theta[i]) * inner;
    }
    out
}
