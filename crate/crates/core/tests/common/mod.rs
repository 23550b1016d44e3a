#![allow(dead_code)]

use std::f64::consts::PI;

use flyq::model::{make_envelope, Envelope, EnvelopeKind, PhaseSpec};
use flyq::numerics::{TimeGrid, C64};

pub const TWO_PI: f64 = 2.0 * PI;

pub fn grid(a: f64, b: f64, n: usize) -> TimeGrid {
    TimeGrid::new(a, b, n).unwrap()
}

pub fn gauss(g: &TimeGrid, mhz: f64, t_center: f64) -> Envelope {
    gauss_phase(g, mhz, t_center, PhaseSpec::default())
}

pub fn gauss_phase(g: &TimeGrid, mhz: f64, t_center: f64, phase: PhaseSpec) -> Envelope {
    make_envelope(EnvelopeKind::Gaussian { omega: TWO_PI * mhz, t_center }, phase, g, "xi").unwrap()
}

pub fn gauss_pi(g: &TimeGrid, mhz: f64, t_center: f64) -> Envelope {
    gauss_phase(g, mhz, t_center, PhaseSpec { global_pi: true, chirp_rad_per_us: 0.0 })
}

pub fn expo(g: &TimeGrid, mhz: f64) -> Envelope {
    make_envelope(EnvelopeKind::Exponential { gamma_c: TWO_PI * mhz }, PhaseSpec::default(), g, "xi").unwrap()
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn half() -> C64 {
    C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

/// Gaussian density `|ξ|²` of the normalized shape with angular width `omega`.
pub fn gauss_density(omega: f64, t_center: f64) -> impl Fn(f64) -> f64 + Copy {
    move |t| {
        let z = 0.5 * omega * (t - t_center);
        (omega * omega / (2.0 * PI)).sqrt() * (-2.0 * z * z).exp()
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    // split first so narrow peaks are not missed by the initial estimate
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let (x0, x1) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            let whole = simpson(x0, x1, f0, fm, f1);
            adapt(&f, x0, x1, f0, fm, f1, whole, tol / pieces as f64, 40)
        })
        .sum()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// As [`integrate`] with a tolerance relative to the value itself.
pub fn integrate_rel(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64, rel: f64) -> f64 {
    let mut tol = 1e-8;
    let mut v = integrate(f, a, b, tol);
    while rel * v.abs() < tol && tol > 1e-300 {
        tol = (rel * v.abs()).max(1e-300);
        v = integrate(f, a, b, tol);
    }
    v
}
