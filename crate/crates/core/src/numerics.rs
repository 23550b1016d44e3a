//! Uniform time grids, quadrature, interpolation of sampled schedules and
//! fixed-step propagation of time-dependent linear matrix ODEs.
//!
//! Times are in μs and rates in rad/μs throughout. Interpolation positions are
//! expressed as fractional grid indices, so `x = 3.5` is the midpoint between
//! samples 3 and 4.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    n_points: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_points: usize) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite()) {
            return Err(Error::InvalidGrid("endpoints must be finite".into()));
        }
        if t_end <= t_start {
            return Err(Error::InvalidGrid(format!(
                "t_end ({t_end}) must exceed t_start ({t_start})"
            )));
        }
        if n_points < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 points, got {n_points}"
            )));
        }
        Ok(Self {
            t_start,
            t_end,
            n_points,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / (self.n_points - 1) as f64
    }

    /// Timestamp of sample `i`; the last sample is pinned to `t_end`.
    pub fn time(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.t_end
        } else {
            self.t_start + i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.time(i)).collect()
    }

    /// Time at a fractional index position.
    pub fn time_at(&self, x: f64) -> f64 {
        self.t_start + x * self.dt()
    }

    /// Grid over the same window with every interval split into `factor` pieces.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n_points: (self.n_points - 1) * factor.max(1) + 1,
            ..*self
        }
    }

    /// Index of the sample nearest to `t` (clamped to the window).
    pub fn nearest_index(&self, t: f64) -> usize {
        let x = ((t - self.t_start) / self.dt()).round();
        x.clamp(0.0, (self.n_points - 1) as f64) as usize
    }
}

/// Complex samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSeries {
    grid: TimeGrid,
    values: Vec<C64>,
}

impl ComplexSeries {
    pub fn new(grid: TimeGrid, values: Vec<C64>) -> Result<Self> {
        check_len(values.len(), &grid)?;
        if let Some(index) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite {
                what: "complex series",
                index,
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            values: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn norm_sqr(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }
}

fn check_len(len: usize, grid: &TimeGrid) -> Result<()> {
    if len != grid.len() {
        return Err(Error::Structural(format!(
            "series has {len} samples but grid has {}",
            grid.len()
        )));
    }
    Ok(())
}

fn check_finite(values: &[f64], what: &'static str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { what, index }),
        None => Ok(()),
    }
}

/// Trapezoidal running integral from `t_start`; first entry is 0.
pub fn cumulative_integral(values: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    check_len(values.len(), grid)?;
    check_finite(values, "integrand")?;
    let h = grid.dt();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(values.len());
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    Ok(out)
}

/// Trapezoidal integral from each sample to `t_end`, accumulated backwards so
/// that small tails keep their relative precision. Last entry is 0.
pub fn tail_integral(values: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    check_len(values.len(), grid)?;
    check_finite(values, "integrand")?;
    let h = grid.dt();
    let n = values.len();
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for i in (0..n - 1).rev() {
        acc += 0.5 * h * (values[i] + values[i + 1]);
        out[i] = acc;
    }
    Ok(out)
}

/// Trapezoidal rule over the full grid.
pub fn quadrature(values: &[f64], grid: &TimeGrid) -> Result<f64> {
    check_len(values.len(), grid)?;
    check_finite(values, "integrand")?;
    let h = grid.dt();
    let n = values.len();
    let inner: f64 = values[1..n - 1].iter().sum();
    Ok(h * (inner + 0.5 * (values[0] + values[n - 1])))
}

pub fn quadrature_complex(values: &[C64], grid: &TimeGrid) -> Result<C64> {
    check_len(values.len(), grid)?;
    let h = grid.dt();
    let n = values.len();
    let inner: C64 = values[1..n - 1].iter().sum();
    Ok((inner + (values[0] + values[n - 1]) * 0.5) * h)
}

/// Integral of the cubic through four consecutive samples over one interval.
/// `k` selects the interval inside the stencil (0, 1 or 2).
fn interval_weights(k: usize) -> [f64; 4] {
    match k {
        0 => [9.0, 19.0, -5.0, 1.0],
        1 => [-1.0, 13.0, 13.0, -1.0],
        _ => [1.0, -5.0, 19.0, 9.0],
    }
}

/// Running integral with the 4-point (cubic) per-interval rule: fourth order on
/// smooth integrands. Falls back to the trapezoid when fewer than four samples
/// exist.
pub fn cumulative_integral_hi(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 4 {
        for i in 1..n {
            out[i] = out[i - 1] + 0.5 * h * (values[i - 1] + values[i]);
        }
        return out;
    }
    for i in 0..n - 1 {
        let (s, k) = if i == 0 {
            (0, 0)
        } else if i + 2 >= n {
            (n - 4, 2)
        } else {
            (i - 1, 1)
        };
        let w = interval_weights(k);
        let piece: f64 = (0..4).map(|m| w[m] * values[s + m]).sum::<f64>() * h / 24.0;
        out[i + 1] = out[i] + piece;
    }
    out
}

pub fn integral_hi(values: &[f64], h: f64) -> f64 {
    cumulative_integral_hi(values, h).last().copied().unwrap_or(0.0)
}

/// Central-difference derivative (one-sided second order at the ends).
pub fn derivative(values: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    check_len(values.len(), grid)?;
    let h = grid.dt();
    let n = values.len();
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    Ok(out)
}

/// Lagrange stencil (start index, weights, width) for fractional position `x`.
fn stencil(n: usize, x: f64) -> (usize, [f64; 4], usize) {
    let last = (n - 1) as f64;
    let x = x.clamp(0.0, last);
    if n == 3 {
        let u = x;
        return (
            0,
            [
                (u - 1.0) * (u - 2.0) / 2.0,
                -u * (u - 2.0),
                u * (u - 1.0) / 2.0,
                0.0,
            ],
            3,
        );
    }
    let i = (x.floor() as usize).min(n - 2);
    let s = i.saturating_sub(1).min(n - 4);
    let u = x - s as f64;
    (
        s,
        [
            -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0,
            u * (u - 2.0) * (u - 3.0) / 2.0,
            -u * (u - 1.0) * (u - 3.0) / 2.0,
            u * (u - 1.0) * (u - 2.0) / 6.0,
        ],
        4,
    )
}

fn node_of(x: f64, n: usize) -> Option<usize> {
    (x.fract() == 0.0 && x >= 0.0 && x <= (n - 1) as f64).then_some(x as usize)
}

/// Cubic Lagrange interpolation of uniformly sampled data.
pub fn interpolate(values: &[f64], x: f64) -> f64 {
    let n = values.len();
    if let Some(i) = node_of(x, n) {
        return values[i];
    }
    let (s, w, width) = stencil(n, x);
    (0..width).map(|m| w[m] * values[s + m]).sum()
}

/// Interpolation for nonnegative rate schedules: cubic where the stencil is
/// strictly positive and the result stays nonnegative, linear otherwise.
pub fn interpolate_rate(values: &[f64], x: f64) -> f64 {
    let n = values.len();
    if let Some(i) = node_of(x, n) {
        return values[i];
    }
    let (s, w, width) = stencil(n, x);
    let cubic: f64 = (0..width).map(|m| w[m] * values[s + m]).sum();
    if values[s..s + width].iter().all(|&v| v > 0.0) && cubic >= 0.0 {
        return cubic;
    }
    let xc = x.clamp(0.0, (n - 1) as f64);
    let i = (xc.floor() as usize).min(n - 2);
    let f = xc - i as f64;
    values[i] * (1.0 - f) + values[i + 1] * f
}

/// Exact integral of the rate interpolant over `[i, i + f]` (fractional index
/// units scaled by `h`). Matches [`interpolate_rate`] piece by piece.
pub fn integrate_rate_piece(values: &[f64], i: usize, f: f64, h: f64) -> f64 {
    if f == 0.0 {
        return 0.0;
    }
    // Simpson with the mid value is exact for the cubic/linear piece.
    let a = i as f64;
    let b = a + f;
    let mid = interpolate_rate(values, 0.5 * (a + b));
    f * h * (interpolate_rate(values, a) + 4.0 * mid + interpolate_rate(values, b)) / 6.0
}

/// Exact integral of the plain cubic interpolant over `[i, i + f]`.
pub fn integrate_piece(values: &[f64], i: usize, f: f64, h: f64) -> f64 {
    if f == 0.0 {
        return 0.0;
    }
    let a = i as f64;
    let b = a + f;
    let mid = interpolate(values, 0.5 * (a + b));
    f * h * (interpolate(values, a) + 4.0 * mid + interpolate(values, b)) / 6.0
}

/// Largest element modulus of a complex matrix.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Time-dependent generator of a linear matrix ODE, evaluated at fractional
/// grid positions.
pub trait Generator {
    fn dim(&self) -> usize;
    fn n_samples(&self) -> usize;
    fn at(&self, x: f64) -> CMatrix;
}

/// Generator given only by its samples; off-grid values come from cubic
/// interpolation of each matrix element.
#[derive(Debug, Clone)]
pub struct SampledGenerator {
    samples: Vec<CMatrix>,
}

impl SampledGenerator {
    pub fn new(samples: Vec<CMatrix>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::Structural("empty generator".into()))?;
        let d = first.nrows();
        for (index, m) in samples.iter().enumerate() {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::Structural(format!(
                    "generator sample {index} is {}x{}, expected {d}x{d}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::NonFinite {
                    what: "generator sample",
                    index,
                });
            }
        }
        Ok(Self { samples })
    }

    pub fn constant(m: CMatrix, grid: &TimeGrid) -> Result<Self> {
        Self::new(vec![m; grid.len()])
    }
}

impl Generator for SampledGenerator {
    fn dim(&self) -> usize {
        self.samples[0].nrows()
    }

    fn n_samples(&self) -> usize {
        self.samples.len()
    }

    fn at(&self, x: f64) -> CMatrix {
        let n = self.samples.len();
        if let Some(i) = node_of(x, n) {
            return self.samples[i].clone();
        }
        let (s, w, width) = stencil(n, x);
        let mut out = self.samples[s].clone() * C64::new(w[0], 0.0);
        for m in 1..width {
            out += &self.samples[s + m] * C64::new(w[m], 0.0);
        }
        out
    }
}

/// Classic RK4 on the grid, returning the state at every sample.
pub fn propagate_linear_ode<G: Generator + ?Sized>(
    generator: &G,
    initial: &CMatrix,
    grid: &TimeGrid,
) -> Result<Vec<CMatrix>> {
    propagate_substeps(generator, initial, grid, 1)
}

/// RK4 with each grid interval split into `substeps` equal steps; the state is
/// returned at grid samples only.
pub fn propagate_substeps<G: Generator + ?Sized>(
    generator: &G,
    initial: &CMatrix,
    grid: &TimeGrid,
    substeps: usize,
) -> Result<Vec<CMatrix>> {
    let n = grid.len();
    if generator.n_samples() != n {
        return Err(Error::Structural(format!(
            "generator has {} samples but grid has {n}",
            generator.n_samples()
        )));
    }
    if initial.nrows() != generator.dim() {
        return Err(Error::Structural(format!(
            "initial state has {} rows, generator dimension is {}",
            initial.nrows(),
            generator.dim()
        )));
    }
    let substeps = substeps.max(1);
    let h = grid.dt() / substeps as f64;
    let dx = 1.0 / substeps as f64;

    let mut v = initial.clone();
    let mut out = Vec::with_capacity(n);
    out.push(v.clone());
    let mut g_left = generator.at(0.0);
    check_matrix(&g_left, 0)?;
    for i in 0..n - 1 {
        for k in 0..substeps {
            let x0 = i as f64 + k as f64 * dx;
            let x1 = if k + 1 == substeps {
                (i + 1) as f64
            } else {
                x0 + dx
            };
            let g_mid = generator.at(0.5 * (x0 + x1));
            let g_right = generator.at(x1);
            if k + 1 == substeps {
                check_matrix(&g_right, i + 1)?;
            }
            let k1 = &g_left * &v;
            let k2 = &g_mid * (&v + &k1 * C64::new(0.5 * h, 0.0));
            let k3 = &g_mid * (&v + &k2 * C64::new(0.5 * h, 0.0));
            let k4 = &g_right * (&v + &k3 * C64::new(h, 0.0));
            v += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
            g_left = g_right;
        }
        out.push(v.clone());
    }
    Ok(out)
}

fn check_matrix(m: &CMatrix, index: usize) -> Result<()> {
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite {
            what: "generator sample",
            index,
        });
    }
    Ok(())
}

/// Largest elementwise difference between the propagation on `grid` and the
/// propagation with every interval halved, compared on the shared samples.
pub fn step_doubling_error<G: Generator + ?Sized>(
    generator: &G,
    initial: &CMatrix,
    grid: &TimeGrid,
) -> Result<f64> {
    let coarse = propagate_substeps(generator, initial, grid, 1)?;
    let fine = propagate_substeps(generator, initial, grid, 2)?;
    Ok(coarse
        .iter()
        .zip(&fine)
        .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn scalar(z: C64) -> CMatrix {
        CMatrix::from_element(1, 1, z)
    }

    #[test]
    fn grid_rejects_bad_inputs() {
        assert!(TimeGrid::new(1.0, 0.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 2).is_err());
        assert!(TimeGrid::new(0.0, f64::NAN, 10).is_err());
    }

    #[test]
    fn grid_timestamps_are_reproducible() {
        let a = TimeGrid::new(-0.75, 0.75, 4001).unwrap();
        let b = TimeGrid::new(-0.75, 0.75, 4001).unwrap();
        assert_eq!(a.times(), b.times());
        assert_eq!(a.time(4000), 0.75);
        assert_eq!(a.time(0), -0.75);
    }

    #[test]
    fn cumulative_of_constant() {
        let grid = TimeGrid::new(0.0, 1.0, 11).unwrap();
        let c = cumulative_integral(&[1.0; 11], &grid).unwrap();
        for (i, v) in c.iter().enumerate() {
            assert!((v - 0.1 * i as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn cumulative_of_constant_rate_is_linear() {
        let gc = 2.0 * PI * 15.0;
        let grid = TimeGrid::new(0.2, 1.2, 101).unwrap();
        let c = cumulative_integral(&vec![gc; 101], &grid).unwrap();
        for (i, v) in c.iter().enumerate() {
            assert!((v - gc * (grid.time(i) - 0.2)).abs() < 1e-11);
        }
    }

    #[test]
    fn cumulative_of_decaying_exponential() {
        let grid = TimeGrid::new(0.0, 10.0, 4001).unwrap();
        let y: Vec<f64> = grid.times().iter().map(|t| (-t).exp()).collect();
        let c = cumulative_integral(&y, &grid).unwrap();
        let exact = 1.0 - (-10.0f64).exp();
        // trapezoid error is h^2/12 (f'(b) - f'(a)) + O(h^4) ≈ 5.2e-7 here
        let h = grid.dt();
        let predicted = h * h / 12.0 * (1.0 - (-10.0f64).exp());
        assert!((c[4000] - exact - predicted).abs() < 1e-8);
        let hi = cumulative_integral_hi(&y, grid.dt());
        assert!((hi[4000] - exact).abs() < 1e-8);
    }

    #[test]
    fn length_mismatch_is_structural() {
        let grid = TimeGrid::new(0.0, 1.0, 11).unwrap();
        assert!(matches!(
            cumulative_integral(&[1.0; 10], &grid),
            Err(Error::Structural(_))
        ));
        assert!(matches!(quadrature(&[1.0; 12], &grid), Err(Error::Structural(_))));
    }

    #[test]
    fn quadrature_of_zero_and_affine() {
        let grid = TimeGrid::new(-1.0, 2.0, 31).unwrap();
        assert_eq!(quadrature(&[0.0; 31], &grid).unwrap(), 0.0);
        let y: Vec<f64> = grid.times().iter().map(|t| 3.0 * t - 1.0).collect();
        // ∫_{-1}^{2} (3t - 1) dt = 1.5
        assert!((quadrature(&y, &grid).unwrap() - 1.5).abs() < 1e-13);
    }

    #[test]
    fn tail_plus_head_is_total() {
        let grid = TimeGrid::new(0.0, 1.0, 101).unwrap();
        let y: Vec<f64> = grid.times().iter().map(|t| (5.0 * t).sin().abs()).collect();
        let head = cumulative_integral(&y, &grid).unwrap();
        let tail = tail_integral(&y, &grid).unwrap();
        let total = quadrature(&y, &grid).unwrap();
        for i in 0..101 {
            assert!((head[i] + tail[i] - total).abs() < 1e-13);
        }
    }

    #[test]
    fn interpolation_reproduces_cubics() {
        let values: Vec<f64> = (0..9).map(|i| {
            let x = i as f64;
            x * x * x - 2.0 * x + 1.0
        }).collect();
        for &x in &[0.25, 0.5, 3.5, 7.75, 7.5] {
            let exact = x * x * x - 2.0 * x + 1.0;
            assert!((interpolate(&values, x) - exact).abs() < 1e-11, "x={x}");
        }
    }

    #[test]
    fn rate_interpolation_never_negative_at_jumps() {
        let values = [0.0, 0.0, 0.0, 100.0, 100.0, 100.0];
        for k in 0..50 {
            let x = k as f64 * 0.1;
            assert!(interpolate_rate(&values, x) >= 0.0);
        }
        assert_eq!(interpolate_rate(&values, 1.5), 0.0);
        assert_eq!(interpolate_rate(&values, 2.5), 50.0);
    }

    #[test]
    fn zero_generator_is_identity() {
        let grid = TimeGrid::new(0.0, 1.0, 51).unwrap();
        let g = SampledGenerator::constant(CMatrix::zeros(2, 2), &grid).unwrap();
        let init = CMatrix::from_row_slice(2, 2, &[
            C64::new(1.0, 0.5), C64::new(0.0, 0.0),
            C64::new(0.2, 0.0), C64::new(1.0, 0.0),
        ]);
        for v in propagate_linear_ode(&g, &init, &grid).unwrap() {
            assert_eq!(v, init);
        }
        assert_eq!(step_doubling_error(&g, &init, &grid).unwrap(), 0.0);
    }

    #[test]
    fn scalar_decay_matches_exponential() {
        let gc = 2.0 * PI * 15.0;
        let grid = TimeGrid::new(0.0, 1.0, 4001).unwrap();
        let g = SampledGenerator::constant(scalar(C64::new(-gc / 2.0, 0.0)), &grid).unwrap();
        let v = propagate_linear_ode(&g, &scalar(C64::new(1.0, 0.0)), &grid).unwrap();
        for (i, m) in v.iter().enumerate() {
            let exact = (-gc * grid.time(i) / 2.0).exp();
            assert!((m[(0, 0)].re - exact).abs() <= 1e-8 * exact, "i={i}");
        }
    }

    #[test]
    fn pure_phase_preserves_modulus() {
        let eps = 2.0 * PI * 3.0;
        let grid = TimeGrid::new(0.0, 1.0, 4001).unwrap();
        let g = SampledGenerator::constant(scalar(C64::new(0.0, -eps)), &grid).unwrap();
        let v = propagate_linear_ode(&g, &scalar(C64::new(1.0, 0.0)), &grid).unwrap();
        for m in &v {
            assert!((m[(0, 0)].norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn non_finite_generator_is_reported_with_index() {
        let mut samples = vec![scalar(C64::new(0.0, 0.0)); 5];
        samples[3] = scalar(C64::new(f64::NAN, 0.0));
        assert!(matches!(
            SampledGenerator::new(samples),
            Err(Error::NonFinite { index: 3, .. })
        ));
    }

    #[test]
    fn step_doubling_audit() {
        let gc = 2.0 * PI * 15.0;
        let init = scalar(C64::new(1.0, 0.0));
        let run = |n| {
            let grid = TimeGrid::new(0.0, 1.0, n).unwrap();
            let g = SampledGenerator::constant(scalar(C64::new(-gc / 2.0, 0.0)), &grid).unwrap();
            step_doubling_error(&g, &init, &grid).unwrap()
        };
        let fine = run(4001);
        let coarse = run(51);
        assert!(fine < 1e-7, "fine={fine}");
        assert!(coarse > fine);
    }

    #[test]
    fn fourth_order_convergence() {
        let gc = 2.0 * PI * 15.0;
        let err = |n: usize| {
            let grid = TimeGrid::new(0.0, 1.0, n).unwrap();
            let g = SampledGenerator::constant(scalar(C64::new(-gc / 2.0, 0.0)), &grid).unwrap();
            let v = propagate_linear_ode(&g, &scalar(C64::new(1.0, 0.0)), &grid).unwrap();
            v.iter()
                .enumerate()
                .map(|(i, m)| (m[(0, 0)].re - (-gc * grid.time(i) / 2.0).exp()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(101) / err(201);
        assert!(ratio >= 8.0, "ratio={ratio}");
    }

    #[test]
    fn anti_hermitian_generator_preserves_column_norms() {
        let grid = TimeGrid::new(0.0, 1.0, 4001).unwrap();
        let samples: Vec<CMatrix> = grid
            .times()
            .iter()
            .map(|&t| {
                let a = C64::new(0.0, -(10.0 * t).cos() * 20.0);
                let b = C64::new(15.0 * t, 5.0);
                // G = -iH with H Hermitian
                let h = CMatrix::from_row_slice(2, 2, &[C64::new(3.0, 0.0), b, b.conj(), C64::new(-1.0, 0.0)]);
                h * C64::new(0.0, -1.0) + CMatrix::identity(2, 2) * a
            })
            .collect();
        let g = SampledGenerator::new(samples).unwrap();
        let v = propagate_linear_ode(&g, &CMatrix::identity(2, 2), &grid).unwrap();
        for m in &v {
            for c in 0..2 {
                assert!((m.column(c).norm() - 1.0).abs() < 1e-8);
            }
        }
    }
}
