use crate::error::{Error, Result};
use crate::numerics::{cumulative_integral_hi, integral_hi, TimeGrid, C64};

/// Two-photon amplitude ξ(τ₁, τ₂) on the ordered triangle τ₁ ≤ τ₂ (μs⁻¹).
///
/// Row `i` holds τ₂ = tᵢ and columns `j ≤ i` hold τ₁ = tⱼ, packed row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonAmplitude {
    grid: TimeGrid,
    values: Vec<C64>,
}

pub(crate) fn row_offset(i: usize) -> usize {
    i * (i + 1) / 2
}

impl TwoPhotonAmplitude {
    pub fn new(grid: TimeGrid, values: Vec<C64>) -> Result<Self> {
        let n = grid.len();
        if values.len() != row_offset(n) {
            return Err(Error::Structural(format!(
                "triangle of {n} rows needs {} entries, got {}",
                row_offset(n),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { what: "two-photon amplitude", index });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![C64::new(0.0, 0.0); row_offset(n)],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// ξ(τ₁ = t_j, τ₂ = t_i), `j ≤ i`.
    pub fn get(&self, i: usize, j: usize) -> C64 {
        assert!(j <= i, "entry ({i}, {j}) lies outside the ordered triangle");
        self.values[row_offset(i) + j]
    }

    /// Row `i` (fixed τ₂ = tᵢ, τ₁ = t₀..=tᵢ).
    pub fn row(&self, i: usize) -> &[C64] {
        &self.values[row_offset(i)..row_offset(i + 1)]
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Arrival-time densities of the first and second photon:
    /// `∫_{τ₁}^{∞}|ξ|²dτ₂` and `∫_{−∞}^{τ₂}|ξ|²dτ₁`.
    pub fn marginals(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.len();
        let h = self.grid.dt();
        let second: Vec<f64> = (0..n)
            .map(|i| {
                let row: Vec<f64> = self.row(i).iter().map(|z| z.norm_sqr()).collect();
                integral_hi(&row, h)
            })
            .collect();
        let first: Vec<f64> = (0..n)
            .map(|j| {
                let col: Vec<f64> = (j..n).map(|i| self.get(i, j).norm_sqr()).collect();
                integral_hi(&col, h)
            })
            .collect();
        (first, second)
    }

    /// Double integral of |ξ|² over the triangle.
    pub fn total_probability(&self) -> f64 {
        let (_, second) = self.marginals();
        *cumulative_integral_hi(&second, self.grid.dt()).last().unwrap()
    }
}
