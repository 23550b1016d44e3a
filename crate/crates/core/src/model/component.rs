use nalgebra::{DVector, SymmetricEigen};

use super::schedule::{check_perm, ControlSchedule};
use crate::error::{Error, Result};
use crate::numerics::{interpolate, interpolate_rate, max_abs, CMatrix, Generator, TimeGrid, C64};

const STRUCT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomKind {
    TwoLevel,
    Lambda,
    Vee,
    Xi,
}

impl AtomKind {
    pub fn channels(self) -> usize {
        match self {
            AtomKind::TwoLevel => 1,
            _ => 2,
        }
    }

    /// Level labels in basis order.
    pub fn levels(self) -> &'static [&'static str] {
        match self {
            AtomKind::TwoLevel => &["g", "e"],
            _ => &["g", "e", "f"],
        }
    }

    /// Excitation number of each level, in basis order.
    pub fn excitations(self) -> &'static [u32] {
        match self {
            AtomKind::TwoLevel => &[0, 1],
            AtomKind::Lambda => &[0, 0, 1],
            AtomKind::Vee => &[0, 1, 1],
            AtomKind::Xi => &[0, 1, 2],
        }
    }

    /// Level the atom starts in when it is used as an emitter.
    pub fn emitting_level(self) -> &'static str {
        match self {
            AtomKind::TwoLevel => "e",
            AtomKind::Vee => "g",
            _ => "f",
        }
    }
}

/// Hamiltonian contribution `coeff(t) · op` with `op` Hermitian and `coeff` real.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianTerm {
    pub coeff: Vec<f64>,
    pub op: CMatrix,
}

/// Coupling contribution `√rate(t) · op`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTerm {
    pub rate: Vec<f64>,
    pub op: CMatrix,
}

/// Output channel: its coupling is the sum of the terms. When `upstream` is
/// non-empty the channel is a cascade, the listed terms come from the source
/// feeding the remaining ones, and the interference term
/// `(1/2i)(L_d†L_u − L_u†L_d)` is added to the Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub terms: Vec<CouplingTerm>,
    pub upstream: Vec<usize>,
}

/// Finite-dimensional open system with identity scattering matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SLHComponent {
    grid: TimeGrid,
    basis: Vec<String>,
    excitation: Vec<u32>,
    hamiltonian: Vec<HamiltonianTerm>,
    channels: Vec<Channel>,
    initial: DVector<C64>,
}

fn projector(d: usize, r: usize, c: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(r, c)] = C64::new(1.0, 0.0);
    m
}

pub fn build_component(kind: AtomKind, schedule: &ControlSchedule) -> Result<SLHComponent> {
    if schedule.channels() != kind.channels() {
        return Err(Error::Structural(format!(
            "{kind:?} atom has {} channel(s), schedule has {}",
            kind.channels(),
            schedule.channels()
        )));
    }
    let d = kind.levels().len();
    let (g, e, f) = (0, 1, 2);
    let ham = |coeff: &[f64], level: usize| HamiltonianTerm {
        coeff: coeff.to_vec(),
        op: projector(d, level, level),
    };
    let single = |j: usize, r: usize, c: usize| Channel {
        terms: vec![CouplingTerm {
            rate: schedule.gamma(j).to_vec(),
            op: projector(d, r, c),
        }],
        upstream: Vec::new(),
    };
    let (hamiltonian, channels) = match kind {
        AtomKind::TwoLevel => (vec![ham(schedule.epsilon(0), e)], vec![single(0, g, e)]),
        AtomKind::Lambda => (
            vec![ham(schedule.epsilon(0), f), ham(schedule.epsilon(1), f)],
            vec![single(0, g, f), single(1, e, f)],
        ),
        AtomKind::Xi => (
            vec![ham(schedule.epsilon(0), f), ham(schedule.epsilon(1), e)],
            vec![single(0, e, f), single(1, g, e)],
        ),
        AtomKind::Vee => (
            vec![ham(schedule.epsilon(0), f), ham(schedule.epsilon(1), e)],
            vec![single(0, g, f), single(1, g, e)],
        ),
    };
    let comp = SLHComponent {
        grid: *schedule.grid(),
        basis: kind.levels().iter().map(|s| s.to_string()).collect(),
        excitation: kind.excitations().to_vec(),
        hamiltonian,
        channels,
        initial: DVector::zeros(d),
    };
    comp.with_initial_level(kind.emitting_level())
}

impl SLHComponent {
    /// Assembles a component from raw parts and checks its structural invariants.
    pub fn from_parts(
        grid: TimeGrid,
        basis: Vec<String>,
        excitation: Vec<u32>,
        hamiltonian: Vec<HamiltonianTerm>,
        channels: Vec<Channel>,
        initial: DVector<C64>,
    ) -> Result<Self> {
        let c = SLHComponent {
            grid,
            basis,
            excitation,
            hamiltonian,
            channels,
            initial,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let n = self.grid.len();
        if self.basis.len() != d || self.excitation.len() != d {
            return Err(Error::Structural("basis labels do not match dimension".into()));
        }
        for t in &self.hamiltonian {
            if t.op.shape() != (d, d) || t.coeff.len() != n {
                return Err(Error::Structural("Hamiltonian term shape mismatch".into()));
            }
            if max_abs(&(&t.op - t.op.adjoint())) > STRUCT_TOL {
                return Err(Error::Structural("Hamiltonian operator is not Hermitian".into()));
            }
            if let Some(index) = t.coeff.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "Hamiltonian coefficient", index });
            }
            self.check_shift(&t.op, 0, "Hamiltonian")?;
        }
        for ch in &self.channels {
            for t in &ch.terms {
                if t.op.shape() != (d, d) || t.rate.len() != n {
                    return Err(Error::Structural("coupling term shape mismatch".into()));
                }
                if let Some(index) = t.rate.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { what: "coupling rate", index });
                }
                if t.rate.iter().any(|&v| v < 0.0) {
                    return Err(Error::InvalidParameter("negative coupling rate".into()));
                }
                self.check_shift(&t.op, 1, "coupling")?;
            }
            if ch.upstream.iter().any(|&k| k >= ch.terms.len()) {
                return Err(Error::Structural("cascade term index out of range".into()));
            }
        }
        let norm = self.initial.norm();
        if self.initial.len() != d || (norm - 1.0).abs() > STRUCT_TOL {
            return Err(Error::Structural(format!(
                "initial state must be a normalized vector of length {d} (norm {norm})"
            )));
        }
        Ok(())
    }

    // every nonzero entry (r, c) must lower the excitation number by `shift`
    fn check_shift(&self, op: &CMatrix, shift: u32, what: &str) -> Result<()> {
        for c in 0..op.ncols() {
            for r in 0..op.nrows() {
                if op[(r, c)].norm() > STRUCT_TOL && self.excitation[c] != self.excitation[r] + shift {
                    return Err(Error::Structural(format!(
                        "{what} operator element ({}, {}) does not preserve excitation number",
                        self.basis[r], self.basis[c]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, j: usize) -> &Channel {
        &self.channels[j]
    }

    pub fn hamiltonian_terms(&self) -> &[HamiltonianTerm] {
        &self.hamiltonian
    }

    pub fn basis(&self) -> &[String] {
        &self.basis
    }

    pub fn excitation(&self) -> &[u32] {
        &self.excitation
    }

    pub fn initial_state(&self) -> &DVector<C64> {
        &self.initial
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.basis
            .iter()
            .position(|b| b == label)
            .ok_or_else(|| Error::Structural(format!("no basis state labelled {label:?}")))
    }

    /// Basis indices with the given excitation number.
    pub fn sector(&self, k: u32) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.excitation[i] == k).collect()
    }

    pub fn with_initial_level(mut self, label: &str) -> Result<Self> {
        let i = self.index_of(label)?;
        self.initial = DVector::zeros(self.dim());
        self.initial[i] = C64::new(1.0, 0.0);
        Ok(self)
    }

    pub fn with_initial_state(mut self, state: DVector<C64>) -> Result<Self> {
        self.initial = state;
        self.validate()?;
        Ok(self)
    }

    /// Channel `j` of the result is channel `perm[j]` of `self`.
    pub fn relabel_channels(&self, perm: &[usize]) -> Result<Self> {
        check_perm(perm, self.channels())?;
        let mut out = self.clone();
        out.channels = perm.iter().map(|&p| self.channels[p].clone()).collect();
        Ok(out)
    }

    fn coupling_parts(&self, j: usize, x: f64, subset: Option<(&[usize], bool)>) -> CMatrix {
        let d = self.dim();
        let mut l = CMatrix::zeros(d, d);
        for (k, t) in self.channels[j].terms.iter().enumerate() {
            if let Some((idx, inside)) = subset {
                if idx.contains(&k) != inside {
                    continue;
                }
            }
            let a = interpolate_rate(&t.rate, x).max(0.0).sqrt();
            if a != 0.0 {
                l += &t.op * C64::new(a, 0.0);
            }
        }
        l
    }

    /// Lⱼ at fractional grid position `x`.
    pub fn coupling_at(&self, j: usize, x: f64) -> CMatrix {
        self.coupling_parts(j, x, None)
    }

    /// H at fractional grid position `x`, including cascade interference terms.
    pub fn hamiltonian_at(&self, x: f64) -> CMatrix {
        let d = self.dim();
        let mut h = CMatrix::zeros(d, d);
        for t in &self.hamiltonian {
            let c = interpolate(&t.coeff, x);
            if c != 0.0 {
                h += &t.op * C64::new(c, 0.0);
            }
        }
        for (j, ch) in self.channels.iter().enumerate() {
            if ch.upstream.is_empty() {
                continue;
            }
            let lu = self.coupling_parts(j, x, Some((&ch.upstream, true)));
            let ld = self.coupling_parts(j, x, Some((&ch.upstream, false)));
            let a = ld.adjoint() * &lu;
            // (1/2i)(A − A†)
            h += (&a - a.adjoint()) * C64::new(0.0, -0.5);
        }
        h
    }

    /// −iH − ½ΣLⱼ†Lⱼ at fractional grid position `x`.
    pub fn generator_at(&self, x: f64) -> CMatrix {
        let mut g = self.hamiltonian_at(x) * C64::new(0.0, -1.0);
        for j in 0..self.channels() {
            let l = self.coupling_at(j, x);
            g -= l.adjoint() * l * C64::new(0.5, 0.0);
        }
        g
    }

    /// Largest eigenvalue of the Hermitian part of the generator at sample `i`.
    pub fn max_dissipation_eigenvalue(&self, i: usize) -> f64 {
        let g = self.generator_at(i as f64);
        let herm = (&g + g.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(herm)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest generator element connecting different excitation sectors at sample `i`.
    pub fn sector_leakage(&self, i: usize) -> f64 {
        let g = self.generator_at(i as f64);
        let mut worst: f64 = 0.0;
        for c in 0..self.dim() {
            for r in 0..self.dim() {
                if self.excitation[r] != self.excitation[c] {
                    worst = worst.max(g[(r, c)].norm());
                }
            }
        }
        worst
    }
}

impl Generator for SLHComponent {
    fn dim(&self) -> usize {
        self.basis.len()
    }

    fn n_samples(&self) -> usize {
        self.grid.len()
    }

    fn at(&self, x: f64) -> CMatrix {
        self.generator_at(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(0.0, 1.0, 11).unwrap()
    }

    #[test]
    fn lambda_with_zero_second_rate_has_zero_coupling() {
        let s = ControlSchedule::constant(grid(), &[3.0, 0.0]).unwrap();
        let c = build_component(AtomKind::Lambda, &s).unwrap();
        for i in 0..11 {
            assert_eq!(max_abs(&c.coupling_at(1, i as f64 + 0.5)), 0.0);
        }
    }

    #[test]
    fn xi_dissipator_is_diagonal() {
        let s = ControlSchedule::constant(grid(), &[3.0, 5.0]).unwrap();
        let c = build_component(AtomKind::Xi, &s).unwrap();
        let l1 = c.coupling_at(0, 2.0);
        let l2 = c.coupling_at(1, 2.0);
        let m = l1.adjoint() * l1 + l2.adjoint() * l2;
        let mut expect = CMatrix::zeros(3, 3);
        expect[(2, 2)] = C64::new(3.0, 0.0);
        expect[(1, 1)] = C64::new(5.0, 0.0);
        assert!(max_abs(&(m - expect)) < 1e-14);
    }

    #[test]
    fn channel_count_is_checked() {
        let s = ControlSchedule::constant(grid(), &[1.0]).unwrap();
        assert!(matches!(build_component(AtomKind::Vee, &s), Err(Error::Structural(_))));
    }

    #[test]
    fn rejects_excitation_breaking_coupling() {
        let g = grid();
        let r = SLHComponent::from_parts(
            g,
            vec!["g".into(), "e".into()],
            vec![0, 1],
            vec![],
            vec![Channel {
                terms: vec![CouplingTerm { rate: vec![1.0; 11], op: projector(2, 1, 0) }],
                upstream: vec![],
            }],
            DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]),
        );
        assert!(matches!(r, Err(Error::Structural(_))));
    }

    #[test]
    fn generators_are_contractions() {
        let g = grid();
        let gam: Vec<f64> = g.times().iter().map(|t| 2.0 + t).collect();
        let eps: Vec<f64> = g.times().iter().map(|t| 3.0 * t).collect();
        let s = ControlSchedule::new(g, vec![gam.clone(), gam], vec![eps.clone(), eps], vec![]).unwrap();
        for kind in [AtomKind::Lambda, AtomKind::Vee, AtomKind::Xi] {
            let c = build_component(kind, &s).unwrap();
            for i in 0..11 {
                assert!(c.max_dissipation_eigenvalue(i) <= 1e-12);
                assert!(c.sector_leakage(i) == 0.0);
                let h = c.hamiltonian_at(i as f64);
                assert!(max_abs(&(&h - h.adjoint())) <= 1e-12);
            }
        }
    }
}
