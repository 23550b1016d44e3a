use serde::{Deserialize, Serialize};

use super::envelope::Envelope;
use crate::error::{Error, Result};
use crate::numerics::{TimeGrid, C64};

pub const ALPHA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskKind {
    TwoLevelGenerate,
    TwoLevelCatch,
    LambdaGenerate,
    XiPair,
    LambdaCatch,
    VCatch,
    LambdaConvert,
}

impl TaskKind {
    pub fn target_count(self) -> usize {
        match self {
            TaskKind::TwoLevelGenerate | TaskKind::TwoLevelCatch | TaskKind::LambdaCatch => 1,
            _ => 2,
        }
    }

    pub fn needs_alphas(self) -> bool {
        matches!(self, TaskKind::LambdaGenerate | TaskKind::VCatch)
    }

    pub fn is_catch(self) -> bool {
        matches!(self, TaskKind::TwoLevelCatch | TaskKind::LambdaCatch | TaskKind::VCatch)
    }
}

/// A control task: target envelopes indexed by channel, superposition weights
/// where the task has them, and the common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub task: TaskKind,
    pub targets: Vec<Envelope>,
    pub alphas: Option<[C64; 2]>,
    pub grid: TimeGrid,
}

impl TaskSpec {
    pub fn new(task: TaskKind, targets: Vec<Envelope>, alphas: Option<[C64; 2]>) -> Result<Self> {
        if targets.len() != task.target_count() {
            return Err(Error::Structural(format!(
                "{task:?} needs {} target(s), got {}",
                task.target_count(),
                targets.len()
            )));
        }
        let grid = *targets[0].grid();
        if targets.iter().any(|t| *t.grid() != grid) {
            return Err(Error::Structural("targets are sampled on different grids".into()));
        }
        if task.needs_alphas() {
            let a = alphas.ok_or_else(|| Error::InvalidParameter(format!("{task:?} requires alphas")))?;
            check_alphas(&a)?;
        }
        Ok(Self {
            task,
            targets,
            alphas,
            grid,
        })
    }
}

pub fn check_alphas(a: &[C64; 2]) -> Result<()> {
    let n = a[0].norm_sqr() + a[1].norm_sqr();
    if !n.is_finite() || (n - 1.0).abs() > ALPHA_TOL {
        return Err(Error::InvalidParameter(format!(
            "|alpha1|^2 + |alpha2|^2 = {n}, expected 1"
        )));
    }
    Ok(())
}
