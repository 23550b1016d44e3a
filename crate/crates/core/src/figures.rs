//! Plot-ready tables for the generation, pair and conversion figures.
//!
//! Every figure has two shape panels (a, b) and the matching coupling panels
//! (c, d). Coupling panels whose targets are not realizable are written raw:
//! no clamping, signs preserved, and a flag column marking negative, singular
//! or clamped samples.

use rayon::prelude::*;
use serde_json::json;

use crate::config::{AlphaConfig, GridConfig, PhaseConfig, TargetConfig, TargetKind, TaskConfig};
use crate::error::{Error, Result};
use crate::io::Table;
use crate::model::{ClampReason, Envelope, TaskKind, TaskSpec};
use crate::simulator::Thresholds;
use crate::synthesis::{synthesize_raw, Synthesizer};

pub const FIGURES: [&str; 3] = ["fig4", "fig6", "fig10"];
pub const DEFAULT_POINTS: usize = 4001;

const GAMMA_C1_MHZ: f64 = 15.0;
const GAMMA_C2_MHZ: f64 = 5.0;
const OMEGA1_MHZ: f64 = 2.0;
const OMEGA2_MHZ: f64 = 4.0;
const T_DELAY_US: f64 = 0.2;

fn exponential(mhz: f64, channel: usize) -> TargetConfig {
    TargetConfig {
        kind: TargetKind::Exponential,
        params: json!({ "gamma_c_mhz": mhz }),
        channel,
        phase: PhaseConfig::default(),
    }
}

fn gaussian(mhz: f64, t_center_us: f64, channel: usize, global_pi: bool) -> TargetConfig {
    TargetConfig {
        kind: TargetKind::Gaussian,
        params: json!({ "omega_mhz": mhz, "t_center_us": t_center_us }),
        channel,
        phase: PhaseConfig {
            global_pi,
            chirp_rad_per_us: 0.0,
        },
    }
}

fn config(task: TaskKind, t: (f64, f64), targets: Vec<TargetConfig>) -> TaskConfig {
    let alphas = task.needs_alphas().then(|| {
        let a = AlphaConfig {
            re: std::f64::consts::FRAC_1_SQRT_2,
            im: 0.0,
        };
        vec![a, a]
    });
    TaskConfig {
        task,
        grid: GridConfig {
            t_start_us: t.0,
            t_end_us: t.1,
            n_points: DEFAULT_POINTS,
        },
        targets,
        alphas,
        thresholds: Thresholds::default(),
    }
}

/// Task configs behind the two panel pairs of a figure: `[(a, c), (b, d)]`.
pub fn presets(name: &str) -> Result<[TaskConfig; 2]> {
    use TaskKind::*;
    let same = (-0.75, 0.75);
    let delayed = (-0.75, 0.95);
    Ok(match name {
        "fig4" => [
            config(
                LambdaGenerate,
                (0.0, 1.5),
                vec![exponential(GAMMA_C1_MHZ, 1), exponential(GAMMA_C2_MHZ, 2)],
            ),
            config(
                LambdaGenerate,
                same,
                vec![gaussian(OMEGA1_MHZ, 0.0, 1, false), gaussian(OMEGA2_MHZ, 0.0, 2, false)],
            ),
        ],
        "fig6" => [
            config(
                XiPair,
                same,
                vec![gaussian(OMEGA1_MHZ, 0.0, 1, false), gaussian(OMEGA2_MHZ, 0.0, 2, false)],
            ),
            config(
                XiPair,
                delayed,
                vec![gaussian(OMEGA1_MHZ, 0.0, 1, false), gaussian(OMEGA1_MHZ, T_DELAY_US, 2, false)],
            ),
        ],
        "fig10" => [
            config(
                LambdaConvert,
                same,
                vec![gaussian(OMEGA1_MHZ, 0.0, 1, false), gaussian(OMEGA2_MHZ, 0.0, 2, true)],
            ),
            config(
                LambdaConvert,
                delayed,
                vec![gaussian(OMEGA1_MHZ, 0.0, 1, false), gaussian(OMEGA1_MHZ, T_DELAY_US, 2, true)],
            ),
        ],
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown figure {other:?} (expected one of {})",
                FIGURES.join(", ")
            )))
        }
    })
}

/// Complex samples of the targets, one re/im column pair per channel.
pub fn shape_table(targets: &[Envelope]) -> Table {
    let grid = targets[0].grid();
    let mut t = Table::new().with("t_us", grid.times());
    for (k, e) in targets.iter().enumerate() {
        t.push(format!("xi{}_re", k + 1), e.values().iter().map(|z| z.re).collect());
        t.push(format!("xi{}_im", k + 1), e.values().iter().map(|z| z.im).collect());
    }
    t
}

/// Schedule columns `t_us, gamma*, eps*, flag*`. Clamped unless `raw` or the
/// targets are not realizable.
pub fn coupling_table(spec: &TaskSpec, raw: bool) -> Result<Table> {
    let grid = spec.grid;
    let times = grid.times();
    let (gamma, epsilon, flags) = match (raw, Synthesizer::default().synthesize(spec)) {
        (false, Ok(s)) => {
            let flags = (0..s.channels())
                .map(|j| {
                    times
                        .iter()
                        .map(|&t| {
                            s.clamp_report().iter().any(|r| {
                                r.channel == j + 1
                                    && r.reason != ClampReason::TruncatedWindow
                                    && t >= r.t_from_us
                                    && t <= r.t_to_us
                            })
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
            let gamma = (0..s.channels()).map(|j| s.gamma(j).to_vec()).collect();
            let eps = (0..s.channels()).map(|j| s.epsilon(j).to_vec()).collect();
            (gamma, eps, flags)
        }
        (false, Err(Error::NotRealizable(_))) | (true, _) => {
            let r = synthesize_raw(spec)?;
            (r.gamma, r.epsilon, r.flagged)
        }
        (false, Err(e)) => return Err(e),
    };
    let mut t = Table::new().with("t_us", times);
    let m = gamma.len();
    for (j, g) in gamma.into_iter().enumerate() {
        t.push(format!("gamma{}", j + 1), g);
    }
    for (j, e) in epsilon.into_iter().enumerate() {
        t.push(format!("eps{}", j + 1), e);
    }
    for (j, f) in flags.into_iter().enumerate().take(m) {
        t.push(format!("flag{}", j + 1), f.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect());
    }
    Ok(t)
}

/// Tables of every panel of figure `name`, as `(file name, table)` in panel order.
pub fn figure(name: &str, n_points: Option<usize>, raw: bool) -> Result<Vec<(String, Table)>> {
    let configs = presets(name)?;
    let panels: Vec<Result<(Table, Table)>> = configs
        .par_iter()
        .map(|cfg| {
            let spec = cfg.task_spec(n_points)?;
            Ok((shape_table(&spec.targets), coupling_table(&spec, raw)?))
        })
        .collect();
    let mut shapes = Vec::new();
    let mut couplings = Vec::new();
    for p in panels {
        let (s, c) = p?;
        shapes.push(s);
        couplings.push(c);
    }
    Ok(["a", "b", "c", "d"]
        .iter()
        .map(|p| format!("{name}_{p}.csv"))
        .zip(shapes.into_iter().chain(couplings))
        .collect())
}
