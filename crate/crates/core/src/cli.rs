//! `flyq synth|verify|figure`.
//!
//! Exit codes: 0 success, 1 bad arguments, malformed config or failed run,
//! 2 targets not realizable, 3 simulated scores outside the config thresholds.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::TaskConfig;
use crate::error::{Error, Result};
use crate::figures::figure;
use crate::io::Table;
use crate::model::{ClampRecord, ControlSchedule, TaskKind, TaskSpec};
use crate::simulator::{simulate_task, SimulationReport, Thresholds};
use crate::synthesis::{check_tail_dominance, RealizabilityReport, Synthesizer};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_REALIZABLE: i32 = 2;
pub const EXIT_THRESHOLDS: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "flyq", version, about = "Coupling-schedule synthesis and verification for flying qubits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize the control schedule of a task config.
    Synth(RunArgs),
    /// Synthesize, simulate and score a task config.
    Verify(RunArgs),
    /// Write the CSV panels of a preset figure (fig4, fig6, fig10).
    Figure(FigureArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the grid size in the config.
    #[arg(long)]
    pub grid_points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    pub name: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Write every coupling panel unclamped.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Serialize)]
struct SynthesisSummary<'a> {
    task: TaskKind,
    n_points: usize,
    realizable: bool,
    realizability: Option<&'a RealizabilityReport>,
    clamp_report: &'a [ClampRecord],
    skipped_mass: f64,
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    passed: bool,
    thresholds: Thresholds,
    #[serde(flatten)]
    report: &'a SimulationReport,
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

pub fn run(cli: &Cli) -> i32 {
    let out = match &cli.command {
        Command::Synth(a) => cmd_synth(&a.config, &a.out, a.grid_points),
        Command::Verify(a) => cmd_verify(&a.config, &a.out, a.grid_points),
        Command::Figure(a) => cmd_figure(&a.name, &a.out, a.grid_points, a.raw),
    };
    match out {
        Ok(code) => code,
        Err(e) => {
            eprintln!("flyq: {e}");
            EXIT_ERROR
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Structural(e.to_string()))?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

fn load(config: &Path, out: &Path, n: Option<usize>) -> Result<(TaskConfig, TaskSpec)> {
    let cfg = TaskConfig::load(config)?;
    let spec = cfg.task_spec(n)?;
    std::fs::create_dir_all(out)?;
    Ok((cfg, spec))
}

/// Schedule columns `t_us, gamma1, gamma2, eps1, eps2`; one-channel schedules
/// get zero second-channel columns.
pub fn schedule_table(s: &ControlSchedule) -> Table {
    let n = s.grid().len();
    let pick = |j: usize, g: bool| {
        if j < s.channels() {
            if g { s.gamma(j) } else { s.epsilon(j) }.to_vec()
        } else {
            vec![0.0; n]
        }
    };
    Table::new()
        .with("t_us", s.grid().times())
        .with("gamma1", pick(0, true))
        .with("gamma2", pick(1, true))
        .with("eps1", pick(0, false))
        .with("eps2", pick(1, false))
}

fn write_not_realizable(out: &Path, spec: &TaskSpec, report: &RealizabilityReport) -> Result<i32> {
    if let Some(t) = report.first_violation_us {
        eprintln!("flyq: targets are not realizable; first violation at t = {t} us");
    }
    write_json(
        &out.join("synthesis.json"),
        &SynthesisSummary {
            task: spec.task,
            n_points: spec.grid.len(),
            realizable: false,
            realizability: Some(report),
            clamp_report: &[],
            skipped_mass: 0.0,
        },
    )?;
    Ok(EXIT_NOT_REALIZABLE)
}

fn write_schedule(out: &Path, spec: &TaskSpec, s: &ControlSchedule) -> Result<()> {
    schedule_table(s).write(&out.join("schedule.csv"))?;
    let tail = (spec.task == TaskKind::XiPair).then(|| check_tail_dominance(&spec.targets[0], &spec.targets[1]));
    write_json(
        &out.join("synthesis.json"),
        &SynthesisSummary {
            task: spec.task,
            n_points: spec.grid.len(),
            realizable: true,
            realizability: tail.as_ref(),
            clamp_report: s.clamp_report(),
            skipped_mass: s.skipped_mass(),
        },
    )
}

pub fn cmd_synth(config: &Path, out: &Path, n: Option<usize>) -> Result<i32> {
    let (_, spec) = load(config, out, n)?;
    match Synthesizer::default().synthesize(&spec) {
        Ok(s) => {
            write_schedule(out, &spec, &s)?;
            Ok(EXIT_OK)
        }
        Err(Error::NotRealizable(r)) => write_not_realizable(out, &spec, &r),
        Err(e) => Err(e),
    }
}

pub fn cmd_verify(config: &Path, out: &Path, n: Option<usize>) -> Result<i32> {
    let (cfg, spec) = load(config, out, n)?;
    let thresholds = cfg.thresholds;
    let report = match simulate_task(&spec) {
        Ok(r) => r,
        Err(Error::NotRealizable(r)) => return write_not_realizable(out, &spec, &r),
        Err(e) => return Err(e),
    };
    write_schedule(out, &spec, &report.schedule)?;
    let mut emission = Table::new().with("t_us", spec.grid.times());
    for (name, values) in &report.series {
        emission.push(format!("{name}_re"), values.iter().map(|z| z.re).collect());
        emission.push(format!("{name}_im"), values.iter().map(|z| z.im).collect());
    }
    emission.write(&out.join("emission.csv"))?;
    let passed = report.passes(&thresholds);
    write_json(
        &out.join("report.json"),
        &VerifySummary {
            passed,
            thresholds,
            report: &report,
        },
    )?;
    Ok(if passed { EXIT_OK } else { EXIT_THRESHOLDS })
}

pub fn cmd_figure(name: &str, out: &Path, n: Option<usize>, raw: bool) -> Result<i32> {
    let panels = figure(name, n, raw)?;
    std::fs::create_dir_all(out)?;
    for (file, table) in panels {
        table.write(&out.join(file))?;
    }
    Ok(EXIT_OK)
}
