//! JSON task configuration. Frequencies are given in MHz with the γ/2π
//! convention and become rad/μs here, at parse time.

use std::f64::consts::PI;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{make_envelope, Envelope, EnvelopeKind, PhaseSpec, TaskKind, TaskSpec};
use crate::numerics::{TimeGrid, C64};
use crate::simulator::Thresholds;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_start_us: f64,
    pub t_end_us: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Exponential,
    Gaussian,
    Custom,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseConfig {
    pub global_pi: bool,
    pub chirp_rad_per_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub kind: TargetKind,
    pub params: serde_json::Value,
    /// 1-based channel the photon travels in.
    pub channel: usize,
    #[serde(default)]
    pub phase: PhaseConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaConfig {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub task: TaskKind,
    pub grid: GridConfig,
    pub targets: Vec<TargetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<AlphaConfig>>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExponentialParams {
    gamma_c_mhz: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianParams {
    omega_mhz: f64,
    #[serde(default)]
    t_center_us: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomParams {
    re: Vec<f64>,
    #[serde(default)]
    im: Vec<f64>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn field_path(path: &serde_path_to_error::Path) -> String {
    let p = path.to_string();
    if p == "." {
        "<root>".into()
    } else {
        p
    }
}

fn params<T: DeserializeOwned>(value: &serde_json::Value, at: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = field_path(e.path());
        let path = if inner == "<root>" { at.to_string() } else { format!("{at}.{inner}") };
        config_err(format!("{path}: {}", e.inner()))
    })
}

impl TaskConfig {
    /// Parses a config document; errors name the offending field and its line.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: TaskConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            config_err(format!(
                "{}: {} (line {}, column {})",
                field_path(e.path()),
                inner,
                inner.line(),
                inner.column()
            ))
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn time_grid(&self, n_override: Option<usize>) -> Result<TimeGrid> {
        let g = &self.grid;
        TimeGrid::new(g.t_start_us, g.t_end_us, n_override.unwrap_or(g.n_points))
            .map_err(|e| config_err(format!("grid: {e}")))
    }

    /// Builds the task, ordering targets by channel.
    pub fn task_spec(&self, n_override: Option<usize>) -> Result<TaskSpec> {
        let grid = self.time_grid(n_override)?;
        let want = self.task.target_count();
        if self.targets.len() != want {
            return Err(config_err(format!(
                "targets: {:?} needs {want} target(s), found {}",
                self.task,
                self.targets.len()
            )));
        }
        let mut slots: Vec<Option<Envelope>> = vec![None; want];
        for (k, t) in self.targets.iter().enumerate() {
            let at = format!("targets[{k}]");
            if t.channel == 0 || t.channel > want {
                return Err(config_err(format!(
                    "{at}.channel: must be between 1 and {want}, got {}",
                    t.channel
                )));
            }
            if slots[t.channel - 1].is_some() {
                return Err(config_err(format!("{at}.channel: channel {} used twice", t.channel)));
            }
            let env = t
                .envelope(&grid, &format!("xi{}", t.channel), &at)
                .map_err(|e| match e {
                    Error::Config(m) => Error::Config(m),
                    other => config_err(format!("{at}: {other}")),
                })?;
            slots[t.channel - 1] = Some(env);
        }
        let targets = slots.into_iter().map(|s| s.expect("every channel filled")).collect();

        let alphas = match (&self.alphas, self.task.needs_alphas()) {
            (None, true) => {
                return Err(config_err(format!("alphas: required for {:?}", self.task)));
            }
            (Some(a), true) => {
                if a.len() != 2 {
                    return Err(config_err(format!("alphas: expected 2 entries, found {}", a.len())));
                }
                Some([C64::new(a[0].re, a[0].im), C64::new(a[1].re, a[1].im)])
            }
            (_, false) => None,
        };
        TaskSpec::new(self.task, targets, alphas).map_err(|e| config_err(e.to_string()))
    }
}

impl TargetConfig {
    fn envelope(&self, grid: &TimeGrid, label: &str, at: &str) -> Result<Envelope> {
        let at = format!("{at}.params");
        let kind = match self.kind {
            TargetKind::Exponential => {
                let p: ExponentialParams = params(&self.params, &at)?;
                EnvelopeKind::Exponential {
                    gamma_c: 2.0 * PI * p.gamma_c_mhz,
                }
            }
            TargetKind::Gaussian => {
                let p: GaussianParams = params(&self.params, &at)?;
                EnvelopeKind::Gaussian {
                    omega: 2.0 * PI * p.omega_mhz,
                    t_center: p.t_center_us,
                }
            }
            TargetKind::Custom => {
                let p: CustomParams = params(&self.params, &at)?;
                if p.re.len() != grid.len() || !(p.im.is_empty() || p.im.len() == p.re.len()) {
                    return Err(config_err(format!(
                        "{at}: custom samples must have one value per grid point ({})",
                        grid.len()
                    )));
                }
                let im = |i: usize| p.im.get(i).copied().unwrap_or(0.0);
                EnvelopeKind::Custom(p.re.iter().enumerate().map(|(i, &r)| C64::new(r, im(i))).collect())
            }
        };
        let phase = PhaseSpec {
            global_pi: self.phase.global_pi,
            chirp_rad_per_us: self.phase.chirp_rad_per_us,
        };
        make_envelope(kind, phase, grid, label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBDA: &str = r#"{
  "task": "LambdaGenerate",
  "grid": {"t_start_us": -0.75, "t_end_us": 0.75, "n_points": 401},
  "targets": [
    {"kind": "gaussian", "params": {"omega_mhz": 4.0}, "channel": 2},
    {"kind": "gaussian", "params": {"omega_mhz": 2.0}, "channel": 1}
  ],
  "alphas": [{"re": 0.7071067811865476}, {"re": 0.7071067811865476}]
}"#;

    #[test]
    fn targets_are_ordered_by_channel_and_converted() {
        let cfg = TaskConfig::from_json(LAMBDA).unwrap();
        let spec = cfg.task_spec(None).unwrap();
        let direct = make_envelope(
            EnvelopeKind::Gaussian { omega: 2.0 * PI * 2.0, t_center: 0.0 },
            PhaseSpec::default(),
            &spec.grid,
            "xi1",
        )
        .unwrap();
        assert_eq!(spec.targets[0], direct);
        assert_eq!(cfg.thresholds, Thresholds::default());
    }

    #[test]
    fn grid_override() {
        let cfg = TaskConfig::from_json(LAMBDA).unwrap();
        assert_eq!(cfg.task_spec(Some(801)).unwrap().grid.len(), 801);
    }

    #[test]
    fn missing_alphas_names_the_field() {
        let text = LAMBDA.replace(
            ",\n  \"alphas\": [{\"re\": 0.7071067811865476}, {\"re\": 0.7071067811865476}]",
            "",
        );
        let err = TaskConfig::from_json(&text).unwrap().task_spec(None).unwrap_err();
        assert!(err.to_string().contains("alphas"), "{err}");
    }

    #[test]
    fn unknown_field_reports_line() {
        let text = LAMBDA.replace("\"n_points\": 401", "\"n_points\": 401, \"dt\": 1");
        let err = TaskConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("grid") && err.contains("line 3"), "{err}");
    }

    #[test]
    fn bad_params_name_the_path() {
        let text = LAMBDA.replace("\"omega_mhz\": 4.0", "\"omega\": 4.0");
        let err = TaskConfig::from_json(&text).unwrap().task_spec(None).unwrap_err().to_string();
        assert!(err.contains("targets[0].params"), "{err}");
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = TaskConfig::from_json(LAMBDA).unwrap();
        assert_eq!(TaskConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}
