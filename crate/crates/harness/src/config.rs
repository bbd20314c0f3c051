//! TOML experiment configuration.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ristap_core::driver::Scheme;
use ristap_core::scenario::ScenarioConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// N=4, K=2, M=2, L=4, Nr=8, R=2.
    Desk,
    /// N=8, K=3, M=8, L=8, Nr=25, R=2.
    Paper,
}

impl Profile {
    pub fn scenario(self) -> ScenarioConfig {
        match self {
            Profile::Desk => ScenarioConfig::desk_default(),
            Profile::Paper => ScenarioConfig::paper_default(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Grid over `a_max`; the SCNR trace of every run is kept.
    Convergence,
    /// Grid over total transmit power in W.
    PowerSweep,
    /// Grid over the RIS y coordinate in m; x coordinates stay as configured.
    RisPositionSweep,
    /// Grid over the number of RISs kept from the configured list.
    RisCountSweep,
    /// Grid over target speed in m/s, heading along +y.
    VelocityMagnitudeSweep,
    /// Grid over target heading in degrees from +x at 30 m/s.
    VelocityDirectionSweep,
    /// Grid over target speed in m/s (heading +y); adds detection curves.
    Roc,
    /// Grid over the QoS requirement in dB, solved from the highest value down
    /// with each point warm-started from the previous one.
    QosTradeoff,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::PowerSweep => "power_sweep",
            ExperimentKind::RisPositionSweep => "ris_position_sweep",
            ExperimentKind::RisCountSweep => "ris_count_sweep",
            ExperimentKind::VelocityMagnitudeSweep => "velocity_magnitude_sweep",
            ExperimentKind::VelocityDirectionSweep => "velocity_direction_sweep",
            ExperimentKind::Roc => "roc",
            ExperimentKind::QosTradeoff => "qos_tradeoff",
        }
    }

    pub fn axis_label(self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "a_max",
            ExperimentKind::PowerSweep => "total power (W)",
            ExperimentKind::RisPositionSweep => "RIS y coordinate (m)",
            ExperimentKind::RisCountSweep => "number of RISs",
            ExperimentKind::VelocityMagnitudeSweep | ExperimentKind::Roc => "target speed (m/s)",
            ExperimentKind::VelocityDirectionSweep => "target heading (deg)",
            ExperimentKind::QosTradeoff => "QoS requirement (dB)",
        }
    }
}

pub const DIRECTION_SWEEP_SPEED: f64 = 30.0;

fn default_schemes() -> Vec<Scheme> {
    vec![Scheme::Proposed, Scheme::RandomRis, Scheme::NoRis]
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_ber_trials() -> usize {
    1000
}

fn default_p_fa() -> Vec<f64> {
    vec![1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1]
}

fn default_max_outer() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Stem of every output file.
    pub name: String,
    pub kind: ExperimentKind,
    pub grid: Vec<f64>,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Noise draws per symbol for the BER estimate.
    #[serde(default = "default_ber_trials")]
    pub ber_trials: usize,
    /// False-alarm probabilities of the detection curves.
    #[serde(default = "default_p_fa")]
    pub p_fa: Vec<f64>,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
}

impl ExperimentSpec {
    pub fn validate(&self, scenario: &ScenarioConfig) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            bail!("experiment.name must be a non-empty file stem, got '{}'", self.name);
        }
        if self.grid.is_empty() {
            bail!("experiment.grid must not be empty");
        }
        if let Some(v) = self.grid.iter().find(|v| !v.is_finite()) {
            bail!("experiment.grid contains a non-finite value {v}");
        }
        if self.seeds.is_empty() {
            bail!("experiment.seeds must not be empty");
        }
        if self.seeds.iter().collect::<HashSet<_>>().len() != self.seeds.len() {
            bail!("experiment.seeds must be distinct");
        }
        if self.schemes.is_empty() {
            bail!("experiment.schemes must not be empty");
        }
        if self.schemes.iter().collect::<HashSet<_>>().len() != self.schemes.len() {
            bail!("experiment.schemes must be distinct");
        }
        if self.ber_trials == 0 {
            bail!("experiment.ber_trials must be at least 1");
        }
        if self.max_outer == 0 {
            bail!("experiment.max_outer must be at least 1");
        }
        if let Some(p) = self.p_fa.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            bail!("experiment.p_fa values must lie in (0, 1), got {p}");
        }
        for &v in &self.grid {
            match self.kind {
                ExperimentKind::Convergence if v <= 0.0 => bail!("experiment.grid: a_max must be positive, got {v}"),
                ExperimentKind::PowerSweep if v <= 0.0 => bail!("experiment.grid: power must be positive, got {v}"),
                ExperimentKind::RisCountSweep if v < 0.0 || v.fract() != 0.0 || v as usize > scenario.ris_positions.len() => {
                    bail!("experiment.grid: RIS count must be an integer in 0..={}, got {v}", scenario.ris_positions.len())
                }
                ExperimentKind::VelocityMagnitudeSweep | ExperimentKind::Roc if v < 0.0 => {
                    bail!("experiment.grid: speed must be non-negative, got {v}")
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Contents of a config file. Without a `[scenario]` table the profile
/// default is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioConfig>,
    pub experiment: ExperimentSpec,
}

impl ExperimentConfig {
    pub fn resolved_scenario(&self, profile: Profile) -> ScenarioConfig {
        self.scenario.clone().unwrap_or_else(|| profile.scenario())
    }

    pub fn validate(&self, profile: Profile) -> Result<()> {
        let scenario = self.resolved_scenario(profile);
        scenario.validate().context("[scenario]")?;
        self.experiment.validate(&scenario)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    // toml errors carry the line, column and offending key.
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok(cfg)
}

pub fn parse_config(path: &Path, profile: Profile) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg = parse_config_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    cfg.validate(profile).with_context(|| format!("validating {}", path.display()))?;
    Ok(cfg)
}
