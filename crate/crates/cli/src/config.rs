//! Run configuration. One JSON file; every section and field is optional and
//! unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use airslice_core::assoc::{AssocOptions, EtaPolicy};
use airslice_core::scenario::{ChannelModel, RateTable, TopologySpec};
use airslice_core::{derive_timing, ControlDefaults, EdcaParams, RawTiming, TimingConstants};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    ThroughputVsDensityHomogeneous,
    ThroughputVsDensityNonhomogeneous,
    ThroughputVsLoad,
    FairnessVsDensity,
    Iterations,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 5] = [
        ExperimentName::ThroughputVsDensityHomogeneous,
        ExperimentName::ThroughputVsDensityNonhomogeneous,
        ExperimentName::ThroughputVsLoad,
        ExperimentName::FairnessVsDensity,
        ExperimentName::Iterations,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::ThroughputVsDensityHomogeneous => "throughput-vs-density-homogeneous",
            ExperimentName::ThroughputVsDensityNonhomogeneous => "throughput-vs-density-nonhomogeneous",
            ExperimentName::ThroughputVsLoad => "throughput-vs-load",
            ExperimentName::FairnessVsDensity => "fairness-vs-density",
            ExperimentName::Iterations => "iterations",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// λ_mean values for the density, fairness and iteration sweeps.
    pub lambdas: Vec<f64>,
    /// ρ values for the load and fairness sweeps.
    pub rhos: Vec<f64>,
    /// λ_mean held fixed by the load sweep.
    pub load_lambda: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            rhos: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            load_lambda: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimStation {
    pub params: EdcaParams,
    pub rate_mbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub stations: Vec<SimStation>,
    pub slots: u64,
    pub warmup_fraction: f64,
    pub batches: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            stations: vec![
                SimStation {
                    params: EdcaParams::default(),
                    rate_mbps: 54.0,
                };
                4
            ],
            slots: 2_000_000,
            warmup_fraction: 0.1,
            batches: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    /// Slots simulated per point of the six-STA sweep.
    pub slots_per_point: u64,
    /// τ_1 values for the control cascade curves.
    pub tau_sweep: Vec<f64>,
    /// τ_1 values for the single-knob curves.
    pub knob_sweep: Vec<f64>,
    /// τ held by STAs 2..6.
    pub background_tau: f64,
    pub rate_mbps: f64,
    /// Random one-AP instances checked against the grid search.
    pub gp_instances: usize,
    pub grid_resolution: usize,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            slots_per_point: 2_000_000,
            tau_sweep: (0..=19).map(|k| 0.005 + 0.005 * k as f64).collect(),
            knob_sweep: (0..=29).map(|k| 0.005 + 0.005 * k as f64).collect(),
            background_tau: 0.005,
            rate_mbps: 54.0,
            gp_instances: 10,
            grid_resolution: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentName>,
    pub seed: u64,
    pub replications: usize,
    /// Worker threads; all cores when absent.
    pub jobs: Option<usize>,
    pub out_dir: PathBuf,
    pub scenario: TopologySpec,
    pub channel: ChannelModel,
    /// CSV rate table; IEEE 802.11a when absent.
    pub rate_table: Option<PathBuf>,
    pub timing: RawTiming,
    pub defaults: ControlDefaults,
    pub optimizer: AssocOptions,
    /// Airtime targets for the GP scheme.
    pub eta: EtaPolicy,
    pub sweep: SweepConfig,
    pub simulate: SimulateConfig,
    pub validate: ValidateConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 1,
            replications: 20,
            jobs: None,
            out_dir: PathBuf::from("out"),
            scenario: TopologySpec::default(),
            channel: ChannelModel::default(),
            rate_table: None,
            timing: RawTiming::default(),
            defaults: ControlDefaults::default(),
            optimizer: AssocOptions::default(),
            // the N_a/|K| default cannot be met at desk scale, see README
            eta: EtaPolicy::FairShare { fraction: 0.95 },
            sweep: SweepConfig::default(),
            simulate: SimulateConfig::default(),
            validate: ValidateConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.channel.validate()?;
        self.timing()?;
        if self.replications == 0 {
            bail!("replications must be positive");
        }
        if self.jobs == Some(0) {
            bail!("jobs must be positive");
        }
        if self.sweep.lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            bail!("sweep.lambdas must be positive");
        }
        if self.sweep.rhos.iter().any(|r| !(0.0..=1.0).contains(r)) {
            bail!("sweep.rhos must lie in [0, 1]");
        }
        if !(self.sweep.load_lambda.is_finite() && self.sweep.load_lambda > 0.0) {
            bail!("sweep.load_lambda must be positive");
        }
        for s in &self.simulate.stations {
            s.params.validate()?;
        }
        if self.validate.grid_resolution < 2 {
            bail!("validate.grid_resolution must be at least 2");
        }
        Ok(())
    }

    pub fn timing(&self) -> Result<TimingConstants> {
        Ok(derive_timing(&self.timing)?)
    }

    pub fn rate_table(&self) -> Result<RateTable> {
        match &self.rate_table {
            None => Ok(RateTable::ieee80211a()),
            Some(path) => {
                let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
                Ok(RateTable::from_csv(file)?)
            }
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form. The
    /// worker count and output directory do not change results and are left out.
    pub fn hash(&self) -> String {
        let canonical = Self {
            jobs: None,
            out_dir: PathBuf::new(),
            ..self.clone()
        };
        let json = serde_json::to_vec(&canonical).expect("configs always serialize");
        hex::encode(&Sha256::digest(&json)[..8])
    }
}
