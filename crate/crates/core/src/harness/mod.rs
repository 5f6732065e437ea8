//! Scenario configuration, feedback schemes, the Monte Carlo trial engine,
//! experiment sweeps and result files.
//!
//! Randomness is keyed by trial id and link, never by scheme or sweep point,
//! so every scheme and every sweep point sees the same channels, shadowing
//! draws, base codebooks and IA initializations (common random numbers).

mod experiments;
mod output;
mod trial;

pub use experiments::{
    run_config, sweep, sweep_detailed, table1_experiment, table1_profile, CellResult, Table1Result,
    TABLE1_BUDGETS,
};
pub use output::{write_metadata, write_records, SimRecord};
pub use trial::{
    quantize_link, run_trial, run_trial_schemes, BetaCache, SchemeOutcome, TrialOutcome, TrialSetup,
};

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::allocation::LinkId;
use crate::error::{Error, Result};
use crate::ia::IaOptions;
use crate::rng::substream;
use crate::topology::{
    sample_random_itp, InterferenceTopologyProfile, SystemDims, DEFAULT_GAIN_FLOOR,
};

/// Feedback scheme: codebook kind and bit-allocation rule.
#[derive(
    Clone,
    Copy,
    Debug,
    PartialEq,
    Eq,
    Hash,
    PartialOrd,
    Ord,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scheme {
    /// Spatial codebooks with water-filling bits.
    Dfs,
    /// Base codebooks with equal bits.
    Cvq,
    /// Spatial codebooks with equal bits.
    Hds1,
    /// Base codebooks with water-filling bits.
    Hds2,
    /// Random transceivers, no feedback.
    Rb,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Dfs,
        Scheme::Cvq,
        Scheme::Hds1,
        Scheme::Hds2,
        Scheme::Rb,
    ];

    pub fn spatial_codebook(self) -> bool {
        matches!(self, Scheme::Dfs | Scheme::Hds1)
    }

    pub fn dynamic_bits(self) -> bool {
        matches!(self, Scheme::Dfs | Scheme::Hds2)
    }

    pub fn uses_feedback(self) -> bool {
        self != Scheme::Rb
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Dfs => "DFS",
            Scheme::Cvq => "CVQ",
            Scheme::Hds1 => "HDS1",
            Scheme::Hds2 => "HDS2",
            Scheme::Rb => "RB",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Quantization settings shared by all schemes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuantOptions {
    /// Codebooks up to this many bits are materialized; larger ones are sampled.
    pub exact_max_bits: u32,
    /// Monte Carlo samples per distortion coefficient.
    pub beta_samples: usize,
    /// Reuse one codebook per link for every trial instead of a fresh one.
    pub fixed_codebook: bool,
    pub gain_floor: f64,
}

impl Default for QuantOptions {
    fn default() -> Self {
        QuantOptions {
            exact_max_bits: 12,
            beta_samples: 10_000,
            fixed_codebook: false,
            gain_floor: DEFAULT_GAIN_FLOOR,
        }
    }
}

/// Where the interference topology comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItpSource {
    /// Identity correlations and unit gains on every link.
    Iid,
    /// Profile document on disk.
    Explicit { path: PathBuf },
    /// Exponential transmit correlation `eps_abs·e^{i·eps_phase}` and
    /// log-normal shadowing of variance `delta2`, redrawn every trial.
    Random {
        eps_abs: f64,
        #[serde(default)]
        eps_phase: f64,
        delta2: f64,
    },
}

/// Axis values for the correlation and shadowing sweeps.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepValues {
    pub eps_abs: Vec<f64>,
    pub delta2: Vec<f64>,
    /// Constant added to the SNR-scaled budget.
    pub c_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub dims: SystemDims,
    pub itp: ItpSource,
    pub snr_db: Vec<f64>,
    pub budgets: Vec<u32>,
    #[serde(default = "all_schemes")]
    pub schemes: Vec<Scheme>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub ia: IaOptions,
    #[serde(default)]
    pub quant: QuantOptions,
    /// Compute analytical bounds and the perfect-CSI Monte Carlo reference.
    #[serde(default)]
    pub bounds: bool,
    #[serde(default)]
    pub sweep: SweepValues,
    /// Cross links that are fed back; all others are known exactly.
    #[serde(default)]
    pub quantized_links: Option<Vec<LinkId>>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn all_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        self.ia.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.snr_db.is_empty() || self.budgets.is_empty() || self.schemes.is_empty() {
            return Err(Error::InvalidConfig(
                "SNR, budget and scheme lists must be nonempty".into(),
            ));
        }
        if let ItpSource::Random {
            eps_abs, delta2, ..
        } = self.itp
        {
            if !(0.0..1.0).contains(&eps_abs) {
                return Err(Error::CorrelationNotPsd(eps_abs));
            }
            if delta2.is_nan() || delta2 < 0.0 {
                return Err(Error::InvalidConfig("delta2 must be nonnegative".into()));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Heterogeneous defaults: `K=4`, `3×2`, `d=1`, `|ε|=0.7`, `δ²=3`, 25 dB.
    pub fn heterogeneous_default() -> Self {
        ScenarioConfig {
            dims: SystemDims {
                k: 4,
                nt: 3,
                nr: 2,
                d: 1,
            },
            itp: ItpSource::Random {
                eps_abs: 0.7,
                eps_phase: 0.0,
                delta2: 3.0,
            },
            snr_db: vec![25.0],
            budgets: vec![120],
            schemes: all_schemes(),
            trials: 500,
            seed: 1,
            ia: IaOptions::default(),
            quant: QuantOptions::default(),
            bounds: true,
            sweep: SweepValues::default(),
            quantized_links: None,
            output: None,
        }
    }
}

/// Resolved topology: a fixed profile or the random model's parameters.
#[derive(Clone, Debug)]
pub enum TopologyModel {
    Fixed(InterferenceTopologyProfile),
    Random {
        dims: SystemDims,
        eps: Complex64,
        delta2: f64,
    },
}

impl TopologyModel {
    pub fn from_source(dims: SystemDims, source: &ItpSource) -> Result<Self> {
        match source {
            ItpSource::Iid => Ok(TopologyModel::Fixed(InterferenceTopologyProfile::iid(dims))),
            ItpSource::Explicit { path } => {
                let itp = InterferenceTopologyProfile::from_json(&std::fs::read_to_string(path)?)?;
                if itp.dims() != dims {
                    return Err(Error::DimensionMismatch(
                        "profile dims differ from config dims".into(),
                    ));
                }
                Ok(TopologyModel::Fixed(itp))
            }
            ItpSource::Random {
                eps_abs,
                eps_phase,
                delta2,
            } => Ok(TopologyModel::Random {
                dims,
                eps: Complex64::from_polar(*eps_abs, *eps_phase),
                delta2: *delta2,
            }),
        }
    }

    /// Profile for trial `trial`; the random model draws it from the
    /// `(master, [trial], "itp")` stream.
    pub fn profile(&self, master: u64, trial: u64) -> Result<InterferenceTopologyProfile> {
        match self {
            TopologyModel::Fixed(itp) => Ok(itp.clone()),
            TopologyModel::Random { dims, eps, delta2 } => sample_random_itp(
                *dims,
                *eps,
                *delta2,
                &mut substream(master, &[trial], "itp"),
            ),
        }
    }

    pub fn eps_abs(&self) -> Option<f64> {
        match self {
            TopologyModel::Random { eps, .. } => Some(eps.norm()),
            TopologyModel::Fixed(_) => None,
        }
    }

    pub fn delta2(&self) -> Option<f64> {
        match self {
            TopologyModel::Random { delta2, .. } => Some(*delta2),
            TopologyModel::Fixed(_) => None,
        }
    }
}

/// Sweep axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    Bits,
    Snr,
    SnrScaled,
    Correlation,
    Shadowing,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Bits => "bits",
            Axis::Snr => "snr",
            Axis::SnrScaled => "snr-scaled",
            Axis::Correlation => "correlation",
            Axis::Shadowing => "shadowing",
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
