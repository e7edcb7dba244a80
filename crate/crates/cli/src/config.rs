//! Experiment specification: one JSON document per run. Unknown keys are
//! hard errors so sweep definitions cannot silently drift.

use adq_core::{CodecConfig, Error, FeedbackScheme, Result, SingularStreamConfig, SystemConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ErrorVsSpeed,
    Transient,
    BerSweep,
    CodebookTable,
    HaarMoments,
    OverheadTable,
}

impl ExperimentKind {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::ErrorVsSpeed => "error_vs_speed",
            ExperimentKind::Transient => "transient",
            ExperimentKind::BerSweep => "ber_sweep",
            ExperimentKind::CodebookTable => "codebook_table",
            ExperimentKind::HaarMoments => "haar_moments",
            ExperimentKind::OverheadTable => "overhead_table",
        }
    }
}

/// System dimensions as they appear in config files (the SNR sweep lives
/// at the top level of the spec).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub m: usize,
    pub k: usize,
    pub n_per_user: Vec<usize>,
    pub l_per_user: Vec<usize>,
    pub p_max: f64,
}

impl SystemSpec {
    pub fn to_system(&self, snr_db: &[f64]) -> SystemConfig {
        SystemConfig {
            m: self.m,
            k: self.k,
            n_per_user: self.n_per_user.clone(),
            l_per_user: self.l_per_user.clone(),
            p_max: self.p_max,
            snr_db: snr_db.to_vec(),
        }
    }
}

/// Declarative description of one simulation sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub speeds_kmh: Vec<f64>,
    #[serde(default)]
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub schemes: Vec<FeedbackScheme>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub n_samples: usize,
    /// Independent trajectory realizations for the transient experiment.
    #[serde(default = "default_realizations")]
    pub n_realizations: usize,
    #[serde(default)]
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub codec: CodecConfig,
    #[serde(default = "default_sv_draws")]
    pub sv_codebook_draws: usize,
    #[serde(default = "default_sv_seed")]
    pub sv_codebook_seed: u64,
    pub output_path: String,
    /// Carrier frequency of the simulated link, Hz.
    #[serde(default = "default_carrier")]
    pub carrier_freq_hz: f64,
    /// Channel feedback rate f_s, Hz.
    #[serde(default = "default_rate")]
    pub sample_rate_hz: f64,
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}
fn default_realizations() -> usize {
    200
}
fn default_sv_draws() -> usize {
    20_000
}
fn default_sv_seed() -> u64 {
    0x5151_C0DE
}
fn default_carrier() -> f64 {
    2.5e9
}
fn default_rate() -> f64 {
    200.0
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(text)
            .map_err(|e| Error::Domain(format!("config parse error: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn sv_config(&self) -> SingularStreamConfig {
        SingularStreamConfig {
            codec: self.codec,
            sv_codebook_draws: self.sv_codebook_draws,
            sv_codebook_seed: self.sv_codebook_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.codec.predictor.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Domain("seeds must be non-empty".into()));
        }
        if self.output_path.is_empty() {
            return Err(Error::Domain("output_path must be set".into()));
        }
        if !(self.carrier_freq_hz > 0.0) || !(self.sample_rate_hz > 0.0) {
            return Err(Error::Domain(
                "carrier and sample rate must be positive".into(),
            ));
        }
        let statistical = matches!(
            self.experiment,
            ExperimentKind::ErrorVsSpeed
                | ExperimentKind::Transient
                | ExperimentKind::BerSweep
                | ExperimentKind::CodebookTable
                | ExperimentKind::HaarMoments
        );
        if statistical && self.n_samples < 1000 {
            return Err(Error::Domain(format!(
                "statistical experiments need n_samples >= 1000, got {}",
                self.n_samples
            )));
        }
        match self.experiment {
            ExperimentKind::ErrorVsSpeed => {
                if self.speeds_kmh.is_empty() {
                    return Err(Error::Domain("speeds_kmh must be non-empty".into()));
                }
                self.require_system()?;
            }
            ExperimentKind::Transient => {
                if self.speeds_kmh.len() != 1 {
                    return Err(Error::Domain(
                        "transient experiment takes exactly one speed".into(),
                    ));
                }
                if self.n_realizations < 200 {
                    return Err(Error::Domain(
                        "transient experiment needs n_realizations >= 200".into(),
                    ));
                }
            }
            ExperimentKind::BerSweep => {
                if self.speeds_kmh.is_empty() || self.snr_db.is_empty() || self.schemes.is_empty() {
                    return Err(Error::Domain(
                        "ber_sweep needs speeds_kmh, snr_db and schemes".into(),
                    ));
                }
                let sys = self.require_system()?;
                sys.to_system(&self.snr_db).validate()?;
            }
            ExperimentKind::CodebookTable | ExperimentKind::HaarMoments => {}
            ExperimentKind::OverheadTable => {
                let sys = self.require_system()?;
                sys.to_system(&[]).validate()?;
            }
        }
        Ok(())
    }

    fn require_system(&self) -> Result<&SystemSpec> {
        self.system
            .as_ref()
            .ok_or_else(|| Error::Domain("this experiment needs a system section".into()))
    }
}
