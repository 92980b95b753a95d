//! Experiment configuration.
//!
//! Configs are TOML files with a handful of top-level keys and one table per
//! concern. Every key has a default except the data source, so a minimal
//! file names an algorithm, a seed and where the samples come from:
//!
//! ```toml
//! seed = 1
//! algorithm = "finite_sample"
//!
//! [learner]
//! step_size = 0.05
//! scales = [40.0, 25.0, 15.0, 5.0]
//!
//! [data]
//! source = "csv"
//! path = "data/ccpp.csv"
//! inputs = ["AT"]
//! target = "PE"
//! ```
//!
//! The full grammar is documented in the README.

use std::path::{Path, PathBuf};

use l2proj::baselines::{build_regressor, Nlms, RlsGain, RlsProjection};
use l2proj::datagen::PseudorangeParams;
use l2proj::{
    BaselineKind, CoherenceMetric, DictionaryPolicy, InputDistribution, LearnerConfig, MetricKind, OnlineRegressor,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Analytical,
    FiniteSample,
    Recursive,
    Nlms,
    Knlms,
    Mknlms,
    Hypass,
    Chypass,
    Rls,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Self::Analytical,
        Self::FiniteSample,
        Self::Recursive,
        Self::Nlms,
        Self::Knlms,
        Self::Mknlms,
        Self::Hypass,
        Self::Chypass,
        Self::Rls,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Analytical => "analytical",
            Self::FiniteSample => "finite_sample",
            Self::Recursive => "recursive",
            Self::Nlms => "nlms",
            Self::Knlms => "knlms",
            Self::Mknlms => "mknlms",
            Self::Hypass => "hypass",
            Self::Chypass => "chypass",
            Self::Rls => "rls",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }

    pub fn baseline(self) -> Option<BaselineKind> {
        match self {
            Self::Analytical | Self::FiniteSample | Self::Recursive => None,
            Self::Nlms => Some(BaselineKind::Nlms),
            Self::Knlms => Some(BaselineKind::Knlms),
            Self::Mknlms => Some(BaselineKind::Mknlms),
            Self::Hypass => Some(BaselineKind::Hypass),
            Self::Chypass => Some(BaselineKind::Chypass),
            Self::Rls => Some(BaselineKind::RlsProjection),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Learn on the training part, freeze, report RMSE on the rest.
    TrainTest,
    /// Predict-then-learn over the whole stream, report NMSE.
    Prequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticalInput {
    Uniform,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerSection {
    pub step_size: f64,
    pub hyperslab: f64,
    pub coherence_threshold: f64,
    pub lne_threshold: f64,
    pub gram_gamma: f64,
    pub update_gamma: f64,
    pub subset_size: Option<usize>,
    pub scales: Vec<f64>,
    /// Input measure assumed by the analytical Gram.
    pub analytical_input: AnalyticalInput,
    pub input_sigma: f64,
    pub window: Option<usize>,
    pub frozen: bool,
    /// Append a constant 1 to the NLMS regressor.
    pub nlms_bias: bool,
    pub rls_prior_gain: bool,
}

impl Default for LearnerSection {
    fn default() -> Self {
        let c = LearnerConfig::new(vec![1.0]);
        Self {
            step_size: c.step_size,
            hyperslab: c.hyperslab,
            coherence_threshold: c.coherence_threshold,
            lne_threshold: c.lne_threshold,
            gram_gamma: c.gram_gamma,
            update_gamma: c.update_gamma,
            subset_size: c.subset_size,
            scales: c.scales,
            analytical_input: AnalyticalInput::Uniform,
            input_sigma: 1.0,
            window: None,
            frozen: false,
            nlms_bias: false,
            rls_prior_gain: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Csv,
    Uniform,
    Gaussian,
    Pseudorange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Zero,
    /// `Σ_k sin(3 x_k)`.
    Sine,
    /// `Π_k sinc(x_k)` with `sinc(t) = sin(πt)/(πt)`.
    Sinc,
    /// Gaussian mixture given by `mixture_*`.
    Mixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub source: Option<DataSource>,
    pub path: Option<PathBuf>,
    pub inputs: Vec<String>,
    pub target: Option<String>,
    /// z-score inputs and target with training statistics.
    pub standardize: bool,
    /// Under `prequential`, the leading rows whose statistics standardize
    /// the whole stream.
    pub standardize_rows: Option<usize>,
    /// Share of the stream used for training under `train_test`.
    pub train_fraction: f64,
    pub dim: usize,
    pub length: usize,
    pub bounds: [f64; 2],
    pub input_sigma: f64,
    pub noise_std: f64,
    pub target_fn: TargetKind,
    pub mixture_centers: Vec<Vec<f64>>,
    pub mixture_scales: Vec<f64>,
    pub mixture_weights: Vec<f64>,
    pub pseudorange: Option<PseudorangeParams>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            source: None,
            path: None,
            inputs: Vec::new(),
            target: None,
            standardize: false,
            standardize_rows: None,
            train_fraction: 0.5,
            dim: 1,
            length: 1000,
            bounds: [-1.0, 1.0],
            input_sigma: 1.0,
            noise_std: 0.0,
            target_fn: TargetKind::Sine,
            mixture_centers: Vec::new(),
            mixture_scales: Vec::new(),
            mixture_weights: Vec::new(),
            pseudorange: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSection {
    pub repeats: usize,
}

impl Default for CvSection {
    fn default() -> Self {
        Self { repeats: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub step_size_grid: Vec<f64>,
    pub delta_grid: Vec<f64>,
    /// Number of random draws after the grid.
    pub budget: usize,
    /// `λ` is drawn log-uniformly from this range.
    pub step_size_range: [f64; 2],
    /// `1 - δ` is drawn log-uniformly from this range.
    pub one_minus_delta_range: [f64; 2],
}

impl Default for SearchSection {
    fn default() -> Self {
        Self {
            step_size_grid: vec![0.01, 0.1, 1.0],
            delta_grid: vec![0.9, 0.99, 0.999],
            budget: 100,
            step_size_range: [1e-3, 1.9],
            one_minus_delta_range: [1e-4, 0.2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub nmse_window: usize,
    /// Train with the test targets replaced by NaN and fail if any
    /// coefficient is affected.
    pub poison_test_targets: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: None, nmse_window: l2proj::diagnostics::NMSE_WINDOW, poison_test_targets: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub algorithm: Algorithm,
    pub protocol: Protocol,
    pub learner: LearnerSection,
    pub data: DataSection,
    pub cv: CvSection,
    pub search: SearchSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: None,
            algorithm: Algorithm::FiniteSample,
            protocol: Protocol::TrainTest,
            learner: LearnerSection::default(),
            data: DataSection::default(),
            cv: CvSection::default(),
            search: SearchSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// SHA-256 over the config with the output directory cleared, so the
    /// same experiment hashes the same wherever it is written.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.dir = None;
        let digest = Sha256::digest(c.to_toml().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn validate(&self) -> Result<()> {
        match self.data.source {
            None => return Err(Error::MissingField("data.source")),
            Some(DataSource::Csv) => {
                if self.data.path.is_none() {
                    return Err(Error::MissingField("data.path"));
                }
                if self.data.inputs.is_empty() {
                    return Err(Error::MissingField("data.inputs"));
                }
                if self.data.target.is_none() {
                    return Err(Error::MissingField("data.target"));
                }
            }
            Some(_) => {
                if self.data.length == 0 {
                    return Err(Error::Config("data.length must be positive".into()));
                }
            }
        }
        if !(self.data.train_fraction > 0.0 && self.data.train_fraction < 1.0) {
            return Err(Error::Config(format!("data.train_fraction must be in (0, 1), got {}", self.data.train_fraction)));
        }
        if self.data.standardize && self.protocol == Protocol::Prequential && self.data.standardize_rows.is_none() {
            return Err(Error::MissingField("data.standardize_rows"));
        }
        if self.cv.repeats == 0 {
            return Err(Error::Config("cv.repeats must be at least 1".into()));
        }
        if self.output.nmse_window == 0 {
            return Err(Error::Config("output.nmse_window must be positive".into()));
        }
        let r = self.search.step_size_range;
        let d = self.search.one_minus_delta_range;
        if !(r[0] > 0.0 && r[0] <= r[1] && d[0] > 0.0 && d[0] <= d[1]) {
            return Err(Error::Config("search ranges must be positive with lo <= hi".into()));
        }
        self.learner_config()?.validate()?;
        Ok(())
    }

    fn metric(&self) -> MetricKind {
        match self.algorithm {
            Algorithm::Analytical => MetricKind::Analytical(match self.learner.analytical_input {
                AnalyticalInput::Uniform => InputDistribution::NoninformativeUniform,
                AnalyticalInput::Gaussian => InputDistribution::GaussianIsotropic { sigma: self.learner.input_sigma },
            }),
            Algorithm::Recursive => MetricKind::Recursive,
            _ => MetricKind::FiniteSample,
        }
    }

    /// Core learner configuration; baselines rewrite the metric later.
    pub fn learner_config(&self) -> Result<LearnerConfig> {
        let l = &self.learner;
        let config = LearnerConfig {
            step_size: l.step_size,
            hyperslab: l.hyperslab,
            coherence_threshold: l.coherence_threshold,
            lne_threshold: l.lne_threshold,
            gram_gamma: l.gram_gamma,
            update_gamma: l.update_gamma,
            subset_size: l.subset_size,
            scales: l.scales.clone(),
            metric: self.metric(),
            coherence: CoherenceMetric::Native,
            window: l.window,
            dictionary: if l.frozen { DictionaryPolicy::Frozen } else { DictionaryPolicy::Grow },
        };
        if let Some(kind) = self.algorithm.baseline() {
            if !matches!(kind, BaselineKind::Nlms | BaselineKind::RlsProjection) {
                return Ok(kind.learner_config(config)?);
            }
        }
        Ok(config)
    }

    /// Fresh model for a stream of `dim`-dimensional inputs.
    pub fn build_model(&self, dim: usize) -> Result<Box<dyn OnlineRegressor + Send>> {
        let l = &self.learner;
        Ok(match self.algorithm {
            Algorithm::Nlms => {
                let m = Nlms::new(dim, l.step_size, l.hyperslab, l.update_gamma)?;
                Box::new(if l.nlms_bias { m.with_bias() } else { m })
            }
            Algorithm::Rls => {
                let gain = if l.rls_prior_gain { RlsGain::Prior } else { RlsGain::Posterior };
                Box::new(RlsProjection::with_scaled_identity(dim, 1.0, gain)?)
            }
            _ => build_regressor(None, dim, self.learner_config()?)?,
        })
    }
}
