//! Comparison algorithms.
//!
//! The kernel baselines reuse [`Learner`] with a different metric:
//!
//! | kind    | scales | metric                        |
//! |---------|--------|-------------------------------|
//! | KNLMS   | one    | identity                      |
//! | MKNLMS  | many   | identity                      |
//! | HYPASS  | one    | kernel matrix                 |
//! | CHYPASS | many   | block-diagonal kernel matrix  |
//!
//! all with kernel coherence. Linear NLMS and RLS written as a
//! variable-metric projection are standalone.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::learner::{CoherenceMetric, Learner, LearnerConfig, MetricKind, StepReport};
use crate::linalg::{check_dim, spd_inverse, symmetrize};
use crate::model::{Dictionary, StreamSample};
use crate::{Error, Result};

/// Common surface of the learner and the baselines.
pub trait OnlineRegressor {
    fn predict(&self, x: &[f64]) -> Result<f64>;
    fn step(&mut self, sample: &StreamSample) -> Result<StepReport>;
    fn dictionary_size(&self) -> usize;
}

impl OnlineRegressor for Learner {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        Learner::predict(self, x)
    }

    fn step(&mut self, sample: &StreamSample) -> Result<StepReport> {
        Learner::step(self, sample)
    }

    fn dictionary_size(&self) -> usize {
        self.dictionary().len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BaselineKind {
    Nlms,
    Knlms,
    Mknlms,
    Hypass,
    Chypass,
    RlsProjection,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 6] = [
        BaselineKind::Nlms,
        BaselineKind::Knlms,
        BaselineKind::Mknlms,
        BaselineKind::Hypass,
        BaselineKind::Chypass,
        BaselineKind::RlsProjection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Nlms => "nlms",
            Self::Knlms => "knlms",
            Self::Mknlms => "mknlms",
            Self::Hypass => "hypass",
            Self::Chypass => "chypass",
            Self::RlsProjection => "rls",
        }
    }

    /// Rewrites `base` into this kernel baseline's configuration: the metric
    /// is replaced and coherence is measured with the kernel. Returns an
    /// error for the non-kernel kinds and for single-kernel kinds given
    /// several scales.
    pub fn learner_config(self, base: LearnerConfig) -> Result<LearnerConfig> {
        let metric = match self {
            Self::Knlms | Self::Mknlms => MetricKind::Identity,
            Self::Hypass | Self::Chypass => MetricKind::ProductKernel,
            Self::Nlms | Self::RlsProjection => {
                return Err(Error::InvalidConfig(format!("{} is not a dictionary method", self.name())))
            }
        };
        if matches!(self, Self::Knlms | Self::Hypass) && base.scales.len() != 1 {
            return Err(Error::InvalidConfig(format!(
                "{} uses a single kernel, got {} scales",
                self.name(),
                base.scales.len()
            )));
        }
        let coherence = match base.coherence {
            CoherenceMetric::Native => CoherenceMetric::ProductKernel,
            other => other,
        };
        Ok(LearnerConfig { metric, coherence, ..base })
    }

    pub fn learner(self, dim: usize, base: LearnerConfig) -> Result<Learner> {
        Learner::new(dim, self.learner_config(base)?)
    }

    /// Same as [`learner`](Self::learner) over a fixed initial dictionary.
    pub fn learner_with_dictionary(self, dictionary: Dictionary, base: LearnerConfig) -> Result<Learner> {
        Learner::with_dictionary(dictionary, self.learner_config(base)?)
    }
}

/// Linear NLMS with a hyperslab: `w += λ sgn(e) max(|e|-ρ,0)/(‖u‖²+γ_u) u`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Nlms {
    weights: DVector<f64>,
    step_size: f64,
    hyperslab: f64,
    update_gamma: f64,
    bias: bool,
}

impl Nlms {
    pub fn new(dim: usize, step_size: f64, hyperslab: f64, update_gamma: f64) -> Result<Self> {
        if !(step_size > 0.0 && step_size < 2.0) {
            return Err(Error::InvalidConfig(format!("step size must lie in (0, 2), got {step_size}")));
        }
        if !(hyperslab >= 0.0 && update_gamma >= 0.0) {
            return Err(Error::InvalidConfig("hyperslab and update regularization must be >= 0".into()));
        }
        Ok(Self { weights: DVector::zeros(dim), step_size, hyperslab, update_gamma, bias: false })
    }

    /// Appends a constant 1 to every input.
    pub fn with_bias(mut self) -> Self {
        if !self.bias {
            self.bias = true;
            let w = core::mem::replace(&mut self.weights, DVector::zeros(0));
            let n = w.len();
            self.weights = w.resize_vertically(n + 1, 0.0);
        }
        self
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    fn regressor(&self, x: &[f64]) -> Result<DVector<f64>> {
        let dim = self.weights.len() - usize::from(self.bias);
        check_dim(dim, x.len())?;
        let mut u = DVector::from_column_slice(x);
        if self.bias {
            u = u.resize_vertically(dim + 1, 1.0);
        }
        Ok(u)
    }
}

impl OnlineRegressor for Nlms {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.regressor(x)?.dot(&self.weights))
    }

    fn step(&mut self, sample: &StreamSample) -> Result<StepReport> {
        let u = self.regressor(&sample.input)?;
        let prediction = u.dot(&self.weights);
        let error = sample.target - prediction;
        let excess = error.abs() - self.hyperslab;
        let norm = u.norm_squared();
        let denom = norm + self.update_gamma;
        let updated = excess > 0.0 && denom > 0.0;
        if updated {
            self.weights.axpy(self.step_size * error.signum() * excess / denom, &u, 1.0);
        }
        Ok(linear_report(sample, prediction, error, excess, norm, updated, self.weights.len()))
    }

    fn dictionary_size(&self) -> usize {
        0
    }
}

fn linear_report(
    sample: &StreamSample,
    prediction: f64,
    error: f64,
    excess: f64,
    quad: f64,
    updated: bool,
    dim: usize,
) -> StepReport {
    StepReport {
        n: sample.index,
        prediction,
        target: sample.target,
        error,
        admitted_scale: None,
        admission_coherence: None,
        dictionary_size: 0,
        subset: (0..dim).collect(),
        updated,
        apsm_cost: if quad > 0.0 { excess.max(0.0) / libm::sqrt(quad) } else { 0.0 },
    }
}

/// Gain used by [`RlsProjection`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RlsGain {
    /// Relaxation `a/(a+1)` with `a = uᵀR_n⁻¹u` and `R_n` already
    /// including `u uᵀ`: `x += e/(a+1) R_n⁻¹u`.
    Posterior,
    /// Standard RLS gain `x += e R_n⁻¹u`, the exact recursive solution of
    /// the regularized least-squares problem.
    Prior,
}

/// RLS as a projection in the metric `R_n = R_0 + Σ u uᵀ`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RlsProjection {
    weights: DVector<f64>,
    r_inv: DMatrix<f64>,
    gain: RlsGain,
}

impl RlsProjection {
    /// Starts from `x = 0` and `R_0 = r0`.
    pub fn new(r0: &DMatrix<f64>, gain: RlsGain) -> Result<Self> {
        let r_inv = spd_inverse(r0)?;
        Ok(Self { weights: DVector::zeros(r0.nrows()), r_inv, gain })
    }

    /// `R_0 = c I`.
    pub fn with_scaled_identity(dim: usize, c: f64, gain: RlsGain) -> Result<Self> {
        Self::new(&(DMatrix::identity(dim, dim) * c), gain)
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.r_inv
    }
}

impl OnlineRegressor for RlsProjection {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.weights.len(), x.len())?;
        Ok(DVector::from_column_slice(x).dot(&self.weights))
    }

    fn step(&mut self, sample: &StreamSample) -> Result<StepReport> {
        check_dim(self.weights.len(), sample.dim())?;
        let u = DVector::from_column_slice(&sample.input);
        let prediction = u.dot(&self.weights);
        let error = sample.target - prediction;

        let g = &self.r_inv * &u;
        let denom = 1.0 + u.dot(&g);
        self.r_inv -= (&g * g.transpose()) / denom;
        symmetrize(&mut self.r_inv);

        let v = &self.r_inv * &u;
        let a = u.dot(&v);
        let coef = match self.gain {
            RlsGain::Posterior => error / (a + 1.0),
            RlsGain::Prior => error,
        };
        let updated = error != 0.0;
        if updated {
            self.weights.axpy(coef, &v, 1.0);
        }
        Ok(linear_report(sample, prediction, error, error.abs(), a, updated, self.weights.len()))
    }

    fn dictionary_size(&self) -> usize {
        0
    }
}

/// Builds the regressor named by `kind` from a shared configuration.
/// The linear methods read `step_size`, `hyperslab` and `update_gamma`;
/// RLS starts from `R_0 = I`.
pub fn build_regressor(
    kind: Option<BaselineKind>,
    dim: usize,
    config: LearnerConfig,
) -> Result<alloc::boxed::Box<dyn OnlineRegressor + Send>> {
    Ok(match kind {
        None => alloc::boxed::Box::new(Learner::new(dim, config)?),
        Some(BaselineKind::Nlms) => {
            alloc::boxed::Box::new(Nlms::new(dim, config.step_size, config.hyperslab, config.update_gamma)?)
        }
        Some(BaselineKind::RlsProjection) => {
            alloc::boxed::Box::new(RlsProjection::with_scaled_identity(dim, 1.0, RlsGain::Posterior)?)
        }
        Some(k) => alloc::boxed::Box::new(k.learner(dim, config)?),
    })
}

/// Trajectory helper: feeds all samples and collects the reports.
pub fn run_all<R: OnlineRegressor + ?Sized>(model: &mut R, samples: &[StreamSample]) -> Result<Vec<StepReport>> {
    samples.iter().map(|s| model.step(s)).collect()
}
