//! Eigenvalue spread of the whitened autocorrelation along a shared
//! dictionary.
//!
//! Every method runs on the same uniform stream with kernel coherence and
//! `ε = 0`, so all of them admit the same atoms at the same steps. Every
//! `every` steps the true autocorrelation `R` is re-estimated on a fixed
//! reference sample and each method's metric `G̃` is used to whiten it.

use l2proj::datagen::{uniform_stream, NoiseModel, TargetFunction};
use l2proj::diagnostics::{eigen_spread, modified_autocorrelation, SpreadRecord};
use l2proj::gram::sample_average_matrix;
use l2proj::{CoherenceMetric, InputDistribution, Learner, LearnerConfig, MetricKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const REFERENCE_STREAM: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigspreadConfig {
    pub scales: Vec<f64>,
    pub coherence_threshold: f64,
    pub gamma: f64,
    pub length: usize,
    /// Size of the fixed sample used to estimate `R`.
    pub reference_samples: usize,
    /// Steps between re-estimates of `R`.
    pub every: usize,
    pub step_size: f64,
    pub noise_std: f64,
}

impl Default for EigspreadConfig {
    fn default() -> Self {
        Self {
            scales: vec![1.0, 0.5, 0.05],
            coherence_threshold: 0.8,
            gamma: 0.99,
            length: 2000,
            reference_samples: 10_000,
            every: 50,
            step_size: 0.5,
            noise_std: 0.1,
        }
    }
}

pub const METHODS: [&str; 5] = ["analytical", "finite_sample", "recursive", "chypass", "mknlms"];

fn metric_for(method: &str) -> MetricKind {
    match method {
        "analytical" => MetricKind::Analytical(InputDistribution::NoninformativeUniform),
        "finite_sample" => MetricKind::FiniteSample,
        "recursive" => MetricKind::Recursive,
        "chypass" => MetricKind::ProductKernel,
        _ => MetricKind::Identity,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadTrace {
    pub method: &'static str,
    pub records: Vec<SpreadRecord>,
}

impl SpreadTrace {
    pub fn terminal(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.spread)
    }
}

/// One repeat of the study. Returns one trace per entry of [`METHODS`].
pub fn eigspread(config: &EigspreadConfig, seed: u64) -> Result<Vec<SpreadTrace>> {
    if config.every == 0 || config.length == 0 || config.reference_samples == 0 {
        return Err(Error::Config("eigspread length, every and reference_samples must be positive".into()));
    }
    let noise = NoiseModel::Gaussian { std: config.noise_std };
    let target = TargetFunction::Callable { name: "sine", f: |x| (3.0 * x[0]).sin() };
    let stream = uniform_stream(1, (-1.0, 1.0), &target, noise, seed, config.length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(REFERENCE_STREAM);
    let reference: Vec<Vec<f64>> =
        (0..config.reference_samples).map(|_| vec![rng.random::<f64>() * 2.0 - 1.0]).collect();

    let mut learners = METHODS
        .iter()
        .map(|m| {
            let lc = LearnerConfig {
                step_size: config.step_size,
                coherence_threshold: config.coherence_threshold,
                lne_threshold: 0.0,
                gram_gamma: config.gamma,
                metric: metric_for(m),
                coherence: CoherenceMetric::ProductKernel,
                ..LearnerConfig::new(config.scales.clone())
            };
            Learner::new(1, lc)
        })
        .collect::<l2proj::Result<Vec<_>>>()?;
    let mut traces: Vec<SpreadTrace> = METHODS.iter().map(|&method| SpreadTrace { method, records: Vec::new() }).collect();

    for (n, sample) in stream.iter().enumerate() {
        learners.par_iter_mut().try_for_each(|l| l.step(sample).map(|_| ()))?;
        let dict = learners[0].dictionary();
        if let Some(k) = learners.iter().position(|l| l.dictionary() != dict) {
            return Err(Error::Data(format!("{} left the shared dictionary at step {n}", METHODS[k])));
        }
        let last = n + 1 == stream.len();
        if (n + 1) % config.every != 0 && !last {
            continue;
        }
        let r_true = sample_average_matrix(dict, reference.iter().map(|p| p.as_slice()))?;
        let spreads = learners
            .par_iter()
            .map(|l| Ok(eigen_spread(&modified_autocorrelation(&l.metric_matrix(), &r_true)?)?))
            .collect::<Result<Vec<f64>>>()?;
        for (t, spread) in traces.iter_mut().zip(spreads) {
            t.records.push(SpreadRecord { n, dictionary_size: dict.len(), spread });
        }
    }
    Ok(traces)
}
