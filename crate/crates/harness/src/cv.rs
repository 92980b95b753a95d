//! Repeated two-fold cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::run::{run_split, RunResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub repeat: usize,
    /// 0 trains on the first half of the shuffle, 1 on the second.
    pub half: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// For each repeat, shuffles `0..n` with stream `repeat` of `seed` and cuts
/// it in half; each half trains once and tests once. Training order is the
/// shuffled order.
pub fn two_fold_splits(n: usize, repeats: usize, seed: u64) -> Result<Vec<Fold>> {
    if n < 4 {
        return Err(Error::Data(format!("{n} rows are too few to split in two folds")));
    }
    let mut folds = Vec::with_capacity(2 * repeats);
    for repeat in 0..repeats {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(repeat as u64);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let (a, b) = perm.split_at(n / 2);
        folds.push(Fold { repeat, half: 0, train: a.to_vec(), test: b.to_vec() });
        folds.push(Fold { repeat, half: 1, train: b.to_vec(), test: a.to_vec() });
    }
    Ok(folds)
}

#[derive(Debug, Clone)]
pub struct CvResult {
    pub folds: Vec<Fold>,
    pub runs: Vec<RunResult>,
    pub mean: f64,
    /// Sample standard deviation of the fold RMSEs.
    pub std: f64,
}

impl CvResult {
    pub fn rmses(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.rmse).collect()
    }
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Runs every fold in parallel; results come back in fold order.
pub fn cross_validate(config: &ExperimentConfig, data: &Dataset) -> Result<CvResult> {
    let folds = two_fold_splits(data.len(), config.cv.repeats, config.seed())?;
    let runs = folds
        .par_iter()
        .map(|f| run_split(config, data, &f.train, &f.test))
        .collect::<Result<Vec<_>>>()?;
    let (mean, std) = mean_std(&runs.iter().map(|r| r.rmse).collect::<Vec<_>>());
    Ok(CvResult { folds, runs, mean, std })
}
