//! Coarse grid followed by a log-uniform random search over `λ` and `δ`.
//!
//! Scales and every other setting stay as configured. Each candidate is
//! scored by the mean cross-validated RMSE.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::cv::cross_validate;
use crate::data::Dataset;
use crate::error::{Error, Result};

const DRAW_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Grid,
    Random,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Self::Grid => "grid",
            Self::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub id: usize,
    pub stage: Stage,
    pub step_size: f64,
    pub coherence_threshold: f64,
    pub mean_rmse: f64,
    pub std_rmse: f64,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best: ExperimentConfig,
    /// Sorted by mean RMSE, ties broken by candidate id.
    pub leaderboard: Vec<Candidate>,
}

fn log_uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        return lo;
    }
    (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
}

/// The grid in row-major order (`λ` outer), then `budget` seeded draws.
pub fn candidates(config: &ExperimentConfig) -> Result<Vec<(Stage, f64, f64)>> {
    let s = &config.search;
    let mut out = Vec::new();
    for &l in &s.step_size_grid {
        for &d in &s.delta_grid {
            out.push((Stage::Grid, l, d));
        }
    }
    if out.is_empty() && s.budget == 0 {
        return Err(Error::EmptyInput("search space".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed());
    rng.set_stream(DRAW_STREAM);
    for _ in 0..s.budget {
        let l = log_uniform(&mut rng, s.step_size_range);
        let d = 1.0 - log_uniform(&mut rng, s.one_minus_delta_range);
        out.push((Stage::Random, l, d));
    }
    Ok(out)
}

pub fn hyper_search(config: &ExperimentConfig, data: &Dataset) -> Result<SearchResult> {
    let cands = candidates(config)?;
    let mut board = cands
        .par_iter()
        .enumerate()
        .map(|(id, &(stage, l, d))| {
            let mut c = config.clone();
            c.learner.step_size = l;
            c.learner.coherence_threshold = d;
            c.validate()?;
            let cv = cross_validate(&c, data)?;
            Ok(Candidate { id, stage, step_size: l, coherence_threshold: d, mean_rmse: cv.mean, std_rmse: cv.std })
        })
        .collect::<Result<Vec<_>>>()?;
    board.sort_by(|a, b| a.mean_rmse.total_cmp(&b.mean_rmse).then(a.id.cmp(&b.id)));
    let top = &board[0];
    let mut best = config.clone();
    best.learner.step_size = top.step_size;
    best.learner.coherence_threshold = top.coherence_threshold;
    Ok(SearchResult { best, leaderboard: board })
}
