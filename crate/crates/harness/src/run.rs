//! Single runs under the train-then-freeze and prequential protocols.

use std::time::Instant;

use l2proj::baselines::run_all;
use l2proj::diagnostics::{nmse_curve, nmse_curve_from, rmse, NmseCurve};
use l2proj::{OnlineRegressor, StepReport};

use crate::config::{ExperimentConfig, Protocol};
use crate::data::{load, Dataset, Standardizer};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RunResult {
    /// One report per learning step (training rows, or the whole stream).
    pub reports: Vec<StepReport>,
    /// Frozen-model errors on the test rows; empty for prequential runs.
    pub test_errors: Vec<f64>,
    /// Test RMSE, or the prequential RMSE over the whole stream.
    pub rmse: f64,
    pub curve: NmseCurve,
    pub wall_ms: u128,
    pub config_hash: String,
}

impl RunResult {
    pub fn dictionary_trace(&self) -> Vec<usize> {
        self.reports.iter().map(|r| r.dictionary_size).collect()
    }

    /// Last point of the smoothed learning curve.
    pub fn terminal_nmse_db(&self) -> Option<f64> {
        self.curve.points.last().map(|p| p.1)
    }
}

fn train(config: &ExperimentConfig, data: &Dataset, rows: &[usize]) -> Result<(Box<dyn OnlineRegressor + Send>, Vec<StepReport>)> {
    let mut model = config.build_model(data.dim())?;
    let reports = run_all(model.as_mut(), &data.samples(rows))?;
    Ok((model, reports))
}

/// Standardizes with statistics of `fit_rows` when the config asks for it.
fn prepare(config: &ExperimentConfig, data: &Dataset, fit_rows: &[usize]) -> Result<(Dataset, Option<Standardizer>)> {
    if !config.data.standardize {
        return Ok((data.clone(), None));
    }
    let z = Standardizer::fit(data, fit_rows)?;
    Ok((z.apply(data), Some(z)))
}

fn unscale(z: Option<&Standardizer>, y: f64) -> f64 {
    z.map_or(y, |z| z.unscale(y))
}

/// Rewrites a report made in standardized units into target units.
fn unscale_report(z: Option<&Standardizer>, mut r: StepReport) -> StepReport {
    if let Some(z) = z {
        r.prediction = z.unscale(r.prediction);
        r.target = z.unscale(r.target);
        r.error *= z.target_std;
    }
    r
}

fn predictions(model: &dyn OnlineRegressor, data: &Dataset, rows: &[usize], z: Option<&Standardizer>) -> Result<Vec<f64>> {
    rows.iter().map(|&i| Ok(unscale(z, model.predict(&data.inputs[i])?))).collect()
}

/// Learns on `train_rows`, freezes the model and evaluates it on `test_rows`.
/// Standardization statistics come from the training rows only.
pub fn run_split(config: &ExperimentConfig, data: &Dataset, train_rows: &[usize], test_rows: &[usize]) -> Result<RunResult> {
    if test_rows.is_empty() {
        return Err(Error::EmptyInput("test set".into()));
    }
    if train_rows.is_empty() {
        return Err(Error::EmptyInput("training set".into()));
    }
    let start = Instant::now();

    let (model, reports, z) = if config.output.poison_test_targets {
        let mut poisoned = data.clone();
        for &i in test_rows {
            poisoned.targets[i] = f64::NAN;
        }
        let (pdata, pz) = prepare(config, &poisoned, train_rows)?;
        let (dirty, reports) = train(config, &pdata, train_rows)?;
        let (cdata, cz) = prepare(config, data, train_rows)?;
        let (clean, _) = train(config, &cdata, train_rows)?;
        let a = predictions(dirty.as_ref(), &pdata, test_rows, pz.as_ref())?;
        let b = predictions(clean.as_ref(), &cdata, test_rows, cz.as_ref())?;
        if let Some(k) = a.iter().zip(&b).position(|(x, y)| !x.is_finite() || x.to_bits() != y.to_bits()) {
            return Err(Error::Leak(format!("prediction for test row {} changed under poisoning", test_rows[k])));
        }
        (clean, reports, cz)
    } else {
        let (sdata, z) = prepare(config, data, train_rows)?;
        let (model, reports) = train(config, &sdata, train_rows)?;
        (model, reports, z)
    };
    let scaled = match &z {
        Some(z) => z.apply(data),
        None => data.clone(),
    };
    let test_errors: Vec<f64> = predictions(model.as_ref(), &scaled, test_rows, z.as_ref())?
        .iter()
        .zip(test_rows)
        .map(|(p, &i)| data.targets[i] - p)
        .collect();
    let reports: Vec<StepReport> = reports.into_iter().map(|r| unscale_report(z.as_ref(), r)).collect();
    let curve = nmse_curve(&reports, config.output.nmse_window)?;
    Ok(RunResult {
        rmse: rmse(&test_errors)?,
        reports,
        test_errors,
        curve,
        wall_ms: start.elapsed().as_millis(),
        config_hash: config.hash(),
    })
}

/// Predict-then-learn over every sample. With standardization the
/// statistics come from the first `standardize_rows` rows.
pub fn run_prequential(config: &ExperimentConfig, data: &Dataset) -> Result<RunResult> {
    if data.is_empty() {
        return Err(Error::EmptyInput("stream".into()));
    }
    let start = Instant::now();
    let rows: Vec<usize> = (0..data.len()).collect();
    let head = config.data.standardize_rows.unwrap_or(data.len()).min(data.len());
    let (sdata, z) = prepare(config, data, &rows[..head])?;
    let (_, reports) = train(config, &sdata, &rows)?;
    let reports: Vec<StepReport> = reports.into_iter().map(|r| unscale_report(z.as_ref(), r)).collect();
    let errors: Vec<f64> = reports.iter().map(|r| r.error).collect();
    let pairs: Vec<(usize, f64, f64)> = reports.iter().map(|r| (r.n, r.error, r.target)).collect();
    Ok(RunResult {
        rmse: rmse(&errors)?,
        curve: nmse_curve_from(&pairs, config.output.nmse_window)?,
        reports,
        test_errors: Vec::new(),
        wall_ms: start.elapsed().as_millis(),
        config_hash: config.hash(),
    })
}

/// Runs `config` on an already loaded dataset. Under `train_test` the first
/// `train_fraction` of the rows train and the rest test.
pub fn run_on(config: &ExperimentConfig, data: &Dataset) -> Result<RunResult> {
    match config.protocol {
        Protocol::Prequential => run_prequential(config, data),
        Protocol::TrainTest => {
            let cut = (data.len() as f64 * config.data.train_fraction).floor() as usize;
            let rows: Vec<usize> = (0..data.len()).collect();
            run_split(config, data, &rows[..cut], &rows[cut..])
        }
    }
}

pub fn run_online(config: &ExperimentConfig) -> Result<RunResult> {
    config.validate()?;
    let data = load(&config.data, config.seed())?;
    run_on(config, &data)
}
