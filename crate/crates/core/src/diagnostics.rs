//! Eigenvalue spread of the metric-whitened autocorrelation, NMSE/RMSE
//! tracking and the monotone-approximation probe.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::learner::StepReport;
use crate::linalg::{check_dim, symmetrize};
use crate::{Error, Result};

/// Eigenvalues below this are raised to it before taking `λ^{-1/2}`.
pub const EIGEN_FLOOR: f64 = 1e-12;
/// Value written in place of `-∞` dB.
pub const DB_FLOOR: f64 = -120.0;
/// Default trailing window of the NMSE curve.
pub const NMSE_WINDOW: usize = 200;
/// Tolerance on an increase of the weighted distance to a probe.
pub const MONOTONE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SpreadRecord {
    pub n: usize,
    pub dictionary_size: usize,
    pub spread: f64,
}

fn symmetric_eigen(m: &DMatrix<f64>) -> Result<nalgebra::SymmetricEigen<f64, nalgebra::Dyn>> {
    check_dim(m.nrows(), m.ncols())?;
    let mut s = m.clone();
    symmetrize(&mut s);
    Ok(s.symmetric_eigen())
}

/// `M^{-1/2}` through a symmetric eigendecomposition.
pub fn inverse_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = symmetric_eigen(m)?;
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if eig.eigenvalues.iter().any(|&l| l < -EIGEN_FLOOR.max(1e-12 * top)) {
        return Err(Error::NotPositiveDefinite("metric has a negative eigenvalue"));
    }
    let scaled = eig.eigenvalues.map(|l| 1.0 / libm::sqrt(l.max(EIGEN_FLOOR)));
    let v = &eig.eigenvectors;
    let mut out = v * DMatrix::from_diagonal(&scaled) * v.transpose();
    symmetrize(&mut out);
    Ok(out)
}

/// `R̂ = G̃^{-1/2} R G̃^{-1/2}`.
pub fn modified_autocorrelation(metric: &DMatrix<f64>, r_true: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_dim(metric.nrows(), r_true.nrows())?;
    check_dim(r_true.nrows(), r_true.ncols())?;
    let w = inverse_sqrt(metric)?;
    let mut out = &w * r_true * &w;
    symmetrize(&mut out);
    Ok(out)
}

/// `λ_max / λ_min` of a symmetric positive-definite matrix.
pub fn eigen_spread(m: &DMatrix<f64>) -> Result<f64> {
    if m.is_empty() {
        return Ok(1.0);
    }
    let eig = symmetric_eigen(m)?;
    let lo = eig.eigenvalues.min();
    let hi = eig.eigenvalues.max();
    if !(lo > 0.0) {
        return Err(Error::IllConditioned(lo));
    }
    Ok((hi / lo).max(1.0))
}

/// Windowed NMSE curve plus the steps whose target was zero.
#[derive(Debug, Clone, PartialEq)]
pub struct NmseCurve {
    /// `(n, NMSE in dB)`; `-∞` when every error in the window is zero.
    pub points: Vec<(usize, f64)>,
    pub skipped: Vec<usize>,
    pub window: usize,
}

/// Trailing mean of `e²/d²` over `window` steps, in dB. Steps with
/// `d = 0` are left out of the mean and listed in `skipped`.
pub fn nmse_curve_from(pairs: &[(usize, f64, f64)], window: usize) -> Result<NmseCurve> {
    if pairs.is_empty() {
        return Err(Error::EmptySamples);
    }
    if window == 0 {
        return Err(Error::InvalidConfig("NMSE window must be at least 1".into()));
    }
    let ratios: Vec<Option<f64>> =
        pairs.iter().map(|&(_, e, d)| if d != 0.0 { Some(e * e / (d * d)) } else { None }).collect();
    let skipped = pairs.iter().zip(&ratios).filter(|(_, r)| r.is_none()).map(|(p, _)| p.0).collect();
    let mut points = Vec::with_capacity(pairs.len());
    let (mut sum, mut count) = (0.0, 0usize);
    for k in 0..pairs.len() {
        if let Some(r) = ratios[k] {
            sum += r;
            count += 1;
        }
        if k >= window {
            if let Some(r) = ratios[k - window] {
                sum -= r;
                count -= 1;
            }
        }
        if count > 0 {
            let mean = if sum > 0.0 { sum / count as f64 } else { 0.0 };
            points.push((pairs[k].0, to_db(mean)));
        }
    }
    Ok(NmseCurve { points, skipped, window })
}

/// [`nmse_curve_from`] over step reports.
pub fn nmse_curve(reports: &[StepReport], window: usize) -> Result<NmseCurve> {
    let pairs: Vec<_> = reports.iter().map(|r| (r.n, r.error, r.target)).collect();
    nmse_curve_from(&pairs, window)
}

fn to_db(x: f64) -> f64 {
    if x > 0.0 {
        10.0 * libm::log10(x)
    } else {
        f64::NEG_INFINITY
    }
}

/// Replaces `-∞` (and anything lower) with [`DB_FLOOR`].
pub fn floor_db(db: f64) -> f64 {
    db.max(DB_FLOOR)
}

/// Mean of `e²/d²` over steps with nonzero target, in dB.
pub fn nmse_db(errors: &[f64], targets: &[f64]) -> Result<f64> {
    check_dim(errors.len(), targets.len())?;
    let (sum, count) = errors
        .iter()
        .zip(targets)
        .filter(|(_, &d)| d != 0.0)
        .fold((0.0, 0usize), |(s, c), (e, d)| (s + e * e / (d * d), c + 1));
    if count == 0 {
        return Err(Error::EmptySamples);
    }
    Ok(to_db(sum / count as f64))
}

pub fn rmse(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::EmptySamples);
    }
    let ms = errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64;
    Ok(libm::sqrt(ms))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MonotonicityReport {
    pub checked: usize,
    pub violations: usize,
    /// Largest increase of the weighted distance observed (0 if none).
    pub max_violation: f64,
}

/// Checks `‖h_n - h*‖²_M - ‖h_{n+1} - h*‖²_M ≥ -tol` along a trajectory.
///
/// `metrics` holds either one matrix used for every step or one per step
/// (`coefficients.len() - 1` entries).
pub fn monotonicity_probe(
    coefficients: &[DVector<f64>],
    metrics: &[DMatrix<f64>],
    probes: &[DVector<f64>],
    tol: f64,
) -> Result<MonotonicityReport> {
    let steps = coefficients.len().saturating_sub(1);
    if !(metrics.len() == 1 || metrics.len() == steps) {
        return Err(Error::DimensionMismatch { expected: steps, found: metrics.len() });
    }
    let mut report = MonotonicityReport::default();
    for n in 0..steps {
        let m = if metrics.len() == 1 { &metrics[0] } else { &metrics[n] };
        for p in probes {
            check_dim(m.nrows(), p.len())?;
            let a = &coefficients[n] - p;
            let b = &coefficients[n + 1] - p;
            let drop = a.dot(&(m * &a)) - b.dot(&(m * &b));
            report.checked += 1;
            if drop < -tol {
                report.violations += 1;
            }
            report.max_violation = report.max_violation.max(-drop);
        }
    }
    Ok(report)
}
