//! Seeded synthetic streams.
//!
//! Inputs and noise are drawn from two independent ChaCha8 streams derived
//! from the same seed, so swapping the target function or the noise level
//! never changes the inputs.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::model::{GaussianMixture, StreamSample};
use crate::{Error, Result};

const INPUT_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

/// The unknown function `ψ` behind `d_n = ψ(u_n) + ν_n`.
#[derive(Debug, Clone)]
pub enum TargetFunction {
    Zero,
    Mixture(GaussianMixture),
    Callable { name: &'static str, f: fn(&[f64]) -> f64 },
}

impl TargetFunction {
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            Self::Zero => Ok(0.0),
            Self::Mixture(m) => m.eval(x),
            Self::Callable { f, .. } => Ok(f(x)),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Zero => "zero",
            Self::Mixture(_) => "mixture",
            Self::Callable { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum NoiseModel {
    None,
    Gaussian { std: f64 },
}

impl NoiseModel {
    fn validate(&self) -> Result<()> {
        match *self {
            Self::Gaussian { std } if !(std >= 0.0 && std.is_finite()) => {
                Err(Error::InvalidConfig(alloc::format!("noise standard deviation must be >= 0, got {std}")))
            }
            _ => Ok(()),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Self::None => 0.0,
            Self::Gaussian { std } => std * rng.sample::<f64, _>(StandardNormal),
        }
    }
}

fn rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut input = ChaCha8Rng::seed_from_u64(seed);
    input.set_stream(INPUT_STREAM);
    let mut noise = ChaCha8Rng::seed_from_u64(seed);
    noise.set_stream(NOISE_STREAM);
    (input, noise)
}

/// Draws `length` samples with `noise.draw` applied to `ψ(u)`.
fn stream_with<F>(target: &TargetFunction, noise: NoiseModel, seed: u64, length: usize, mut input: F) -> Result<Vec<StreamSample>>
where
    F: FnMut(&mut ChaCha8Rng) -> Vec<f64>,
{
    noise.validate()?;
    let (mut in_rng, mut noise_rng) = rngs(seed);
    (0..length)
        .map(|n| {
            let u = input(&mut in_rng);
            let d = target.eval(&u)? + noise.draw(&mut noise_rng);
            Ok(StreamSample::new(u, d, n))
        })
        .collect()
}

/// i.i.d. inputs uniform on `[lo, hi]^dim`.
pub fn uniform_stream(
    dim: usize,
    bounds: (f64, f64),
    target: &TargetFunction,
    noise: NoiseModel,
    seed: u64,
    length: usize,
) -> Result<Vec<StreamSample>> {
    let (lo, hi) = bounds;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidConfig(alloc::format!("bad bounds [{lo}, {hi}]")));
    }
    stream_with(target, noise, seed, length, |rng| (0..dim).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect())
}

/// i.i.d. inputs from `N(0, σ²I)`.
pub fn gaussian_stream(
    dim: usize,
    sigma: f64,
    target: &TargetFunction,
    noise: NoiseModel,
    seed: u64,
    length: usize,
) -> Result<Vec<StreamSample>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidScale(sigma));
    }
    stream_with(target, noise, seed, length, |rng| {
        (0..dim).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect()
    })
}

/// Geometry of the synthetic pseudo-range measurement.
///
/// The satellite moves on a circle of `orbit_radius` around `orbit_center`
/// in a plane at height `orbit_height`; the receiver moves on a straight
/// line at constant velocity; the clock bias (in range units) drifts
/// linearly.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PseudorangeParams {
    pub orbit_center: [f64; 3],
    pub orbit_radius: f64,
    pub orbit_height: f64,
    /// Radians per step.
    pub angular_rate: f64,
    pub phase: f64,
    pub receiver_start: [f64; 3],
    /// Range units per step.
    pub receiver_velocity: [f64; 3],
    pub clock_offset: f64,
    pub clock_drift: f64,
    pub noise_std: f64,
}

impl Default for PseudorangeParams {
    fn default() -> Self {
        Self {
            orbit_center: [0.0, 0.0, 0.0],
            orbit_radius: 2.0e4,
            orbit_height: 1.0e4,
            angular_rate: 2.0e-3,
            phase: 0.3,
            receiver_start: [1.5e3, -2.0e2, 0.0],
            receiver_velocity: [1.5, 0.8, 0.0],
            clock_offset: 50.0,
            clock_drift: 0.05,
            noise_std: 2.0,
        }
    }
}

impl PseudorangeParams {
    pub fn satellite(&self, n: usize) -> [f64; 3] {
        let a = self.phase + self.angular_rate * n as f64;
        let c = self.orbit_center;
        [c[0] + self.orbit_radius * libm::cos(a), c[1] + self.orbit_radius * libm::sin(a), c[2] + self.orbit_height]
    }

    pub fn receiver(&self, n: usize) -> [f64; 3] {
        let t = n as f64;
        let s = self.receiver_start;
        let v = self.receiver_velocity;
        [s[0] + v[0] * t, s[1] + v[1] * t, s[2] + v[2] * t]
    }
}

/// `‖p_sat(n) - p_rec(n)‖ + c·Δt_n`.
pub fn noiseless_range(params: &PseudorangeParams, n: usize) -> f64 {
    let s = params.satellite(n);
    let r = params.receiver(n);
    let d2: f64 = s.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum();
    libm::sqrt(d2) + params.clock_offset + params.clock_drift * n as f64
}

/// Raw measurements `d_0, …, d_{count-1}`.
pub fn pseudorange_series(params: &PseudorangeParams, seed: u64, count: usize) -> Result<Vec<f64>> {
    let noise = NoiseModel::Gaussian { std: params.noise_std };
    noise.validate()?;
    let (_, mut rng) = rngs(seed);
    Ok((0..count).map(|n| noiseless_range(params, n) + noise.draw(&mut rng)).collect())
}

/// Autoregressive embedding `u = [d_n, d_{n-1}, …, d_{n-lags+1}]`,
/// target `d_{n+1}`. Sample `k` uses `d_{k+lags}` as its target.
pub fn lag_embedding(series: &[f64], lags: usize) -> Result<Vec<StreamSample>> {
    if lags == 0 {
        return Err(Error::InvalidConfig("at least one lag is required".into()));
    }
    if series.len() < lags + 1 {
        return Err(Error::InsufficientSamples { needed: lags + 1, got: series.len() });
    }
    Ok((lags..series.len())
        .map(|t| {
            let input = (1..=lags).map(|j| series[t - j]).collect();
            StreamSample::new(input, series[t], t - lags)
        })
        .collect())
}

/// `length` samples of the three-lag pseudo-range prediction task.
pub fn pseudorange_stream(params: &PseudorangeParams, seed: u64, length: usize) -> Result<Vec<StreamSample>> {
    if length == 0 {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    lag_embedding(&pseudorange_series(params, seed, length + 3)?, 3)
}
