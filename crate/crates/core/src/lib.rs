//! Online nonlinear regression by iterative projections in an L² space.
//!
//! The estimator lives in the span of a growing dictionary of normalized
//! Gaussian atoms. Because every finite-dimensional function space has a
//! reproducing kernel built from its Gram matrix, the learner can project
//! onto the instantaneous-error hyperslab in the L² geometry of the input
//! distribution, which decorrelates the coefficient updates.
//!
//! The crate is `no_std` (it needs `alloc`). Everything that touches files,
//! the command line or threads lives in the `l2proj-harness` crate.
//!
//! ```
//! use l2proj::{Learner, LearnerConfig, MetricKind, InputDistribution, StreamSample};
//!
//! let config = LearnerConfig {
//!     metric: MetricKind::Analytical(InputDistribution::NoninformativeUniform),
//!     ..LearnerConfig::new(vec![1.0, 0.3])
//! };
//! let mut learner = Learner::new(1, config).unwrap();
//! for n in 0..200 {
//!     let x = -1.0 + 2.0 * (n as f64 * 0.618).fract();
//!     let sample = StreamSample::new(vec![x], (3.0 * x).sin(), n);
//!     learner.step(&sample).unwrap();
//! }
//! assert!(learner.dictionary().len() > 0);
//! ```

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod baselines;
pub mod datagen;
pub mod diagnostics;
mod error;
pub mod gram;
pub mod learner;
mod linalg;
pub mod model;
pub mod subspace;

pub use baselines::{BaselineKind, Nlms, OnlineRegressor, RlsGain, RlsProjection};
pub use error::{Error, Result};
pub use gram::{GramEstimate, GramStrategy, InputDistribution};
pub use learner::{
    CoherenceMetric, DictionaryPolicy, Learner, LearnerConfig, MetricKind, StepReport,
};
pub use model::{Dictionary, FilterState, GaussianAtom, GaussianMixture, StreamSample};

/// Re-exported so downstream crates name the same vector and matrix types.
pub use nalgebra::{DMatrix, DVector};
