//! Online learner: novelty test, dictionary growth, selective update and
//! the relaxed projection onto the instantaneous-error hyperslab.
//!
//! One call to [`Learner::step`] runs, in order:
//!
//! 1. evaluate `f(u_n)`, the prediction and the error `e_n`;
//! 2. if the error is large relative to the prediction (LNE), walk the
//!    scale ladder from coarse to fine and admit the first candidate
//!    whose coherence with the dictionary is at most `δ`;
//! 3. extend the Gram estimate for the admitted atom;
//! 4. pick the `s` atoms best aligned with `u_n`;
//! 5. refresh the Gram block over that subset;
//! 6. move the selected coefficients toward the hyperslab
//!    `{h : |f(u_n)ᵀh - d_n| ≤ ρ}` in the metric of the Gram block.
//!
//! The metric is pluggable ([`MetricKind`]); the kernel baselines are the
//! same loop with a kernel matrix or the identity in place of the L² Gram.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::gram::{
    gram_analytical, gram_finite_sample_on_dictionary, inner_product_analytical, GramEstimate, GramStrategy, GrowPath,
    InputDistribution,
};
use crate::linalg::{check_dim, sq_dist};
use crate::model::{Dictionary, FilterState, GaussianAtom, StreamSample};
use crate::{Error, Result};

/// Metric in which the coefficient update is a projection.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum MetricKind {
    /// Closed-form L² Gram under the given input distribution.
    Analytical(InputDistribution),
    /// Sample-average L² Gram over the dictionary's own centers.
    FiniteSample,
    /// Accumulated `Σ f fᵀ` maintained with rank-one/rank-two updates.
    Recursive,
    /// Block-diagonal kernel matrix of the product of Gaussian RKHSs,
    /// `K_ij = f_i(c_j)` within a scale and 0 across scales.
    ProductKernel,
    /// Euclidean coefficient space.
    Identity,
}

/// Similarity used by the coherence test.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum CoherenceMetric {
    /// Follows the update metric: closed forms for `Analytical`, sample
    /// averages over recent inputs for `FiniteSample`/`Recursive`, kernel
    /// coherence for `ProductKernel`/`Identity`.
    Native,
    Analytical(InputDistribution),
    SampleAverage,
    ProductKernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DictionaryPolicy {
    Grow,
    Frozen,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LearnerConfig {
    /// Relaxation `λ ∈ (0, 2)`.
    pub step_size: f64,
    /// Hyperslab half-width `ρ ≥ 0`.
    pub hyperslab: f64,
    /// Coherence threshold `δ ∈ [0, 1]`.
    pub coherence_threshold: f64,
    /// LNE threshold `ε ≥ 0`.
    pub lne_threshold: f64,
    /// Gram regularization `γ ∈ (0, 1]`.
    pub gram_gamma: f64,
    /// Added to the update denominator.
    pub update_gamma: f64,
    /// Coefficients touched per step; `None` updates all of them.
    pub subset_size: Option<usize>,
    /// Gaussian scales, strictly decreasing.
    pub scales: Vec<f64>,
    pub metric: MetricKind,
    pub coherence: CoherenceMetric,
    /// Number of recent inputs (the current one included) in sample-average
    /// coherence; `None` uses the subset size, capped at the dictionary size
    /// counting the candidate.
    pub window: Option<usize>,
    pub dictionary: DictionaryPolicy,
}

impl LearnerConfig {
    pub fn new(scales: Vec<f64>) -> Self {
        Self {
            step_size: 0.5,
            hyperslab: 0.0,
            coherence_threshold: 0.8,
            lne_threshold: 0.0,
            gram_gamma: 0.999,
            update_gamma: 1e-8,
            subset_size: None,
            scales,
            metric: MetricKind::FiniteSample,
            coherence: CoherenceMetric::Native,
            window: None,
            dictionary: DictionaryPolicy::Grow,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        if !(self.step_size > 0.0 && self.step_size < 2.0) {
            return bad(format!("step size must lie in (0, 2), got {}", self.step_size));
        }
        if !(self.hyperslab >= 0.0) {
            return bad(format!("hyperslab half-width must be >= 0, got {}", self.hyperslab));
        }
        if !(0.0..=1.0).contains(&self.coherence_threshold) {
            return bad(format!("coherence threshold must lie in [0, 1], got {}", self.coherence_threshold));
        }
        if !(self.lne_threshold >= 0.0) {
            return bad(format!("LNE threshold must be >= 0, got {}", self.lne_threshold));
        }
        if !(self.gram_gamma > 0.0 && self.gram_gamma <= 1.0) {
            return bad(format!("Gram regularization must lie in (0, 1], got {}", self.gram_gamma));
        }
        if !(self.update_gamma >= 0.0) {
            return bad(format!("update regularization must be >= 0, got {}", self.update_gamma));
        }
        if self.subset_size == Some(0) {
            return bad("subset size must be at least 1".into());
        }
        if self.window == Some(0) {
            return bad("coherence window must be at least 1".into());
        }
        if self.scales.is_empty() {
            return bad("at least one scale is required".into());
        }
        for &s in &self.scales {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidScale(s));
            }
        }
        if self.scales.windows(2).any(|w| w[0] <= w[1]) {
            return bad("scales must be strictly decreasing".into());
        }
        if let MetricKind::Analytical(d) = self.metric {
            d.validate()?;
        }
        if let CoherenceMetric::Analytical(d) = self.coherence {
            d.validate()?;
        }
        Ok(())
    }

    pub fn hyperslab_params(&self) -> HyperslabParams {
        HyperslabParams { step_size: self.step_size, hyperslab: self.hyperslab, update_gamma: self.update_gamma }
    }

    fn coherence_kind(&self) -> CoherenceMetric {
        match (self.coherence, self.metric) {
            (CoherenceMetric::Native, MetricKind::Analytical(d)) => CoherenceMetric::Analytical(d),
            (CoherenceMetric::Native, MetricKind::FiniteSample | MetricKind::Recursive) => {
                CoherenceMetric::SampleAverage
            }
            (CoherenceMetric::Native, MetricKind::ProductKernel | MetricKind::Identity) => {
                CoherenceMetric::ProductKernel
            }
            (other, _) => other,
        }
    }
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self::new(alloc::vec![1.0])
    }
}

/// Parameters of the relaxed hyperslab projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperslabParams {
    pub step_size: f64,
    pub hyperslab: f64,
    pub update_gamma: f64,
}

/// Per-step record.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct StepReport {
    pub n: usize,
    pub prediction: f64,
    pub target: f64,
    pub error: f64,
    /// Ladder position of the admitted atom, if any.
    pub admitted_scale: Option<usize>,
    /// Largest coherence of the admitted atom against the dictionary.
    pub admission_coherence: Option<f64>,
    pub dictionary_size: usize,
    pub subset: Vec<usize>,
    pub updated: bool,
    /// Distance from the estimate to the hyperslab in the update metric,
    /// `max(|e|-ρ, 0)/√(f̃ᵀR̃⁻¹f̃)`.
    pub apsm_cost: f64,
}

/// `(d - φ)² > ε φ²`.
pub fn lne_holds(prediction: f64, target: f64, eps: f64) -> bool {
    let e = target - prediction;
    e * e > eps * prediction * prediction
}

/// LNE test for the current state on `sample`.
pub fn lne_check(state: &FilterState, sample: &StreamSample, eps: f64) -> Result<bool> {
    let phi = state.eval_estimate(&sample.input)?;
    Ok(lne_holds(phi, sample.target, eps))
}

/// Where the inner products for coherence come from.
#[derive(Debug, Clone, Copy)]
pub enum CoherenceContext<'a> {
    Analytical(InputDistribution),
    /// Average over these inputs.
    SampleAverage(&'a [Vec<f64>]),
    ProductKernel,
}

/// `|⟨f, g⟩| / (‖f‖‖g‖)`, clamped to `[0, 1]`.
pub fn coherence(f: &GaussianAtom, g: &GaussianAtom, ctx: &CoherenceContext<'_>) -> Result<f64> {
    check_dim(f.dim(), g.dim())?;
    let (fg, ff, gg) = match ctx {
        CoherenceContext::Analytical(d) => (
            inner_product_analytical(f, g, d)?,
            inner_product_analytical(f, f, d)?,
            inner_product_analytical(g, g, d)?,
        ),
        CoherenceContext::SampleAverage(points) => {
            let (mut fg, mut ff, mut gg) = (0.0, 0.0, 0.0);
            for p in points.iter() {
                let a = f.eval(p)?;
                let b = g.eval(p)?;
                fg += a * b;
                ff += a * a;
                gg += b * b;
            }
            (fg, ff, gg)
        }
        CoherenceContext::ProductKernel => return Ok(kernel_coherence(f, g)),
    };
    if !(ff > 0.0 && gg > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok((fg.abs() / libm::sqrt(ff * gg)).min(1.0))
}

/// Normalized kernel value within one scale, 0 across scales.
fn kernel_coherence(f: &GaussianAtom, g: &GaussianAtom) -> f64 {
    if f.scale() != g.scale() {
        return 0.0;
    }
    libm::exp(-sq_dist(f.center(), g.center()) / (2.0 * f.scale() * f.scale()))
}

/// Walks the scale ladder coarse to fine and returns the first candidate
/// `κ_q(·, u)` whose largest coherence with the dictionary is at most
/// `delta`, with that coherence. Exact duplicates are skipped.
pub fn novelty_test(
    dictionary: &Dictionary,
    input: &[f64],
    index: usize,
    scales: &[f64],
    ctx: &CoherenceContext<'_>,
    delta: f64,
) -> Result<Option<(GaussianAtom, f64)>> {
    check_dim(dictionary.dim(), input.len())?;
    'ladder: for (q, &scale) in scales.iter().enumerate() {
        let cand = GaussianAtom::new(input.to_vec(), scale, q)?.with_seed(index);
        if dictionary.position_of(&cand).is_some() {
            continue;
        }
        let mut worst = 0.0f64;
        for atom in dictionary.atoms() {
            let c = match coherence(atom, &cand, ctx) {
                Ok(c) => c,
                Err(Error::ZeroNorm) => 0.0,
                Err(e) => return Err(e),
            };
            if c > delta {
                continue 'ladder;
            }
            worst = worst.max(c);
        }
        return Ok(Some((cand, worst)));
    }
    Ok(None)
}

/// Indices of the `s` atoms with the largest `|f_i(u)|/‖f_i‖`, best first,
/// ties to the lower index. Returns `0..r` when `s ≥ r`.
pub fn select_update_subset(basis: &DVector<f64>, norms: &[f64], s: usize) -> Vec<usize> {
    let r = basis.len();
    if s >= r {
        return (0..r).collect();
    }
    let score = |i: usize| if norms[i] > 0.0 { basis[i].abs() / norms[i] } else { 0.0 };
    let mut idx: Vec<usize> = (0..r).collect();
    idx.sort_by(|&a, &b| score(b).partial_cmp(&score(a)).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b)));
    idx.truncate(s);
    idx
}

/// Applies `h̃ += λ sgn(e) max(|e|-ρ, 0)/(f̃ᵀv + γ_u) v` with
/// `v = R̃⁻¹f̃`. Returns whether the coefficients changed.
pub fn apply_hyperslab_step(
    coefficients: &mut DVector<f64>,
    subset: &[usize],
    f_sub: &DVector<f64>,
    direction: &DVector<f64>,
    error: f64,
    params: &HyperslabParams,
) -> bool {
    let excess = error.abs() - params.hyperslab;
    if !(excess > 0.0) {
        return false;
    }
    let denom = f_sub.dot(direction) + params.update_gamma;
    if !(denom > 0.0) {
        return false;
    }
    let coef = params.step_size * error.signum() * excess / denom;
    for (k, &i) in subset.iter().enumerate() {
        coefficients[i] += coef * direction[k];
    }
    true
}

/// Hyperslab update of `state` on `sample` over `subset`, with `gram_sub`
/// the Gram estimate restricted to `subset` (same order).
pub fn hyperslab_update(
    state: &mut FilterState,
    gram_sub: &mut GramEstimate,
    subset: &[usize],
    sample: &StreamSample,
    params: &HyperslabParams,
) -> Result<bool> {
    check_dim(subset.len(), gram_sub.size())?;
    let error = sample.target - state.eval_estimate(&sample.input)?;
    let f_sub = state.dictionary().eval_subset(subset, &sample.input)?;
    let direction = gram_sub.ensure_inverse()? * &f_sub;
    Ok(apply_hyperslab_step(state.coefficients_mut(), subset, &f_sub, &direction, error, params))
}

/// Basis values of one recent input, extended as atoms are admitted.
#[derive(Debug, Clone)]
struct WindowEntry {
    input: Vec<f64>,
    basis: Vec<f64>,
}

/// Running `Σ_j f(c_j) f(c_j)ᵀ` over the dictionary centers.
#[derive(Debug, Clone)]
struct CenterSums {
    basis: Vec<Vec<f64>>,
    sums: DMatrix<f64>,
}

impl CenterSums {
    fn build(dict: &Dictionary) -> Self {
        let basis: Vec<Vec<f64>> = dict.centers().map(|c| dict.atoms().iter().map(|a| a.value(c)).collect()).collect();
        let r = dict.len();
        let mut sums = DMatrix::zeros(r, r);
        for row in &basis {
            let f = DVector::from_column_slice(row);
            sums.ger(1.0, &f, &f, 1.0);
        }
        Self { basis, sums }
    }

    /// `f_full` is the basis at the new atom's center over the grown
    /// dictionary.
    fn admit(&mut self, atom: &GaussianAtom, centers: &[GaussianAtom], f_full: &DVector<f64>) {
        let r = f_full.len();
        let new = r - 1;
        for (row, a) in self.basis.iter_mut().zip(centers) {
            row.push(atom.value(a.center()));
        }
        let sums = core::mem::replace(&mut self.sums, DMatrix::zeros(0, 0));
        self.sums = sums.resize(r, r, 0.0);
        for i in 0..r {
            let v: f64 = self.basis.iter().map(|row| row[new] * row[i]).sum();
            self.sums[(new, i)] = v;
            self.sums[(i, new)] = v;
        }
        self.sums.ger(1.0, f_full, f_full, 1.0);
        self.basis.push(f_full.iter().copied().collect());
    }

    fn average(&self) -> DMatrix<f64> {
        &self.sums / self.basis.len() as f64
    }
}

/// The online estimator. See the module docs for the step order.
#[derive(Debug, Clone)]
pub struct Learner {
    config: LearnerConfig,
    state: FilterState,
    gram: Option<GramEstimate>,
    window: VecDeque<WindowEntry>,
    centers: Option<CenterSums>,
    last_grow: Option<GrowPath>,
}

impl Learner {
    pub fn new(dim: usize, config: LearnerConfig) -> Result<Self> {
        Self::with_dictionary(Dictionary::new(dim), config)
    }

    /// Starts from `φ = 0` over `dictionary`; with [`DictionaryPolicy::Frozen`]
    /// the dictionary never changes.
    pub fn with_dictionary(dictionary: Dictionary, config: LearnerConfig) -> Result<Self> {
        config.validate()?;
        let gamma = config.gram_gamma;
        let r = dictionary.len();
        let mut centers = None;
        let gram = match config.metric {
            MetricKind::Identity => None,
            _ if r == 0 => match config.metric {
                MetricKind::Analytical(_) => Some(GramEstimate::empty(GramStrategy::Analytical, gamma)?),
                MetricKind::FiniteSample => {
                    centers = Some(CenterSums::build(&dictionary));
                    Some(GramEstimate::empty(GramStrategy::FiniteSample, gamma)?)
                }
                MetricKind::ProductKernel => Some(GramEstimate::empty(GramStrategy::External, gamma)?),
                _ => None,
            },
            MetricKind::Analytical(d) => Some(gram_analytical(&dictionary, &d, gamma)?),
            MetricKind::FiniteSample => {
                centers = Some(CenterSums::build(&dictionary));
                Some(gram_finite_sample_on_dictionary(&dictionary, gamma)?)
            }
            MetricKind::ProductKernel => {
                Some(GramEstimate::from_matrix(product_kernel_matrix(&dictionary), GramStrategy::External, gamma)?)
            }
            MetricKind::Recursive => Some(GramEstimate::from_matrix(
                DMatrix::identity(r, r) * (1.0 - gamma),
                GramStrategy::Recursive,
                gamma,
            )?),
        };
        Ok(Self {
            state: FilterState::with_dictionary(dictionary),
            config,
            gram,
            window: VecDeque::new(),
            centers,
            last_grow: None,
        })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn state(&self) -> &FilterState {
        &self.state
    }

    pub fn dictionary(&self) -> &Dictionary {
        self.state.dictionary()
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        self.state.coefficients()
    }

    /// Gram estimate of the update metric (`None` for the identity metric or
    /// before the first recursive atom).
    pub fn gram(&self) -> Option<&GramEstimate> {
        self.gram.as_ref()
    }

    /// Branch taken by the last recursive grow update.
    pub fn last_grow_path(&self) -> Option<GrowPath> {
        self.last_grow
    }

    /// The matrix `G̃` whose inverse weights the update.
    pub fn metric_matrix(&self) -> DMatrix<f64> {
        let r = self.dictionary().len();
        match &self.gram {
            Some(g) => g.metric(),
            None => DMatrix::identity(r, r),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.state.eval_estimate(x)
    }

    pub fn step(&mut self, sample: &StreamSample) -> Result<StepReport> {
        check_dim(self.dictionary().dim(), sample.dim())?;
        let mut f = self.dictionary().eval_basis(&sample.input)?;
        let prediction = f.dot(self.state.coefficients());
        let error = sample.target - prediction;
        self.push_window(&sample.input, &f);

        let mut admitted = None;
        if self.config.dictionary == DictionaryPolicy::Grow
            && lne_holds(prediction, sample.target, self.config.lne_threshold)
        {
            if let Some((atom, c)) = self.ladder(&sample.input, sample.index)? {
                admitted = Some((atom.scale_index(), c));
                self.admit(atom, &mut f)?;
            }
        }

        let r = self.dictionary().len();
        let s = self.config.subset_size.unwrap_or(r);
        let norms = self.atom_norms();
        let subset = select_update_subset(&f, &norms, s);
        let full = subset.len() == r;

        if admitted.is_none() && self.config.metric == MetricKind::Recursive && r > 0 {
            let gram = self.gram.as_mut().expect("recursive gram exists once the dictionary is non-empty");
            if full {
                gram.recursive_same_dict(&f)?;
            } else {
                let f_sub = gather(&f, &subset);
                gram.recursive_block_update(&subset, &f_sub)?;
            }
        }

        let params = self.config.hyperslab_params();
        let (updated, apsm_cost) = if r == 0 {
            (false, 0.0)
        } else {
            let f_sub = gather(&f, &subset);
            let direction = self.direction(&subset, &f, &f_sub, full)?;
            let quad = f_sub.dot(&direction);
            let excess = (error.abs() - params.hyperslab).max(0.0);
            let cost = if quad > 0.0 { excess / libm::sqrt(quad) } else { 0.0 };
            let updated =
                apply_hyperslab_step(self.state.coefficients_mut(), &subset, &f_sub, &direction, error, &params);
            (updated, cost)
        };
        self.trim_window();
        self.state.advance();

        Ok(StepReport {
            n: sample.index,
            prediction,
            target: sample.target,
            error,
            admitted_scale: admitted.map(|a| a.0),
            admission_coherence: admitted.map(|a| a.1),
            dictionary_size: r,
            subset,
            updated,
            apsm_cost,
        })
    }

    /// `R̃⁻¹ f̃` over `subset`.
    fn direction(
        &mut self,
        subset: &[usize],
        f: &DVector<f64>,
        f_sub: &DVector<f64>,
        full: bool,
    ) -> Result<DVector<f64>> {
        let Some(gram) = self.gram.as_mut() else {
            return Ok(f_sub.clone());
        };
        if full {
            Ok(gram.ensure_inverse()? * f)
        } else {
            let mut sub = gram.submatrix(subset)?;
            Ok(sub.ensure_inverse()? * f_sub)
        }
    }

    fn atom_norms(&self) -> Vec<f64> {
        let r = self.dictionary().len();
        match (&self.gram, self.config.metric) {
            (Some(g), m) if m != MetricKind::Identity => (0..r).map(|i| libm::sqrt(g.matrix()[(i, i)].max(0.0))).collect(),
            _ => alloc::vec![1.0; r],
        }
    }

    fn ladder(&self, input: &[f64], index: usize) -> Result<Option<(GaussianAtom, f64)>> {
        match self.config.coherence_kind() {
            CoherenceMetric::Analytical(d) => novelty_test(
                self.dictionary(),
                input,
                index,
                &self.config.scales,
                &CoherenceContext::Analytical(d),
                self.config.coherence_threshold,
            ),
            CoherenceMetric::ProductKernel => novelty_test(
                self.dictionary(),
                input,
                index,
                &self.config.scales,
                &CoherenceContext::ProductKernel,
                self.config.coherence_threshold,
            ),
            _ => self.ladder_sample_average(input, index),
        }
    }

    /// Same as [`novelty_test`] with sample averages over the recent
    /// inputs, reusing the cached basis values.
    fn ladder_sample_average(&self, input: &[f64], index: usize) -> Result<Option<(GaussianAtom, f64)>> {
        let dict = self.dictionary();
        let r = dict.len();
        let win = self.active_window();
        let mut norms = alloc::vec![0.0; r];
        for e in win.clone() {
            for (n, v) in norms.iter_mut().zip(&e.basis) {
                *n += v * v;
            }
        }
        let delta = self.config.coherence_threshold;
        'ladder: for (q, &scale) in self.config.scales.iter().enumerate() {
            let cand = GaussianAtom::new(input.to_vec(), scale, q)?.with_seed(index);
            if dict.position_of(&cand).is_some() {
                continue;
            }
            let g: Vec<f64> = win.clone().map(|e| cand.value(&e.input)).collect();
            let gg: f64 = g.iter().map(|v| v * v).sum();
            if !(gg > 0.0) {
                return Err(Error::ZeroNorm);
            }
            let mut worst = 0.0f64;
            for i in 0..r {
                if !(norms[i] > 0.0) {
                    continue;
                }
                let fg: f64 = win.clone().zip(&g).map(|(e, gv)| e.basis[i] * gv).sum();
                let c = (fg.abs() / libm::sqrt(norms[i] * gg)).min(1.0);
                if c > delta {
                    continue 'ladder;
                }
                worst = worst.max(c);
            }
            return Ok(Some((cand, worst)));
        }
        Ok(None)
    }

    fn window_len(&self) -> usize {
        self.config
            .window
            .unwrap_or_else(|| self.config.subset_size.unwrap_or(usize::MAX).min(self.dictionary().len() + 1))
    }

    fn active_window(&self) -> impl Iterator<Item = &WindowEntry> + Clone {
        let w = self.window_len().min(self.window.len());
        self.window.iter().skip(self.window.len() - w)
    }

    fn uses_window(&self) -> bool {
        self.config.coherence_kind() == CoherenceMetric::SampleAverage
    }

    fn push_window(&mut self, input: &[f64], f: &DVector<f64>) {
        if self.uses_window() {
            self.window.push_back(WindowEntry { input: input.to_vec(), basis: f.iter().copied().collect() });
        }
    }

    fn trim_window(&mut self) {
        let w = self.window_len();
        while self.window.len() > w {
            self.window.pop_front();
        }
    }

    /// Appends `atom`, extends `f` with its value at `u_n` and grows the
    /// Gram estimate.
    fn admit(&mut self, atom: GaussianAtom, f: &mut DVector<f64>) -> Result<()> {
        let peak = atom.peak();
        for e in self.window.iter_mut() {
            e.basis.push(atom.value(&e.input));
        }
        let old = self.dictionary().len();
        let grown = core::mem::replace(f, DVector::zeros(0)).resize_vertically(old + 1, peak);
        *f = grown;

        match self.config.metric {
            MetricKind::Identity => {}
            MetricKind::Analytical(d) => {
                let mut col = DVector::zeros(old + 1);
                for (i, a) in self.dictionary().atoms().iter().enumerate() {
                    col[i] = inner_product_analytical(a, &atom, &d)?;
                }
                col[old] = inner_product_analytical(&atom, &atom, &d)?;
                self.gram.as_mut().expect("analytical gram").push_row(&col)?;
            }
            MetricKind::ProductKernel => {
                let mut col = DVector::zeros(old + 1);
                for (i, a) in self.dictionary().atoms().iter().enumerate() {
                    if a.scale() == atom.scale() {
                        col[i] = a.value(atom.center());
                    }
                }
                col[old] = peak;
                self.gram.as_mut().expect("kernel gram").push_row(&col)?;
            }
            MetricKind::FiniteSample => {
                let sums = self.centers.as_mut().expect("center sums");
                sums.admit(&atom, self.state.dictionary().atoms(), f);
                let avg = sums.average();
                self.gram.as_mut().expect("finite-sample gram").replace_matrix(avg);
            }
            MetricKind::Recursive => match self.gram.as_mut() {
                Some(g) if g.size() > 0 => self.last_grow = Some(g.recursive_grow(f)?),
                _ => {
                    self.gram = Some(GramEstimate::recursive_init(f, self.config.gram_gamma)?);
                }
            },
        }
        self.state.append_atom(atom)?;
        Ok(())
    }
}

/// Block-diagonal kernel matrix `K_ij = f_i(c_j)` for same-scale atoms.
pub fn product_kernel_matrix(dict: &Dictionary) -> DMatrix<f64> {
    let atoms = dict.atoms();
    let r = atoms.len();
    DMatrix::from_fn(r, r, |i, j| {
        if atoms[i].scale() == atoms[j].scale() {
            atoms[i].value(atoms[j].center())
        } else {
            0.0
        }
    })
}

pub(crate) fn gather(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn atom(c: f64, s: f64, q: usize) -> GaussianAtom {
        GaussianAtom::new(vec![c], s, q).unwrap()
    }

    const FLAT: InputDistribution = InputDistribution::NoninformativeUniform;

    #[test]
    fn lne_cases() {
        assert!(lne_holds(5.0, 5.1, 0.0));
        assert!(!lne_holds(1.0, 1.0, 0.0));
        assert!(lne_holds(2.0, 3.0, 0.2));
        assert!(!lne_holds(2.0, 3.0, 0.25));
    }

    #[test]
    fn coherence_cases() {
        let ctx = CoherenceContext::Analytical(FLAT);
        let a = atom(0.0, 1.0, 0);
        assert!((coherence(&a, &a, &ctx).unwrap() - 1.0).abs() < 1e-15);
        assert!(coherence(&a, &atom(100.0, 1.0, 0), &ctx).unwrap() < 1e-300);
        let c = coherence(&a, &atom(2.0, 1.0, 0), &ctx).unwrap();
        assert!((c - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn sample_average_zero_norm() {
        let pts = vec![vec![1e6]];
        let ctx = CoherenceContext::SampleAverage(&pts);
        assert_eq!(coherence(&atom(0.0, 0.1, 0), &atom(0.1, 0.1, 0), &ctx), Err(Error::ZeroNorm));
    }

    #[test]
    fn empty_dictionary_admits_coarsest() {
        let dict = Dictionary::new(1);
        let (a, c) =
            novelty_test(&dict, &[0.3], 4, &[1.0, 0.5], &CoherenceContext::ProductKernel, 0.5).unwrap().unwrap();
        assert_eq!(a.scale_index(), 0);
        assert_eq!(a.seed(), Some(4));
        assert_eq!(c, 0.0);
    }

    #[test]
    fn duplicate_center_moves_down_the_ladder() {
        let dict = Dictionary::from_atoms(1, [atom(0.3, 1.0, 0)]).unwrap();
        let (a, _) =
            novelty_test(&dict, &[0.3], 0, &[1.0, 0.5], &CoherenceContext::ProductKernel, 0.5).unwrap().unwrap();
        assert_eq!(a.scale_index(), 1);
    }

    #[test]
    fn subset_selection_cases() {
        let f = DVector::from_vec(vec![0.1, 0.5, 0.9, 0.2, 0.3]);
        let norms = vec![1.0; 5];
        assert_eq!(select_update_subset(&f, &norms, 2), vec![2, 1]);
        assert_eq!(select_update_subset(&f, &norms, 9), vec![0, 1, 2, 3, 4]);
        let tie = DVector::from_vec(vec![0.5, 0.5, 0.5]);
        assert_eq!(select_update_subset(&tie, &[1.0; 3], 2), vec![0, 1]);
    }

    #[test]
    fn scalar_hyperslab_step() {
        let mut h = DVector::from_vec(vec![0.5]);
        let c = 0.8;
        let f = DVector::from_vec(vec![c]);
        let params = HyperslabParams { step_size: 1.0, hyperslab: 0.0, update_gamma: 0.1 };
        let d = 2.0;
        let e = d - 0.5 * c;
        apply_hyperslab_step(&mut h, &[0], &f, &f, e, &params);
        let expected = 0.5 + (d - 0.5 * c) / (c * c + 0.1) * c;
        assert!((h[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn inside_hyperslab_is_noop() {
        let mut h = DVector::from_vec(vec![0.5, -1.0]);
        let before = h.clone();
        let f = DVector::from_vec(vec![1.0, 2.0]);
        let params = HyperslabParams { step_size: 1.0, hyperslab: 0.3, update_gamma: 0.0 };
        assert!(!apply_hyperslab_step(&mut h, &[0, 1], &f, &f, 0.3, &params));
        assert_eq!(h, before);
    }

    #[test]
    fn config_validation() {
        let ok = LearnerConfig::new(vec![1.0, 0.5]);
        assert!(ok.validate().is_ok());
        assert!(LearnerConfig { step_size: 2.0, ..ok.clone() }.validate().is_err());
        assert!(LearnerConfig { scales: vec![0.5, 1.0], ..ok.clone() }.validate().is_err());
        assert!(LearnerConfig { subset_size: Some(0), ..ok.clone() }.validate().is_err());
        assert!(LearnerConfig { gram_gamma: 0.0, ..ok }.validate().is_err());
    }

    #[test]
    fn first_step_admits_and_projects() {
        let config = LearnerConfig {
            metric: MetricKind::Analytical(FLAT),
            step_size: 1.0,
            update_gamma: 0.0,
            gram_gamma: 1.0,
            ..LearnerConfig::new(vec![1.0])
        };
        let mut l = Learner::new(1, config).unwrap();
        let rep = l.step(&StreamSample::new(vec![0.2], 1.5, 0)).unwrap();
        assert_eq!(rep.admitted_scale, Some(0));
        assert_eq!(rep.dictionary_size, 1);
        assert!(rep.updated);
        assert!((l.predict(&[0.2]).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn wide_hyperslab_freezes_coefficients() {
        let config = LearnerConfig { hyperslab: 1e9, ..LearnerConfig::new(vec![1.0, 0.05]) };
        let mut l = Learner::new(1, config).unwrap();
        for n in 0..30 {
            let x = 2.0 * (n as f64 * 0.618_033_988_7).fract() - 1.0;
            l.step(&StreamSample::new(vec![x], x * 3.0, n)).unwrap();
        }
        assert!(l.dictionary().len() > 1);
        assert!(l.coefficients().iter().all(|&h| h == 0.0));
    }

    #[test]
    fn product_kernel_matrix_block_structure() {
        let dict = Dictionary::from_atoms(1, [atom(0.0, 1.0, 0), atom(0.1, 0.5, 1), atom(0.4, 1.0, 0)]).unwrap();
        let k = product_kernel_matrix(&dict);
        assert_eq!(k[(0, 1)], 0.0);
        assert_eq!(k[(1, 2)], 0.0);
        assert!(k[(0, 2)] > 0.0);
    }
}
