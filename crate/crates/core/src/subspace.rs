//! Reproducing kernel of the span of a dictionary, orthogonal projections
//! onto that span and the batch MMSE solution.
//!
//! For a dictionary with Gram matrix `G` the kernel of the span is
//! `κ(u, v) = f(u)ᵀ G⁻¹ f(v)`. Every solve here uses the metric of the
//! supplied [`GramEstimate`], i.e. the regularized Gram unless `γ = 1`.

use nalgebra::{DMatrix, DVector};

use crate::gram::{inner_product_analytical, GramEstimate, InputDistribution};
use crate::linalg::{check_dim, spd_inverse, spd_solve};
use crate::model::{Dictionary, GaussianAtom};
use crate::{Error, Result};

/// Raw ALD values in `[-ALD_CLAMP_TOL, 0)` are treated as rounding.
pub const ALD_CLAMP_TOL: f64 = 1e-9;

/// `κ(u, v) = f(u)ᵀ M⁻¹ f(v)` for a fixed dictionary and metric `M`.
#[derive(Debug, Clone)]
pub struct SubspaceKernel<'a> {
    dictionary: &'a Dictionary,
    metric: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl<'a> SubspaceKernel<'a> {
    pub fn new(dictionary: &'a Dictionary, gram: &GramEstimate) -> Result<Self> {
        check_dim(dictionary.len(), gram.size())?;
        if dictionary.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        let metric = gram.metric();
        let inverse = match gram.inverse() {
            Some(inv) => inv.clone(),
            None => spd_inverse(&metric)?,
        };
        Ok(Self { dictionary, metric, inverse })
    }

    pub fn dictionary(&self) -> &Dictionary {
        self.dictionary
    }

    /// Coefficients of the section `κ(·, x)` over the dictionary.
    pub fn section(&self, x: &[f64]) -> Result<DVector<f64>> {
        Ok(&self.inverse * self.dictionary.eval_basis(x)?)
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let fy = self.dictionary.eval_basis(y)?;
        Ok(self.section(x)?.dot(&fy))
    }

    /// `⟨Σ aᵢfᵢ, Σ bⱼfⱼ⟩ = aᵀ M b`.
    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
        check_dim(self.metric.nrows(), a.len())?;
        check_dim(self.metric.nrows(), b.len())?;
        Ok(a.dot(&(&self.metric * b)))
    }

    /// Kernel matrix `[κ(xᵢ, xⱼ)]` over a point set.
    pub fn kernel_matrix(&self, points: &[&[f64]]) -> Result<DMatrix<f64>> {
        let basis = points.iter().map(|p| self.dictionary.eval_basis(p)).collect::<Result<alloc::vec::Vec<_>>>()?;
        let sections: alloc::vec::Vec<_> = basis.iter().map(|f| &self.inverse * f).collect();
        let n = points.len();
        Ok(DMatrix::from_fn(n, n, |i, j| sections[i].dot(&basis[j])))
    }
}

/// Free-function form of [`SubspaceKernel::eval`].
pub fn kernel_eval(dictionary: &Dictionary, gram: &GramEstimate, x: &[f64], y: &[f64]) -> Result<f64> {
    SubspaceKernel::new(dictionary, gram)?.eval(x, y)
}

/// Solves the normal equation `M h = b`, with `bᵢ = ⟨fᵢ, ψ⟩`.
pub fn project_onto_subspace(b: &DVector<f64>, gram: &GramEstimate) -> Result<DVector<f64>> {
    check_dim(gram.size(), b.len())?;
    if b.is_empty() {
        return Ok(DVector::zeros(0));
    }
    match gram.inverse() {
        Some(inv) => Ok(inv * b),
        None => spd_solve(&gram.metric(), b),
    }
}

/// Wiener–Hopf solution `h* = R⁻¹ p` for the cross-correlation
/// `p = E[f(u) d]`.
pub fn mmse_batch(dictionary: &Dictionary, gram: &GramEstimate, cross_corr: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(dictionary.len(), gram.size())?;
    check_dim(dictionary.len(), cross_corr.len())?;
    project_onto_subspace(cross_corr, gram)
}

/// `‖ψ - P(ψ)‖²  = ‖ψ‖² - bᵀ M⁻¹ b`, never negative.
pub fn projection_residual_sq(b: &DVector<f64>, norm_sq: f64, gram: &GramEstimate) -> Result<f64> {
    let h = project_onto_subspace(b, gram)?;
    Ok((norm_sq - b.dot(&h)).max(0.0))
}

/// `‖f - P(f)‖² / ‖f‖²` from the inner products `b` of the candidate with
/// the dictionary and its squared norm.
pub fn ald_ratio_from(b: &DVector<f64>, norm_sq: f64, gram: &GramEstimate) -> Result<f64> {
    if !(norm_sq > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let h = project_onto_subspace(b, gram)?;
    let raw = 1.0 - b.dot(&h) / norm_sq;
    Ok(raw.clamp(0.0, 1.0))
}

/// ALD ratio of `candidate` against `dictionary` with closed-form inner
/// products under `dist`.
pub fn ald_ratio(
    dictionary: &Dictionary,
    gram: &GramEstimate,
    candidate: &GaussianAtom,
    dist: &InputDistribution,
) -> Result<f64> {
    check_dim(dictionary.len(), gram.size())?;
    let b = DVector::from_iterator(
        dictionary.len(),
        dictionary.atoms().iter().map(|a| inner_product_analytical(a, candidate, dist)).collect::<Result<alloc::vec::Vec<_>>>()?,
    );
    let norm_sq = inner_product_analytical(candidate, candidate, dist)?;
    ald_ratio_from(&b, norm_sq, gram)
}

/// Lower bound on the ALD ratio implied by pairwise coherence `≤ δ` with a
/// dictionary of `existing` atoms; `None` when `(existing)·δ ≥ 1`.
pub fn coherence_ald_bound(existing: usize, delta: f64) -> Option<f64> {
    let m = existing as f64;
    if m * delta >= 1.0 {
        return None;
    }
    let denom = 1.0 - (m - 1.0) * delta;
    Some(1.0 - m * delta * delta / denom)
}
