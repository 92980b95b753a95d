//! The L² Gram (autocorrelation) matrix of the dictionary.
//!
//! Three estimators are provided:
//!
//! * **Analytical**: closed-form inner products of normalized Gaussians
//!   under an isotropic Gaussian input density, or under the improper flat
//!   density when nothing is known about the input.
//! * **Finite-sample**: `R ≈ (1/l) F Fᵀ` with `F` the basis evaluated at a
//!   fixed set of points, by default the dictionary's own centers.
//! * **Recursive**: `R_n = R_{n-1} + f fᵀ` with a Sherman–Morrison update of
//!   the inverse, and a rank-2 Woodbury update when the dictionary grows.
//!
//! Analytical and finite-sample estimates are regularized as
//! `γR + (1-γ)I` before inversion. The recursive estimate is regularized
//! once, at initialization, and is then used as is.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2};
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::linalg::{check_dim, spd_inverse, sq_dist, sq_norm, symmetrize};
use crate::model::{Dictionary, GaussianAtom};
use crate::{Error, Result};

/// Threshold on the new atom's own value below which the Woodbury grow
/// path is considered singular and a dense inverse is used instead.
pub const GROW_NONZERO_EPS: f64 = 1e-8;

/// Probability measure defining the L² inner product.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum InputDistribution {
    /// Zero-mean `N(0, σ²I)` input.
    GaussianIsotropic { sigma: f64 },
    /// Improper flat density `dμ = du`.
    NoninformativeUniform,
}

impl InputDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::GaussianIsotropic { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::InvalidScale(sigma))
            }
            _ => Ok(()),
        }
    }
}

/// How a [`GramEstimate`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GramStrategy {
    Analytical,
    FiniteSample,
    Recursive,
    /// A metric matrix supplied from outside the L² estimators (kernel
    /// matrices, the identity). Regularized like the analytical estimate.
    External,
}

/// Estimate of the Gram matrix together with the inverse of the metric
/// actually used by the learner.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GramEstimate {
    matrix: DMatrix<f64>,
    inverse: Option<DMatrix<f64>>,
    strategy: GramStrategy,
    gamma: f64,
}

/// Which branch [`GramEstimate::recursive_grow`] took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowPath {
    Woodbury,
    DenseFallback,
}

impl GramEstimate {
    /// Wraps a symmetric matrix; the inverse of its metric is computed.
    pub fn from_matrix(matrix: DMatrix<f64>, strategy: GramStrategy, gamma: f64) -> Result<Self> {
        let mut est = Self::empty(strategy, gamma)?;
        check_dim(matrix.nrows(), matrix.ncols())?;
        est.matrix = matrix;
        symmetrize(&mut est.matrix);
        est.refresh_inverse()?;
        Ok(est)
    }

    /// A 0×0 estimate, the starting point before any atom is admitted.
    pub fn empty(strategy: GramStrategy, gamma: f64) -> Result<Self> {
        validate_gamma(gamma)?;
        Ok(Self { matrix: DMatrix::zeros(0, 0), inverse: Some(DMatrix::zeros(0, 0)), strategy, gamma })
    }

    /// Recursive initialization on the first atom: `R₀ = f fᵀ + (1-γ)I`.
    pub fn recursive_init(f: &DVector<f64>, gamma: f64) -> Result<Self> {
        validate_gamma(gamma)?;
        let r = f.len();
        let matrix = f * f.transpose() + DMatrix::identity(r, r) * (1.0 - gamma);
        Self::from_matrix(matrix, GramStrategy::Recursive, gamma)
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// The raw estimate `R_n` (unregularized for Analytical/FiniteSample).
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn strategy(&self) -> GramStrategy {
        self.strategy
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The matrix whose inverse the learner uses: `γR + (1-γ)I`, or `R`
    /// itself for the recursive estimate.
    pub fn metric(&self) -> DMatrix<f64> {
        match self.strategy {
            GramStrategy::Recursive => self.matrix.clone(),
            _ => regularize(&self.matrix, self.gamma),
        }
    }

    /// Inverse of [`metric`](Self::metric), when maintained.
    pub fn inverse(&self) -> Option<&DMatrix<f64>> {
        self.inverse.as_ref()
    }

    /// Returns the inverse, computing it densely if it is not maintained.
    pub fn ensure_inverse(&mut self) -> Result<&DMatrix<f64>> {
        if self.inverse.is_none() {
            self.refresh_inverse()?;
        }
        Ok(self.inverse.as_ref().expect("inverse just computed"))
    }

    /// Recomputes the inverse of the metric by a dense symmetric solve.
    pub fn refresh_inverse(&mut self) -> Result<()> {
        self.inverse = None;
        self.inverse = Some(if self.size() == 0 { DMatrix::zeros(0, 0) } else { spd_inverse(&self.metric())? });
        Ok(())
    }

    pub(crate) fn replace_matrix(&mut self, matrix: DMatrix<f64>) {
        self.matrix = matrix;
        symmetrize(&mut self.matrix);
        self.inverse = None;
    }

    pub fn invalidate_inverse(&mut self) {
        self.inverse = None;
    }

    /// `max |M M⁻¹ - I|` for the maintained inverse.
    pub fn inverse_residual(&self) -> Option<f64> {
        let inv = self.inverse.as_ref()?;
        let r = self.size();
        let prod = self.metric() * inv;
        Some((prod - DMatrix::identity(r, r)).abs().max())
    }

    /// Borders the matrix with a new last row/column `col` (whose last
    /// entry is the new diagonal). Used by the analytical and kernel
    /// strategies when an atom is admitted; the inverse is dropped.
    pub fn push_row(&mut self, col: &DVector<f64>) -> Result<()> {
        let r = self.size();
        check_dim(r + 1, col.len())?;
        let mut m = core::mem::replace(&mut self.matrix, DMatrix::zeros(0, 0)).resize(r + 1, r + 1, 0.0);
        for i in 0..=r {
            m[(i, r)] = col[i];
            m[(r, i)] = col[i];
        }
        self.matrix = m;
        self.inverse = None;
        Ok(())
    }

    /// Same-dictionary recursive step: `R ← R + f fᵀ`, inverse by
    /// Sherman–Morrison. If no inverse is maintained only `R` changes.
    pub fn recursive_same_dict(&mut self, f: &DVector<f64>) -> Result<()> {
        check_dim(self.size(), f.len())?;
        self.matrix += f * f.transpose();
        symmetrize(&mut self.matrix);
        if let Some(inv) = self.inverse.as_mut() {
            let g = &*inv * f;
            let denom = 1.0 + f.dot(&g);
            *inv -= (&g * g.transpose()) / denom;
            symmetrize(inv);
        }
        Ok(())
    }

    /// Adds `f fᵀ` to the principal block at `indices` only (selective
    /// recursive update). The full inverse is no longer valid afterwards.
    pub fn recursive_block_update(&mut self, indices: &[usize], f_sub: &DVector<f64>) -> Result<()> {
        check_dim(indices.len(), f_sub.len())?;
        self.check_indices(indices)?;
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                self.matrix[(i, j)] += f_sub[a] * f_sub[b];
            }
        }
        symmetrize(&mut self.matrix);
        self.inverse = None;
        Ok(())
    }

    /// Growing recursive step:
    /// `R_n = [R_{n-1} 0; 0ᵀ 0] + f fᵀ` with `f` of length `r_{n-1}+1`.
    ///
    /// With `A = [R_{n-1} 0; 0ᵀ 1]`, `B = [f, e]` and `C = [f, -e]ᵀ`,
    /// `R_n = A + BC` and the inverse follows from the matrix inversion
    /// lemma, provided the new atom's own value is nonzero. Otherwise the
    /// new diagonal entry is regularized by `1-γ` and inverted densely.
    pub fn recursive_grow(&mut self, f: &DVector<f64>) -> Result<GrowPath> {
        let old = self.size();
        let r = old + 1;
        check_dim(r, f.len())?;
        let last = f[old];
        if last.abs() >= GROW_NONZERO_EPS && self.inverse.is_none() {
            self.refresh_inverse()?;
        }

        let mut grown = core::mem::replace(&mut self.matrix, DMatrix::zeros(0, 0)).resize(r, r, 0.0);
        grown += f * f.transpose();
        symmetrize(&mut grown);
        self.matrix = grown;

        if last.abs() < GROW_NONZERO_EPS {
            self.matrix[(old, old)] += 1.0 - self.gamma;
            self.refresh_inverse()?;
            return Ok(GrowPath::DenseFallback);
        }

        let mut a_inv = self.inverse.take().expect("inverse refreshed above").resize(r, r, 0.0);
        a_inv[(old, old)] = 1.0;

        let mut b = DMatrix::zeros(r, 2);
        b.column_mut(0).copy_from(f);
        b[(old, 1)] = 1.0;
        let mut c = DMatrix::zeros(2, r);
        c.row_mut(0).copy_from(&f.transpose());
        c[(1, old)] = -1.0;

        let a_inv_b = &a_inv * &b;
        let c_a_inv = &c * &a_inv;
        let core = Matrix2::identity() + fixed2(&(&c * &a_inv_b));
        let core_inv = core.try_inverse().ok_or(Error::NotPositiveDefinite("rank-2 core is singular"))?;
        let core_inv = DMatrix::from_column_slice(2, 2, core_inv.as_slice());
        let mut inv = &a_inv - &a_inv_b * core_inv * c_a_inv;
        symmetrize(&mut inv);
        self.inverse = Some(inv);
        Ok(GrowPath::Woodbury)
    }

    /// Principal submatrix over `indices` with a freshly computed dense
    /// inverse of its metric.
    pub fn submatrix(&self, indices: &[usize]) -> Result<GramEstimate> {
        self.check_indices(indices)?;
        let s = indices.len();
        let m = DMatrix::from_fn(s, s, |a, b| self.matrix[(indices[a], indices[b])]);
        GramEstimate::from_matrix(m, self.strategy, self.gamma)
    }

    fn check_indices(&self, indices: &[usize]) -> Result<()> {
        let r = self.size();
        for (k, &i) in indices.iter().enumerate() {
            if i >= r {
                return Err(Error::IndexOutOfRange { index: i, size: r });
            }
            if indices[..k].contains(&i) {
                return Err(Error::DuplicateIndex(i));
            }
        }
        Ok(())
    }
}

fn fixed2(m: &DMatrix<f64>) -> Matrix2<f64> {
    Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

fn validate_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(alloc::format!("Gram regularization γ must lie in (0, 1], got {gamma}")))
    }
}

/// `γR + (1-γ)I`.
pub fn regularize(r: &DMatrix<f64>, gamma: f64) -> DMatrix<f64> {
    let n = r.nrows();
    r * gamma + DMatrix::identity(n, n) * (1.0 - gamma)
}

/// Closed-form `⟨κ_p(·,u), κ_q(·,v)⟩` under `dist`.
pub fn inner_product_analytical(a: &GaussianAtom, b: &GaussianAtom, dist: &InputDistribution) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let l = a.dim() as f64;
    let sp2 = a.scale() * a.scale();
    let sq2 = b.scale() * b.scale();
    let d2 = sq_dist(a.center(), b.center());
    match *dist {
        InputDistribution::NoninformativeUniform => {
            let s = sp2 + sq2;
            Ok(libm::pow(2.0 * PI * s, -l / 2.0) * libm::exp(-d2 / (2.0 * s)))
        }
        InputDistribution::GaussianIsotropic { sigma } => {
            dist.validate()?;
            let s2 = sigma * sigma;
            let upsilon = s2 * sp2 + s2 * sq2 + sp2 * sq2;
            let expo = (s2 * d2 + sq2 * sq_norm(a.center()) + sp2 * sq_norm(b.center())) / (2.0 * upsilon);
            Ok(libm::pow(2.0 * PI, -l) * libm::pow(upsilon, -l / 2.0) * libm::exp(-expo))
        }
    }
}

/// Raw analytical Gram matrix (no regularization, no inverse).
pub fn analytical_matrix(dict: &Dictionary, dist: &InputDistribution) -> Result<DMatrix<f64>> {
    let r = dict.len();
    let atoms = dict.atoms();
    let mut g = DMatrix::zeros(r, r);
    for i in 0..r {
        for j in i..r {
            let v = inner_product_analytical(&atoms[i], &atoms[j], dist)?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Analytical Gram estimate; the regularized matrix is inverted densely.
pub fn gram_analytical(dict: &Dictionary, dist: &InputDistribution, gamma: f64) -> Result<GramEstimate> {
    if dict.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    GramEstimate::from_matrix(analytical_matrix(dict, dist)?, GramStrategy::Analytical, gamma)
}

/// `(1/l) Σ_j f(x_j) f(x_j)ᵀ` without regularization or inverse.
pub fn sample_average_matrix<'a, I>(dict: &Dictionary, points: I) -> Result<DMatrix<f64>>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let r = dict.len();
    let mut acc = DMatrix::zeros(r, r);
    let mut count = 0usize;
    for p in points {
        let f = dict.eval_basis(p)?;
        acc.ger(1.0, &f, &f, 1.0);
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptySamples);
    }
    acc /= count as f64;
    symmetrize(&mut acc);
    Ok(acc)
}

/// Finite-sample Gram estimate over the given points.
pub fn gram_finite_sample(dict: &Dictionary, points: &[Vec<f64>], gamma: f64) -> Result<GramEstimate> {
    let m = sample_average_matrix(dict, points.iter().map(|p| p.as_slice()))?;
    GramEstimate::from_matrix(m, GramStrategy::FiniteSample, gamma)
}

/// Finite-sample Gram estimate using the dictionary's own centers.
pub fn gram_finite_sample_on_dictionary(dict: &Dictionary, gamma: f64) -> Result<GramEstimate> {
    let m = sample_average_matrix(dict, dict.centers())?;
    GramEstimate::from_matrix(m, GramStrategy::FiniteSample, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn atom(c: &[f64], s: f64) -> GaussianAtom {
        GaussianAtom::new(c.to_vec(), s, 0).unwrap()
    }

    #[test]
    fn noninformative_same_center() {
        for l in 1..4 {
            let c = vec![0.3; l];
            let a = atom(&c, 0.7);
            let v = inner_product_analytical(&a, &a, &InputDistribution::NoninformativeUniform).unwrap();
            let expected = libm::pow(4.0 * PI * 0.49, -(l as f64) / 2.0);
            assert!((v - expected).abs() < 1e-14 * expected);
        }
    }

    #[test]
    fn noninformative_distance_two() {
        let v = inner_product_analytical(&atom(&[0.0], 1.0), &atom(&[2.0], 1.0), &InputDistribution::NoninformativeUniform)
            .unwrap();
        assert!((v - 0.103_776_874_355_148_7).abs() < 1e-14);
    }

    #[test]
    fn gaussian_input_unit_case() {
        let a = atom(&[0.0], 1.0);
        let v = inner_product_analytical(&a, &a, &InputDistribution::GaussianIsotropic { sigma: 1.0 }).unwrap();
        assert!((v - 1.0 / (2.0 * PI * 3f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn inner_product_errors() {
        let d = InputDistribution::NoninformativeUniform;
        assert!(matches!(
            inner_product_analytical(&atom(&[0.0], 1.0), &atom(&[0.0, 1.0], 1.0), &d),
            Err(Error::DimensionMismatch { .. })
        ));
        let bad = InputDistribution::GaussianIsotropic { sigma: -1.0 };
        assert!(inner_product_analytical(&atom(&[0.0], 1.0), &atom(&[0.0], 1.0), &bad).is_err());
    }

    #[test]
    fn single_atom_analytical_gram() {
        let dict = Dictionary::from_atoms(1, [atom(&[0.0], 1.0)]).unwrap();
        let g = gram_analytical(&dict, &InputDistribution::NoninformativeUniform, 1.0).unwrap();
        assert!((g.matrix()[(0, 0)] - 0.282_094_791_773_878_14).abs() < 1e-15);
    }

    #[test]
    fn far_atoms_give_diagonal_gram() {
        let dict = Dictionary::from_atoms(1, [atom(&[0.0], 1.0), atom(&[100.0], 1.0)]).unwrap();
        let g = gram_analytical(&dict, &InputDistribution::NoninformativeUniform, 0.99).unwrap();
        assert_eq!(g.matrix()[(0, 1)], 0.0);
    }

    #[test]
    fn empty_dictionary_rejected() {
        let dict = Dictionary::new(1);
        assert_eq!(
            gram_analytical(&dict, &InputDistribution::NoninformativeUniform, 0.99),
            Err(Error::EmptyDictionary)
        );
    }

    #[test]
    fn finite_sample_single_point() {
        let dict = Dictionary::from_atoms(1, [atom(&[0.0], 1.0)]).unwrap();
        let g = gram_finite_sample(&dict, &[vec![0.0]], 1.0).unwrap();
        assert!((g.matrix()[(0, 0)] - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn finite_sample_repeated_point_is_idempotent() {
        let dict = Dictionary::from_atoms(1, [atom(&[0.0], 1.0), atom(&[0.5], 0.3)]).unwrap();
        let one = gram_finite_sample(&dict, &[vec![0.2]], 0.9).unwrap();
        let many = gram_finite_sample(&dict, &vec![vec![0.2]; 7], 0.9).unwrap();
        assert!((one.matrix() - many.matrix()).abs().max() < 1e-15);
    }

    #[test]
    fn finite_sample_empty_points() {
        let dict = Dictionary::from_atoms(1, [atom(&[0.0], 1.0)]).unwrap();
        assert_eq!(gram_finite_sample(&dict, &[], 0.9), Err(Error::EmptySamples));
    }

    #[test]
    fn scalar_sherman_morrison() {
        let mut est = GramEstimate::from_matrix(DMatrix::identity(1, 1), GramStrategy::Recursive, 0.99).unwrap();
        est.recursive_same_dict(&DVector::from_vec(vec![1.0])).unwrap();
        assert_eq!(est.matrix()[(0, 0)], 2.0);
        assert!((est.inverse().unwrap()[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_update_is_noop() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let mut est = GramEstimate::from_matrix(m, GramStrategy::Recursive, 0.99).unwrap();
        let before = est.clone();
        est.recursive_same_dict(&DVector::zeros(2)).unwrap();
        assert_eq!(est, before);
    }

    #[test]
    fn scalar_grow_from_empty() {
        let mut est = GramEstimate::empty(GramStrategy::Recursive, 0.99).unwrap();
        let path = est.recursive_grow(&DVector::from_vec(vec![0.8])).unwrap();
        assert_eq!(path, GrowPath::Woodbury);
        assert!((est.matrix()[(0, 0)] - 0.64).abs() < 1e-15);
        assert!((est.inverse().unwrap()[(0, 0)] - 1.0 / 0.64).abs() < 1e-12);
    }

    #[test]
    fn submatrix_cases() {
        let m = DMatrix::from_row_slice(3, 3, &[3.0, 0.5, 0.1, 0.5, 2.0, 0.2, 0.1, 0.2, 1.0]);
        let est = GramEstimate::from_matrix(m.clone(), GramStrategy::Analytical, 0.99).unwrap();
        assert_eq!(est.submatrix(&[0, 1, 2]).unwrap().matrix(), &m);
        assert_eq!(est.submatrix(&[1]).unwrap().matrix()[(0, 0)], 2.0);
        assert_eq!(est.submatrix(&[3]), Err(Error::IndexOutOfRange { index: 3, size: 3 }));
        assert_eq!(est.submatrix(&[1, 1]), Err(Error::DuplicateIndex(1)));
    }

    #[test]
    fn regularized_inverse_residual_small() {
        let dict = Dictionary::from_atoms(1, [atom(&[0.0], 1.0), atom(&[0.3], 0.5), atom(&[-0.4], 0.2)]).unwrap();
        let g = gram_analytical(&dict, &InputDistribution::GaussianIsotropic { sigma: 0.8 }, 0.99).unwrap();
        assert!(g.inverse_residual().unwrap() < 1e-10);
    }

    #[test]
    fn gamma_out_of_range() {
        assert!(GramEstimate::empty(GramStrategy::Analytical, 0.0).is_err());
        assert!(GramEstimate::empty(GramStrategy::Analytical, 1.5).is_err());
    }
}
