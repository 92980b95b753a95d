//! Atoms, dictionaries, stream samples and the linear-in-coefficients
//! estimator φ(x) = f(x)ᵀh.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DVector;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::gram::{inner_product_analytical, InputDistribution};
use crate::linalg::{check_dim, sq_dist};
use crate::{Error, Result};

/// One observation `(u_n, d_n)` of the stream.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct StreamSample {
    pub input: Vec<f64>,
    pub target: f64,
    pub index: usize,
}

impl StreamSample {
    pub fn new(input: Vec<f64>, target: f64, index: usize) -> Self {
        Self { input, target, index }
    }

    pub fn dim(&self) -> usize {
        self.input.len()
    }
}

/// A normalized Gaussian `(2πσ²)^{-L/2} exp(-‖x-c‖²/(2σ²))`.
///
/// `scale_index` is the position of `scale` in the configured ladder
/// (0 is the coarsest). `seed` is the stream index whose input became the
/// center, when the atom was admitted online.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GaussianAtom {
    center: Vec<f64>,
    scale: f64,
    scale_index: usize,
    seed: Option<usize>,
}

impl GaussianAtom {
    pub fn new(center: Vec<f64>, scale: f64, scale_index: usize) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidScale(scale));
        }
        Ok(Self { center, scale, scale_index, seed: None })
    }

    pub fn with_seed(mut self, index: usize) -> Self {
        self.seed = Some(index);
        self
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn scale_index(&self) -> usize {
        self.scale_index
    }

    pub fn seed(&self) -> Option<usize> {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Value at the center, the normalization constant.
    pub fn peak(&self) -> f64 {
        gaussian_peak(self.scale, self.dim())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.value(x))
    }

    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        let s2 = self.scale * self.scale;
        self.peak() * libm::exp(-sq_dist(x, &self.center) / (2.0 * s2))
    }

    fn same_as(&self, other: &Self) -> bool {
        self.scale == other.scale && self.center == other.center
    }
}

pub(crate) fn gaussian_peak(scale: f64, dim: usize) -> f64 {
    libm::pow(2.0 * PI * scale * scale, -(dim as f64) / 2.0)
}

/// Ordered, append-only set of atoms spanning the search subspace.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Dictionary {
    dim: usize,
    atoms: Vec<GaussianAtom>,
}

impl Dictionary {
    pub fn new(dim: usize) -> Self {
        Self { dim, atoms: Vec::new() }
    }

    /// Builds a dictionary from atoms, rejecting duplicates and
    /// dimension mismatches.
    pub fn from_atoms(dim: usize, atoms: impl IntoIterator<Item = GaussianAtom>) -> Result<Self> {
        let mut dict = Self::new(dim);
        for atom in atoms {
            dict.push(atom)?;
        }
        Ok(dict)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[GaussianAtom] {
        &self.atoms
    }

    pub fn get(&self, i: usize) -> Option<&GaussianAtom> {
        self.atoms.get(i)
    }

    /// Appends an atom. Exact (center, scale) duplicates are rejected;
    /// near-duplicates are the coherence criterion's concern.
    pub fn push(&mut self, atom: GaussianAtom) -> Result<usize> {
        check_dim(self.dim, atom.dim())?;
        if let Some(i) = self.position_of(&atom) {
            return Err(Error::DuplicateAtom(i));
        }
        self.atoms.push(atom);
        Ok(self.atoms.len() - 1)
    }

    pub fn position_of(&self, atom: &GaussianAtom) -> Option<usize> {
        self.atoms.iter().position(|a| a.same_as(atom))
    }

    /// Stream indices that seeded atoms of the given scale.
    pub fn seed_indices(&self, scale_index: usize) -> Vec<usize> {
        self.atoms
            .iter()
            .filter(|a| a.scale_index == scale_index)
            .filter_map(|a| a.seed)
            .collect()
    }

    /// The dictionary data: centers of all atoms, in atom order.
    pub fn centers(&self) -> impl Iterator<Item = &[f64]> {
        self.atoms.iter().map(|a| a.center())
    }

    /// `f(x) = [f_1(x), …, f_r(x)]`.
    pub fn eval_basis(&self, x: &[f64]) -> Result<DVector<f64>> {
        check_dim(self.dim, x.len())?;
        Ok(DVector::from_iterator(self.len(), self.atoms.iter().map(|a| a.value(x))))
    }

    /// Basis values restricted to `indices`, in the given order.
    pub fn eval_subset(&self, indices: &[usize], x: &[f64]) -> Result<DVector<f64>> {
        check_dim(self.dim, x.len())?;
        let mut out = DVector::zeros(indices.len());
        for (k, &i) in indices.iter().enumerate() {
            let atom = self
                .atoms
                .get(i)
                .ok_or(Error::IndexOutOfRange { index: i, size: self.len() })?;
            out[k] = atom.value(x);
        }
        Ok(out)
    }
}

/// Coefficients over a dictionary; the estimate is `φ_n = Σ h_i f_i`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FilterState {
    dictionary: Dictionary,
    coefficients: DVector<f64>,
    time: usize,
}

impl FilterState {
    pub fn new(dim: usize) -> Self {
        Self::with_dictionary(Dictionary::new(dim))
    }

    /// Starts from `φ = 0` over an existing dictionary.
    pub fn with_dictionary(dictionary: Dictionary) -> Self {
        let r = dictionary.len();
        Self { dictionary, coefficients: DVector::zeros(r), time: 0 }
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn set_coefficients(&mut self, h: DVector<f64>) -> Result<()> {
        check_dim(self.dictionary.len(), h.len())?;
        self.coefficients = h;
        Ok(())
    }

    pub(crate) fn coefficients_mut(&mut self) -> &mut DVector<f64> {
        &mut self.coefficients
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub(crate) fn advance(&mut self) {
        self.time += 1;
    }

    /// `φ(x) = f(x)ᵀh`.
    pub fn eval_estimate(&self, x: &[f64]) -> Result<f64> {
        Ok(self.dictionary.eval_basis(x)?.dot(&self.coefficients))
    }

    /// Adds an atom with coefficient 0, so the estimate is unchanged.
    pub fn append_atom(&mut self, atom: GaussianAtom) -> Result<usize> {
        let idx = self.dictionary.push(atom)?;
        let r = self.dictionary.len();
        let old = core::mem::replace(&mut self.coefficients, DVector::zeros(0));
        self.coefficients = old.resize_vertically(r, 0.0);
        Ok(idx)
    }
}

/// `ψ = Σ w_k g_k` over Gaussian atoms; its L² inner products with atoms
/// are available in closed form.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GaussianMixture {
    pub atoms: Vec<GaussianAtom>,
    pub weights: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(atoms: Vec<GaussianAtom>, weights: Vec<f64>) -> Result<Self> {
        check_dim(atoms.len(), weights.len())?;
        if let Some(first) = atoms.first() {
            for a in &atoms {
                check_dim(first.dim(), a.dim())?;
            }
        }
        Ok(Self { atoms, weights })
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            acc += w * a.eval(x)?;
        }
        Ok(acc)
    }

    /// `⟨g, ψ⟩` for a single atom `g`.
    pub fn inner_with_atom(&self, atom: &GaussianAtom, dist: &InputDistribution) -> Result<f64> {
        let mut acc = 0.0;
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            acc += w * inner_product_analytical(a, atom, dist)?;
        }
        Ok(acc)
    }

    pub fn inner(&self, other: &GaussianMixture, dist: &InputDistribution) -> Result<f64> {
        let mut acc = 0.0;
        for (a, w) in other.atoms.iter().zip(&other.weights) {
            acc += w * self.inner_with_atom(a, dist)?;
        }
        Ok(acc)
    }

    pub fn norm_sq(&self, dist: &InputDistribution) -> Result<f64> {
        self.inner(self, dist)
    }

    /// `b_i = ⟨f_i, ψ⟩` for every atom of `dict`.
    pub fn cross_inner(&self, dict: &Dictionary, dist: &InputDistribution) -> Result<DVector<f64>> {
        let mut b = DVector::zeros(dict.len());
        for (i, a) in dict.atoms().iter().enumerate() {
            b[i] = self.inner_with_atom(a, dist)?;
        }
        Ok(b)
    }
}
