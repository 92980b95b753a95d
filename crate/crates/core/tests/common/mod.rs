//! Independent oracles shared by the integration tests and the acceptance
//! suite. Nothing here calls the closed forms or solvers under test.
#![allow(dead_code)]

use l2proj::model::{Dictionary, GaussianAtom};
use l2proj::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Normalized Gaussian written out from its definition.
pub fn gaussian(x: &[f64], c: &[f64], s: f64) -> f64 {
    let l = x.len() as f64;
    let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
    (2.0 * std::f64::consts::PI * s * s).powf(-l / 2.0) * (-d2 / (2.0 * s * s)).exp()
}

fn simpson_step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` with absolute tolerance
/// `tol`. The interval is pre-split into `pieces` panels so narrow peaks
/// are not missed by the first coarse estimate.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, pieces: usize) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let lo = a + k as f64 * h;
            let hi = lo + h;
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson_step(&f, lo, hi, fa, fm, fb, whole, tol / pieces as f64, 50)
        })
        .sum()
}

/// `∫ g_p(w) g_q(w) dw` over the real line by quadrature.
pub fn quad_inner_1d(cp: f64, sp: f64, cq: f64, sq: f64) -> f64 {
    let s = sp.max(sq);
    let lo = cp.min(cq) - 14.0 * s;
    let hi = cp.max(cq) + 14.0 * s;
    let scale = gaussian(&[cp], &[cp], sp) * gaussian(&[cq], &[cq], sq);
    adaptive_simpson(|w| gaussian(&[w], &[cp], sp) * gaussian(&[w], &[cq], sq), lo, hi, 1e-14 * scale, 64)
}

/// `∫∫ g_p(w) g_q(w) dw` over the plane by nested quadrature.
pub fn quad_inner_2d(cp: [f64; 2], sp: f64, cq: [f64; 2], sq: f64) -> f64 {
    let s = sp.max(sq);
    let bounds = |k: usize| (cp[k].min(cq[k]) - 12.0 * s, cp[k].max(cq[k]) + 12.0 * s);
    let (x0, x1) = bounds(0);
    let (y0, y1) = bounds(1);
    let scale = gaussian(&cp, &cp, sp) * gaussian(&cq, &cq, sq);
    adaptive_simpson(
        |x| {
            adaptive_simpson(
                |y| gaussian(&[x, y], &cp, sp) * gaussian(&[x, y], &cq, sq),
                y0,
                y1,
                1e-15 * scale,
                16,
            )
        },
        x0,
        x1,
        1e-14 * scale * (y1 - y0),
        16,
    )
}

/// Monte-Carlo estimate of `E[g_p(w) g_q(w)]` with `w ~ N(0, σ²I)`;
/// returns `(mean, standard error)`.
pub fn mc_inner_gaussian(cp: &[f64], sp: f64, cq: &[f64], sq: f64, sigma: f64, n: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let l = cp.len();
    let mut w = vec![0.0; l];
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..n {
        for x in w.iter_mut() {
            *x = sigma * r.sample::<f64, _>(StandardNormal);
        }
        let v = gaussian(&w, cp, sp) * gaussian(&w, cq, sq);
        sum += v;
        sum2 += v * v;
    }
    let mean = sum / n as f64;
    let var = (sum2 / n as f64 - mean * mean).max(0.0) * n as f64 / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Inverse by Gauss–Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut inv = DMatrix::<f64>::identity(n, n);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs())).unwrap();
        a.swap_rows(col, pivot);
        inv.swap_rows(col, pivot);
        let p = a[(col, col)];
        for j in 0..n {
            a[(col, j)] /= p;
            inv[(col, j)] /= p;
        }
        for i in 0..n {
            if i != col {
                let factor = a[(i, col)];
                if factor != 0.0 {
                    for j in 0..n {
                        a[(i, j)] -= factor * a[(col, j)];
                        inv[(i, j)] -= factor * inv[(col, j)];
                    }
                }
            }
        }
    }
    inv
}

/// Random SPD matrix `AAᵀ + shift·I`.
pub fn random_spd(r: &mut ChaCha8Rng, n: usize, shift: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(n, n) * shift
}

pub fn random_vector(r: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| r.random_range(-scale..scale))
}

/// Dictionary of `size` atoms with centers in `[-span, span]^dim` and
/// scales drawn from `scales`.
pub fn random_dictionary(r: &mut ChaCha8Rng, dim: usize, size: usize, span: f64, scales: &[f64]) -> Dictionary {
    let mut dict = Dictionary::new(dim);
    while dict.len() < size {
        let q = r.random_range(0..scales.len());
        let c: Vec<f64> = (0..dim).map(|_| r.random_range(-span..span)).collect();
        let _ = dict.push(GaussianAtom::new(c, scales[q], q).unwrap());
    }
    dict
}

/// Dictionary whose atoms are pairwise at least `min_gap` apart in
/// kernel-scaled distance, which keeps the Gram matrix well conditioned.
pub fn spread_dictionary(r: &mut ChaCha8Rng, dim: usize, size: usize, span: f64, scale: f64, min_gap: f64) -> Dictionary {
    let mut dict = Dictionary::new(dim);
    let mut tries = 0;
    while dict.len() < size && tries < 100_000 {
        tries += 1;
        let c: Vec<f64> = (0..dim).map(|_| r.random_range(-span..span)).collect();
        let ok = dict.atoms().iter().all(|a| {
            let d2: f64 = a.center().iter().zip(&c).map(|(x, y)| (x - y) * (x - y)).sum();
            d2.sqrt() >= min_gap * scale
        });
        if ok {
            dict.push(GaussianAtom::new(c, scale, 0).unwrap()).unwrap();
        }
    }
    assert_eq!(dict.len(), size, "could not place {size} separated atoms");
    dict
}

/// Entrywise max of `|a - b|`.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

/// Eigenvalues of a symmetric 3×3 matrix from the characteristic cubic
/// (trigonometric form), ascending.
pub fn symmetric_cubic_eigenvalues(m: &DMatrix<f64>) -> [f64; 3] {
    let p1 = m[(0, 1)].powi(2) + m[(0, 2)].powi(2) + m[(1, 2)].powi(2);
    let q = (m[(0, 0)] + m[(1, 1)] + m[(2, 2)]) / 3.0;
    let p2 = (m[(0, 0)] - q).powi(2) + (m[(1, 1)] - q).powi(2) + (m[(2, 2)] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = (m - DMatrix::identity(3, 3) * q) / p;
    let det_b = b[(0, 0)] * (b[(1, 1)] * b[(2, 2)] - b[(1, 2)] * b[(2, 1)])
        - b[(0, 1)] * (b[(1, 0)] * b[(2, 2)] - b[(1, 2)] * b[(2, 0)])
        + b[(0, 2)] * (b[(1, 0)] * b[(2, 1)] - b[(1, 1)] * b[(2, 0)]);
    let phi = (det_b / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    let mut e = [e1, e2, e3];
    e.sort_by(f64::total_cmp);
    e
}
