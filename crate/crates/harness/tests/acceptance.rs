//! Acceptance suite: one PASS/FAIL line per criterion. With
//! `L2PROJ_ACCEPTANCE_STRICT=1` the process exits nonzero if any criterion
//! fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::*;
use l2proj::gram::{gram_analytical, inner_product_analytical, GramEstimate};
use l2proj::learner::{DictionaryPolicy, Learner, LearnerConfig, MetricKind};
use l2proj::model::{Dictionary, GaussianAtom, GaussianMixture, StreamSample};
use l2proj::subspace::{
    ald_ratio, coherence_ald_bound, mmse_batch, projection_residual_sq, SubspaceKernel,
};
use l2proj::{DMatrix, DVector, InputDistribution};
use l2proj_harness::config::{DataSource, ExperimentConfig, Protocol};
use l2proj_harness::data::{self, Dataset};
use l2proj_harness::eigspread::{eigspread, EigspreadConfig};
use l2proj_harness::{cv, run, Algorithm};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const FLAT: InputDistribution = InputDistribution::NoninformativeUniform;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let t = start.elapsed();
    (t <= limit, format!("{:.1}s of {}s", t.as_secs_f64(), limit.as_secs()))
}

fn flat_inner(p: &GaussianAtom, q: &GaussianAtom) -> f64 {
    let s2 = p.scale().powi(2) + q.scale().powi(2);
    gaussian(p.center(), q.center(), s2.sqrt())
}

fn flat_gram(dict: &Dictionary) -> DMatrix<f64> {
    let a = dict.atoms();
    DMatrix::from_fn(a.len(), a.len(), |i, j| flat_inner(&a[i], &a[j]))
}

fn flat_coherence(p: &GaussianAtom, q: &GaussianAtom) -> f64 {
    flat_inner(p, q) / (flat_inner(p, p) * flat_inner(q, q)).sqrt()
}

fn basis(dict: &Dictionary, x: &[f64]) -> DVector<f64> {
    DVector::from_iterator(dict.len(), dict.atoms().iter().map(|a| gaussian(x, a.center(), a.scale())))
}

fn random_point(r: &mut ChaCha8Rng, dim: usize, span: f64) -> Vec<f64> {
    (0..dim).map(|_| r.random_range(-span..span)).collect()
}

/// Up to 10 atoms over two scales, pairwise separated so the exact Gram
/// is well conditioned.
fn conditioned_dictionary(r: &mut ChaCha8Rng) -> Dictionary {
    let dim = r.random_range(1..=2);
    let size = r.random_range(1..=10);
    let scales = [0.8, 0.3];
    let mut dict = Dictionary::new(dim);
    let mut tries = 0;
    while dict.len() < size && tries < 500 {
        tries += 1;
        let q = r.random_range(0..2);
        let cand = GaussianAtom::new(random_point(r, dim, 4.0), scales[q], q).unwrap();
        let far = dict.atoms().iter().all(|a| {
            let d2: f64 = a.center().iter().zip(cand.center()).map(|(x, y)| (x - y).powi(2)).sum();
            d2.sqrt() >= 1.2 * (a.scale() + cand.scale())
        });
        if far {
            dict.push(cand).unwrap();
        }
    }
    dict
}

fn reproducing_property() -> Verdict {
    let start = Instant::now();
    let mut r = rng(1001);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let dict = conditioned_dictionary(&mut r);
        let gram = gram_analytical(&dict, &FLAT, 1.0).unwrap();
        let kernel = SubspaceKernel::new(&dict, &gram).unwrap();
        let alpha = random_vector(&mut r, dict.len(), 2.0);
        let x = random_point(&mut r, dict.dim(), 4.0);
        let got = kernel.inner(&alpha, &kernel.section(&x).unwrap()).unwrap();
        let fx = basis(&dict, &x);
        let scale = alpha.abs().dot(&fx.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max((got - alpha.dot(&fx)).abs() / scale);
    }
    let (fast, time) = within(Duration::from_secs(10), start);
    Verdict::new(worst <= 1e-8 && fast, format!("max relative error {worst:.2e} (limit 1e-8), {time}"))
}

fn closed_forms() -> Verdict {
    let start = Instant::now();
    let mut r = rng(1002);
    let mut quad_worst = 0.0f64;
    for k in 0..40 {
        let (sp, sq) = (r.random_range(0.1..2.0), r.random_range(0.1..2.0));
        if k < 30 {
            let (cp, cq) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
            let a = GaussianAtom::new(vec![cp], sp, 0).unwrap();
            let b = GaussianAtom::new(vec![cq], sq, 1).unwrap();
            let closed = inner_product_analytical(&a, &b, &FLAT).unwrap();
            let quad = quad_inner_1d(cp, sp, cq, sq);
            quad_worst = quad_worst.max((closed - quad).abs() / quad);
        } else {
            let cp = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
            let cq = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
            let (sp, sq) = (sp.max(0.3), sq.max(0.3));
            let a = GaussianAtom::new(cp.to_vec(), sp, 0).unwrap();
            let b = GaussianAtom::new(cq.to_vec(), sq, 1).unwrap();
            let closed = inner_product_analytical(&a, &b, &FLAT).unwrap();
            let quad = quad_inner_2d(cp, sp, cq, sq);
            quad_worst = quad_worst.max((closed - quad).abs() / quad);
        }
    }
    let mut mc_worst = 0.0f64;
    for k in 0..50u64 {
        let dim = if k % 5 == 4 { 2 } else { 1 };
        let (sp, sq) = (r.random_range(0.3..1.5), r.random_range(0.3..1.5));
        let sigma = r.random_range(0.5..1.5);
        let u = random_point(&mut r, dim, 1.0);
        let v = random_point(&mut r, dim, 1.0);
        let a = GaussianAtom::new(u.clone(), sp, 0).unwrap();
        let b = GaussianAtom::new(v.clone(), sq, 1).unwrap();
        let closed = inner_product_analytical(&a, &b, &InputDistribution::GaussianIsotropic { sigma }).unwrap();
        let (mean, se) = mc_inner_gaussian(&u, sp, &v, sq, sigma, 10_000_000, 2000 + k);
        mc_worst = mc_worst.max((closed - mean).abs() / se);
    }
    let (fast, time) = within(Duration::from_secs(120), start);
    Verdict::new(
        quad_worst <= 1e-9 && mc_worst <= 4.0 && fast,
        format!("quadrature max relative error {quad_worst:.2e} (limit 1e-9), Monte Carlo worst {mc_worst:.2} SE (limit 4), {time}"),
    )
}

fn recursive_inverse() -> Verdict {
    let start = Instant::now();
    let mut g = rng(1003);
    let gamma = 0.9;
    let (mut worst, mut rel, mut oracle_gap, mut over) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    for _ in 0..500 {
        let mut seq_worst = 0.0f64;
        let mut f0 = DVector::zeros(1);
        f0[0] = g.random_range(0.2..1.0);
        let mut est = GramEstimate::recursive_init(&f0, gamma).unwrap();
        let mut acc = &f0 * f0.transpose() + DMatrix::identity(1, 1) * (1.0 - gamma);
        while est.size() < 25 {
            let r = est.size();
            if g.random_bool(0.5) {
                let f = random_vector(&mut g, r, 1.0);
                est.recursive_same_dict(&f).unwrap();
                acc += &f * f.transpose();
            } else {
                let mut f = random_vector(&mut g, r + 1, 1.0);
                let fallback = g.random_bool(0.1);
                f[r] = if fallback { 0.0 } else { g.random_range(0.3..1.0) };
                est.recursive_grow(&f).unwrap();
                acc = acc.resize(r + 1, r + 1, 0.0) + &f * f.transpose();
                if fallback {
                    acc[(r, r)] += 1.0 - gamma;
                }
            }
            let direct = gauss_jordan_inverse(&acc);
            let err = max_abs_diff(est.inverse().unwrap(), &direct);
            if err > worst {
                let lu = acc.clone().lu().try_inverse().expect("accumulated matrix is invertible");
                oracle_gap = max_abs_diff(&lu, &direct);
            }
            worst = worst.max(err);
            seq_worst = seq_worst.max(err);
            rel = rel.max(err / direct.abs().max());
        }
        over += usize::from(seq_worst > 1e-7);
    }
    let (fast, time) = within(Duration::from_secs(30), start);
    Verdict::new(
        worst <= 1e-7 && fast,
        format!(
            "max-norm inverse error {worst:.2e} (limit 1e-7), {over}/500 sequences over; relative to the inverse {rel:.2e}, \
             two dense oracles disagree by {oracle_gap:.2e} at the worst case, {time}"
        ),
    )
}

fn frozen_dictionary() -> Dictionary {
    Dictionary::from_atoms(1, (0..6).map(|k| GaussianAtom::new(vec![-2.0 + 0.8 * k as f64], 0.5, 0).unwrap())).unwrap()
}

fn monotone_approximation() -> Verdict {
    let dict = frozen_dictionary();
    let rho = 0.05;
    let mut r = rng(1004);
    let h_true = random_vector(&mut r, dict.len(), 1.0);
    let peak = dict.atoms().iter().map(|a| a.peak()).fold(0.0, f64::max);
    let samples: Vec<StreamSample> = (0..1000)
        .map(|n| {
            let u = vec![r.random_range(-2.0..2.0)];
            let d = dict.eval_basis(&u).unwrap().dot(&h_true) + r.random_range(-0.5..0.5) * rho;
            StreamSample::new(u, d, n)
        })
        .collect();
    let probes: Vec<DVector<f64>> = (0..10)
        .map(|_| {
            let p = random_vector(&mut r, dict.len(), 1.0);
            &h_true + &p * (0.5 * rho / (p.abs().sum() * peak))
        })
        .collect();
    let metrics = [
        ("analytical", MetricKind::Analytical(FLAT)),
        ("finite_sample", MetricKind::FiniteSample),
        ("recursive", MetricKind::Recursive),
    ];
    let (mut violations, mut checked, mut worst) = (0usize, 0usize, f64::NEG_INFINITY);
    for (_, metric) in metrics {
        for step in [0.1, 1.0, 1.9] {
            let mut config = LearnerConfig::new(vec![0.5]);
            config.metric = metric;
            config.step_size = step;
            config.hyperslab = rho;
            config.update_gamma = 0.0;
            config.dictionary = DictionaryPolicy::Frozen;
            let mut l = Learner::with_dictionary(dict.clone(), config).unwrap();
            for s in &samples {
                let before = l.coefficients().clone();
                l.step(s).unwrap();
                let m = l.metric_matrix();
                for p in &probes {
                    let a = &before - p;
                    let b = l.coefficients() - p;
                    let growth = b.dot(&(&m * &b)) - a.dot(&(&m * &a));
                    checked += 1;
                    worst = worst.max(growth);
                    if growth > 1e-10 {
                        violations += 1;
                    }
                }
            }
        }
    }
    Verdict::new(
        violations == 0,
        format!("{violations} violations in {checked} probe checks, largest distance growth {worst:.2e} (limit 1e-10)"),
    )
}

fn coherence_bound() -> Verdict {
    let mut r = rng(1005);
    let (mut checked, mut failures, mut slack) = (0, 0, f64::INFINITY);
    while checked < 1000 {
        let m = r.random_range(1..=5);
        let delta = r.random_range(0.01..(1.0 / m as f64).min(0.95));
        let dim = r.random_range(1..=2);
        let mut atoms: Vec<GaussianAtom> = Vec::new();
        let mut tries = 0;
        while atoms.len() < m + 1 && tries < 2000 {
            tries += 1;
            let s = r.random_range(0.3..1.0);
            let cand = GaussianAtom::new(random_point(&mut r, dim, 3.0), s, 0).unwrap();
            if atoms.iter().all(|a| flat_coherence(a, &cand) <= delta) {
                atoms.push(cand);
            }
        }
        if atoms.len() < m + 1 {
            continue;
        }
        let cand = atoms.pop().unwrap();
        let dict = Dictionary::from_atoms(dim, atoms).unwrap();
        let gram = gram_analytical(&dict, &FLAT, 1.0).unwrap();
        let ratio = ald_ratio(&dict, &gram, &cand, &FLAT).unwrap();
        let bound = coherence_ald_bound(m, delta).unwrap();
        slack = slack.min(ratio - bound);
        if ratio < bound - 1e-9 {
            failures += 1;
        }
        checked += 1;
    }
    Verdict::new(failures == 0, format!("{failures} of {checked} cases below the bound, smallest slack {slack:.2e}"))
}

fn mmse_reduction() -> Verdict {
    let mut r = rng(1006);
    let (mut checked, mut failures, mut slack) = (0, 0, f64::INFINITY);
    while checked < 100 {
        let dist = if checked % 2 == 0 { FLAT } else { InputDistribution::GaussianIsotropic { sigma: 1.5 } };
        let full = conditioned_dictionary(&mut r);
        if full.len() < 2 {
            continue;
        }
        let atoms = full.atoms();
        let cand = atoms[atoms.len() - 1].clone();
        let small = Dictionary::from_atoms(full.dim(), atoms[..atoms.len() - 1].to_vec()).unwrap();
        let mut psi_atoms = full.atoms().to_vec();
        psi_atoms.push(GaussianAtom::new(random_point(&mut r, full.dim(), 3.0), 0.5, 2).unwrap());
        let weights = (0..psi_atoms.len()).map(|_| r.random_range(-2.0..2.0)).collect();
        let psi = GaussianMixture::new(psi_atoms, weights).unwrap();
        let norm_sq = psi.norm_sq(&dist).unwrap();
        let g_small = gram_analytical(&small, &dist, 1.0).unwrap();
        let g_full = gram_analytical(&full, &dist, 1.0).unwrap();
        let b_small = psi.cross_inner(&small, &dist).unwrap();
        let b_full = psi.cross_inner(&full, &dist).unwrap();
        let drop = projection_residual_sq(&b_small, norm_sq, &g_small).unwrap()
            - projection_residual_sq(&b_full, norm_sq, &g_full).unwrap();
        let h = mmse_batch(&full, &g_full, &b_full).unwrap();
        let last = h.len() - 1;
        let bound = h[last] * h[last] * g_full.matrix()[(last, last)] * ald_ratio(&small, &g_small, &cand, &dist).unwrap();
        slack = slack.min(drop - bound);
        if drop < bound - 1e-9 {
            failures += 1;
        }
        checked += 1;
    }
    Verdict::new(failures == 0, format!("{failures} of {checked} problems below the bound, smallest slack {slack:.2e}"))
}

fn best_approximation() -> Verdict {
    let mut r = rng(1007);
    let mut batch_worst = 0.0f64;
    for _ in 0..100 {
        let dict = conditioned_dictionary(&mut r);
        let psi_atoms: Vec<GaussianAtom> = (0..3)
            .map(|q| GaussianAtom::new(random_point(&mut r, dict.dim(), 3.0), 0.5 + 0.1 * q as f64, q).unwrap())
            .collect();
        let weights: Vec<f64> = (0..3).map(|_| r.random_range(-1.0..1.0)).collect();
        let b = DVector::from_iterator(
            dict.len(),
            dict.atoms().iter().map(|a| psi_atoms.iter().zip(&weights).map(|(p, w)| w * flat_inner(a, p)).sum::<f64>()),
        );
        let psi = GaussianMixture::new(psi_atoms, weights).unwrap();
        let gram = gram_analytical(&dict, &FLAT, 1.0).unwrap();
        let batch = mmse_batch(&dict, &gram, &psi.cross_inner(&dict, &FLAT).unwrap()).unwrap();
        let direct = gauss_jordan_inverse(&flat_gram(&dict)) * b;
        batch_worst = batch_worst.max((batch - &direct).abs().max() / direct.abs().max().max(1.0));
    }

    let dict = spread_dictionary(&mut r, 1, 4, 2.0, 0.5, 1.5);
    let alpha = random_vector(&mut r, dict.len(), 1.0);
    let psi = GaussianMixture::new(dict.atoms().to_vec(), alpha.iter().copied().collect()).unwrap();
    let gram = gram_analytical(&dict, &FLAT, 1.0).unwrap();
    let target = mmse_batch(&dict, &gram, &psi.cross_inner(&dict, &FLAT).unwrap()).unwrap();
    let mut config = LearnerConfig::new(vec![0.5]);
    config.metric = MetricKind::Analytical(FLAT);
    config.step_size = 0.5;
    config.hyperslab = 0.0;
    config.dictionary = DictionaryPolicy::Frozen;
    let mut l = Learner::with_dictionary(dict.clone(), config).unwrap();
    for n in 0..20_000 {
        let u = vec![r.random_range(-3.0..3.0)];
        let d = dict.eval_basis(&u).unwrap().dot(&alpha);
        l.step(&StreamSample::new(u, d, n)).unwrap();
    }
    let e = l.coefficients() - &target;
    let r_norm = e.dot(&(gram.matrix() * &e)).sqrt();
    Verdict::new(
        batch_worst <= 1e-9 && r_norm <= 1e-3,
        format!("batch vs normal equation {batch_worst:.2e} (limit 1e-9), online distance in R-norm {r_norm:.2e} (limit 1e-3)"),
    )
}

struct SpreadOutcome {
    ordered: usize,
    close: usize,
    ratios: Vec<String>,
    time: (bool, String),
    error: Option<String>,
}

fn spread_outcome() -> &'static SpreadOutcome {
    static CELL: OnceLock<SpreadOutcome> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let config = EigspreadConfig::default();
        let mut out = SpreadOutcome { ordered: 0, close: 0, ratios: Vec::new(), time: (true, String::new()), error: None };
        for seed in 1..=10u64 {
            let traces = match eigspread(&config, seed) {
                Ok(t) => t,
                Err(e) => {
                    out.error = Some(format!("seed {seed}: {e}"));
                    break;
                }
            };
            let spread = |m: &str| traces.iter().find(|t| t.method == m).map_or(f64::NAN, |t| t.terminal());
            let (an, fs, ch, mk) = (spread("analytical"), spread("finite_sample"), spread("chypass"), spread("mknlms"));
            out.ordered += usize::from(an < ch && ch < mk);
            let ratio = (fs / an).max(an / fs);
            out.close += usize::from(ratio <= 2.0);
            out.ratios.push(format!("{ratio:.2}"));
        }
        out.time = within(Duration::from_secs(300), start);
        out
    })
}

fn spread_ordering() -> Verdict {
    let o = spread_outcome();
    if let Some(e) = &o.error {
        return Verdict::new(false, e.clone());
    }
    Verdict::new(
        o.ordered >= 9 && o.time.0,
        format!("analytical < chypass < mknlms in {}/10 repeats (need 9), {}", o.ordered, o.time.1),
    )
}

fn spread_finite_sample() -> Verdict {
    let o = spread_outcome();
    if let Some(e) = &o.error {
        return Verdict::new(false, e.clone());
    }
    Verdict::new(
        o.close >= 9,
        format!("finite_sample within 2x of analytical in {}/10 repeats (need 9), ratios {}", o.close, o.ratios.join(" ")),
    )
}

fn ccpp_path() -> PathBuf {
    std::env::var_os("L2PROJ_CCPP_CSV").map(PathBuf::from).unwrap_or_else(|| {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/ccpp.csv")
    })
}

fn ccpp_config(algorithm: Algorithm, step_size: f64, delta: f64, scales: Vec<f64>) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.seed = Some(1);
    c.algorithm = algorithm;
    c.protocol = Protocol::TrainTest;
    c.learner.step_size = step_size;
    c.learner.coherence_threshold = delta;
    c.learner.hyperslab = 0.0;
    c.learner.lne_threshold = 0.0;
    c.learner.gram_gamma = 0.999;
    c.learner.update_gamma = 1e-8;
    c.learner.subset_size = Some(7);
    c.learner.scales = scales;
    c.learner.nlms_bias = algorithm == Algorithm::Nlms;
    c.data.source = Some(DataSource::Csv);
    c.data.path = Some(ccpp_path());
    c.data.inputs = ["AT", "V", "AP", "RH"].map(String::from).to_vec();
    c.data.target = Some("PE".into());
    c.cv.repeats = 5;
    c
}

fn ccpp() -> Verdict {
    let start = Instant::now();
    let path = ccpp_path();
    let data = match data::ingest_csv(&path, &["AT", "V", "AP", "RH"].map(String::from), "PE") {
        Ok(d) => d,
        Err(e) => return Verdict::new(false, format!("dataset unavailable ({e}); set L2PROJ_CCPP_CSV")),
    };
    let multi = vec![40.0, 25.0, 15.0, 5.0];
    let runs = [
        ("finite_sample", ccpp_config(Algorithm::FiniteSample, 0.0334, 0.9988, multi.clone())),
        ("chypass", ccpp_config(Algorithm::Chypass, 0.1749, 0.9976, multi)),
        ("hypass", ccpp_config(Algorithm::Hypass, 0.3784, 0.9971, vec![9.4857])),
        ("knlms", ccpp_config(Algorithm::Knlms, 0.5720, 0.9481, vec![15.0643])),
        ("nlms", ccpp_config(Algorithm::Nlms, 0.8435, 0.0, vec![1.0])),
    ];
    let mut means = Vec::new();
    for (name, c) in &runs {
        match cv::cross_validate(c, &data) {
            Ok(r) => means.push((*name, r.mean)),
            Err(e) => return Verdict::new(false, format!("{name}: {e}")),
        }
    }
    let fs = means[0].1;
    let nlms = means[4].1;
    let ordered = means.windows(2).all(|w| w[0].1 < w[1].1);
    let (fast, time) = within(Duration::from_secs(900), start);
    let listing: Vec<String> = means.iter().map(|(n, m)| format!("{n} {m:.4}")).collect();
    Verdict::new(
        (4.95..=5.35).contains(&fs) && nlms > 7.0 && ordered && fast,
        format!("mean RMSE {} (finite_sample in [4.95, 5.35], nlms > 7.0, increasing order), {time}", listing.join(", ")),
    )
}

/// Steady-state NMSE: `Σe² / Σd²` over the last fifth of the stream.
fn steady_nmse(r: &run::RunResult) -> f64 {
    let tail = &r.reports[r.reports.len() * 4 / 5..];
    let e: f64 = tail.iter().map(|s| s.error * s.error).sum();
    let d: f64 = tail.iter().map(|s| s.target * s.target).sum();
    e / d
}

fn gps_config() -> ExperimentConfig {
    let text = include_str!("../../../configs/gps.toml");
    ExperimentConfig::from_toml(text).expect("shipped pseudo-range config parses")
}

fn tuning_grid(algorithm: Algorithm) -> Vec<(f64, f64, Vec<f64>)> {
    let ladder = vec![0.5, 0.3, 0.2, 0.1];
    let mut grid = Vec::new();
    match algorithm {
        Algorithm::Nlms => {
            for l in [0.1, 0.5, 1.0, 1.5] {
                grid.push((l, 0.0, vec![1.0]));
            }
        }
        Algorithm::Knlms | Algorithm::Hypass => {
            for s in [0.1, 0.2, 0.5, 1.0] {
                for l in [0.5, 1.0] {
                    for d in [0.8, 0.95] {
                        grid.push((l, d, vec![s]));
                    }
                }
            }
        }
        _ => {
            for l in [0.3, 0.5, 1.0] {
                for d in [0.8, 0.95] {
                    grid.push((l, d, ladder.clone()));
                }
            }
        }
    }
    grid
}

fn gps_run(base: &ExperimentConfig, algorithm: Algorithm, p: &(f64, f64, Vec<f64>), data: &Dataset) -> f64 {
    let mut c = base.clone();
    c.algorithm = algorithm;
    c.learner.step_size = p.0;
    c.learner.coherence_threshold = p.1;
    c.learner.scales = p.2.clone();
    run::run_on(&c, data).map_or(f64::INFINITY, |r| steady_nmse(&r)).max(0.0)
}

fn gps_ordering() -> Verdict {
    let base = gps_config();
    let params = base.data.pseudorange.unwrap_or_default();
    let load = |seed: u64| {
        let mut d = base.data.clone();
        d.pseudorange = Some(params);
        data::load(&d, seed).expect("pseudo-range stream")
    };
    let tune = load(1);
    let held_out: Vec<Dataset> = (2..=4).map(load).collect();
    let algorithms = [
        Algorithm::Analytical,
        Algorithm::FiniteSample,
        Algorithm::Recursive,
        Algorithm::Hypass,
        Algorithm::Chypass,
        Algorithm::Knlms,
        Algorithm::Nlms,
    ];
    let mut db = Vec::new();
    for a in algorithms {
        let grid = tuning_grid(a);
        let best = grid
            .iter()
            .map(|p| (p, gps_run(&base, a, p, &tune)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .map(|(p, _)| p.clone())
            .expect("grid is not empty");
        let mean = held_out.iter().map(|d| gps_run(&base, a, &best, d)).sum::<f64>() / held_out.len() as f64;
        db.push((a, 10.0 * mean.log10()));
    }
    let get = |a: Algorithm| db.iter().find(|x| x.0 == a).map_or(f64::NAN, |x| x.1);
    let (knlms, nlms) = (get(Algorithm::Knlms), get(Algorithm::Nlms));
    let group_worst = db[..5].iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let listing: Vec<String> = db.iter().map(|(a, v)| format!("{} {v:.1}", a.name())).collect();
    Verdict::new(
        group_worst < knlms && knlms < nlms,
        format!("held-out steady-state NMSE dB: {}", listing.join(", ")),
    )
}

fn cv_determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_l2proj");
    let root = std::env::temp_dir().join(format!("l2proj-acceptance-{}", std::process::id()));
    let run_once = |name: &str| -> Result<Vec<u8>, String> {
        let out = root.join(name);
        let status = Command::new(bin)
            .args(["cv", "--seed", "7", "--generator", "uniform", "--length", "400", "--algorithm", "finite_sample"])
            .args(["--scales", "0.5,0.2", "--step-size", "0.2", "--delta", "0.9", "--repeats", "2", "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        std::fs::read(out.join("summary.csv")).map_err(|e| e.to_string())
    };
    let verdict = match (run_once("a"), run_once("b")) {
        (Ok(a), Ok(b)) => Verdict::new(a == b, format!("summary.csv {} bytes, identical: {}", a.len(), a == b)),
        (Err(e), _) | (_, Err(e)) => Verdict::new(false, format!("cv failed: {}", e.trim())),
    };
    let _ = std::fs::remove_dir_all(&root);
    verdict
}

fn main() -> ExitCode {
    let criteria: [(&str, &str, fn() -> Verdict); 12] = [
        ("1", "reproducing property", reproducing_property),
        ("2", "closed-form inner products", closed_forms),
        ("3", "recursive inverse", recursive_inverse),
        ("4", "monotone approximation", monotone_approximation),
        ("5", "coherence bound", coherence_bound),
        ("6", "MMSE reduction bound", mmse_reduction),
        ("7", "best approximation", best_approximation),
        ("8a", "eigenvalue spread ordering", spread_ordering),
        ("8b", "finite-sample spread", spread_finite_sample),
        ("9", "power plant regression", ccpp),
        ("10", "pseudo-range ordering", gps_ordering),
        ("11", "cv determinism", cv_determinism),
    ];
    let mut failed = 0;
    for (id, name, check) in &criteria {
        let v = check();
        failed += usize::from(!v.pass);
        println!("{} {id:>3} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    let strict = std::env::var_os("L2PROJ_ACCEPTANCE_STRICT").is_some_and(|v| v == "1");
    if failed == 0 || !strict {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
