//! Sample sources: CSV files and the seeded generators.

use std::path::Path;

use l2proj::datagen::{gaussian_stream, pseudorange_stream, uniform_stream, NoiseModel, TargetFunction};
use l2proj::{GaussianAtom, GaussianMixture, StreamSample};

use crate::config::{DataSection, DataSource, TargetKind};
use crate::error::{io_err, Error, Result};

/// Samples held column-wise by row, in file or stream order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub input_names: Vec<String>,
    pub target_name: String,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.input_names.len()
    }

    pub fn from_samples(samples: &[StreamSample]) -> Self {
        let dim = samples.first().map_or(0, StreamSample::dim);
        Self {
            input_names: (0..dim).map(|i| format!("x{i}")).collect(),
            target_name: "y".into(),
            inputs: samples.iter().map(|s| s.input.clone()).collect(),
            targets: samples.iter().map(|s| s.target).collect(),
        }
    }

    /// Rows `idx` in the given order, re-indexed from 0.
    pub fn samples(&self, idx: &[usize]) -> Vec<StreamSample> {
        idx.iter().enumerate().map(|(n, &i)| StreamSample::new(self.inputs[i].clone(), self.targets[i], n)).collect()
    }

    pub fn all_samples(&self) -> Vec<StreamSample> {
        self.samples(&(0..self.len()).collect::<Vec<_>>())
    }

    /// Writes the columns with a header row; floats are printed in their
    /// shortest exact form so reading the file back is lossless.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let mut header = self.input_names.clone();
        header.push(self.target_name.clone());
        w.write_record(&header).map_err(csv_err)?;
        for (x, y) in self.inputs.iter().zip(&self.targets) {
            let row: Vec<String> = x.iter().chain(std::iter::once(y)).map(|v| v.to_string()).collect();
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(io_err(path))
    }
}

/// Reads `inputs` and `target` from a headed CSV file. Row numbers in
/// errors count data rows from 1, the header excluded.
pub fn ingest_csv(path: &Path, inputs: &[String], target: &str) -> Result<Dataset> {
    if !path.exists() {
        return Err(Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        });
    }
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    let column = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn { path: path.to_path_buf(), column: name.to_string() })
    };
    let input_cols = inputs.iter().map(|c| column(c)).collect::<Result<Vec<_>>>()?;
    let target_col = column(target)?;

    let mut data = Dataset {
        input_names: inputs.to_vec(),
        target_name: target.to_string(),
        inputs: Vec::new(),
        targets: Vec::new(),
    };
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::MalformedRow { path: path.to_path_buf(), row, message: e.to_string() })?;
        let cell = |c: usize| -> Result<f64> {
            let raw = record.get(c).unwrap_or("");
            raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::MalformedRow {
                path: path.to_path_buf(),
                row,
                message: format!("column `{}` is not a finite number: {raw:?}", &header[c]),
            })
        };
        data.inputs.push(input_cols.iter().map(|&c| cell(c)).collect::<Result<_>>()?);
        data.targets.push(cell(target_col)?);
    }
    Ok(data)
}

/// Per-column z-score of the inputs and the target, fitted on a subset of
/// rows. Models learn in standardized units; [`Standardizer::unscale`]
/// maps their outputs back.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
}

fn moments(rows: &[usize], value: impl Fn(usize) -> f64) -> (f64, f64) {
    let n = rows.len() as f64;
    let mean = rows.iter().map(|&i| value(i)).sum::<f64>() / n;
    let var = rows.iter().map(|&i| (value(i) - mean) * (value(i) - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Standardizer {
    pub fn fit(data: &Dataset, rows: &[usize]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Data("standardization needs at least two training rows".into()));
        }
        let (mut mean, mut std) = (Vec::new(), Vec::new());
        for c in 0..data.dim() {
            let (m, s) = moments(rows, |i| data.inputs[i][c]);
            if !(s > 0.0) {
                return Err(Error::Data(format!("column `{}` is constant on the training rows", data.input_names[c])));
            }
            mean.push(m);
            std.push(s);
        }
        let (target_mean, target_std) = moments(rows, |i| data.targets[i]);
        if !(target_std > 0.0) {
            return Err(Error::Data(format!("target `{}` is constant on the training rows", data.target_name)));
        }
        Ok(Self { mean, std, target_mean, target_std })
    }

    pub fn apply(&self, data: &Dataset) -> Dataset {
        let mut out = data.clone();
        for x in &mut out.inputs {
            for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        for y in &mut out.targets {
            *y = (*y - self.target_mean) / self.target_std;
        }
        out
    }

    /// Standardized prediction back to target units.
    pub fn unscale(&self, y: f64) -> f64 {
        y * self.target_std + self.target_mean
    }
}

fn sine(x: &[f64]) -> f64 {
    x.iter().map(|v| (3.0 * v).sin()).sum()
}

fn sinc(x: &[f64]) -> f64 {
    x.iter()
        .map(|v| {
            let t = std::f64::consts::PI * v;
            if t == 0.0 {
                1.0
            } else {
                t.sin() / t
            }
        })
        .product()
}

fn target_function(d: &DataSection) -> Result<TargetFunction> {
    Ok(match d.target_fn {
        TargetKind::Zero => TargetFunction::Zero,
        TargetKind::Sine => TargetFunction::Callable { name: "sine", f: sine },
        TargetKind::Sinc => TargetFunction::Callable { name: "sinc", f: sinc },
        TargetKind::Mixture => {
            if d.mixture_centers.len() != d.mixture_scales.len() {
                return Err(Error::Config("mixture_centers and mixture_scales differ in length".into()));
            }
            let atoms = d
                .mixture_centers
                .iter()
                .zip(&d.mixture_scales)
                .map(|(c, &s)| GaussianAtom::new(c.clone(), s, 0))
                .collect::<l2proj::Result<Vec<_>>>()?;
            TargetFunction::Mixture(GaussianMixture::new(atoms, d.mixture_weights.clone())?)
        }
    })
}

/// Loads or generates the configured samples. Generators draw from `seed`.
pub fn load(d: &DataSection, seed: u64) -> Result<Dataset> {
    let noise = if d.noise_std > 0.0 { NoiseModel::Gaussian { std: d.noise_std } } else { NoiseModel::None };
    let samples = match d.source.ok_or(Error::MissingField("data.source"))? {
        DataSource::Csv => {
            let path = d.path.as_deref().ok_or(Error::MissingField("data.path"))?;
            let target = d.target.as_deref().ok_or(Error::MissingField("data.target"))?;
            return ingest_csv(path, &d.inputs, target);
        }
        DataSource::Uniform => {
            uniform_stream(d.dim, (d.bounds[0], d.bounds[1]), &target_function(d)?, noise, seed, d.length)?
        }
        DataSource::Gaussian => gaussian_stream(d.dim, d.input_sigma, &target_function(d)?, noise, seed, d.length)?,
        DataSource::Pseudorange => pseudorange_stream(&d.pseudorange.unwrap_or_default(), seed, d.length)?,
    };
    Ok(Dataset::from_samples(&samples))
}
