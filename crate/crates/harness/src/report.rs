//! Aggregation of finished run directories.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use l2proj::diagnostics::DB_FLOOR;

use crate::cv::mean_std;
use crate::error::{io_err, Error, Result};
use crate::output::{commit, FAILED};

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// Run directories relative to the root, sorted.
    pub runs: Vec<String>,
    pub rmse: Vec<f64>,
    /// `(n, mean NMSE in dB, number of runs contributing)`; the mean is
    /// taken on the linear scale.
    pub curve: Vec<(usize, f64, usize)>,
}

fn leaf_runs(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()).map_err(io_err(dir)))
        .collect::<Result<Vec<_>>>()?;
    entries.sort();
    if entries.iter().any(|p| p.file_name().is_some_and(|n| n == FAILED)) {
        return Ok(());
    }
    if entries.iter().any(|p| p.file_name().is_some_and(|n| n == "curve.csv")) {
        out.push(dir.to_path_buf());
    }
    for p in entries {
        let hidden = p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.'));
        if p.is_dir() && !hidden {
            leaf_runs(&p, out)?;
        }
    }
    Ok(())
}

fn read_rows(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|source| Error::Csv { path: path.to_path_buf(), source })?;
    r.records().map(|x| x.map_err(|source| Error::Csv { path: path.to_path_buf(), source })).collect()
}

fn number(path: &Path, row: usize, raw: Option<&str>) -> Result<f64> {
    raw.and_then(|s| s.parse().ok()).ok_or_else(|| Error::MalformedRow {
        path: path.to_path_buf(),
        row,
        message: format!("expected a number, found {raw:?}"),
    })
}

pub fn collect(root: &Path) -> Result<Report> {
    if !root.is_dir() {
        return Err(Error::Io {
            path: root.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        });
    }
    let mut leaves = Vec::new();
    leaf_runs(root, &mut leaves)?;
    if leaves.is_empty() {
        return Err(Error::EmptyInput(format!("{} (no completed runs)", root.display())));
    }
    let mut runs = Vec::new();
    let mut rmse = Vec::new();
    let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for leaf in &leaves {
        let name = leaf.strip_prefix(root).unwrap_or(leaf).display().to_string();
        runs.push(if name.is_empty() { ".".into() } else { name });
        let summary = leaf.join("summary.csv");
        let rows = read_rows(&summary)?;
        let first = rows.first().ok_or_else(|| Error::EmptyInput(summary.display().to_string()))?;
        rmse.push(number(&summary, 1, first.get(1))?);
        let curve = leaf.join("curve.csv");
        for (i, row) in read_rows(&curve)?.iter().enumerate() {
            let n = number(&curve, i + 1, row.get(0))? as usize;
            let db = number(&curve, i + 1, row.get(1))?;
            let e = sums.entry(n).or_insert((0.0, 0));
            e.0 += 10f64.powf(db / 10.0);
            e.1 += 1;
        }
    }
    let curve = sums.into_iter().map(|(n, (s, c))| (n, (10.0 * (s / c as f64).log10()).max(DB_FLOOR), c)).collect();
    Ok(Report { runs, rmse, curve })
}

/// Writes `curve.csv` and `summary.csv` for `report` into `out`.
pub fn write_report(out: &Path, report: &Report) -> Result<()> {
    commit(out, |stage| {
        let csv_err = |p: &Path| {
            let p = p.to_path_buf();
            move |source| Error::Csv { path: p, source }
        };
        let path = stage.join("curve.csv");
        let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
        w.write_record(["n", "nmse_db", "runs"]).map_err(csv_err(&path))?;
        for (n, db, c) in &report.curve {
            w.write_record([n.to_string(), db.to_string(), c.to_string()]).map_err(csv_err(&path))?;
        }
        w.flush().map_err(io_err(&path))?;

        let path = stage.join("summary.csv");
        let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
        w.write_record(["run", "rmse"]).map_err(csv_err(&path))?;
        for (run, r) in report.runs.iter().zip(&report.rmse) {
            w.write_record([run.clone(), r.to_string()]).map_err(csv_err(&path))?;
        }
        let (mean, std) = mean_std(&report.rmse);
        w.write_record(["mean".to_string(), mean.to_string()]).map_err(csv_err(&path))?;
        w.write_record(["std".to_string(), std.to_string()]).map_err(csv_err(&path))?;
        w.flush().map_err(io_err(&path))
    })
}
