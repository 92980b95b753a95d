//! Result files and atomic run directories.
//!
//! A run directory is written under a hidden staging name and renamed into
//! place once every file is complete. If anything fails the staging
//! directory is removed and the target directory holds only `FAILED`.
//!
//! Wall-clock times go to `timing.csv` so the other files depend only on
//! the config and the seed.

use std::fs;
use std::path::{Path, PathBuf};

use l2proj::diagnostics::floor_db;

use crate::config::ExperimentConfig;
use crate::cv::CvResult;
use crate::eigspread::SpreadTrace;
use crate::error::{io_err, Error, Result};
use crate::run::RunResult;
use crate::search::SearchResult;

pub const FAILED: &str = "FAILED";

fn staging_path(dir: &Path) -> PathBuf {
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    dir.with_file_name(format!(".{name}.partial"))
}

/// Runs `fill` against a fresh staging directory and moves it to `dir`.
/// On error `dir` is left containing only a `FAILED` file with the message.
pub fn commit<F>(dir: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&Path) -> Result<()>,
{
    let stage = staging_path(dir);
    if stage.exists() {
        fs::remove_dir_all(&stage).map_err(io_err(&stage))?;
    }
    fs::create_dir_all(&stage).map_err(io_err(&stage))?;
    let outcome = fill(&stage).and_then(|()| {
        if dir.exists() {
            fs::remove_dir_all(dir).map_err(io_err(dir))?;
        }
        fs::rename(&stage, dir).map_err(io_err(dir))
    });
    if let Err(e) = outcome {
        let _ = fs::remove_dir_all(&stage);
        return Err(mark_failed(dir, e));
    }
    Ok(())
}

/// Replaces `dir` with one holding only a `FAILED` file describing `err`,
/// and hands `err` back.
pub fn mark_failed(dir: &Path, err: Error) -> Error {
    if dir.exists() {
        let _ = fs::remove_dir_all(dir);
    }
    let marked = fs::create_dir_all(dir).and_then(|()| fs::write(dir.join(FAILED), format!("{err}\n")));
    match marked {
        Ok(()) => err,
        Err(source) => Error::Io { path: dir.to_path_buf(), source },
    }
}

struct Table {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl Table {
    fn create(path: PathBuf, header: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_path(&path).map_err(|source| Error::Csv { path: path.clone(), source })?;
        writer.write_record(header).map_err(|source| Error::Csv { path: path.clone(), source })?;
        Ok(Self { path, writer })
    }

    fn row<I, S>(&mut self, cells: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(cells).map_err(|source| Error::Csv { path: self.path.clone(), source })
    }

    fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(io_err(&self.path))
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_config(dir: &Path, config: &ExperimentConfig) -> Result<()> {
    let path = dir.join("config.toml");
    fs::write(&path, config.to_toml()).map_err(io_err(&path))
}

/// `steps.csv`: one row per learning step. `subset` lists the updated
/// coefficient indices separated by `;`.
pub fn write_steps(path: &Path, run: &RunResult) -> Result<()> {
    let mut t = Table::create(
        path.to_path_buf(),
        &["n", "prediction", "target", "e_n", "r_n", "admitted_scale", "updated", "subset"],
    )?;
    for r in &run.reports {
        let subset = r.subset.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";");
        t.row([
            r.n.to_string(),
            r.prediction.to_string(),
            r.target.to_string(),
            r.error.to_string(),
            r.dictionary_size.to_string(),
            opt(r.admitted_scale),
            u8::from(r.updated).to_string(),
            subset,
        ])?;
    }
    t.finish()
}

/// `curve.csv`: smoothed NMSE in dB, floored.
pub fn write_curve(path: &Path, run: &RunResult) -> Result<()> {
    let mut t = Table::create(path.to_path_buf(), &["n", "nmse_db"])?;
    for &(n, db) in &run.curve.points {
        t.row([n.to_string(), floor_db(db).to_string()])?;
    }
    t.finish()
}

fn write_summary(path: &Path, rows: &[(String, f64)], hash: &str) -> Result<()> {
    let mut t = Table::create(path.to_path_buf(), &["run", "rmse", "config_hash"])?;
    for (run, rmse) in rows {
        t.row([run.as_str(), &rmse.to_string(), hash])?;
    }
    t.finish()
}

fn write_timing(path: &Path, rows: &[(String, u128)]) -> Result<()> {
    let mut t = Table::create(path.to_path_buf(), &["run", "wall_ms"])?;
    for (run, ms) in rows {
        t.row([run.clone(), ms.to_string()])?;
    }
    t.finish()
}

/// Complete file set for a single run.
pub fn write_run(dir: &Path, config: &ExperimentConfig, run: &RunResult) -> Result<()> {
    commit(dir, |stage| {
        write_config(stage, config)?;
        write_steps(&stage.join("steps.csv"), run)?;
        write_curve(&stage.join("curve.csv"), run)?;
        write_summary(&stage.join("summary.csv"), &[("0".into(), run.rmse)], &run.config_hash)?;
        write_timing(&stage.join("timing.csv"), &[("0".into(), run.wall_ms)])
    })
}

fn fold_name(cv: &CvResult, k: usize) -> String {
    format!("r{}h{}", cv.folds[k].repeat, cv.folds[k].half)
}

/// Cross-validation: one subdirectory per fold plus the aggregate summary,
/// whose last two rows are `mean` and `std`.
pub fn write_cv(dir: &Path, config: &ExperimentConfig, cv: &CvResult) -> Result<()> {
    commit(dir, |stage| {
        write_config(stage, config)?;
        let mut rows = Vec::new();
        let mut timing = Vec::new();
        for (k, run) in cv.runs.iter().enumerate() {
            let name = fold_name(cv, k);
            let sub = stage.join(&name);
            fs::create_dir_all(&sub).map_err(io_err(&sub))?;
            write_steps(&sub.join("steps.csv"), run)?;
            write_curve(&sub.join("curve.csv"), run)?;
            write_summary(&sub.join("summary.csv"), &[(name.clone(), run.rmse)], &run.config_hash)?;
            rows.push((name.clone(), run.rmse));
            timing.push((name, run.wall_ms));
        }
        rows.push(("mean".into(), cv.mean));
        rows.push(("std".into(), cv.std));
        write_summary(&stage.join("summary.csv"), &rows, &config.hash())?;
        write_timing(&stage.join("timing.csv"), &timing)
    })
}

pub fn write_search(dir: &Path, config: &ExperimentConfig, search: &SearchResult) -> Result<()> {
    commit(dir, |stage| {
        write_config(stage, config)?;
        let best = stage.join("best.toml");
        fs::write(&best, search.best.to_toml()).map_err(io_err(&best))?;
        let mut t = Table::create(
            stage.join("leaderboard.csv"),
            &["rank", "id", "stage", "step_size", "coherence_threshold", "mean_rmse", "std_rmse"],
        )?;
        for (rank, c) in search.leaderboard.iter().enumerate() {
            t.row([
                rank.to_string(),
                c.id.to_string(),
                c.stage.name().to_string(),
                c.step_size.to_string(),
                c.coherence_threshold.to_string(),
                c.mean_rmse.to_string(),
                c.std_rmse.to_string(),
            ])?;
        }
        t.finish()
    })
}

/// `spread.csv`: `n, r_n` and one spread column per method.
pub fn write_spread(dir: &Path, traces: &[SpreadTrace]) -> Result<()> {
    commit(dir, |stage| {
        let mut header = vec!["n", "r_n"];
        header.extend(traces.iter().map(|t| t.method));
        let mut t = Table::create(stage.join("spread.csv"), &header)?;
        let rows = traces.first().map_or(0, |t| t.records.len());
        for k in 0..rows {
            let rec = traces[0].records[k];
            let mut row = vec![rec.n.to_string(), rec.dictionary_size.to_string()];
            row.extend(traces.iter().map(|t| t.records[k].spread.to_string()));
            t.row(row)?;
        }
        t.finish()
    })
}
