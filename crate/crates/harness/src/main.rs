use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use l2proj_harness::config::{DataSource, ExperimentConfig, Protocol};
use l2proj_harness::eigspread::{eigspread, EigspreadConfig};
use l2proj_harness::{cv, data, output, output_root, report, run, search, Algorithm, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "l2proj", version, about = "Online regression by L2-space projections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment.
    Run {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Repeated two-fold cross-validation.
    Cv {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        seed: u64,
    },
    /// Grid plus random search over step size and coherence threshold.
    Sweep {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        seed: u64,
        /// Random draws after the grid.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Eigenvalue spread of the whitened autocorrelation for each metric.
    Eigspread {
        /// TOML file with the study settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        repeats: u64,
        #[arg(long)]
        length: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a generated stream to CSV.
    Gen {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Average the curves and RMSEs of every finished run below a directory.
    Report {
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// TOML experiment config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algorithm: Option<String>,
    /// `train_test` or `prequential`.
    #[arg(long)]
    protocol: Option<String>,
    /// CSV file; sets the data source to `csv`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Comma-separated input columns.
    #[arg(long, value_delimiter = ',')]
    inputs: Option<Vec<String>>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    standardize: bool,
    /// Generator: uniform, gaussian or pseudorange.
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    step_size: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<f64>>,
    #[arg(long)]
    subset: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    poison_test_targets: bool,
    /// Output directory (file for `gen`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_enum<T: serde::de::DeserializeOwned>(field: &str, raw: &str) -> Result<T> {
    T::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(raw))
        .map_err(|_| Error::Config(format!("invalid value `{raw}` for --{field}")))
}

impl ExperimentArgs {
    fn resolve(&self, seed: Option<u64>) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if seed.is_some() {
            c.seed = seed;
        }
        if let Some(a) = &self.algorithm {
            c.algorithm = Algorithm::parse(a)?;
        }
        if let Some(p) = &self.protocol {
            c.protocol = parse_enum::<Protocol>("protocol", p)?;
        }
        if let Some(g) = &self.generator {
            c.data.source = Some(parse_enum::<DataSource>("generator", g)?);
        }
        if let Some(p) = &self.data {
            c.data.source = Some(DataSource::Csv);
            c.data.path = Some(p.clone());
        }
        if let Some(i) = &self.inputs {
            c.data.inputs = i.clone();
        }
        if let Some(t) = &self.target {
            c.data.target = Some(t.clone());
        }
        c.data.standardize |= self.standardize;
        if let Some(n) = self.length {
            c.data.length = n;
        }
        if let Some(x) = self.step_size {
            c.learner.step_size = x;
        }
        if let Some(x) = self.delta {
            c.learner.coherence_threshold = x;
        }
        if let Some(s) = &self.scales {
            c.learner.scales = s.clone();
        }
        if let Some(s) = self.subset {
            c.learner.subset_size = Some(s);
        }
        if let Some(r) = self.repeats {
            c.cv.repeats = r;
        }
        c.output.poison_test_targets |= self.poison_test_targets;
        if let Some(o) = &self.out {
            c.output.dir = Some(o.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

fn out_dir(c: &ExperimentConfig, kind: &str) -> PathBuf {
    c.output.dir.clone().unwrap_or_else(|| output_root().join(format!("{kind}-{}-{}", c.algorithm.name(), c.hash())))
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { exp, seed } => {
            let c = exp.resolve(seed)?;
            let dir = out_dir(&c, "run");
            let r = run::run_online(&c).map_err(|e| output::mark_failed(&dir, e))?;
            output::write_run(&dir, &c, &r)?;
            println!("rmse {}", r.rmse);
            announce(&dir);
        }
        Command::Cv { exp, seed } => {
            let c = exp.resolve(Some(seed))?;
            let dir = out_dir(&c, "cv");
            let r = data::load(&c.data, c.seed())
                .and_then(|d| cv::cross_validate(&c, &d))
                .map_err(|e| output::mark_failed(&dir, e))?;
            output::write_cv(&dir, &c, &r)?;
            println!("rmse {} ± {}", r.mean, r.std);
            announce(&dir);
        }
        Command::Sweep { exp, seed, budget } => {
            let mut c = exp.resolve(Some(seed))?;
            if let Some(b) = budget {
                c.search.budget = b;
            }
            let dir = out_dir(&c, "sweep");
            let s = data::load(&c.data, c.seed())
                .and_then(|d| search::hyper_search(&c, &d))
                .map_err(|e| output::mark_failed(&dir, e))?;
            output::write_search(&dir, &c, &s)?;
            let top = &s.leaderboard[0];
            println!("best step_size {} delta {} rmse {}", top.step_size, top.coherence_threshold, top.mean_rmse);
            announce(&dir);
        }
        Command::Eigspread { config, seed, repeats, length, out } => {
            let mut ec = match config {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|source| Error::Io { path: p.clone(), source })?;
                    toml::from_str::<EigspreadConfig>(&text).map_err(|e| Error::Config(e.to_string()))?
                }
                None => EigspreadConfig::default(),
            };
            if let Some(n) = length {
                ec.length = n;
            }
            let root = out.unwrap_or_else(|| output_root().join(format!("eigspread-{seed}")));
            for k in 0..repeats {
                let traces = eigspread(&ec, seed + k)?;
                let dir = root.join(format!("seed{}", seed + k));
                output::write_spread(&dir, &traces)?;
                let line: Vec<String> = traces.iter().map(|t| format!("{} {:.4e}", t.method, t.terminal())).collect();
                println!("seed {}: {}", seed + k, line.join(", "));
            }
            announce(&root);
        }
        Command::Gen { exp, seed } => {
            let c = exp.resolve(seed)?;
            if c.data.source == Some(DataSource::Csv) {
                return Err(Error::Config("gen needs a generator source, not csv".into()));
            }
            let path = c.output.dir.clone().unwrap_or_else(|| output_root().join(format!("gen-{}.csv", c.hash())));
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|source| Error::Io { path: parent.to_path_buf(), source })?;
            }
            data::load(&c.data, c.seed())?.write_csv(&path)?;
            announce(&path);
        }
        Command::Report { dir, out } => {
            let r = report::collect(&dir)?;
            let out = out.unwrap_or_else(|| dir.join("report"));
            report::write_report(&out, &r)?;
            announce(&out);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
