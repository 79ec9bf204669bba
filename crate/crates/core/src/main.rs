use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use maxwell_uq::experiment::{
    cache_dir_from_env, mean_csv, reference_csv, run_convergence, run_mean, run_reference, run_validation, ExperimentConfig, CACHE_ENV,
};
use maxwell_uq::Result;

#[derive(Parser)]
#[command(name = "maxwell-uq", version, about = "Mean scattered fields under random boundary perturbations")]
#[command(after_help = "Operator matrices are cached in the directory named by MAXWELL_UQ_CACHE when it is set.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment description; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated mesh levels.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<u32>>,
    /// Comma-separated wavenumbers.
    #[arg(long, value_delimiter = ',')]
    kappa: Option<Vec<f64>>,
    /// Comma-separated perturbation amplitudes.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Error of the unperturbed scattered field against the Mie series.
    Reference(Common),
    /// Reference and corrected mean field at the evaluation points.
    Mean(Common),
    /// Order-2 and order-4 mean-field errors over the ε grid.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Run independent (κ, level) cells concurrently.
        #[arg(long)]
        parallel_cells: bool,
    },
    /// Oracle checks; writes a JSON report and fails on any violated check.
    Validate(Common),
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(p) => ExperimentConfig::from_json_file(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(l) = &self.levels {
            config.levels = l.clone();
        }
        if let Some(k) = &self.kappa {
            config.kappas = k.clone();
        }
        if let Some(e) = &self.eps {
            config.epsilons = e.clone();
        }
        if let Some(o) = &self.out {
            config.output = Some(o.clone());
        }
        config.validate()?;
        if let Some(j) = self.jobs {
            rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build_global()
                .map_err(|e| maxwell_uq::Error::Config(format!("thread pool: {e}")))?;
        }
        Ok(config)
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn log(msg: &str) {
    eprintln!("{msg}");
}

fn first<T: Copy>(values: &[T], what: &str) -> Result<T> {
    values.first().copied().ok_or_else(|| maxwell_uq::Error::Config(format!("no {what} given")))
}

fn run(cli: Cli) -> Result<bool> {
    let cache = cache_dir_from_env();
    if let Some(dir) = &cache {
        log(&format!("operator cache: {} (from {CACHE_ENV})", dir.display()));
    }
    let cache = cache.as_deref();
    match cli.command {
        Command::Reference(c) => {
            let config = c.config()?;
            let rows = run_reference(&config, cache, &log)?;
            emit(config.output.as_deref(), &reference_csv(&rows))?;
        }
        Command::Mean(c) => {
            let config = c.config()?;
            let kappa = first(&config.kappas, "wavenumber")?;
            let level = first(&config.levels, "level")?;
            let eps = first(&config.epsilons, "perturbation amplitude")?;
            let points = run_mean(&config, kappa, level, eps, cache)?;
            emit(config.output.as_deref(), &mean_csv(&points))?;
        }
        Command::Convergence { common, parallel_cells } => {
            let mut config = common.config()?;
            config.parallel_cells |= parallel_cells;
            let table = run_convergence(&config, cache, &log)?;
            emit(config.output.as_deref(), &table.to_csv())?;
        }
        Command::Validate(c) => {
            let mut config = c.config()?;
            if c.levels.is_none() {
                config.levels = vec![3];
            }
            let level = first(&config.levels, "level")?;
            let kappa = first(&config.kappas, "wavenumber")?;
            let report = run_validation(&config, level, kappa, cache, &log)?;
            let json = serde_json::to_string_pretty(&report)?;
            emit(config.output.as_deref(), &format!("{json}\n"))?;
            log(&format!(
                "{} of {} checks passed in {:.1} s",
                report.checks.iter().filter(|c| c.passed).count(),
                report.checks.len(),
                report.wall_time_s
            ));
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
