//! Command-line driver: gradient sweeps, the two toy demos and a
//! normalized-cuts evaluator for CSV inputs.
//!
//! Exit codes: 0 success, 1 failing gradient reports or training failure,
//! 2 bad input or I/O failure, 3 rank-lemma violation.

pub mod commands;
pub mod config;
pub mod error;
pub mod synth;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::{DemoConfig, SpectralPath, Task};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "matbp",
    version,
    about = "Matrix backpropagation checks and demos"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare every analytic gradient with central finite differences.
    Gradcheck {
        /// Keep operations whose family equals, or whose name contains, this.
        #[arg(long)]
        filter: Option<String>,
        /// First of the 20 seeds per operation.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for gradcheck_reports.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Covariance-class classification through DeepO2P.
    DemoO2p(DemoArgs),
    /// Feature learning for normalized cuts through J2.
    DemoNcuts(DemoArgs),
    /// Criterion, J1, J2 and ranks of an affinity and a partition.
    Eval {
        /// Affinity W as CSV.
        #[arg(
            long,
            conflicts_with = "features",
            required_unless_present = "features"
        )]
        affinity: Option<PathBuf>,
        /// Features F as CSV; W = F Lambda F^T.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Lambda as CSV (defaults to the identity).
        #[arg(long, requires = "features")]
        lambda: Option<PathBuf>,
        /// Indicator E as CSV.
        #[arg(long)]
        indicator: PathBuf,
        /// Directory for eval_summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// key=value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl DemoArgs {
    pub fn resolve(&self, task: Task) -> Result<DemoConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => DemoConfig::load(p, task)?,
            None => DemoConfig::default_for(task),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        Ok(cfg)
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes")
}

fn json_lines<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|x| serde_json::to_string(x).expect("plain data serializes") + "\n")
        .collect()
}

/// Runs `cli`, writing results to `out` and diagnostics to `err`, and
/// returns the exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let stdout_err = |e: std::io::Error| CliError::io(Path::new("<stdout>"), e);
    match cli.command {
        Command::Gradcheck {
            filter,
            seed,
            out: dir,
        } => {
            let (summary, reports) = commands::gradcheck::run(filter.as_deref(), seed);
            if summary.ops == 0 {
                let _ = writeln!(
                    err,
                    "warning: filter {:?} selects no operation",
                    filter.as_deref().unwrap_or("")
                );
            }
            if let Some(dir) = dir {
                write_file(&dir, "gradcheck_reports.json", &to_json(&reports))?;
            }
            for r in reports.iter().filter(|r| !r.pass) {
                let _ = writeln!(
                    err,
                    "FAIL {} seed {}: relative error {:e}{}",
                    r.op,
                    r.seed,
                    r.relative_error,
                    r.error
                        .as_deref()
                        .map(|e| format!(" ({e})"))
                        .unwrap_or_default()
                );
            }
            writeln!(out, "{}", to_json(&summary)).map_err(stdout_err)?;
            Ok(if summary.failed == 0 { 0 } else { 1 })
        }
        Command::DemoO2p(args) => {
            let cfg = args.resolve(Task::O2p)?;
            let outcome = commands::o2p::run(&cfg)?;
            let dir = &cfg.output_dir;
            write_file(dir, "o2p_training_log.jsonl", &outcome.log.to_json_lines())?;
            write_file(
                dir,
                "o2p_baseline_log.jsonl",
                &outcome.baseline_log.to_json_lines(),
            )?;
            write_file(dir, "o2p_summary.json", &to_json(&outcome.summary))?;
            writeln!(out, "{}", to_json(&outcome.summary)).map_err(stdout_err)?;
            Ok(0)
        }
        Command::DemoNcuts(args) => {
            let cfg = args.resolve(Task::Ncuts)?;
            let outcome = commands::ncuts::run(&cfg)?;
            let dir = &cfg.output_dir;
            write_file(
                dir,
                "ncuts_training_log.jsonl",
                &outcome.log.to_json_lines(),
            )?;
            write_file(
                dir,
                "ncuts_rank_trajectory.jsonl",
                &json_lines(&outcome.trajectory),
            )?;
            write_file(dir, "ncuts_summary.json", &to_json(&outcome.summary))?;
            outcome
                .learned_test_instance
                .write(dir, "ncuts_test0")
                .map_err(|e| CliError::io(dir, e))?;
            writeln!(out, "{}", to_json(&outcome.summary)).map_err(stdout_err)?;
            Ok(0)
        }
        Command::Eval {
            affinity,
            features,
            lambda,
            indicator,
            out: dir,
        } => {
            let source = match (&affinity, &features) {
                (Some(w), _) => commands::eval::AffinitySource::Affinity(w),
                (None, Some(f)) => commands::eval::AffinitySource::Features {
                    features: f,
                    lambda: lambda.as_deref(),
                },
                (None, None) => unreachable!("clap requires one of --affinity, --features"),
            };
            let summary = commands::eval::run(&source, &indicator)?;
            if let Some(dir) = dir {
                write_file(&dir, "eval_summary.json", &to_json(&summary))?;
            }
            writeln!(out, "{}", to_json(&summary)).map_err(stdout_err)?;
            Ok(0)
        }
    }
}
