//! Command-line front end.
//!
//! Every run is described by a [`RunConfig`]; command-line flags build one,
//! or `--config FILE` loads one from JSON and the flags then override it.

pub mod commands;
pub mod config;
pub mod io;
pub mod scenarios;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use clap::{Args, Parser};

pub use commands::{run_bias_check, run_clt_check, run_expansion_check, run_fit, run_theory_report};
pub use config::{DesignKind, GridSpec, Overrides, RunConfig, ScenarioSpec, Subcommand};
pub use io::load_sample_csv;
pub use scenarios::{builtin_ids, builtin_table, run_scenario_table};

use crate::error::{Error, Result};
use crate::kernels::KernelKind;
use crate::simulate::{EstimatorKind, ScenarioConfig};

/// Environment variable capping the number of worker threads (0 = automatic).
pub const THREADS_ENV: &str = "VBKREG_THREADS";

#[derive(Debug, Parser)]
#[command(name = "vbkreg", version, about = "Variable-bandwidth kernel regression")]
struct Cli {
    /// JSON run configuration; flags given after a subcommand override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, clap::Subcommand)]
enum Command {
    /// Fit both estimators to an x,y CSV file.
    Fit(Flags),
    /// Average RMSE (or per-point MSE) of a scenario or built-in table.
    Simulate(Flags),
    /// Per-point MSE of a scenario or built-in table.
    MsePoints(Flags),
    /// Empirical order of the pointwise bias in h.
    BiasCheck(Flags),
    /// Normal limit of the scaled estimation error at one point.
    CltCheck(Flags),
    /// Kernel integral against its truncated series in h.
    ExpansionCheck(Flags),
    /// Bias coefficient, asymptotic variance and optimal bandwidth.
    TheoryReport(Flags),
}

#[derive(Debug, Args)]
struct Flags {
    /// Input CSV with columns x,y (fit only).
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Output file (fit) or directory (all other subcommands).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Built-in scenario id (e.g. table1-row1) or a scenario JSON file.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    /// Pilot bandwidth.
    #[arg(long)]
    h1: Option<f64>,
    /// Final bandwidth.
    #[arg(long)]
    h2: Option<f64>,
    #[arg(long)]
    clip_c: Option<f64>,
    #[arg(long)]
    clip_t0: Option<f64>,
    /// tricube, epanechnikov or gaussian_truncated.
    #[arg(long)]
    kernel: Option<KernelKind>,
    /// Points `a,b,c` or `lo:hi:count`: evaluation points, or bandwidths for
    /// bias-check and expansion-check.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<GridSpec>,
    /// Rows of a built-in table, e.g. 1,2,3.
    #[arg(long, value_delimiter = ',')]
    rows: Option<Vec<usize>>,
    /// Evaluation point of the single-point checks.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    /// ideal_vb, true_vb or nw.
    #[arg(long, value_parser = parse_estimator)]
    estimator: Option<EstimatorKind>,
    /// Regression function: 1, 2 or 3.
    #[arg(long)]
    reg: Option<u8>,
    #[arg(long, value_enum)]
    design: Option<DesignKind>,
}

fn parse_estimator(s: &str) -> std::result::Result<EstimatorKind, String> {
    match s {
        "ideal_vb" => Ok(EstimatorKind::IdealVb),
        "true_vb" => Ok(EstimatorKind::TrueVb),
        "nw" => Ok(EstimatorKind::Nw),
        _ => Err(format!("unknown estimator '{s}' (expected ideal_vb, true_vb or nw)")),
    }
}

fn scenario_spec(value: &str) -> Result<ScenarioSpec> {
    let path = Path::new(value);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        let cfg: ScenarioConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(ScenarioSpec::Custom(Box::new(cfg)))
    } else {
        Ok(ScenarioSpec::Id(value.to_string()))
    }
}

fn merge(base: Option<RunConfig>, sub: Subcommand, f: Flags) -> Result<RunConfig> {
    let mut cfg = match base {
        Some(c) if c.subcommand != sub => {
            return Err(Error::Config(format!(
                "config is for '{}' but the subcommand is '{}'",
                c.subcommand.as_str(),
                sub.as_str()
            )))
        }
        Some(c) => c,
        None => {
            let default_out = if sub == Subcommand::Fit { "fit.csv" } else { "results" };
            RunConfig::new(sub, default_out)
        }
    };
    if let Some(p) = f.input {
        cfg.input_path = Some(p);
    }
    if let Some(p) = f.output {
        cfg.output_path = p;
    }
    if let Some(s) = f.scenario {
        cfg.scenario = Some(scenario_spec(&s)?);
    }
    let o = &mut cfg.overrides;
    macro_rules! set {
        ($($field:ident),*) => { $( if f.$field.is_some() { o.$field = f.$field; } )* };
    }
    set!(seed, n, reps, h1, h2, clip_c, clip_t0, kernel, grid, rows, t, estimator, reg, design);
    Ok(cfg)
}

/// Runs a configuration and returns the text for standard output.
pub fn run(cfg: &RunConfig) -> Result<String> {
    match cfg.subcommand {
        Subcommand::Fit => run_fit(cfg),
        Subcommand::Simulate | Subcommand::MsePoints => run_scenario_table(cfg),
        Subcommand::BiasCheck => run_bias_check(cfg),
        Subcommand::CltCheck => run_clt_check(cfg),
        Subcommand::ExpansionCheck => run_expansion_check(cfg),
        Subcommand::TheoryReport => run_theory_report(cfg),
    }
}

/// Sizes the global worker pool from [`THREADS_ENV`]. Only the first call
/// in a process has an effect.
pub fn init_threads() -> Result<()> {
    static INIT: OnceLock<std::result::Result<(), String>> = OnceLock::new();
    INIT.get_or_init(|| {
        let threads = match std::env::var(THREADS_ENV) {
            Ok(v) => v.trim().parse::<usize>().map_err(|_| format!("{THREADS_ENV}='{v}' is not a thread count"))?,
            Err(_) => 0,
        };
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| format!("cannot start worker pool: {e}"))
    })
    .clone()
    .map_err(Error::Config)
}

fn parse_and_run<I, T>(args: I) -> std::result::Result<Result<String>, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    Ok((|| {
        let base = cli.config.as_deref().map(RunConfig::load).transpose()?;
        let cfg = match cli.command {
            None => base.ok_or_else(|| Error::Config("give a subcommand or --config FILE".into()))?,
            Some(cmd) => {
                let (sub, flags) = match cmd {
                    Command::Fit(f) => (Subcommand::Fit, f),
                    Command::Simulate(f) => (Subcommand::Simulate, f),
                    Command::MsePoints(f) => (Subcommand::MsePoints, f),
                    Command::BiasCheck(f) => (Subcommand::BiasCheck, f),
                    Command::CltCheck(f) => (Subcommand::CltCheck, f),
                    Command::ExpansionCheck(f) => (Subcommand::ExpansionCheck, f),
                    Command::TheoryReport(f) => (Subcommand::TheoryReport, f),
                };
                merge(base, sub, flags)?
            }
        };
        init_threads()?;
        run(&cfg)
    })())
}

/// Entry point of the binary; returns the process exit code. Results go to
/// standard output and files, errors to standard error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_and_run(args) {
        Err(e) => {
            let _ = e.print();
            e.exit_code()
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            1
        }
        Ok(Ok(text)) => {
            print!("{text}");
            0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunConfig {
        let cli = Cli::try_parse_from(args).unwrap();
        let Some(Command::Simulate(f)) = cli.command else { panic!() };
        merge(None, Subcommand::Simulate, f).unwrap()
    }

    #[test]
    fn flags_become_overrides() {
        let cfg = parse(&[
            "vbkreg",
            "simulate",
            "--scenario",
            "table1-row1",
            "--n",
            "1000",
            "--reps",
            "20",
            "--seed",
            "7",
            "--clip-c",
            "0.001",
            "--kernel",
            "epanechnikov",
            "--grid",
            "-1,0,1",
            "--rows",
            "1",
            "-o",
            "dir",
        ]);
        assert_eq!(cfg.scenario, Some(ScenarioSpec::Id("table1-row1".into())));
        assert_eq!(cfg.output_path, PathBuf::from("dir"));
        let o = cfg.overrides;
        assert_eq!((o.n, o.reps, o.seed, o.clip_c), (Some(1000), Some(20), Some(7), Some(0.001)));
        assert_eq!(o.kernel, Some(KernelKind::Epanechnikov));
        assert_eq!(o.grid.unwrap().points().unwrap(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(o.rows, Some(vec![1]));
    }

    #[test]
    fn bad_flags_are_usage_errors() {
        assert!(Cli::try_parse_from(["vbkreg", "simulate", "--kernel", "box"]).is_err());
        assert!(Cli::try_parse_from(["vbkreg", "simulate", "--estimator", "ols"]).is_err());
        assert!(Cli::try_parse_from(["vbkreg", "simulate", "--colour", "red"]).is_err());
        assert!(Cli::try_parse_from(["vbkreg", "simulate", "--grid", "a:b:c"]).is_err());
    }

    #[test]
    fn config_subcommand_must_match() {
        let base = RunConfig::new(Subcommand::Fit, "x.csv");
        let cli = Cli::try_parse_from(["vbkreg", "simulate"]).unwrap();
        let Some(Command::Simulate(f)) = cli.command else { panic!() };
        assert!(merge(Some(base), Subcommand::Simulate, f).is_err());
    }

    #[test]
    fn estimator_names() {
        assert_eq!(parse_estimator("true_vb").unwrap(), EstimatorKind::TrueVb);
        assert!(parse_estimator("vb").is_err());
    }
}
