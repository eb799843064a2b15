//! Command-line front end: `run`, `presets` and `validate`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analysis::{monte_carlo, write_outputs, McOutput};
use crate::config::{preset, presets, ExperimentConfig};
use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "vin-attention", version, about = "Anticipation-aware feature selection experiments")]
pub struct Cli {
    /// Worker threads for the Monte Carlo runs (0 picks the number of cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Replaces the master seed of the configuration.
    #[arg(long, global = true, value_name = "S")]
    pub seed_override: Option<u64>,

    /// Replaces the output directory of the configuration.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Runs the experiment described by a JSON configuration or preset name.
    Run { config: String },
    /// Lists the shipped presets, or prints one as JSON.
    Presets { name: Option<String> },
    /// Parses and checks a configuration without running it.
    Validate { config: String },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::Parameter(_) | Error::GuardExceeded { .. } => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

/// Reads a configuration file; a bare preset name is accepted when no file
/// of that name exists.
pub fn load_config(arg: &str) -> Result<ExperimentConfig> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(cfg) = preset(arg) {
            return Ok(cfg);
        }
    }
    ExperimentConfig::from_path(path)
}

fn apply_overrides(cli: &Cli, mut cfg: ExperimentConfig) -> Result<ExperimentConfig> {
    if let Some(seed) = cli.seed_override {
        cfg.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs the experiment on a pool of `threads` workers and writes every
/// output file under the configured directory.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<McOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start {threads} worker threads: {e}")))?;
    let out = pool.install(|| monte_carlo(cfg))?;
    let dir = cfg.output_path();
    write_outputs(&out, &dir)?;
    std::fs::write(dir.join("config.json"), cfg.to_json() + "\n")?;
    Ok(out)
}

pub fn digest<W: Write>(cfg: &ExperimentConfig, out: &McOutput, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "{}: {} runs, {} windows per run, seed {}",
        cfg.name, cfg.n_runs, out.n_windows, cfg.master_seed
    )?;
    writeln!(
        w,
        "{:<16} {:>5} {:>5} {:>14} {:>14} {:>14} {:>9} {:>8}",
        "selector", "N", "kappa", "objective", "rel err [m]", "abs err [m]", "vs rand", "diverged"
    )?;
    for a in &out.aggregate {
        writeln!(
            w,
            "{:<16} {:>5} {:>5} {:>14.6e} {:>14.6e} {:>14.6e} {:>8.1}% {:>8}",
            a.selector.name(),
            a.n_landmarks,
            a.kappa,
            a.objective_mean,
            a.rel_err_mean,
            a.abs_err_mean,
            a.rel_err_vs_random_pct,
            a.n_diverged
        )?;
    }
    writeln!(w, "outputs written to {}", cfg.output_path().display())
}

fn execute(cli: &Cli) -> Result<()> {
    let stdout = std::io::stdout();
    match &cli.command {
        Command::Run { config } => {
            let cfg = apply_overrides(cli, load_config(config)?)?;
            let out = run_experiment(&cfg, cli.threads)?;
            digest(&cfg, &out, stdout.lock())?;
        }
        Command::Presets { name: Some(name) } => {
            let cfg = preset(name).ok_or_else(|| Error::config("preset", format!("unknown preset `{name}`")))?;
            let cfg = apply_overrides(cli, cfg)?;
            writeln!(stdout.lock(), "{}", cfg.to_json())?;
        }
        Command::Presets { name: None } => {
            let mut w = stdout.lock();
            for p in presets() {
                let pairs = p.budget_pairs();
                let budgets: Vec<String> = pairs.iter().map(|(n, k)| format!("{n}/{k}")).collect();
                writeln!(w, "{:<20} runs {:>3}  N/kappa {}", p.name, p.n_runs, budgets.join(" "))?;
            }
        }
        Command::Validate { config } => {
            let cfg = apply_overrides(cli, load_config(config)?)?;
            writeln!(
                stdout.lock(),
                "{}: ok ({} budget pairs, {} selectors, {} runs)",
                cfg.name,
                cfg.budget_pairs().len(),
                cfg.selectors.len(),
                cfg.n_runs
            )?;
        }
    }
    Ok(())
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(exit_code(&Error::config("kappa", "missing")), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Numerical("nan".into())), EXIT_NUMERICAL);
    }

    #[test]
    fn global_flags_parse_after_subcommand() {
        let cli = Cli::try_parse_from(["vin-attention", "run", "cfg.json", "--threads", "2", "--seed-override", "9"]).unwrap();
        assert_eq!(cli.threads, 2);
        assert_eq!(cli.seed_override, Some(9));
        assert!(matches!(cli.command, Command::Run { ref config } if config == "cfg.json"));
    }

    #[test]
    fn preset_names_load_and_overrides_apply() {
        let cli = Cli::try_parse_from(["vin-attention", "--out", "elsewhere", "validate", "circle-montecarlo"]).unwrap();
        let cfg = apply_overrides(&cli, load_config("circle-montecarlo").unwrap()).unwrap();
        assert_eq!(cfg.output_dir, "elsewhere");
        assert_eq!(main_with_args(["vin-attention", "validate", "no-such-file.json"]), EXIT_CONFIG);
        assert_eq!(main_with_args(["vin-attention", "bogus"]), EXIT_CONFIG);
    }
}
