//! `nldtn`: run one experiment from a JSON configuration.
//!
//! Exit codes: 0 all checks passed, 1 a tolerance check failed, 2 invalid
//! configuration, 3 numerical failure, 4 I/O error.

mod config;
mod experiments;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use config::Experiment;
use experiments::RunError;

#[derive(Parser, Debug)]
#[command(name = "nldtn", version, about = "Numerical experiments for quadratic conductivity nonlinearities")]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Experiment,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random draws; overrides `seed` in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(EXIT_IO);
        }
    };
    let mut cfg = match config::parse(&text, cli.experiment) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let name = cfg.experiment.name();
    let dir = cli.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| Path::new("nldtn-out").join(name));

    let outcome = match experiments::run(&cfg) {
        Ok(o) => o,
        Err(RunError::Config(msg)) => {
            eprintln!("error: {}: {msg}", cli.config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e @ RunError::Numerical(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
    };

    let header = vec![
        ("experiment".to_string(), name.to_string()),
        ("config".to_string(), cli.config.display().to_string()),
        ("grid".to_string(), format!("dim {}, M {}", cfg.grid.dim, cfg.grid.cells)),
        ("seed".to_string(), cfg.seed.to_string()),
        ("law".to_string(), cfg.law.as_ref().map_or("experiment default".to_string(), |l| serde_json::to_string(l).unwrap_or_default())),
    ];
    if let Err(e) = write_outputs(&dir, name, &header, &outcome) {
        eprintln!("error: cannot write to {}: {e}", dir.display());
        return ExitCode::from(EXIT_IO);
    }
    for c in &outcome.checks {
        println!("{} {}: {:.6e}", if c.passed() { "PASS" } else { "FAIL" }, c.name, c.value);
    }
    println!("wrote {}", dir.display());
    if outcome.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn write_outputs(dir: &Path, name: &str, header: &[(String, String)], outcome: &output::Outcome) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("results.csv"), output::results_csv(name, &outcome.rows))?;
    std::fs::write(dir.join("report.md"), output::report_md(name, header, outcome))?;
    if let Some(plot) = &outcome.plot {
        std::fs::write(dir.join("convergence.svg"), output::svg_loglog(plot))?;
    }
    for (file, body) in &outcome.extra {
        std::fs::write(dir.join(file), body)?;
    }
    Ok(())
}
