use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fracpm::driver::{exit_code, parse_overrides, run_command, Command, DriverError, Outcome, RunConfig};

#[derive(Parser)]
#[command(name = "fracpm", version, about = "Fractional porous medium flow on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one simulation and write its time series and snapshots.
    Simulate(Common),
    /// Compare regularized runs against the unregularized one for each mu in mu_list.
    MuConverge(Common),
    /// Run Picard iterations with frozen velocities and report successive differences.
    Picard(Common),
    /// Run at each resolution in n_list and compare successive final states.
    Refine(Common),
    /// Sample the estimate ratios selected by verify_select.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Further overrides as `--key value` or `--key=value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

fn load(common: &Common) -> Result<RunConfig, DriverError> {
    // once clap hands over the trailing words, the named flags can still
    // appear among them
    let mut config = common.config.clone();
    let mut overrides = Vec::new();
    for (key, value) in parse_overrides(&common.overrides)? {
        match key.as_str() {
            "config" => config = Some(PathBuf::from(value)),
            "out" => overrides.push(("output".to_string(), value)),
            _ => overrides.push((key, value)),
        }
    }
    if let Some(out) = &common.out {
        overrides.push(("output".into(), out.display().to_string()));
    }
    if let Some(seed) = common.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    let text = match &config {
        Some(path) => std::fs::read_to_string(path).map_err(|source| DriverError::Io {
            path: path.clone(),
            source,
        })?,
        None => String::new(),
    };
    RunConfig::from_text(&text, &overrides)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (command, common) = match &cli.command {
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::MuConverge(c) => (Command::MuConverge, c),
        Cmd::Picard(c) => (Command::Picard, c),
        Cmd::Refine(c) => (Command::Refine, c),
        Cmd::Verify(c) => (Command::Verify, c),
    };
    let result = load(common).and_then(|cfg| run_command(command, &cfg));
    match &result {
        Err(e) => log::error!("{e}"),
        Ok(Outcome::Unstable(what)) => log::error!("check failed: {what}"),
        Ok(Outcome::AuditFailed(what)) => log::error!("output audit failed: {what}"),
        Ok(_) => {}
    }
    ExitCode::from(exit_code(&result) as u8)
}
