//! Runs simulations and campaigns from a [`RunConfig`] and writes their
//! results as plain text.

mod campaigns;
mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use campaigns::{
    grid_refinement, mu_convergence, picard_iteration, verify_suite, MuConvergenceReport,
    PicardReport, RefinementReport, VERIFY_ESTIMATES,
};
pub use config::{parse_overrides, parse_pairs, RunConfig, VerifyConfig};

use crate::diagnostics::DiagnosticsRecord;
use crate::model::Regime;
use crate::spectral::{forward_transform, to_physical, SpectralField};
use crate::timestepping::{integrate_observed, FinalState, StepError, Termination};
use crate::verify::VerifyError;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("reference run did not complete: {0}")]
    ReferenceFailed(String),
}

/// How a command ended, short of an error.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Completed,
    Blowup,
    /// A verification or iteration check failed; names what failed.
    Unstable(String),
    MaxSteps,
    /// The written time series violated its invariants.
    AuditFailed(String),
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Completed => 0,
            Outcome::Blowup => 2,
            Outcome::Unstable(_) => 3,
            Outcome::MaxSteps => 4,
            Outcome::AuditFailed(_) => 5,
        }
    }

    fn from_termination(t: Termination) -> Self {
        match t {
            Termination::Completed => Outcome::Completed,
            Termination::BlowupDetected(_) => Outcome::Blowup,
            Termination::MaxSteps => Outcome::MaxSteps,
        }
    }
}

/// Process exit code for a command result; errors map to 1 except a failed
/// reference run, which is a blow-up.
pub fn exit_code(result: &Result<Outcome, DriverError>) -> i32 {
    match result {
        Ok(o) => o.exit_code(),
        Err(DriverError::ReferenceFailed(_)) => 2,
        Err(_) => 1,
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DriverError + '_ {
    move |source| DriverError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), DriverError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

fn fmt_s(s: f64) -> String {
    format!("{s}")
}

/// Header of the time-series file for the given tracked exponents.
pub fn timeseries_header(s_list: &[f64]) -> String {
    let mut cols = vec!["t", "mass", "min_rho", "max_rho", "l2"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    for &s in s_list {
        cols.push(format!("hsdot_{}", fmt_s(s)));
        cols.push(format!("hs_{}", fmt_s(s)));
    }
    cols.extend(
        ["B1", "B2", "int_B1", "int_B2sq", "energy_residual_L2", "energy_residual_Hs"]
            .into_iter()
            .map(String::from),
    );
    cols.join(",")
}

/// One record as a CSV row with 17 significant digits per value.
pub fn timeseries_row(r: &DiagnosticsRecord) -> String {
    let mut vals = vec![r.t, r.mass, r.min_rho, r.max_rho, r.l2];
    for h in &r.hs {
        vals.push(h.homogeneous);
        vals.push(h.inhomogeneous);
    }
    vals.extend([
        r.b1,
        r.b2,
        r.int_b1,
        r.int_b2sq,
        r.energy_residual_l2,
        r.energy_residual_hs,
    ]);
    vals.iter()
        .map(|v| format!("{v:.16e}"))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn timeseries_text(s_list: &[f64], records: &[DiagnosticsRecord]) -> String {
    let mut out = timeseries_header(s_list);
    out.push('\n');
    for r in records {
        out.push_str(&timeseries_row(r));
        out.push('\n');
    }
    out
}

/// `"d N t"` followed by the `N^d` physical values, row-major.
pub fn snapshot_text(t: f64, state: &SpectralField) -> String {
    let grid = state.grid();
    let values = to_physical(state);
    let mut out = format!("{} {} {t:.16e}\n", grid.dim(), grid.n());
    for v in values.values() {
        let _ = writeln!(out, "{v:.16e}");
    }
    out
}

/// Checks the invariants every emitted series must satisfy: strictly
/// increasing `t`, mass constant to `10⁻¹²` relative, nondecreasing time
/// integrals, and finite entries (residuals may be undefined for a
/// single-sample series).
pub fn audit_records(records: &[DiagnosticsRecord]) -> Result<(), String> {
    let Some(first) = records.first() else {
        return Err("empty time series".into());
    };
    // ‖ρ‖_{L¹} <= sqrt(volume)·‖ρ‖_{L²} <= 2π‖ρ‖_{L²} bounds the round-off in c₀
    let scale = first.mass.abs().max(2.0 * std::f64::consts::PI * first.l2);
    for (i, r) in records.iter().enumerate() {
        let mut vals = vec![r.t, r.mass, r.min_rho, r.max_rho, r.l2, r.b1, r.b2, r.int_b1, r.int_b2sq];
        vals.extend(r.hs.iter().flat_map(|h| [h.homogeneous, h.inhomogeneous]));
        if records.len() > 1 {
            vals.extend([r.energy_residual_l2, r.energy_residual_hs]);
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(format!("non-finite entry in row {i} (t = {})", r.t));
        }
        if (r.mass - first.mass).abs() > 1e-12 * scale {
            return Err(format!(
                "mass drifted from {} to {} by t = {}",
                first.mass, r.mass, r.t
            ));
        }
    }
    for w in records.windows(2) {
        if !(w[1].t > w[0].t) {
            return Err(format!("time not increasing at t = {}", w[1].t));
        }
        if w[1].int_b1 < w[0].int_b1 || w[1].int_b2sq < w[0].int_b2sq {
            return Err(format!("time integrals decreased at t = {}", w[1].t));
        }
    }
    Ok(())
}

/// Logs where the parameters sit relative to the well-posedness theory.
pub fn log_regime(cfg: &RunConfig) {
    let regime = Regime::classify(&cfg.params);
    log::info!("regime: {}", regime.label());
    match regime {
        Regime::OutsideTheory => log::warn!(
            "c_K >= 0 with nu = 0 lies outside the hypotheses of the well-posedness theorem"
        ),
        Regime::Viscous {
            smallness_required: true,
        } => log::warn!(
            "alpha - d = 0 with c_K > 0 needs ||rho0||_inf < c nu / c_K for an unknown constant c; not checked"
        ),
        Regime::RepulsiveInviscid => {
            let min = cfg.initial.sample(cfg.grid()).min();
            if min < 0.0 {
                log::warn!("inviscid repulsive case expects nonnegative data, min rho0 = {min}");
            }
        }
        _ => {}
    }
}

/// Result of one simulation.
#[derive(Clone, Debug)]
pub struct SimulationReport {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: FinalState,
    pub outcome: Outcome,
}

/// Runs `cfg` from its (mollified when `μ > 0`) initial condition and writes
/// `config.txt`, `timeseries.csv` and snapshots into `dir`.
pub fn simulate_into(cfg: &RunConfig, dir: &Path) -> Result<SimulationReport, DriverError> {
    let rho0 = crate::model::mollify_initial(&cfg.initial.sample(cfg.grid()), cfg.params.mu);
    simulate_from(cfg, &forward_transform(&rho0), dir)
}

pub(crate) fn simulate_from(
    cfg: &RunConfig,
    initial: &SpectralField,
    dir: &Path,
) -> Result<SimulationReport, DriverError> {
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut sample = 0usize;
    let every = cfg.snapshot_every;
    let mut last_state = None;
    let fin = integrate_observed(
        initial,
        &cfg.params,
        &cfg.stepper(),
        |r| records.push(r.clone()),
        |t, s| {
            if sample == 0 || (every > 0 && sample % every == 0) {
                snapshots.push((sample, snapshot_text(t, s)));
                last_state = None;
            } else {
                last_state = Some((sample, t, s.clone()));
            }
            sample += 1;
        },
    )?;
    if let Some((i, t, s)) = last_state {
        snapshots.push((i, snapshot_text(t, &s)));
    }
    write_file(&dir.join("config.txt"), &cfg.to_text())?;
    write_file(&dir.join("timeseries.csv"), &timeseries_text(&cfg.s_list, &records))?;
    for (i, text) in &snapshots {
        write_file(&dir.join(format!("snapshot_{i:06}.txt")), text)?;
    }
    let outcome = match audit_records(&records) {
        Err(msg) => Outcome::AuditFailed(msg),
        Ok(()) => Outcome::from_termination(fin.termination),
    };
    Ok(SimulationReport {
        records,
        final_state: fin,
        outcome,
    })
}

/// The `simulate` command.
pub fn run_simulation(cfg: &RunConfig) -> Result<SimulationReport, DriverError> {
    log_regime(cfg);
    let report = simulate_into(cfg, &cfg.output)?;
    match &report.outcome {
        Outcome::Completed => log::info!(
            "completed t = {} in {} steps",
            report.final_state.t,
            report.final_state.steps
        ),
        Outcome::Blowup => log::warn!(
            "blow-up detected ({}) at t = {}",
            report.final_state.termination.label(),
            report.final_state.t
        ),
        Outcome::MaxSteps => log::warn!("max_steps reached at t = {}", report.final_state.t),
        Outcome::AuditFailed(m) => log::error!("time series audit failed: {m}"),
        Outcome::Unstable(_) => {}
    }
    Ok(report)
}

/// CLI subcommands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    MuConverge,
    Picard,
    Refine,
    Verify,
}

/// Runs one command and classifies how it ended.
pub fn run_command(command: Command, cfg: &RunConfig) -> Result<Outcome, DriverError> {
    match command {
        Command::Simulate => Ok(run_simulation(cfg)?.outcome),
        Command::MuConverge => {
            log_regime(cfg);
            let report = mu_convergence(cfg, &cfg.mu_list)?;
            for (mu, l2, hs) in &report.rows {
                log::info!("mu = {mu}: L2 error {l2:.3e}, H^(s-1) error {hs:.3e}");
            }
            Ok(Outcome::Completed)
        }
        Command::Picard => {
            log_regime(cfg);
            let report = picard_iteration(cfg, cfg.picard_iterations)?;
            for (n, d) in report.differences.iter().enumerate() {
                log::info!("d_{} = {d:.3e}", n + 1);
            }
            if report.diverged {
                Ok(Outcome::Unstable("picard iteration diverged".into()))
            } else {
                Ok(Outcome::Completed)
            }
        }
        Command::Refine => {
            log_regime(cfg);
            let report = grid_refinement(cfg, &cfg.n_list)?;
            for (w, d) in report.n_list.windows(2).zip(&report.differences) {
                log::info!("N = {} -> {}: difference {d:.3e}", w[0], w[1]);
            }
            Ok(Outcome::Completed)
        }
        Command::Verify => {
            let reports = verify_suite(cfg)?;
            let failed: Vec<&str> = reports
                .iter()
                .filter(|r| !r.pass)
                .map(|r| r.name.as_str())
                .collect();
            if failed.is_empty() {
                Ok(Outcome::Completed)
            } else {
                Ok(Outcome::Unstable(failed.join(", ")))
            }
        }
    }
}
