//! Multi-run experiments: regularization limit, Picard iteration, grid
//! refinement, and the estimate verification suite.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::{simulate_from, write_file, DriverError, RunConfig};
use crate::diagnostics::sobolev_norm;
use crate::model::{flux_divergence_hat, mollify_initial, velocity_hat, ModelError};
use crate::spectral::{forward_transform, SpectralField, TorusGrid};
use crate::timestepping::{cfl_dt, ifrk4_step, DtPolicy, StepError, Termination};
use crate::verify::{
    check_antisymmetry, sample_bdiff, sample_commutator, sample_gdecomp, sample_lemma1,
    sample_plain_commutator, VerifyReport,
};

fn initial_hat(cfg: &RunConfig) -> SpectralField {
    forward_transform(&mollify_initial(&cfg.initial.sample(cfg.grid()), cfg.params.mu))
}

fn run_completed(cfg: &RunConfig, initial: &SpectralField, dir: &Path, what: &str) -> Result<SpectralField, DriverError> {
    let report = simulate_from(cfg, initial, dir)?;
    match report.final_state.termination {
        Termination::Completed => Ok(report.final_state.state),
        other => Err(DriverError::ReferenceFailed(format!("{what}: {}", other.label()))),
    }
}

fn fmt_row(vals: &[f64]) -> String {
    vals.iter()
        .map(|v| format!("{v:.16e}"))
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Clone, Debug, PartialEq)]
pub struct MuConvergenceReport {
    pub norm_s: f64,
    /// `(μ, ‖ρ^{(μ)}(T) - ρ^{(0)}(T)‖_{L²}, same in H^{s-1})`.
    pub rows: Vec<(f64, f64, f64)>,
    /// Errors nonincreasing as `μ` decreases.
    pub monotone: bool,
}

/// Runs the unregularized reference and one regularized run (mollified data,
/// regularized velocity) per `μ`, and compares the final states.
pub fn mu_convergence(cfg: &RunConfig, mu_list: &[f64]) -> Result<MuConvergenceReport, DriverError> {
    if mu_list.is_empty() {
        return Err(DriverError::Config("mu_list must be nonempty".into()));
    }
    if mu_list.iter().any(|m| !(*m >= 0.0)) || mu_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(DriverError::Config("mu_list must be strictly descending and >= 0".into()));
    }
    let out = &cfg.output;
    let reference_cfg = cfg.with("mu", 0)?;
    let reference = run_completed(
        &reference_cfg,
        &initial_hat(&reference_cfg),
        &out.join("mu_0"),
        "reference run",
    )?;
    let finals: Vec<Result<SpectralField, DriverError>> = mu_list
        .par_iter()
        .map(|&mu| {
            let c = cfg.with("mu", mu)?;
            run_completed(&c, &initial_hat(&c), &out.join(format!("mu_{mu}")), &format!("mu = {mu}"))
        })
        .collect();
    let mut rows = Vec::new();
    for (&mu, fin) in mu_list.iter().zip(finals) {
        let diff = fin?.sub(&reference);
        rows.push((
            mu,
            sobolev_norm(&diff, 0.0, false),
            sobolev_norm(&diff, cfg.norm_s - 1.0, false),
        ));
    }
    let monotone = rows.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].2 <= w[0].2);
    let report = MuConvergenceReport {
        norm_s: cfg.norm_s,
        rows,
        monotone,
    };
    let mut text = format!("mu,error_L2,error_H{}\n", cfg.norm_s - 1.0);
    for &(mu, a, b) in &report.rows {
        let _ = writeln!(text, "{}", fmt_row(&[mu, a, b]));
    }
    write_file(&out.join("mu_convergence.csv"), &text)?;
    if !report.monotone {
        log::warn!("errors are not monotone in mu");
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PicardReport {
    pub dt: f64,
    pub steps: usize,
    /// `d_n = ‖ρ^n(T) - ρ^{n-1}(T)‖_{L²}` for `n = 1..`.
    pub differences: Vec<f64>,
    /// `d_n / d_{n-1}` for `n = 2..`.
    pub ratios: Vec<f64>,
    /// Differences grew three times in a row.
    pub diverged: bool,
}

/// Time step shared by runs that must use one fixed time grid.
fn common_dt(cfg: &RunConfig, initials: &[SpectralField]) -> f64 {
    match cfg.dt_policy {
        DtPolicy::Fixed(dt) => dt,
        DtPolicy::Adaptive { safety, dt_max } => initials
            .iter()
            .map(|c| cfl_dt(c, &cfg.params, safety))
            .fold(dt_max, f64::min),
    }
}

struct Trajectory {
    states: Vec<SpectralField>,
    /// `∂t ρ` at each node, for Hermite interpolation between nodes.
    rates: Vec<SpectralField>,
}

fn diffusion_rate(c: &SpectralField, nu: f64) -> SpectralField {
    let grid = *c.grid();
    let mut out = c.clone();
    for (j, v) in out.coeffs_mut().iter_mut().enumerate() {
        let k = grid.wavevector_f64(j);
        *v *= -nu * (k[0] * k[0] + k[1] * k[1]);
    }
    out
}

fn transport_rhs(c: &SpectralField, u: &[SpectralField]) -> Result<SpectralField, ModelError> {
    if !c.is_finite() {
        return Err(ModelError::NonFinite);
    }
    Ok(flux_divergence_hat(c, u).scaled(-1.0))
}

/// Iterates `∂tρⁿ + ∇·(ρⁿ uⁿ⁻¹) = νΔρⁿ` with `uⁿ⁻¹` built from the previous
/// iterate, starting from `ρ⁰ ≡ ρ₀^{(μ)}`. Each iterate is advanced with the
/// IFRK4 stepper on a fixed grid; the frozen velocity at half steps comes
/// from cubic Hermite interpolation of the previous iterate.
pub fn picard_iteration(cfg: &RunConfig, n_max: usize) -> Result<PicardReport, DriverError> {
    let p = cfg.params;
    if !(p.mu > 0.0) {
        return Err(DriverError::Config("picard iteration needs mu > 0".into()));
    }
    if n_max == 0 {
        return Err(DriverError::Config("picard_iterations must be at least 1".into()));
    }
    let c0 = initial_hat(cfg);
    let dt = common_dt(cfg, std::slice::from_ref(&c0));
    let steps = ((cfg.t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let h = cfg.t_end / steps as f64;

    let mut prev = Trajectory {
        states: vec![c0.clone(); steps + 1],
        rates: vec![SpectralField::zeros(*c0.grid()); steps + 1],
    };
    let mut differences = Vec::new();
    for _ in 0..n_max {
        let u_nodes: Vec<Vec<SpectralField>> = prev.states.iter().map(|c| velocity_hat(c, &p)).collect();
        let mut states = Vec::with_capacity(steps + 1);
        let mut rates = Vec::with_capacity(steps + 1);
        let mut c = c0.clone();
        for k in 0..=steps {
            let rate = diffusion_rate(&c, p.nu).add_scaled(1.0, &transport_rhs(&c, &u_nodes[k]).map_err(step_err)?);
            states.push(c.clone());
            rates.push(rate);
            if k == steps {
                break;
            }
            let mid = prev.states[k]
                .add_scaled(1.0, &prev.states[k + 1])
                .scaled(0.5)
                .add_scaled(h / 8.0, &prev.rates[k].sub(&prev.rates[k + 1]));
            let u_mid = velocity_hat(&mid, &p);
            let t0 = k as f64 * h;
            c = ifrk4_step(&c, t0, h, p.nu, |t, x| {
                let theta = (t - t0) / h;
                let u = if theta < 0.25 {
                    &u_nodes[k]
                } else if theta < 0.75 {
                    &u_mid
                } else {
                    &u_nodes[k + 1]
                };
                transport_rhs(x, u)
            })
            .map_err(step_err)?;
        }
        let diff = states[steps].sub(&prev.states[steps]);
        differences.push(sobolev_norm(&diff, 0.0, false));
        prev = Trajectory { states, rates };
    }
    let ratios: Vec<f64> = differences
        .windows(2)
        .map(|w| if w[0] == 0.0 { 0.0 } else { w[1] / w[0] })
        .collect();
    let mut run = 0;
    let mut diverged = false;
    for w in differences.windows(2) {
        run = if w[1] > w[0] { run + 1 } else { 0 };
        diverged |= run >= 3;
    }
    let report = PicardReport {
        dt: h,
        steps,
        differences,
        ratios,
        diverged,
    };
    let mut text = String::from("n,difference,ratio\n");
    for (i, d) in report.differences.iter().enumerate() {
        let ratio = if i == 0 { String::new() } else { format!("{:.16e}", report.ratios[i - 1]) };
        let _ = writeln!(text, "{},{d:.16e},{ratio}", i + 1);
    }
    write_file(&cfg.output.join("picard.csv"), &text)?;
    Ok(report)
}

fn step_err(e: ModelError) -> DriverError {
    match e {
        ModelError::NonFinite => DriverError::Step(StepError::NonFinite),
        other => DriverError::Step(StepError::Model(other)),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinementReport {
    pub n_list: Vec<usize>,
    pub dt: f64,
    /// Differences between successive resolutions at `t = 0`.
    pub initial_differences: Vec<f64>,
    /// Differences between successive resolutions at `t_end`.
    pub differences: Vec<f64>,
    /// `differences[i] / differences[i+1]`.
    pub ratios: Vec<f64>,
}

/// `L²` norm of `fine - coarse` over the coarse symmetric band.
fn band_difference(coarse: &SpectralField, fine: &SpectralField) -> f64 {
    let g = coarse.grid();
    let d = g.dim();
    let sum: f64 = (0..g.len())
        .filter(|&j| !g.touches_nyquist(j))
        .map(|j| {
            let k = g.wavevector(j);
            (fine.coeff(&k[..d]) - coarse.coeffs()[j]).norm_sqr()
        })
        .sum();
    (g.volume() * sum).sqrt()
}

/// Runs `cfg` at each resolution with one shared fixed time step and compares
/// successive final states on the coarser band.
pub fn grid_refinement(cfg: &RunConfig, n_list: &[usize]) -> Result<RefinementReport, DriverError> {
    if n_list.len() < 2 {
        return Err(DriverError::Config("n_list needs at least two resolutions".into()));
    }
    if n_list.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(DriverError::Config("n_list must double at each entry".into()));
    }
    let configs = n_list
        .iter()
        .map(|&n| cfg.with("modes", n))
        .collect::<Result<Vec<_>, _>>()?;
    let initials: Vec<SpectralField> = configs.iter().map(initial_hat).collect();
    let dt = common_dt(cfg, &initials);
    let finals: Vec<Result<SpectralField, DriverError>> = configs
        .par_iter()
        .zip(&initials)
        .map(|(c, init)| {
            let c = c.with("dt_policy", "fixed")?.with("dt", dt)?;
            run_completed(&c, init, &cfg.output.join(format!("N_{}", c.modes)), &format!("N = {}", c.modes))
        })
        .collect();
    let finals = finals.into_iter().collect::<Result<Vec<_>, _>>()?;
    let pairs = |v: &[SpectralField]| {
        v.windows(2)
            .map(|w| band_difference(&w[0], &w[1]))
            .collect::<Vec<f64>>()
    };
    let differences = pairs(&finals);
    let ratios = differences.windows(2).map(|w| w[0] / w[1]).collect();
    let report = RefinementReport {
        n_list: n_list.to_vec(),
        dt,
        initial_differences: pairs(&initials),
        differences,
        ratios,
    };
    let mut text = String::from("n_coarse,n_fine,initial_difference,difference\n");
    for (i, w) in n_list.windows(2).enumerate() {
        let _ = writeln!(
            text,
            "{},{},{:.16e},{:.16e}",
            w[0], w[1], report.initial_differences[i], report.differences[i]
        );
    }
    write_file(&cfg.output.join("refinement.csv"), &text)?;
    Ok(report)
}

/// Names accepted in `verify_select`.
pub const VERIFY_ESTIMATES: &[&str] = &[
    "lemma1",
    "bdiff",
    "gdecomp",
    "commutator",
    "plain_commutator",
    "antisymmetry",
];

/// Fields drawn for the antisymmetry check; five kernels each.
const ANTISYMMETRY_FIELDS: usize = 200;

/// Tolerance on `|T[G]|` relative to its magnitude scale.
pub const ANTISYMMETRY_TOL: f64 = 1e-10;

/// Runs the selected estimates and writes `verify_report.txt`.
pub fn verify_suite(cfg: &RunConfig) -> Result<Vec<VerifyReport>, DriverError> {
    let v = &cfg.verify;
    if v.select.is_empty() {
        return Err(DriverError::Config("verify_select must name at least one estimate".into()));
    }
    if let Some(bad) = v.select.iter().find(|s| !VERIFY_ESTIMATES.contains(&s.as_str())) {
        return Err(DriverError::Config(format!(
            "unknown estimate `{bad}`; expected one of {}",
            VERIFY_ESTIMATES.join(", ")
        )));
    }
    if v.samples < 1000 {
        return Err(DriverError::Config("verify_samples must be at least 1000".into()));
    }
    let d = cfg.dimension;
    let seed = cfg.seed;
    let cgrid = TorusGrid::new(d, v.modes).map_err(|e| DriverError::Config(e.to_string()))?;
    let mut reports = Vec::new();
    for name in &v.select {
        let report = match name.as_str() {
            "lemma1" => sample_lemma1(v.s, d, v.samples, seed)?,
            "bdiff" => sample_bdiff(v.b, d, v.samples, seed)?,
            "gdecomp" => sample_gdecomp(v.s, v.b, d, v.samples, seed)?,
            "commutator" => sample_commutator(v.b, cgrid, v.trials, v.eps, seed)?,
            "plain_commutator" => sample_plain_commutator(v.b, cgrid, v.trials, v.eps, seed)?,
            _ => {
                let n = if d == 1 { 32 } else { 16 };
                let grid = TorusGrid::new(d, n).expect("valid grid");
                check_antisymmetry(grid, ANTISYMMETRY_FIELDS, seed, ANTISYMMETRY_TOL)?
            }
        };
        log::info!("{}: sup ratio {:.3e}, pass {}", report.name, report.sup_ratio, report.pass);
        reports.push(report);
    }
    let text = reports
        .iter()
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join("\n");
    write_file(&cfg.output.join("verify_report.txt"), &text)?;
    Ok(reports)
}
