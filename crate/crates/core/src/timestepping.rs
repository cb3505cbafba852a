//! Integrating-factor RK4 time stepping. Diffusion is applied exactly through
//! `e^{-ν|ξ|²h}`; the nonlinear term is advanced by classical RK4 in the
//! transformed variable.

use thiserror::Error;

use crate::diagnostics::{blowup_b1, blowup_b2, DiagnosticsRecord, DiagnosticsTracker};
use crate::model::{nonlinear_rhs, velocity, ModelError, ModelParams};
use crate::spectral::{forward_transform, to_physical, RealField, SpectralField};

/// Added to denominators of the CFL bound so quiescent states give a finite step.
pub const CFL_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("invalid stepper configuration: {0}")]
    InvalidConfig(String),
    #[error("state became non-finite")]
    NonFinite,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scheme {
    #[default]
    Ifrk4,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DtPolicy {
    Fixed(f64),
    /// `dt = min(cfl_dt(safety), dt_max)`, re-evaluated every step.
    Adaptive { safety: f64, dt_max: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub dt_policy: DtPolicy,
    pub t_end: f64,
    pub max_steps: usize,
    /// Abort once `B₁` exceeds this.
    pub blowup_threshold: f64,
    /// Emit a record every this many steps (plus the initial and final states).
    pub sample_every: usize,
    /// Exponents reported in each record's `hs` list.
    pub s_list: Vec<f64>,
    /// Exponent of the `Ḣ^s` energy residual.
    pub energy_s: f64,
}

impl StepperConfig {
    pub fn validate(&self) -> Result<(), StepError> {
        let bad = |m: String| Err(StepError::InvalidConfig(m));
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1".into());
        }
        if !(self.blowup_threshold > 0.0) {
            return bad(format!(
                "blowup_threshold must be positive, got {}",
                self.blowup_threshold
            ));
        }
        match self.dt_policy {
            DtPolicy::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                bad(format!("dt must be positive, got {dt}"))
            }
            DtPolicy::Adaptive { safety, .. } if !(safety > 0.0 && safety <= 1.0) => {
                bad(format!("safety must lie in (0, 1], got {safety}"))
            }
            DtPolicy::Adaptive { dt_max, .. } if !(dt_max > 0.0) => {
                bad(format!("dt_max must be positive, got {dt_max}"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BlowupReason {
    Threshold { b1: f64 },
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination {
    Completed,
    BlowupDetected(BlowupReason),
    MaxSteps,
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::BlowupDetected(BlowupReason::Threshold { .. }) => "blowup_threshold",
            Termination::BlowupDetected(BlowupReason::NonFinite) => "blowup_nonfinite",
            Termination::MaxSteps => "max_steps",
        }
    }
}

#[derive(Clone, Debug)]
pub struct FinalState {
    /// Last finite state.
    pub state: SpectralField,
    pub t: f64,
    pub steps: usize,
    pub termination: Termination,
    pub int_b1: f64,
    pub int_b2sq: f64,
}

/// CFL-type step bound
/// `safety · min(Δx/(ε+max|u|), Δx^{max(1,2-2b)}/(ε+|c_K| max ρ))`.
pub fn cfl_dt(state: &SpectralField, p: &ModelParams, safety: f64) -> f64 {
    let grid = state.grid();
    let dx = grid.dx();
    let u = velocity(state, p);
    let speed = (0..grid.len())
        .map(|j| u.iter().map(|c| c.values()[j].powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let rho_max = to_physical(state).max().max(0.0);
    let order = (2.0 - 2.0 * p.b()).max(1.0);
    let transport = dx / (CFL_EPS + speed);
    let nonlocal = dx.powf(order) / (CFL_EPS + p.c_k.abs() * rho_max);
    safety * transport.min(nonlocal)
}

fn heat_factor(state: &SpectralField, nu: f64, h: f64) -> Vec<f64> {
    let grid = state.grid();
    (0..grid.len())
        .map(|j| {
            let k = grid.wavevector_f64(j);
            (-nu * (k[0] * k[0] + k[1] * k[1]) * h).exp()
        })
        .collect()
}

fn times(factor: &[f64], f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    for (c, e) in out.coeffs_mut().iter_mut().zip(factor) {
        *c *= e;
    }
    out
}

/// One Lawson (integrating-factor) RK4 step of `∂t c = -ν|ξ|²c + rhs(t, c)`.
pub fn ifrk4_step<E>(
    state: &SpectralField,
    t: f64,
    dt: f64,
    nu: f64,
    mut rhs: impl FnMut(f64, &SpectralField) -> Result<SpectralField, E>,
) -> Result<SpectralField, E> {
    let full = heat_factor(state, nu, dt);
    let half = heat_factor(state, nu, 0.5 * dt);
    let k1 = rhs(t, state)?;
    let k2 = rhs(t + 0.5 * dt, &times(&half, &state.add_scaled(0.5 * dt, &k1)))?;
    let e_half_c = times(&half, state);
    let k3 = rhs(t + 0.5 * dt, &e_half_c.add_scaled(0.5 * dt, &k2))?;
    let k4 = rhs(
        t + dt,
        &times(&full, state).add_scaled(dt, &times(&half, &k3)),
    )?;
    let mid = times(&half, &k2.add_scaled(1.0, &k3));
    let mut out = times(&full, state);
    let (e1, e4) = (times(&full, &k1), k4);
    for (j, c) in out.coeffs_mut().iter_mut().enumerate() {
        *c += dt / 6.0 * (e1.coeffs()[j] + 2.0 * mid.coeffs()[j] + e4.coeffs()[j]);
    }
    Ok(out)
}

/// One IFRK4 step of the full model. With `c_K = 0` this is the exact heat flow.
pub fn step(state: &SpectralField, dt: f64, p: &ModelParams) -> Result<SpectralField, StepError> {
    if !(dt > 0.0) {
        return Err(StepError::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    let next = ifrk4_step(state, 0.0, dt, p.nu, |_, c| nonlinear_rhs(c, p)).map_err(|e| match e {
        ModelError::NonFinite => StepError::NonFinite,
        other => StepError::Model(other),
    })?;
    if next.is_finite() {
        Ok(next)
    } else {
        Err(StepError::NonFinite)
    }
}

/// Advances `rho0` to `cfg.t_end`, handing each diagnostics record to
/// `on_sample` in time order.
pub fn integrate(
    rho0: &RealField,
    p: &ModelParams,
    cfg: &StepperConfig,
    on_sample: impl FnMut(&DiagnosticsRecord),
) -> Result<FinalState, StepError> {
    integrate_spectral(&forward_transform(rho0), p, cfg, on_sample)
}

/// [`integrate`] starting from Fourier coefficients.
pub fn integrate_spectral(
    initial: &SpectralField,
    p: &ModelParams,
    cfg: &StepperConfig,
    on_sample: impl FnMut(&DiagnosticsRecord),
) -> Result<FinalState, StepError> {
    integrate_observed(initial, p, cfg, on_sample, |_, _| {})
}

/// [`integrate_spectral`] that also hands every sampled state to `on_state`
/// at the moment it is sampled (before its record is complete).
pub fn integrate_observed(
    initial: &SpectralField,
    p: &ModelParams,
    cfg: &StepperConfig,
    mut on_sample: impl FnMut(&DiagnosticsRecord),
    mut on_state: impl FnMut(f64, &SpectralField),
) -> Result<FinalState, StepError> {
    cfg.validate()?;
    if !initial.is_finite() {
        return Err(StepError::Model(ModelError::NonFinite));
    }
    let mut tracker = DiagnosticsTracker::new(*p, cfg.s_list.clone(), cfg.energy_s);
    let mut emit = |records: Vec<DiagnosticsRecord>| {
        for r in &records {
            on_sample(r);
        }
    };

    let mut state = initial.clone();
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut b1 = blowup_b1(&state);
    let mut b2 = blowup_b2(&state);
    let (mut int_b1, mut int_b2sq) = (0.0, 0.0);
    on_state(t, &state);
    emit(tracker.push(t, &state, int_b1, int_b2sq));

    let finish = |state, t, steps, termination, int_b1, int_b2sq| FinalState {
        state,
        t,
        steps,
        termination,
        int_b1,
        int_b2sq,
    };

    if b1 > cfg.blowup_threshold {
        emit(tracker.finish());
        let reason = BlowupReason::Threshold { b1 };
        return Ok(finish(state, t, steps, Termination::BlowupDetected(reason), 0.0, 0.0));
    }

    let mut sampled_at = 0usize;
    let termination = loop {
        let remaining = cfg.t_end - t;
        if remaining <= 1e-12 * cfg.t_end {
            break Termination::Completed;
        }
        if steps >= cfg.max_steps {
            break Termination::MaxSteps;
        }
        let dt = match cfg.dt_policy {
            DtPolicy::Fixed(dt) => dt,
            DtPolicy::Adaptive { safety, dt_max } => cfl_dt(&state, p, safety).min(dt_max),
        };
        let last = dt >= remaining * (1.0 - 1e-12);
        let dt = if last { remaining } else { dt };

        let next = match step(&state, dt, p) {
            Ok(next) => next,
            Err(StepError::NonFinite) => break Termination::BlowupDetected(BlowupReason::NonFinite),
            Err(e) => return Err(e),
        };
        let (nb1, nb2) = (blowup_b1(&next), blowup_b2(&next));
        if !(nb1.is_finite() && nb2.is_finite()) {
            break Termination::BlowupDetected(BlowupReason::NonFinite);
        }
        int_b1 += 0.5 * dt * (b1 + nb1);
        int_b2sq += 0.5 * dt * (b2 + nb2);
        b1 = nb1;
        b2 = nb2;
        state = next;
        steps += 1;
        t = match cfg.dt_policy {
            // multiples of dt avoid drift from repeated addition
            DtPolicy::Fixed(h) if !last => steps as f64 * h,
            _ if last => cfg.t_end,
            _ => t + dt,
        };

        let over = b1 > cfg.blowup_threshold;
        if over || last || steps % cfg.sample_every == 0 {
            on_state(t, &state);
            emit(tracker.push(t, &state, int_b1, int_b2sq));
            sampled_at = steps;
        }
        if over {
            break Termination::BlowupDetected(BlowupReason::Threshold { b1 });
        }
    };
    if sampled_at != steps {
        on_state(t, &state);
        emit(tracker.push(t, &state, int_b1, int_b2sq));
    }
    emit(tracker.finish());
    Ok(finish(state, t, steps, termination, int_b1, int_b2sq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{inverse_transform, CutoffSpec, TorusGrid};

    fn params(amd: f64, c_k: f64, nu: f64) -> ModelParams {
        ModelParams::new(amd, c_k, nu, 0.0, CutoffSpec::SmoothBump).unwrap()
    }

    fn cfg(dt: f64, t_end: f64) -> StepperConfig {
        StepperConfig {
            scheme: Scheme::Ifrk4,
            dt_policy: DtPolicy::Fixed(dt),
            t_end,
            max_steps: 1_000_000,
            blowup_threshold: 1e12,
            sample_every: 10,
            s_list: vec![1.0],
            energy_s: 1.0,
        }
    }

    fn cosine(n: usize, a: f64) -> RealField {
        RealField::from_fn(TorusGrid::new(1, n).unwrap(), |x| 1.0 + a * x[0].cos())
    }

    #[test]
    fn heat_step_is_exact() {
        let p = params(-1.0, 0.0, 1.0);
        let c = forward_transform(&cosine(16, 1.0));
        for dt in [1e-3, 0.1, 2.5] {
            let next = step(&c, dt, &p).unwrap();
            assert_eq!(next.coeff(&[1]), c.coeff(&[1]) * (-dt).exp());
            assert_eq!(next.coeff(&[0]), c.coeff(&[0]));
        }
    }

    #[test]
    fn frozen_without_dynamics() {
        let p = params(-1.0, 0.0, 0.0);
        let c = forward_transform(&cosine(16, 0.4));
        assert_eq!(step(&c, 0.3, &p).unwrap(), c);
    }

    #[test]
    fn heat_integration_matches_closed_form() {
        let p = params(-1.0, 0.0, 1.0);
        let fin = integrate(&cosine(32, 1.0), &p, &cfg(1e-3, 0.1), |_| {}).unwrap();
        assert_eq!(fin.termination, Termination::Completed);
        assert_eq!(fin.steps, 100);
        let rho = inverse_transform(&fin.state).unwrap();
        let g = *rho.grid();
        for (j, v) in rho.values().iter().enumerate() {
            let exact = 1.0 + (-0.1f64).exp() * g.point(j)[0].cos();
            assert!((v - exact).abs() < 1e-8 * exact.abs());
        }
    }

    #[test]
    fn cfl_examples() {
        let p = params(-1.0, 0.0, 0.0);
        let c = forward_transform(&cosine(32, 0.5));
        let dx = c.grid().dx();
        assert!((cfl_dt(&c, &p, 0.5) - 0.5 * dx / CFL_EPS).abs() < 1e-3 * dx / CFL_EPS);

        // b = 0: the nonlocal bound scales with Δx², so doubling N quarters it
        let p = params(0.0, 1.0, 0.0);
        let flat = |n| {
            forward_transform(&RealField::from_fn(TorusGrid::new(1, n).unwrap(), |_| 2.0))
        };
        let ratio = cfl_dt(&flat(32), &p, 1.0) / cfl_dt(&flat(64), &p, 1.0);
        assert!((ratio - 4.0).abs() < 1e-9);

        // b = 1: transport-type exponent 1
        let p = params(-2.0, 1.0, 0.0);
        let ratio = cfl_dt(&flat(32), &p, 1.0) / cfl_dt(&flat(64), &p, 1.0);
        assert!((ratio - 2.0).abs() < 1e-9);
    }

    #[test]
    fn mass_is_conserved() {
        let p = params(-1.0, -1.0, 0.05);
        let rho0 = RealField::from_fn(TorusGrid::new(2, 16).unwrap(), |x| {
            1.0 + 0.3 * x[0].cos() * (2.0 * x[1]).sin()
        });
        let mut masses = Vec::new();
        let fin = integrate(&rho0, &p, &cfg(1e-2, 0.2), |r| masses.push(r.mass)).unwrap();
        assert_eq!(fin.termination, Termination::Completed);
        for m in &masses {
            assert!((m - masses[0]).abs() <= 1e-12 * masses[0]);
        }
    }

    #[test]
    fn records_are_sampled_in_order_and_integrals_grow() {
        let p = params(-1.0, -1.0, 0.0);
        let mut recs = Vec::new();
        let mut c = cfg(1e-2, 0.25);
        c.sample_every = 5;
        integrate(&cosine(32, 0.5), &p, &c, |r| recs.push(r.clone())).unwrap();
        let t: Vec<f64> = recs.iter().map(|r| r.t).collect();
        assert_eq!(t.len(), 6);
        assert_eq!(t[0], 0.0);
        assert_eq!(*t.last().unwrap(), 0.25);
        for w in recs.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!(w[1].int_b1 >= w[0].int_b1 && w[1].int_b2sq >= w[0].int_b2sq);
        }
        assert!(recs.iter().all(|r| r.energy_residual_l2.is_finite()));
    }

    #[test]
    fn threshold_and_max_steps() {
        let p = params(-1.0, 1.0, 0.0);
        let mut c = cfg(1e-3, 10.0);
        c.blowup_threshold = 1.6;
        let fin = integrate(&cosine(32, 0.5), &p, &c, |_| {}).unwrap();
        assert!(matches!(
            fin.termination,
            Termination::BlowupDetected(BlowupReason::Threshold { b1 }) if b1 > 1.6
        ));

        let mut c = cfg(1e-3, 10.0);
        c.max_steps = 7;
        let fin = integrate(&cosine(32, 0.5), &params(-1.0, -1.0, 0.0), &c, |_| {}).unwrap();
        assert_eq!(fin.termination, Termination::MaxSteps);
        assert_eq!(fin.steps, 7);
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = cfg(1e-3, 1.0);
        c.t_end = 0.0;
        assert!(c.validate().is_err());
        let mut c = cfg(1e-3, 1.0);
        c.dt_policy = DtPolicy::Adaptive {
            safety: 1.5,
            dt_max: 0.1,
        };
        assert!(c.validate().is_err());
        let mut c = cfg(1e-3, 1.0);
        c.max_steps = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn resolution_independent_for_smooth_data() {
        let p = params(-1.0, -1.0, 0.0);
        let run = |n| {
            integrate(&cosine(n, 0.5), &p, &cfg(1e-2, 0.1), |_| {})
                .unwrap()
                .state
        };
        let (coarse, fine) = (run(32), run(64));
        for k in -10i64..=10 {
            assert!((coarse.coeff(&[k]) - fine.coeff(&[k])).norm() < 1e-10);
        }
    }
}
