//! Right-hand side of `∂tρ + ∇·(ρu) = νΔρ` with `u = c_K Λ^{α-d}∇ρ`,
//! plus initial data and its mollification.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::spectral::{
    self, dealias, forward_transform, heat_multiplier, norm, to_physical, CutoffSpec, RealField,
    SpectralField, TorusGrid,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model parameter: {0}")]
    InvalidParams(String),
    #[error("invalid initial condition: {0}")]
    InvalidInitial(String),
    #[error("state contains NaN or infinite coefficients")]
    NonFinite,
    #[error("fields live on different grids or have the wrong component count")]
    Shape,
}

/// Physical parameters of the flow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    alpha_minus_d: f64,
    b: f64,
    pub c_k: f64,
    pub nu: f64,
    pub mu: f64,
    pub cutoff: CutoffSpec,
}

impl ModelParams {
    pub fn new(
        alpha_minus_d: f64,
        c_k: f64,
        nu: f64,
        mu: f64,
        cutoff: CutoffSpec,
    ) -> Result<Self, ModelError> {
        if !(-2.0..=0.0).contains(&alpha_minus_d) {
            return Err(ModelError::InvalidParams(format!(
                "alpha_minus_d must lie in [-2, 0], got {alpha_minus_d}"
            )));
        }
        if !c_k.is_finite() {
            return Err(ModelError::InvalidParams("c_K must be finite".into()));
        }
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(ModelError::InvalidParams(format!("nu must be >= 0, got {nu}")));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(ModelError::InvalidParams(format!("mu must be >= 0, got {mu}")));
        }
        Ok(Self {
            alpha_minus_d,
            b: -alpha_minus_d / 2.0,
            c_k,
            nu,
            mu,
            cutoff,
        })
    }

    pub fn alpha_minus_d(&self) -> f64 {
        self.alpha_minus_d
    }

    /// `b = (d - α)/2 ∈ [0, 1]`.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Same parameters with a different regularization scale.
    pub fn with_mu(&self, mu: f64) -> Result<Self, ModelError> {
        Self::new(self.alpha_minus_d, self.c_k, self.nu, mu, self.cutoff)
    }

    /// Scalar part of the velocity symbol, `c_K |ξ|^{-2b} χ(μ|ξ|)`, at `ξ ≠ 0`.
    pub fn velocity_weight(&self, k: f64) -> f64 {
        let w = self.c_k * k.powf(-2.0 * self.b);
        if self.mu > 0.0 {
            w * self.cutoff.eval(self.mu * k)
        } else {
            w
        }
    }
}

/// Where a parameter set sits relative to the well-posedness theory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `c_K < 0`, `ν = 0`.
    RepulsiveInviscid,
    /// `ν > 0`. `smallness_required` is set for `α-d = 0, c_K > 0`, where a
    /// bound `‖ρ₀‖_∞ < cν/c_K` with an unknown absolute constant is needed.
    Viscous { smallness_required: bool },
    /// `c_K ≥ 0`, `ν = 0`.
    OutsideTheory,
}

impl Regime {
    pub fn classify(p: &ModelParams) -> Self {
        if p.nu > 0.0 {
            Regime::Viscous {
                smallness_required: p.alpha_minus_d == 0.0 && p.c_k > 0.0,
            }
        } else if p.c_k < 0.0 {
            Regime::RepulsiveInviscid
        } else {
            Regime::OutsideTheory
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Regime::RepulsiveInviscid => "case1",
            Regime::Viscous { .. } => "case2",
            Regime::OutsideTheory => "outside-theorem",
        }
    }
}

/// Spectral velocity components `c_K |ξ|^{α-d} χ(μ|ξ|) iξ_j ρ̂(ξ)`.
pub fn velocity_hat(rho_hat: &SpectralField, p: &ModelParams) -> Vec<SpectralField> {
    let grid = *rho_hat.grid();
    let d = grid.dim();
    let nyquist = -(grid.n() as i64) / 2;
    (0..d)
        .map(|axis| {
            let mut out = SpectralField::zeros(grid);
            for (j, (o, c)) in out.coeffs_mut().iter_mut().zip(rho_hat.coeffs()).enumerate() {
                let k = grid.wavevector(j);
                if k[axis] == 0 || k[axis] == nyquist {
                    continue;
                }
                let kf = grid.wavevector_f64(j);
                let w = p.velocity_weight(norm(&kf[..d]));
                *o = c * Complex64::new(0.0, k[axis] as f64 * w);
            }
            out
        })
        .collect()
}

/// Velocity field in physical space, one [`RealField`] per component.
pub fn velocity(rho_hat: &SpectralField, p: &ModelParams) -> Vec<RealField> {
    velocity_hat(rho_hat, p).iter().map(to_physical).collect()
}

/// `(∇·(ρu))^` with both factors 2/3-dealiased before the pointwise product.
/// The result is truncated to the dealiasing band, where it equals the
/// exact convolution.
pub(crate) fn flux_divergence_hat(rho_hat: &SpectralField, u_hat: &[SpectralField]) -> SpectralField {
    let grid = *rho_hat.grid();
    let rho = to_physical(&dealias(rho_hat));
    let mut out = SpectralField::zeros(grid);
    for (axis, u) in u_hat.iter().enumerate() {
        let u = to_physical(&dealias(u));
        let values = rho.values().iter().zip(u.values()).map(|(a, b)| a * b).collect();
        let flux = forward_transform(&RealField::new(grid, values).expect("finite product"));
        for (j, (o, f)) in out.coeffs_mut().iter_mut().zip(flux.coeffs()).enumerate() {
            if grid.in_dealias_band(j) {
                let k = grid.wavevector(j)[axis] as f64;
                *o += f * Complex64::new(0.0, k);
            }
        }
    }
    out
}

pub fn flux_divergence(rho: &RealField, u: &[RealField]) -> Result<SpectralField, ModelError> {
    let grid = rho.grid();
    if u.len() != grid.dim() || u.iter().any(|c| c.grid() != grid) {
        return Err(ModelError::Shape);
    }
    let u_hat: Vec<_> = u.iter().map(forward_transform).collect();
    Ok(flux_divergence_hat(&forward_transform(rho), &u_hat))
}

/// Nonlinear part of the evolution, `-(∇·(ρu))^`. Diffusion is left to the
/// integrating factor of the time stepper.
pub fn nonlinear_rhs(rho_hat: &SpectralField, p: &ModelParams) -> Result<SpectralField, ModelError> {
    if !rho_hat.is_finite() {
        return Err(ModelError::NonFinite);
    }
    if p.c_k == 0.0 {
        return Ok(SpectralField::zeros(*rho_hat.grid()));
    }
    let u = velocity_hat(rho_hat, p);
    Ok(flux_divergence_hat(rho_hat, &u).scaled(-1.0))
}

/// Convolution with the periodized heat kernel at time `μ²/2`, i.e. the
/// multiplier `e^{-μ²|ξ|²/2}`. Nonnegative, unit mass; `μ = 0` is the identity.
pub fn mollify_initial(rho0: &RealField, mu: f64) -> RealField {
    if mu == 0.0 {
        return rho0.clone();
    }
    let hat = spectral::apply_multiplier(&forward_transform(rho0), &heat_multiplier(mu * mu / 2.0));
    to_physical(&hat)
}

/// Initial density profiles.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    /// `m₀ + a cos(k·x)`.
    CosinePerturbation {
        mean: f64,
        amplitude: f64,
        wavevector: [i64; 2],
    },
    /// Periodized Gaussian of total mass `mass` and standard deviation `width`.
    GaussianBump {
        mass: f64,
        width: f64,
        center: [f64; 2],
    },
    /// `mean` plus a random perturbation with spectrum `∝ (1+|ξ|)^{-decay}`,
    /// rescaled so its largest absolute value is `amplitude`.
    SpectralRandom {
        seed: u64,
        decay: f64,
        mean: f64,
        amplitude: f64,
    },
    /// `mean + amplitude (Π_j P_r(x_j) - 1)` with the Poisson kernel
    /// `P_r(x) = (1-r²)/(1-2r cos x+r²) = 1 + 2Σ_{k≥1} r^k cos kx`.
    /// Analytic, with coefficients decaying like `r^{|ξ|}`.
    Poisson { mean: f64, amplitude: f64, radius: f64 },
}

impl InitialCondition {
    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            InitialCondition::CosinePerturbation { mean, amplitude, .. } => {
                if !mean.is_finite() || !amplitude.is_finite() {
                    return Err(ModelError::InvalidInitial("non-finite cosine parameters".into()));
                }
            }
            InitialCondition::GaussianBump { mass, width, .. } => {
                if !(mass > 0.0) || !(width > 0.0) {
                    return Err(ModelError::InvalidInitial(
                        "gaussian bump needs mass > 0 and width > 0".into(),
                    ));
                }
            }
            InitialCondition::SpectralRandom { decay, amplitude, mean, .. } => {
                if !decay.is_finite() || !(amplitude >= 0.0) || !mean.is_finite() {
                    return Err(ModelError::InvalidInitial("bad random-field parameters".into()));
                }
            }
            InitialCondition::Poisson { mean, amplitude, radius } => {
                if !mean.is_finite() || !amplitude.is_finite() || !(radius > 0.0 && radius < 1.0) {
                    return Err(ModelError::InvalidInitial(
                        "poisson profile needs finite mean/amplitude and radius in (0, 1)".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn sample(&self, grid: TorusGrid) -> RealField {
        let d = grid.dim();
        match *self {
            InitialCondition::CosinePerturbation {
                mean,
                amplitude,
                wavevector,
            } => {
                let k = [wavevector[0] as f64, wavevector[1] as f64];
                RealField::from_fn(grid, |x| mean + amplitude * spectral::dot(&k[..d], x).cos())
            }
            InitialCondition::GaussianBump {
                mass,
                width,
                center,
            } => {
                let c0 = mass / (2.0 * PI).powi(d as i32);
                let hat = SpectralField::from_fn(grid, |k| {
                    let kf = [k[0] as f64, k.get(1).copied().unwrap_or(0) as f64];
                    let k2 = spectral::dot(&kf[..d], &kf[..d]);
                    let phase = -spectral::dot(&kf[..d], &center[..d]);
                    Complex64::from_polar(c0 * (-0.5 * width * width * k2).exp(), phase)
                });
                to_physical(&spectral::drop_nyquist(&hat))
            }
            InitialCondition::SpectralRandom {
                seed,
                decay,
                mean,
                amplitude,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut hat = SpectralField::zeros(grid);
                for j in 1..grid.len() {
                    let partner = grid.conjugate_index(j);
                    if partner < j || grid.touches_nyquist(j) {
                        continue;
                    }
                    let kf = grid.wavevector_f64(j);
                    let w = (1.0 + norm(&kf[..d])).powf(-decay);
                    let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * w;
                    hat.coeffs_mut()[j] = z;
                    hat.coeffs_mut()[partner] = z.conj();
                }
                let pert = to_physical(&hat);
                let scale = pert.max_abs();
                let factor = if scale > 0.0 { amplitude / scale } else { 0.0 };
                RealField::new(
                    grid,
                    pert.values().iter().map(|v| mean + factor * v).collect(),
                )
                .expect("finite random field")
            }
            InitialCondition::Poisson { mean, amplitude, radius } => {
                let r = radius;
                let kernel = |x: f64| (1.0 - r * r) / (1.0 - 2.0 * r * x.cos() + r * r);
                RealField::from_fn(grid, |x| {
                    mean + amplitude * (x.iter().map(|&xi| kernel(xi)).product::<f64>() - 1.0)
                })
            }
        }
    }
}
