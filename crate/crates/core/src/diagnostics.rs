//! Norms, blow-up functionals, the trilinear form `T[G]`, and residuals of
//! the semi-discrete energy identities.
//!
//! The trilinear form is
//! `T[G] = Re Σ_ξ Σ_η G(ξ,η) conj(ρ̂(ξ)) ρ̂(η) ρ̂(ξ-η)`,
//! summed over the symmetric band `|ξ_j| < N/2`. Nyquist modes and any
//! `ξ-η` outside the band contribute nothing; the naive and FFT paths share
//! this convention.
//!
//! With `ρ = Σ c_ξ e^{iξ·x}`, a state evolving by the semi-discrete scheme
//! satisfies
//! `d/dt ½‖ρ‖²_{Ḣ^s} = (2π)^d [c_K T[|ξ|^{2s} ξ·η |η|^{-2b} χ(μ|η|)](Pρ) - ν Σ |ξ|^{2s+2}|c_ξ|²]`
//! where `P` is the 2/3-rule projection.

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::model::ModelParams;
use crate::spectral::{dealias, drop_nyquist, norm, padded_convolution, SpectralField, TorusGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("kernel is not separable; the FFT path needs a sum of products a(ξ)b(η)")]
    NotSeparable,
    #[error("naive trilinear sum limited to N <= {max}, got N = {n}")]
    TooLarge { n: usize, max: usize },
    #[error("energy residual needs at least {needed} samples, got {got}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("sample times must be distinct")]
    DegenerateTimes,
}

/// Largest `N` accepted by the `O(N^{2d})` summation.
pub const NAIVE_MAX_N: usize = 64;

/// Total mass `(2π)^d Re c_0`.
pub fn mass(field: &SpectralField) -> f64 {
    let d = field.grid().dim();
    field.grid().volume() * field.coeff(&[0, 0][..d]).re
}

/// `Ḣ^s` (homogeneous) or `H^s` norm in the `(2π)^d Σ w(ξ)|c_ξ|²` convention.
pub fn sobolev_norm(field: &SpectralField, s: f64, homogeneous: bool) -> f64 {
    let grid = field.grid();
    let sum: f64 = field
        .coeffs()
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let k = grid.wavevector_f64(j);
            let r2 = k[0] * k[0] + k[1] * k[1];
            let w = if homogeneous {
                if r2 == 0.0 {
                    0.0
                } else {
                    r2.powf(s)
                }
            } else {
                (1.0 + r2).powf(s)
            };
            w * c.norm_sqr()
        })
        .sum();
    (grid.volume() * sum).sqrt()
}

fn weighted_l1(field: &SpectralField, weight: impl Fn(f64) -> f64) -> f64 {
    let grid = field.grid();
    field
        .coeffs()
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let k = grid.wavevector_f64(j);
            weight((k[0] * k[0] + k[1] * k[1]).sqrt()) * c.norm()
        })
        .sum()
}

/// `Σ_ξ |ξ|²(1+|ξ|)|c_ξ|`.
pub fn blowup_b1(field: &SpectralField) -> f64 {
    weighted_l1(field, |r| r * r * (1.0 + r))
}

/// `(Σ_ξ |ξ|(1+|ξ|)|c_ξ|)²`.
pub fn blowup_b2(field: &SpectralField) -> f64 {
    weighted_l1(field, |r| r * (1.0 + r)).powi(2)
}

type Pointwise = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
type Factor = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Kernel `G(ξ,η)` of the trilinear form.
#[derive(Clone)]
pub enum Kernel {
    General(Pointwise),
    /// `G = Σ_k a_k(ξ) b_k(η)`.
    Separable(Vec<(Factor, Factor)>),
}

impl Kernel {
    pub fn general(g: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Kernel::General(Arc::new(g))
    }

    pub fn separable(terms: Vec<(Factor, Factor)>) -> Self {
        Kernel::Separable(terms)
    }

    pub fn term(
        a: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        b: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> (Factor, Factor) {
        (Arc::new(a), Arc::new(b))
    }

    pub fn eval(&self, xi: &[f64], eta: &[f64]) -> f64 {
        match self {
            Kernel::General(g) => g(xi, eta),
            Kernel::Separable(terms) => terms.iter().map(|(a, b)| a(xi) * b(eta)).sum(),
        }
    }

    /// `|ξ|^{2s} ξ·η |η|^{-2b} χ(μ|η|)`: the kernel of the `Ḣ^s` energy
    /// identity (`s = 0` gives the `L²` one).
    pub fn energy(s: f64, p: &ModelParams, dim: usize) -> Self {
        let mut p = *p;
        p.c_k = 1.0;
        let terms = (0..dim)
            .map(|axis| {
                Kernel::term(
                    move |xi| {
                        if s == 0.0 {
                            xi[axis]
                        } else {
                            let r = norm(xi);
                            if r == 0.0 {
                                0.0
                            } else {
                                r.powf(2.0 * s) * xi[axis]
                            }
                        }
                    },
                    move |eta| {
                        let r = norm(eta);
                        if r == 0.0 {
                            0.0
                        } else {
                            eta[axis] * p.velocity_weight(r)
                        }
                    },
                )
            })
            .collect();
        Kernel::Separable(terms)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrilinearMode {
    Naive,
    Fft,
}

struct Band {
    /// (flat index, wavevector as f64) for every mode with `|ξ_j| < N/2`.
    modes: Vec<(usize, [f64; 2], [i64; 2])>,
}

fn symmetric_band(grid: &TorusGrid) -> Band {
    let modes = (0..grid.len())
        .filter(|&j| !grid.touches_nyquist(j))
        .map(|j| (j, grid.wavevector_f64(j), grid.wavevector(j)))
        .collect();
    Band { modes }
}

fn band_index(grid: &TorusGrid, k: [i64; 2]) -> Option<usize> {
    let half = grid.n() as i64 / 2;
    let d = grid.dim();
    if k[..d].iter().any(|c| c.abs() >= half) {
        return None;
    }
    grid.flat_index(&k[..d])
}

/// Evaluates `T[G]` on `field`.
pub fn trilinear_t(
    kernel: &Kernel,
    field: &SpectralField,
    mode: TrilinearMode,
) -> Result<f64, DiagnosticsError> {
    match mode {
        TrilinearMode::Naive => naive_sum(kernel, field, false),
        TrilinearMode::Fft => match kernel {
            Kernel::Separable(terms) => Ok(fft_sum(terms, field)),
            Kernel::General(_) => Err(DiagnosticsError::NotSeparable),
        },
    }
}

/// `T[G]` with the outer sum over `η` and the inner over `ξ`.
pub fn trilinear_t_swapped(kernel: &Kernel, field: &SpectralField) -> Result<f64, DiagnosticsError> {
    naive_sum(kernel, field, true)
}

/// `Σ |G(ξ,η)| |ρ̂(ξ)| |ρ̂(η)| |ρ̂(ξ-η)|`, the natural magnitude of `T[G]`.
pub fn trilinear_scale(kernel: &Kernel, field: &SpectralField) -> Result<f64, DiagnosticsError> {
    let grid = field.grid();
    check_naive(grid)?;
    let band = symmetric_band(grid);
    let d = grid.dim();
    let c = field.coeffs();
    let mut acc = 0.0;
    for &(jx, xf, xk) in &band.modes {
        for &(je, ef, ek) in &band.modes {
            if let Some(jd) = band_index(grid, [xk[0] - ek[0], xk[1] - ek[1]]) {
                acc += kernel.eval(&xf[..d], &ef[..d]).abs() * c[jx].norm() * c[je].norm() * c[jd].norm();
            }
        }
    }
    Ok(acc)
}

fn check_naive(grid: &TorusGrid) -> Result<(), DiagnosticsError> {
    if grid.n() > NAIVE_MAX_N {
        Err(DiagnosticsError::TooLarge {
            n: grid.n(),
            max: NAIVE_MAX_N,
        })
    } else {
        Ok(())
    }
}

fn naive_sum(kernel: &Kernel, field: &SpectralField, swapped: bool) -> Result<f64, DiagnosticsError> {
    let grid = field.grid();
    check_naive(grid)?;
    let band = symmetric_band(grid);
    let d = grid.dim();
    let c = field.coeffs();
    let mut acc = 0.0;
    for &(jo, of, ok) in &band.modes {
        for &(ji, inf, ik) in &band.modes {
            let ((jx, xf, xk), (je, ef, ek)) = if swapped {
                ((ji, inf, ik), (jo, of, ok))
            } else {
                ((jo, of, ok), (ji, inf, ik))
            };
            if let Some(jd) = band_index(grid, [xk[0] - ek[0], xk[1] - ek[1]]) {
                let g = kernel.eval(&xf[..d], &ef[..d]);
                acc += g * (c[jx].conj() * c[je] * c[jd]).re;
            }
        }
    }
    Ok(acc)
}

fn fft_sum(terms: &[(Factor, Factor)], field: &SpectralField) -> f64 {
    let grid = *field.grid();
    let d = grid.dim();
    let base = drop_nyquist(field);
    let mut total = 0.0;
    for (a, b) in terms {
        let mut weighted = base.clone();
        for (j, c) in weighted.coeffs_mut().iter_mut().enumerate() {
            *c *= b(&grid.wavevector_f64(j)[..d]);
        }
        // conv(ξ) = Σ_η b(η)ρ̂(η) ρ̂(ξ-η), exact on the doubled grid
        let conv = padded_convolution(&weighted, &base);
        let mut acc = 0.0;
        for (j, c) in base.coeffs().iter().enumerate() {
            if *c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let k = grid.wavevector(j);
            let kf = grid.wavevector_f64(j);
            acc += a(&kf[..d]) * (c.conj() * conv.coeff(&k[..d])).re;
        }
        total += acc;
    }
    total
}

/// `½‖ρ‖²_{Ḣ^s}`; `s = 0` includes the zero mode and is `½‖ρ‖²_{L²}`.
pub fn half_energy(field: &SpectralField, s: f64) -> f64 {
    if s == 0.0 {
        0.5 * field.grid().volume() * field.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>()
    } else {
        0.5 * sobolev_norm(field, s, true).powi(2)
    }
}

/// Time derivative of [`half_energy`] predicted by the semi-discrete identity.
pub fn predicted_energy_rate(field: &SpectralField, p: &ModelParams, s: f64) -> f64 {
    let grid = field.grid();
    let transfer = if p.c_k == 0.0 {
        0.0
    } else {
        let kernel = Kernel::energy(s, p, grid.dim());
        p.c_k * trilinear_t(&kernel, &dealias(field), TrilinearMode::Fft).expect("separable")
    };
    let dissipation = if p.nu == 0.0 {
        0.0
    } else {
        p.nu * sobolev_norm(field, s + 1.0, true).powi(2)
    };
    grid.volume() * transfer - dissipation
}

/// Finite-difference weights for the first derivative at `x0` over `nodes`
/// (Fornberg's recursion). Exact for polynomials of degree `< nodes.len()`.
pub fn derivative_weights(x0: f64, nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let m = 1usize;
    // delta[k][j]: weight of node j for derivative order k using the first i+1 nodes
    let mut delta = vec![vec![0.0; n]; m + 1];
    delta[0][0] = 1.0;
    let mut c1 = 1.0;
    for i in 1..n {
        let c2: f64 = (0..i).map(|j| nodes[i] - nodes[j]).product();
        // the new node's weights use the previous column before it is updated
        for k in (0..=m.min(i)).rev() {
            let prev = if k > 0 { delta[k - 1][i - 1] } else { 0.0 };
            delta[k][i] = c1 / c2 * (k as f64 * prev - (nodes[i - 1] - x0) * delta[k][i - 1]);
        }
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            for k in (0..=m.min(i)).rev() {
                let prev = if k > 0 { delta[k - 1][j] } else { 0.0 };
                delta[k][j] = ((nodes[i] - x0) * delta[k][j] - k as f64 * prev) / c3;
            }
        }
        c1 = c2;
    }
    delta.swap_remove(m)
}

fn check_times(times: &[f64]) -> Result<(), DiagnosticsError> {
    for w in times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(DiagnosticsError::DegenerateTimes);
        }
    }
    Ok(())
}

/// Residual of the `Ḣ^s` energy identity at the middle sample of `history`:
/// `|D_t ½‖ρ‖²_{Ḣ^s} - predicted rate|`, where `D_t` is the centered finite
/// difference through every supplied sample (three samples give second
/// order, five give fourth). Use `s = 0` for the `L²` identity.
pub fn energy_residual(
    history: &[(f64, SpectralField)],
    p: &ModelParams,
    s: f64,
) -> Result<f64, DiagnosticsError> {
    if history.len() < 3 {
        return Err(DiagnosticsError::InsufficientHistory {
            needed: 3,
            got: history.len(),
        });
    }
    let times: Vec<f64> = history.iter().map(|(t, _)| *t).collect();
    check_times(&times)?;
    let mid = history.len() / 2;
    let w = derivative_weights(times[mid], &times);
    let rate: f64 = w
        .iter()
        .zip(history)
        .map(|(w, (_, f))| w * half_energy(f, s))
        .sum();
    Ok((rate - predicted_energy_rate(&history[mid].1, p, s)).abs())
}

/// `energy_residual` with `s = 0`.
pub fn energy_residual_l2(
    history: &[(f64, SpectralField)],
    p: &ModelParams,
) -> Result<f64, DiagnosticsError> {
    energy_residual(history, p, 0.0)
}

/// Homogeneous and inhomogeneous Sobolev norms for one exponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SobolevSample {
    pub s: f64,
    pub homogeneous: f64,
    pub inhomogeneous: f64,
}

/// One sampled row of a run's time series.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    pub l2: f64,
    pub hs: Vec<SobolevSample>,
    pub b1: f64,
    pub b2: f64,
    /// `∫₀ᵗ B₁ dτ`.
    pub int_b1: f64,
    /// `∫₀ᵗ B₂ dτ`; `B₂` is already squared.
    pub int_b2sq: f64,
    pub energy_residual_l2: f64,
    pub energy_residual_hs: f64,
}

#[derive(Clone, Copy, Debug)]
struct EnergySample {
    t: f64,
    e_l2: f64,
    e_hs: f64,
    rate_l2: f64,
    rate_hs: f64,
}

/// Assembles [`DiagnosticsRecord`]s from sampled states.
///
/// Energy residuals need neighbours on both sides, so a record is released
/// once two later samples and a full stencil exist; [`finish`](Self::finish) flushes the rest
/// with one-sided stencils. Each derivative uses the (up to) five samples
/// nearest to the record, so the residual is fourth order in the sampling
/// interval when the run is long enough.
pub struct DiagnosticsTracker {
    params: ModelParams,
    s_list: Vec<f64>,
    energy_s: f64,
    energies: Vec<EnergySample>,
    pending: std::collections::VecDeque<DiagnosticsRecord>,
    emitted: usize,
}

const STENCIL: usize = 5;

impl DiagnosticsTracker {
    pub fn new(params: ModelParams, s_list: Vec<f64>, energy_s: f64) -> Self {
        Self {
            params,
            s_list,
            energy_s,
            energies: Vec::new(),
            pending: Default::default(),
            emitted: 0,
        }
    }

    /// Records the state at time `t`; returns every record that is now complete.
    pub fn push(
        &mut self,
        t: f64,
        state: &SpectralField,
        int_b1: f64,
        int_b2sq: f64,
    ) -> Vec<DiagnosticsRecord> {
        let phys = crate::spectral::to_physical(state);
        let hs = self
            .s_list
            .iter()
            .map(|&s| SobolevSample {
                s,
                homogeneous: sobolev_norm(state, s, true),
                inhomogeneous: sobolev_norm(state, s, false),
            })
            .collect();
        self.pending.push_back(DiagnosticsRecord {
            t,
            mass: mass(state),
            min_rho: phys.min(),
            max_rho: phys.max(),
            l2: sobolev_norm(state, 0.0, false),
            hs,
            b1: blowup_b1(state),
            b2: blowup_b2(state),
            int_b1,
            int_b2sq,
            energy_residual_l2: f64::NAN,
            energy_residual_hs: f64::NAN,
        });
        self.energies.push(EnergySample {
            t,
            e_l2: half_energy(state, 0.0),
            e_hs: half_energy(state, self.energy_s),
            rate_l2: predicted_energy_rate(state, &self.params, 0.0),
            rate_hs: predicted_energy_rate(state, &self.params, self.energy_s),
        });
        let mut ready = Vec::new();
        while self.energies.len() >= STENCIL && self.emitted + STENCIL / 2 < self.energies.len() {
            ready.push(self.release());
        }
        ready
    }

    /// Releases all pending records.
    pub fn finish(mut self) -> Vec<DiagnosticsRecord> {
        let mut out = Vec::new();
        while !self.pending.is_empty() {
            out.push(self.release());
        }
        out
    }

    fn release(&mut self) -> DiagnosticsRecord {
        let i = self.emitted;
        let mut rec = self.pending.pop_front().expect("pending record");
        let n = self.energies.len();
        if n >= 2 {
            let width = n.min(STENCIL);
            let lo = i.saturating_sub(STENCIL / 2).min(n - width);
            let window = &self.energies[lo..lo + width];
            let times: Vec<f64> = window.iter().map(|e| e.t).collect();
            let w = derivative_weights(self.energies[i].t, &times);
            let d_l2: f64 = w.iter().zip(window).map(|(w, e)| w * e.e_l2).sum();
            let d_hs: f64 = w.iter().zip(window).map(|(w, e)| w * e.e_hs).sum();
            rec.energy_residual_l2 = (d_l2 - self.energies[i].rate_l2).abs();
            rec.energy_residual_hs = (d_hs - self.energies[i].rate_hs).abs();
        }
        self.emitted += 1;
        rec
    }
}
