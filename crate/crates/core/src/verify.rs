//! Sampling checks of the elementary inequalities and commutator estimates
//! behind the energy method. Each check reduces to a ratio `lhs/rhs` whose
//! supremum over many samples estimates an implicit constant.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::diagnostics::{sobolev_norm, trilinear_scale, trilinear_t, Kernel, TrilinearMode};
use crate::spectral::{
    apply_multiplier, dot, drop_nyquist, forward_transform, fractional_power, norm, padded_product,
    partial_derivative, RealField, SpectralField, TorusGrid,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("zero wavevector not allowed here")]
    ZeroVector,
    #[error("g must have zero mean, got mean coefficient {0}")]
    NonzeroMean(f64),
    #[error("fields live on different grids")]
    GridMismatch,
}

/// What a ratio was evaluated at.
#[derive(Clone, Debug, PartialEq)]
pub enum SampleInputs {
    Pair { xi: Vec<f64>, eta: Vec<f64> },
    Trial { index: usize },
}

impl fmt::Display for SampleInputs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vec = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:.17e}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        match self {
            SampleInputs::Pair { xi, eta } => write!(f, "xi=({}) eta=({})", vec(xi), vec(eta)),
            SampleInputs::Trial { index } => write!(f, "trial={index}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioSample {
    pub inputs: SampleInputs,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs/rhs`; zero when the sample is degenerate.
    pub ratio: f64,
    /// `rhs = 0`: the sample carries no information about the constant.
    pub degenerate: bool,
}

impl RatioSample {
    fn new(inputs: SampleInputs, lhs: f64, rhs: f64) -> Self {
        let degenerate = rhs == 0.0;
        let ratio = if degenerate { 0.0 } else { lhs / rhs };
        Self {
            inputs,
            lhs,
            rhs,
            ratio,
            degenerate,
        }
    }
}

/// `r^e` with `0^e = 0` for `e > 0`.
fn pow0(r: f64, e: f64) -> f64 {
    if r == 0.0 && e > 0.0 {
        0.0
    } else {
        r.powf(e)
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn pair(xi: &[f64], eta: &[f64]) -> SampleInputs {
    SampleInputs::Pair {
        xi: xi.to_vec(),
        eta: eta.to_vec(),
    }
}

/// `| |ξ|^s - |ξ-η|^s - |η|^s - s η·(ξ-η)|η|^{s-2} |` against
/// `|ξ-η|²|η|^{s-2} + |η||ξ-η|^{s-1}`.
pub fn lemma1_gap(xi: &[f64], eta: &[f64], s: f64) -> Result<RatioSample, VerifyError> {
    if !(s >= 3.0) {
        return Err(VerifyError::InvalidParameter(format!("s must be >= 3, got {s}")));
    }
    let d = diff(xi, eta);
    let (rx, re, rd) = (norm(xi), norm(eta), norm(&d));
    let lhs = (pow0(rx, s) - pow0(rd, s) - pow0(re, s) - s * dot(eta, &d) * pow0(re, s - 2.0)).abs();
    let rhs = rd * rd * pow0(re, s - 2.0) + re * pow0(rd, s - 1.0);
    Ok(RatioSample::new(pair(xi, eta), lhs, rhs))
}

/// `| |ξ|^b - |η|^b |` against `|ξ-η| max(|ξ|^{b-1}, |η|^{b-1})`.
pub fn bdiff_check(xi: &[f64], eta: &[f64], b: f64) -> Result<RatioSample, VerifyError> {
    if !(b > 0.0 && b <= 1.0) {
        return Err(VerifyError::InvalidParameter(format!("b must lie in (0, 1], got {b}")));
    }
    let (rx, re) = (norm(xi), norm(eta));
    if rx == 0.0 || re == 0.0 {
        return Err(VerifyError::ZeroVector);
    }
    let lhs = (rx.powf(b) - re.powf(b)).abs();
    let rhs = norm(&diff(xi, eta)) * rx.powf(b - 1.0).max(re.powf(b - 1.0));
    Ok(RatioSample::new(pair(xi, eta), lhs, rhs))
}

/// Remainder `|G - G₀ - G₁ - G_s|` of the energy kernel
/// `G = |ξ|^{2s} ξ·η |η|^{-2b}` against
/// `(|ξ-η|²|η|^{s-2} + |η||ξ-η|^{s-1}) |ξ|^s |η|^{1-2b} (|ξ-η| + |η|)`.
pub fn gdecomp_check(xi: &[f64], eta: &[f64], s: f64, b: f64) -> Result<RatioSample, VerifyError> {
    if !(s >= 3.0) {
        return Err(VerifyError::InvalidParameter(format!("s must be >= 3, got {s}")));
    }
    if !(0.0..=1.0).contains(&b) {
        return Err(VerifyError::InvalidParameter(format!("b must lie in [0, 1], got {b}")));
    }
    let d = diff(xi, eta);
    let (rx, re, rd) = (norm(xi), norm(eta), norm(&d));
    if re == 0.0 {
        return Err(VerifyError::ZeroVector);
    }
    let xe = dot(xi, eta);
    let damp = re.powf(-2.0 * b);
    let g = pow0(rx, 2.0 * s) * xe * damp;
    let gs = pow0(rx, s) * pow0(rd, s) * xe * damp;
    let g0 = pow0(rx, s) * re.powf(s) * xe * damp;
    let g1 = pow0(rx, s) * s * dot(eta, &d) * xe * re.powf(s - 2.0 - 2.0 * b);
    let lhs = (g - g0 - g1 - gs).abs();
    let rhs = (rd * rd * re.powf(s - 2.0) + re * pow0(rd, s - 1.0))
        * pow0(rx, s)
        * re.powf(1.0 - 2.0 * b)
        * (rd + re);
    Ok(RatioSample::new(pair(xi, eta), lhs, rhs))
}

fn check_pair_fields(f: &RealField, g: &RealField, b: f64) -> Result<(SpectralField, SpectralField), VerifyError> {
    if f.grid() != g.grid() {
        return Err(VerifyError::GridMismatch);
    }
    if !(b > 0.0 && b < 1.0) {
        return Err(VerifyError::InvalidParameter(format!("b must lie in (0, 1), got {b}")));
    }
    let fh = drop_nyquist(&forward_transform(f));
    let gh = drop_nyquist(&forward_transform(g));
    let d = f.grid().dim();
    let mean = gh.coeff(&[0, 0][..d]).norm();
    if mean > 1e-12 * (1.0 + gh.max_abs()) {
        return Err(VerifyError::NonzeroMean(mean));
    }
    Ok((fh, gh))
}

fn l2_norm_spectral(parts: &[SpectralField]) -> f64 {
    parts
        .iter()
        .map(|p| p.grid().volume() * p.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

/// `[Λ^{-b}, f∇]g = Λ^{-b}(f∇g) - f∇Λ^{-b}g`, one component per axis, on the
/// doubled grid where every product is exact.
fn commutator(fh: &SpectralField, gh: &SpectralField, b: f64) -> Vec<SpectralField> {
    let grid = *fh.grid();
    let lam = fractional_power(-b);
    let lam_g = apply_multiplier(gh, &lam);
    (0..grid.dim())
        .map(|j| {
            let dj = partial_derivative(&grid, j);
            let outer = padded_product(fh, &apply_multiplier(gh, &dj));
            let outer = apply_multiplier(&outer, &fractional_power(-b));
            let inner = padded_product(fh, &apply_multiplier(&lam_g, &dj));
            outer.sub(&inner)
        })
        .collect()
}

/// Norm of `([Λ^{-b}, f∇] - b(∇f·∇)Λ^{-b-2}∇)g` against
/// `‖f‖_{H^{d/2+3+ε}} ‖g‖_{H^{-b-1}}`.
pub fn commutator_ratio(f: &RealField, g: &RealField, b: f64, eps: f64) -> Result<RatioSample, VerifyError> {
    let (fh, gh) = check_pair_fields(f, g, b)?;
    Ok(commutator_sample(&fh, &gh, b, eps, SampleInputs::Trial { index: 0 }))
}

fn commutator_sample(fh: &SpectralField, gh: &SpectralField, b: f64, eps: f64, inputs: SampleInputs) -> RatioSample {
    let grid = *fh.grid();
    let d = grid.dim();
    let lam2 = fractional_power(-b - 2.0);
    let grads_f: Vec<_> = (0..d)
        .map(|k| apply_multiplier(fh, &partial_derivative(&grid, k)))
        .collect();
    let parts: Vec<SpectralField> = commutator(fh, gh, b)
        .into_iter()
        .enumerate()
        .map(|(j, c)| {
            let w = apply_multiplier(&apply_multiplier(gh, &partial_derivative(&grid, j)), &lam2);
            let mut leading = SpectralField::zeros(*c.grid());
            for (k, df) in grads_f.iter().enumerate() {
                let dw = apply_multiplier(&w, &partial_derivative(&grid, k));
                leading = leading.add_scaled(1.0, &padded_product(df, &dw));
            }
            c.add_scaled(-b, &leading)
        })
        .collect();
    let lhs = l2_norm_spectral(&parts);
    let rhs = sobolev_norm(fh, d as f64 / 2.0 + 3.0 + eps, false) * sobolev_norm(gh, -b - 1.0, false);
    RatioSample::new(inputs, lhs, rhs)
}

/// Norm of `[Λ^{-b}, f∇]g` against `‖f‖_{H^{d/2+1-b+ε}} ‖g‖_{H^{-b}}`.
pub fn plain_commutator_ratio(f: &RealField, g: &RealField, b: f64, eps: f64) -> Result<RatioSample, VerifyError> {
    let (fh, gh) = check_pair_fields(f, g, b)?;
    Ok(plain_commutator_sample(&fh, &gh, b, eps, SampleInputs::Trial { index: 0 }))
}

fn plain_commutator_sample(fh: &SpectralField, gh: &SpectralField, b: f64, eps: f64, inputs: SampleInputs) -> RatioSample {
    let d = fh.grid().dim() as f64;
    let lhs = l2_norm_spectral(&commutator(fh, gh, b));
    let rhs = sobolev_norm(fh, d / 2.0 + 1.0 - b + eps, false) * sobolev_norm(gh, -b, false);
    RatioSample::new(inputs, lhs, rhs)
}

/// Summary of a sampling run.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub name: String,
    pub samples: usize,
    pub degenerate: usize,
    pub sup_ratio: f64,
    pub argmax: Option<SampleInputs>,
    /// `(q, ratio)` pairs over the non-degenerate samples.
    pub quantiles: Vec<(f64, f64)>,
    pub first_half_sup: f64,
    pub second_half_sup: f64,
    pub pass: bool,
}

const QUANTILES: [f64; 4] = [0.5, 0.9, 0.99, 0.999];

impl VerifyReport {
    /// Summarizes `samples` in sampling order. Passes when the sup is finite
    /// and the second half of the samples did not push it past twice the
    /// first half's.
    pub fn from_samples(name: impl Into<String>, samples: &[RatioSample]) -> Self {
        let half = samples.len() / 2;
        let sup_of = |s: &[RatioSample]| {
            s.iter()
                .filter(|r| !r.degenerate)
                .map(|r| r.ratio)
                .fold(0.0f64, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
        };
        let first = sup_of(&samples[..half]);
        let second = sup_of(&samples[half..]);
        let mut argmax = None;
        let mut sup = 0.0f64;
        for r in samples.iter().filter(|r| !r.degenerate) {
            if r.ratio.is_nan() {
                sup = f64::NAN;
                argmax = Some(r.inputs.clone());
                break;
            }
            if argmax.is_none() || r.ratio > sup {
                sup = r.ratio;
                argmax = Some(r.inputs.clone());
            }
        }
        let mut ratios: Vec<f64> = samples.iter().filter(|r| !r.degenerate).map(|r| r.ratio).collect();
        ratios.sort_by(|a, b| a.total_cmp(b));
        let quantiles = QUANTILES
            .iter()
            .map(|&q| {
                let v = if ratios.is_empty() {
                    0.0
                } else {
                    let rank = ((q * ratios.len() as f64).ceil() as usize).clamp(1, ratios.len());
                    ratios[rank - 1]
                };
                (q, v)
            })
            .collect();
        let pass = sup.is_finite() && second <= 2.0 * first;
        Self {
            name: name.into(),
            samples: samples.len(),
            degenerate: samples.iter().filter(|r| r.degenerate).count(),
            sup_ratio: sup,
            argmax,
            quantiles,
            first_half_sup: first,
            second_half_sup: second,
            pass,
        }
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}]", self.name)?;
        writeln!(f, "samples = {}", self.samples)?;
        writeln!(f, "degenerate = {}", self.degenerate)?;
        writeln!(f, "sup_ratio = {:.16e}", self.sup_ratio)?;
        match &self.argmax {
            Some(a) => writeln!(f, "argmax = {a}")?,
            None => writeln!(f, "argmax = none")?,
        }
        for (q, v) in &self.quantiles {
            writeln!(f, "quantile_{q} = {v:.16e}")?;
        }
        writeln!(f, "first_half_sup = {:.16e}", self.first_half_sup)?;
        writeln!(f, "second_half_sup = {:.16e}", self.second_half_sup)?;
        writeln!(f, "pass = {}", self.pass)
    }
}

/// Samples per independently seeded chunk.
const CHUNK: usize = 1024;

/// Draws `n` samples in parallel; chunk `c` uses ChaCha stream `c`, so the
/// result depends only on `seed` and `n`.
fn sample_parallel<T: Send>(
    n: usize,
    seed: u64,
    draw: impl Fn(usize, &mut ChaCha8Rng) -> T + Sync,
) -> Vec<T> {
    let chunks = n.div_ceil(CHUNK);
    let nested: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            (c * CHUNK..((c + 1) * CHUNK).min(n))
                .map(|i| draw(i, &mut rng))
                .collect()
        })
        .collect();
    nested.into_iter().flatten().collect()
}

/// Families of wavevector pairs, interleaved by sample index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairFamily {
    /// Integer components in `[-1000, 1000]`.
    Lattice,
    /// Radii log-uniform in `[10⁻², 10³]`, uniform directions.
    LogUniform,
    /// `η` within a small angle of `ξ`.
    NearCollinear,
    /// `|η|/|ξ| ∈ {10⁻³, 10³}`.
    ExtremeRatio,
}

impl PairFamily {
    pub fn of_index(i: usize) -> Self {
        match i % 8 {
            0..=2 => PairFamily::Lattice,
            3..=5 => PairFamily::LogUniform,
            6 => PairFamily::NearCollinear,
            _ => PairFamily::ExtremeRatio,
        }
    }
}

fn direction(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if d == 1 {
        vec![if rng.gen::<bool>() { 1.0 } else { -1.0 }]
    } else {
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        vec![a.cos(), a.sin()]
    }
}

fn log_radius(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(rng.gen_range(-2.0..3.0))
}

fn scaled(v: &[f64], r: f64) -> Vec<f64> {
    v.iter().map(|x| x * r).collect()
}

/// A nonzero wavevector pair from `family`.
pub fn sample_pair(family: PairFamily, d: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    match family {
        PairFamily::Lattice => {
            let mut draw = || loop {
                let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1000i64..=1000) as f64).collect();
                if norm(&v) > 0.0 {
                    break v;
                }
            };
            let xi = draw();
            (xi, draw())
        }
        PairFamily::LogUniform => {
            let xi = scaled(&direction(d, rng), log_radius(rng));
            let eta = scaled(&direction(d, rng), log_radius(rng));
            (xi, eta)
        }
        PairFamily::NearCollinear => {
            let u = direction(d, rng);
            let r = log_radius(rng);
            let ratio = 10f64.powf(rng.gen_range(-1.0..1.0));
            let v = if d == 1 {
                u.clone()
            } else {
                let a = 10f64.powf(rng.gen_range(-4.0..-1.0)) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
                vec![u[0] * a.cos() - u[1] * a.sin(), u[0] * a.sin() + u[1] * a.cos()]
            };
            (scaled(&u, r), scaled(&v, r * ratio))
        }
        PairFamily::ExtremeRatio => {
            let r = log_radius(rng);
            let ratio = if rng.gen::<bool>() { 1e-3 } else { 1e3 };
            let xi = scaled(&direction(d, rng), r);
            let eta = scaled(&direction(d, rng), r * ratio);
            (xi, eta)
        }
    }
}

fn check_count(n: usize) -> Result<(), VerifyError> {
    if n == 0 {
        Err(VerifyError::InvalidParameter("sample count must be positive".into()))
    } else {
        Ok(())
    }
}

fn check_dim(d: usize) -> Result<(), VerifyError> {
    if d == 1 || d == 2 {
        Ok(())
    } else {
        Err(VerifyError::InvalidParameter(format!("dimension must be 1 or 2, got {d}")))
    }
}

pub fn sample_lemma1(s: f64, d: usize, n: usize, seed: u64) -> Result<VerifyReport, VerifyError> {
    check_count(n)?;
    check_dim(d)?;
    lemma1_gap(&[1.0], &[1.0], s)?;
    let samples = sample_parallel(n, seed, |i, rng| {
        let (xi, eta) = sample_pair(PairFamily::of_index(i), d, rng);
        lemma1_gap(&xi, &eta, s).expect("validated")
    });
    Ok(VerifyReport::from_samples(format!("lemma1 s={s} d={d}"), &samples))
}

pub fn sample_bdiff(b: f64, d: usize, n: usize, seed: u64) -> Result<VerifyReport, VerifyError> {
    check_count(n)?;
    check_dim(d)?;
    bdiff_check(&[1.0], &[1.0], b)?;
    let samples = sample_parallel(n, seed, |i, rng| {
        let (xi, eta) = sample_pair(PairFamily::of_index(i), d, rng);
        bdiff_check(&xi, &eta, b).expect("nonzero pair")
    });
    Ok(VerifyReport::from_samples(format!("bdiff b={b} d={d}"), &samples))
}

pub fn sample_gdecomp(s: f64, b: f64, d: usize, n: usize, seed: u64) -> Result<VerifyReport, VerifyError> {
    check_count(n)?;
    check_dim(d)?;
    gdecomp_check(&[1.0], &[1.0], s, b)?;
    let samples = sample_parallel(n, seed, |i, rng| {
        let (xi, eta) = sample_pair(PairFamily::of_index(i), d, rng);
        gdecomp_check(&xi, &eta, s, b).expect("nonzero eta")
    });
    Ok(VerifyReport::from_samples(format!("gdecomp s={s} b={b} d={d}"), &samples))
}

/// Injective map from a wavevector to a nonnegative integer, independent of
/// the grid size.
fn mode_key(k: [i64; 2]) -> u64 {
    let z = |v: i64| if v >= 0 { 2 * v as u64 } else { (-2 * v - 1) as u64 };
    let (a, b) = (z(k[0]), z(k[1]));
    // Szudzik pairing
    if a >= b {
        a * a + a + b
    } else {
        b * b + a
    }
}

/// Real random field whose coefficient at each wavevector depends only on
/// `(seed, stream, ξ)`, so refining the grid keeps the coarse modes.
pub fn hashed_random_field(
    grid: TorusGrid,
    seed: u64,
    stream: u64,
    weight: impl Fn(&[f64]) -> f64,
) -> SpectralField {
    let d = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut out = SpectralField::zeros(grid);
    for j in 0..grid.len() {
        let partner = grid.conjugate_index(j);
        if partner < j || grid.touches_nyquist(j) {
            continue;
        }
        let k = grid.wavevector(j);
        let w = weight(&grid.wavevector_f64(j)[..d]);
        if w == 0.0 {
            continue;
        }
        // each value consumes one u64, i.e. two words of the ChaCha stream
        rng.set_word_pos(4 * mode_key(k) as u128);
        let re = rng.gen_range(-1.0..1.0);
        let im = if partner == j { 0.0 } else { rng.gen_range(-1.0..1.0) };
        let z = Complex64::new(re, im) * w;
        out.coeffs_mut()[j] = z;
        out.coeffs_mut()[partner] = z.conj();
    }
    out
}

/// `(f, g)` for commutator trial `index`: a smooth `f` and a mean-zero `g`
/// that is either broadband or concentrated near a random frequency.
pub fn commutator_trial(grid: TorusGrid, seed: u64, index: usize) -> (SpectralField, SpectralField) {
    let d = grid.dim() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(index as u64);
    let f_decay = rng.gen_range(d / 2.0 + 4.0..d / 2.0 + 6.0);
    let broadband = index % 2 == 0;
    let g_decay = rng.gen_range(0.0..2.0);
    let center = 10f64.powf(rng.gen_range(0.0..1.5));
    let width = rng.gen_range(1.0..4.0);
    let f = hashed_random_field(grid, seed, 2 * index as u64, |k| (1.0 + norm(k)).powf(-f_decay));
    let g = hashed_random_field(grid, seed, 2 * index as u64 + 1, |k| {
        let r = norm(k);
        if r == 0.0 {
            0.0
        } else if broadband {
            (1.0 + r).powf(-g_decay)
        } else {
            (-((r - center) / width).powi(2)).exp()
        }
    });
    (f, g)
}

fn check_commutator_args(b: f64, eps: f64, trials: usize) -> Result<(), VerifyError> {
    check_count(trials)?;
    if !(b > 0.0 && b < 1.0) {
        return Err(VerifyError::InvalidParameter(format!("b must lie in (0, 1), got {b}")));
    }
    if !(eps > 0.0) {
        return Err(VerifyError::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

pub fn sample_commutator(
    b: f64,
    grid: TorusGrid,
    trials: usize,
    eps: f64,
    seed: u64,
) -> Result<VerifyReport, VerifyError> {
    check_commutator_args(b, eps, trials)?;
    let samples: Vec<_> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let (f, g) = commutator_trial(grid, seed, i);
            commutator_sample(&f, &g, b, eps, SampleInputs::Trial { index: i })
        })
        .collect();
    Ok(VerifyReport::from_samples(
        format!("commutator b={b} d={} N={}", grid.dim(), grid.n()),
        &samples,
    ))
}

pub fn sample_plain_commutator(
    b: f64,
    grid: TorusGrid,
    trials: usize,
    eps: f64,
    seed: u64,
) -> Result<VerifyReport, VerifyError> {
    check_commutator_args(b, eps, trials)?;
    let samples: Vec<_> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let (f, g) = commutator_trial(grid, seed, i);
            plain_commutator_sample(&f, &g, b, eps, SampleInputs::Trial { index: i })
        })
        .collect();
    Ok(VerifyReport::from_samples(
        format!("plain_commutator b={b} d={} N={}", grid.dim(), grid.n()),
        &samples,
    ))
}

/// Real kernels with `G(ξ,η) = -G(η,ξ)`, for which `T[G]` vanishes on real fields.
pub fn antisymmetric_kernels(s: f64, b: f64, n: usize) -> Vec<(&'static str, Kernel)> {
    let n2 = (n * n) as f64;
    vec![
        (
            "dot_times_norm_gap",
            Kernel::general(|x, e| dot(x, e) * (dot(x, x) - dot(e, e))),
        ),
        (
            "weighted_b_gap",
            Kernel::general(move |x, e| {
                let (rx, re) = (norm(x), norm(e));
                let w = s - 1.5 * b;
                pow0(rx, w) * pow0(re, w) * (pow0(rx, b) - pow0(re, b)) * dot(x, e)
            }),
        ),
        (
            "weighted_square_gap",
            Kernel::general(move |x, e| {
                let (rx, re) = (norm(x), norm(e));
                pow0(rx, s - b) * pow0(re, s - b) * (rx * rx - re * re)
            }),
        ),
        (
            "first_component_cross",
            Kernel::general(|x, e| x[0] * dot(e, e) - e[0] * dot(x, x)),
        ),
        (
            "gaussian_radial_gap",
            Kernel::general(move |x, e| {
                let (rx, re) = (norm(x), norm(e));
                (rx - re) * (-(rx * rx + re * re) / n2).exp()
            }),
        ),
    ]
}

/// `|T[G]| / Σ|G||ρ̂|³` for every antisymmetric kernel on `fields` random
/// real fields. Passes when every ratio is at most `tol`.
pub fn check_antisymmetry(grid: TorusGrid, fields: usize, seed: u64, tol: f64) -> Result<VerifyReport, VerifyError> {
    check_count(fields)?;
    let kernels = antisymmetric_kernels(3.5, 0.5, grid.n());
    let samples: Vec<RatioSample> = (0..fields)
        .into_par_iter()
        .flat_map_iter(|i| {
            let field = hashed_random_field(grid, seed, i as u64, |k| (1.0 + norm(k)).powf(-1.0));
            let mut field = field;
            field.coeffs_mut()[0] = Complex64::new(1.0, 0.0);
            kernels
                .iter()
                .map(|(_, k)| {
                    let t = trilinear_t(k, &field, TrilinearMode::Naive).expect("small grid");
                    let scale = trilinear_scale(k, &field).expect("small grid");
                    RatioSample::new(SampleInputs::Trial { index: i }, t.abs(), scale)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mut report = VerifyReport::from_samples(
        format!("antisymmetry d={} N={}", grid.dim(), grid.n()),
        &samples,
    );
    report.pass = report.sup_ratio <= tol;
    Ok(report)
}
