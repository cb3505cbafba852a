//! Fourier representation of fields on the torus and Fourier-multiplier
//! operators, including fractional powers of the Laplacian.
//!
//! Convention: a real field is `ρ(x) = Σ_ξ c_ξ e^{iξ·x}` over the integer
//! lattice, so `c_0` is the mean and the mass is `(2π)^d c_0`. With this
//! normalization Parseval reads `‖ρ‖²_{L²} = (2π)^d Σ |c_ξ|²`.

mod fft;
mod grid;

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use fft::Direction;
pub use grid::{dot, norm, TorusGrid};

/// Relative Hermitian defect accepted by [`inverse_transform`].
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("size mismatch: expected {expected} values, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("coefficients violate Hermitian symmetry (relative defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
}

/// Physical-space samples at `x_j = j Δx`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.len() != grid.len() {
            return Err(SpectralError::SizeMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite);
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f` at every grid point. `f` receives the first `d` coordinates.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let d = grid.dim();
        let values = (0..grid.len()).map(|j| f(&grid.point(j)[..d])).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Quadrature `L²` norm, `(Δx^d Σ f_j²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let cell = self.grid.dx().powi(self.grid.dim() as i32);
        (cell * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }
}

/// Fourier coefficients `c_ξ` over the wavenumber lattice of a [`TorusGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Wraps coefficients given in storage order (see [`TorusGrid`]).
    pub fn from_coeffs(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.len() {
            return Err(SpectralError::SizeMismatch {
                expected: grid.len(),
                found: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    /// Builds a field from a function of the integer wavevector.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[i64]) -> Complex64) -> Self {
        let d = grid.dim();
        let coeffs = (0..grid.len())
            .map(|j| f(&grid.wavevector(j)[..d]))
            .collect();
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at wavevector `k`; zero off the lattice.
    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        self.grid
            .flat_index(k)
            .map_or(Complex64::new(0.0, 0.0), |j| self.coeffs[j])
    }

    /// Sets `c_k`. Panics if `k` is off the lattice.
    pub fn set_coeff(&mut self, k: &[i64], value: Complex64) {
        let j = self
            .grid
            .flat_index(k)
            .unwrap_or_else(|| panic!("wavevector {k:?} is off the lattice"));
        self.coeffs[j] = value;
    }

    /// `max_ξ |c_{-ξ} - conj(c_ξ)|`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|j| (self.coeffs[self.grid.conjugate_index(j)] - self.coeffs[j].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `ℓ²` norm of the coefficient array.
    pub fn l2_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// `self + a·other`.
    pub fn add_scaled(&self, a: f64, other: &SpectralField) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x + y * a)
                .collect(),
        }
    }

    pub fn sub(&self, other: &SpectralField) -> Self {
        self.add_scaled(-1.0, other)
    }

    /// Copies the coefficients onto a grid with `m` modes per dimension.
    /// Modes that do not fit are dropped; new modes are zero.
    pub fn resampled(&self, m: usize) -> Self {
        let target = TorusGrid::padded(self.grid.dim(), m);
        let mut out = SpectralField::zeros(target);
        let d = self.grid.dim();
        for (j, c) in self.coeffs.iter().enumerate() {
            if let Some(t) = target.flat_index(&self.grid.wavevector(j)[..d]) {
                out.coeffs[t] = *c;
            }
        }
        out
    }
}

/// Smooth cutoff `χ` used by the regularized negative powers; `χ(0) = 1`,
/// support in `[0, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CutoffSpec {
    /// `χ(r) = exp(1 - 1/(1 - r²))` for `r < 1`, zero otherwise.
    #[default]
    SmoothBump,
    /// Indicator of `[0, 1)`. Not smooth; kept for comparison runs.
    Sharp,
}

impl CutoffSpec {
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= 1.0 {
            return 0.0;
        }
        match self {
            CutoffSpec::SmoothBump => (1.0 - 1.0 / (1.0 - r * r)).exp(),
            CutoffSpec::Sharp => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CutoffSpec::SmoothBump => "bump",
            CutoffSpec::Sharp => "sharp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bump" | "smooth" => Some(CutoffSpec::SmoothBump),
            "sharp" => Some(CutoffSpec::Sharp),
            _ => None,
        }
    }
}

type Symbol = dyn Fn(&[f64]) -> Complex64 + Send + Sync;

/// A Fourier multiplier: a symbol on nonzero wavevectors plus an explicit
/// value at `ξ = 0`.
#[derive(Clone)]
pub struct MultiplierSpec {
    symbol: Arc<Symbol>,
    zero_mode: Complex64,
}

impl std::fmt::Debug for MultiplierSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MultiplierSpec")
            .field("zero_mode", &self.zero_mode)
            .finish_non_exhaustive()
    }
}

impl MultiplierSpec {
    pub fn new(
        symbol: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
        zero_mode: Complex64,
    ) -> Self {
        Self {
            symbol: Arc::new(symbol),
            zero_mode,
        }
    }

    /// A real-valued symbol.
    pub fn real(symbol: impl Fn(&[f64]) -> f64 + Send + Sync + 'static, zero_mode: f64) -> Self {
        Self::new(
            move |xi| Complex64::new(symbol(xi), 0.0),
            Complex64::new(zero_mode, 0.0),
        )
    }

    pub fn identity() -> Self {
        Self::real(|_| 1.0, 1.0)
    }

    /// Value of the multiplier at `xi`, honouring the zero-mode rule.
    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        if xi.iter().all(|&v| v == 0.0) {
            self.zero_mode
        } else {
            (self.symbol)(xi)
        }
    }

    pub fn zero_mode(&self) -> Complex64 {
        self.zero_mode
    }

    /// Pointwise product of two multipliers (operator composition).
    pub fn then(&self, other: &MultiplierSpec) -> MultiplierSpec {
        let (a, b) = (self.symbol.clone(), other.symbol.clone());
        MultiplierSpec {
            symbol: Arc::new(move |xi| a(xi) * b(xi)),
            zero_mode: self.zero_mode * other.zero_mode,
        }
    }

    pub fn scaled(&self, factor: f64) -> MultiplierSpec {
        let a = self.symbol.clone();
        MultiplierSpec {
            symbol: Arc::new(move |xi| a(xi) * factor),
            zero_mode: self.zero_mode * factor,
        }
    }
}

/// `Λ^s`: symbol `|ξ|^s` on nonzero modes, zero at `ξ = 0`.
pub fn fractional_power(s: f64) -> MultiplierSpec {
    MultiplierSpec::real(move |xi| norm(xi).powf(s), 0.0)
}

/// Regularized `Λ^{-b}`: symbol `|ξ|^{-b} χ(μ|ξ|)`, zero at `ξ = 0`.
/// With `μ = 0` this is exactly `fractional_power(-b)`.
pub fn regularized_neg_power(b: f64, mu: f64, chi: CutoffSpec) -> MultiplierSpec {
    if mu == 0.0 {
        return fractional_power(-b);
    }
    MultiplierSpec::real(
        move |xi| {
            let r = norm(xi);
            r.powf(-b) * chi.eval(mu * r)
        },
        0.0,
    )
}

/// `∂_{x_axis}`: symbol `iξ_axis`. The Nyquist component `ξ_axis = -N/2`
/// has no Hermitian partner and is mapped to zero so real fields stay real.
pub fn partial_derivative(grid: &TorusGrid, axis: usize) -> MultiplierSpec {
    let nyquist = -(grid.n() as f64) / 2.0;
    MultiplierSpec::new(
        move |xi| {
            let k = xi[axis];
            if k == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k)
            }
        },
        Complex64::new(0.0, 0.0),
    )
}

/// Heat-kernel multiplier `e^{-τ|ξ|²}`; equals one at `ξ = 0`.
pub fn heat_multiplier(tau: f64) -> MultiplierSpec {
    MultiplierSpec::real(move |xi| (-tau * dot(xi, xi)).exp(), 1.0)
}

pub fn forward_transform(f: &RealField) -> SpectralField {
    let grid = f.grid;
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::transform(&mut data, grid.n(), grid.dim(), Direction::Forward);
    let scale = 1.0 / grid.len() as f64;
    for c in &mut data {
        *c *= scale;
    }
    SpectralField { grid, coeffs: data }
}

/// Checked inverse transform; rejects coefficient arrays that are not
/// Hermitian to within [`HERMITIAN_TOL`] relative to their largest entry.
pub fn inverse_transform(field: &SpectralField) -> Result<RealField, SpectralError> {
    let scale = field.max_abs();
    let defect = field.hermitian_defect();
    if !(defect <= HERMITIAN_TOL * scale) {
        return Err(SpectralError::NotHermitian {
            defect: if scale > 0.0 { defect / scale } else { defect },
        });
    }
    let out = to_physical(field);
    if out.values.iter().any(|v| !v.is_finite()) {
        return Err(SpectralError::NonFinite);
    }
    Ok(out)
}

/// Inverse transform without the symmetry check; keeps the real part.
pub(crate) fn to_physical(field: &SpectralField) -> RealField {
    let grid = field.grid;
    let mut data = field.coeffs.clone();
    fft::transform(&mut data, grid.n(), grid.dim(), Direction::Inverse);
    RealField {
        grid,
        values: data.into_iter().map(|c| c.re).collect(),
    }
}

pub fn apply_multiplier(field: &SpectralField, m: &MultiplierSpec) -> SpectralField {
    let grid = field.grid;
    let d = grid.dim();
    let coeffs = field
        .coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| c * m.eval(&grid.wavevector_f64(j)[..d]))
        .collect();
    SpectralField { grid, coeffs }
}

/// 2/3-rule truncation: zero every coefficient with some `|ξ_j| ≥ N/3`.
pub fn dealias(field: &SpectralField) -> SpectralField {
    let grid = field.grid;
    let coeffs = field
        .coeffs
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            if grid.in_dealias_band(j) {
                c
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    SpectralField { grid, coeffs }
}

/// Exact product of two fields, returned on a grid of `2N` modes per
/// dimension. Inputs are restricted to the symmetric band `|ξ_j| < N/2`,
/// so the product spectrum fits without wrap-around.
pub(crate) fn padded_product(a: &SpectralField, b: &SpectralField) -> SpectralField {
    debug_assert_eq!(a.grid, b.grid);
    let m = 2 * a.grid.n();
    let pa = to_physical(&drop_nyquist(a).resampled(m));
    let pb = to_physical(&drop_nyquist(b).resampled(m));
    let values = pa.values.iter().zip(&pb.values).map(|(x, y)| x * y).collect();
    forward_transform(&RealField {
        grid: pa.grid,
        values,
    })
}

/// Linear convolution `Σ_η a(η) b(ξ-η)` of two coefficient arrays that need
/// not be Hermitian, on a grid of `2N` modes per dimension. Nyquist modes of
/// the inputs are ignored.
pub(crate) fn padded_convolution(a: &SpectralField, b: &SpectralField) -> SpectralField {
    debug_assert_eq!(a.grid, b.grid);
    let m = 2 * a.grid.n();
    let dim = a.grid.dim();
    let lift = |f: &SpectralField| {
        let mut data = drop_nyquist(f).resampled(m).coeffs;
        fft::transform(&mut data, m, dim, Direction::Inverse);
        data
    };
    let pa = lift(a);
    let pb = lift(b);
    let mut data: Vec<Complex64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
    fft::transform(&mut data, m, dim, Direction::Forward);
    let scale = 1.0 / (m.pow(dim as u32) as f64);
    for c in &mut data {
        *c *= scale;
    }
    SpectralField {
        grid: TorusGrid::padded(dim, m),
        coeffs: data,
    }
}

/// Zeroes every coefficient whose wavevector touches `-N/2`.
pub(crate) fn drop_nyquist(field: &SpectralField) -> SpectralField {
    let mut out = field.clone();
    for j in 0..out.coeffs.len() {
        if out.grid.touches_nyquist(j) {
            out.coeffs[j] = Complex64::new(0.0, 0.0);
        }
    }
    out
}
