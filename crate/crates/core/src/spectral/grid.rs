use std::f64::consts::PI;

use super::SpectralError;

/// Uniform discretization of the torus `[0, 2π)^d` for `d ∈ {1, 2}`.
///
/// Coefficients and grid values are stored row-major with the first axis
/// slowest. Along each axis, storage index `i` carries wavenumber `i` for
/// `i < N/2` and `i - N` otherwise, so the lattice is `{-N/2, …, N/2-1}^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self, SpectralError> {
        if dim != 1 && dim != 2 {
            return Err(SpectralError::InvalidGrid(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if n < 8 || n % 2 != 0 {
            return Err(SpectralError::InvalidGrid(format!(
                "modes per dimension must be even and at least 8, got {n}"
            )));
        }
        Ok(Self { dim, n })
    }

    /// Grids used internally for zero-padded products are allowed any even size.
    pub(crate) fn padded(dim: usize, n: usize) -> Self {
        debug_assert!(n % 2 == 0 && (dim == 1 || dim == 2));
        Self { dim, n }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Modes (and grid points) per dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of lattice points, `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// `(2π)^d`, the volume of the torus.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    /// Wavenumber carried by storage index `i` along one axis.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Storage index along one axis for wavenumber `k`, if `k` is on the lattice.
    pub fn axis_index(&self, k: i64) -> Option<usize> {
        let n = self.n as i64;
        if k < -n / 2 || k >= n / 2 {
            None
        } else {
            Some(k.rem_euclid(n) as usize)
        }
    }

    /// Integer wavevector of flat storage index `flat`; unused trailing
    /// components are zero.
    pub fn wavevector(&self, flat: usize) -> [i64; 2] {
        match self.dim {
            1 => [self.wavenumber(flat), 0],
            _ => [self.wavenumber(flat / self.n), self.wavenumber(flat % self.n)],
        }
    }

    /// Same as [`wavevector`](Self::wavevector) but as floats, for symbol evaluation.
    pub fn wavevector_f64(&self, flat: usize) -> [f64; 2] {
        let k = self.wavevector(flat);
        [k[0] as f64, k[1] as f64]
    }

    pub fn flat_index(&self, k: &[i64]) -> Option<usize> {
        match self.dim {
            1 => self.axis_index(k[0]),
            _ => Some(self.axis_index(k[0])? * self.n + self.axis_index(k[1])?),
        }
    }

    /// Storage index of `-ξ` (modulo `N`), the Hermitian partner of `flat`.
    /// Nyquist components map onto themselves.
    pub fn conjugate_index(&self, flat: usize) -> usize {
        let n = self.n;
        match self.dim {
            1 => (n - flat) % n,
            _ => {
                let (i, j) = (flat / n, flat % n);
                ((n - i) % n) * n + (n - j) % n
            }
        }
    }

    /// True when any component of the wavevector sits at `-N/2`.
    pub fn touches_nyquist(&self, flat: usize) -> bool {
        let half = -(self.n as i64) / 2;
        self.wavevector(flat)[..self.dim].contains(&half)
    }

    /// True when every component satisfies `3|ξ_j| < N` (the 2/3 rule band).
    /// The strict inequality keeps quadratic products alias-free even when
    /// `N` is divisible by 3.
    pub fn in_dealias_band(&self, flat: usize) -> bool {
        let n = self.n as i64;
        self.wavevector(flat)[..self.dim]
            .iter()
            .all(|&k| 3 * k.abs() < n)
    }

    /// Coordinates of physical grid point `flat`.
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let dx = self.dx();
        match self.dim {
            1 => [flat as f64 * dx, 0.0],
            _ => [(flat / self.n) as f64 * dx, (flat % self.n) as f64 * dx],
        }
    }
}

/// Euclidean norm of the first `dim` components.
pub fn norm(xi: &[f64]) -> f64 {
    xi.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(TorusGrid::new(1, 6).is_err());
        assert!(TorusGrid::new(1, 9).is_err());
        assert!(TorusGrid::new(3, 16).is_err());
        assert!(TorusGrid::new(2, 8).is_ok());
    }

    #[test]
    fn lattice_covers_each_wavenumber_once() {
        let g = TorusGrid::new(2, 8).unwrap();
        let mut seen = std::collections::HashSet::new();
        for flat in 0..g.len() {
            let k = g.wavevector(flat);
            assert!(k.iter().all(|&c| (-4..4).contains(&c)));
            assert!(seen.insert(k));
            assert_eq!(g.flat_index(&k), Some(flat));
        }
        assert_eq!(seen.len(), 64);
        assert!((g.dx() * g.n() as f64 - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn conjugate_index_negates_wavevector() {
        let g = TorusGrid::new(2, 8).unwrap();
        for flat in 0..g.len() {
            let k = g.wavevector(flat);
            let c = g.wavevector(g.conjugate_index(flat));
            for axis in 0..2 {
                if k[axis] == -4 {
                    assert_eq!(c[axis], -4);
                } else {
                    assert_eq!(c[axis], -k[axis]);
                }
            }
        }
    }

    #[test]
    fn dealias_band_uses_two_thirds_rule() {
        let g = TorusGrid::new(1, 12).unwrap();
        assert!(!g.in_dealias_band(g.axis_index(5).unwrap()));
        assert!(g.in_dealias_band(g.axis_index(3).unwrap()));
        assert!(!g.in_dealias_band(g.axis_index(-4).unwrap()));
        let g = TorusGrid::new(1, 64).unwrap();
        assert!(g.in_dealias_band(g.axis_index(21).unwrap()));
        assert!(!g.in_dealias_band(g.axis_index(22).unwrap()));
    }
}
