//! Periodic-box spectral grid: integer wavevector lattice over `[0, L)^3`.

use crate::{Error, Result};

/// Discretisation of the periodic box: `n` points per axis, side length `L`,
/// and the fraction of the Nyquist band kept when dealiasing quadratic
/// products (2/3 by default).
///
/// Physical wavenumbers are `ξ = 2πk/L` with integer `k`, each component in
/// `[-n/2, n/2)` in the usual FFT ordering.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct GridSpec {
    pub n: usize,
    pub box_length: f64,
    pub dealias_fraction: f64,
}

impl GridSpec {
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        Self::with_dealias(n, box_length, 2.0 / 3.0)
    }

    pub fn with_dealias(n: usize, box_length: f64, dealias_fraction: f64) -> Result<Self> {
        if n < 16 || n % 2 != 0 {
            return Err(Error::Config(format!("grid n = {n} must be even and >= 16")));
        }
        if !(box_length > 0.0) {
            return Err(Error::Config(format!("box length {box_length} must be positive")));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "dealias fraction {dealias_fraction} outside (0, 1]"
            )));
        }
        Ok(Self { n, box_length, dealias_fraction })
    }

    /// Total number of lattice modes (= collocation points), `n^3`.
    pub fn modes(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Wavenumber spacing `2π/L`.
    pub fn dk(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.box_length
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    /// Volume of one collocation cell, `(L/n)^3`.
    pub fn cell_volume(&self) -> f64 {
        (self.box_length / self.n as f64).powi(3)
    }

    /// Signed integer frequency for a raw index along one axis.
    #[inline]
    pub fn signed_freq(&self, idx: usize) -> i64 {
        if idx < self.n / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    /// Integer wavevector of a flat (row-major) mode index.
    #[inline]
    pub fn wavevector(&self, flat: usize) -> [i64; 3] {
        let n = self.n;
        let k2 = flat % n;
        let k1 = (flat / n) % n;
        let k0 = flat / (n * n);
        [self.signed_freq(k0), self.signed_freq(k1), self.signed_freq(k2)]
    }

    /// Physical wavevector `ξ = 2πk/L` of a flat mode index.
    #[inline]
    pub fn xi(&self, flat: usize) -> [f64; 3] {
        let k = self.wavevector(flat);
        let dk = self.dk();
        [k[0] as f64 * dk, k[1] as f64 * dk, k[2] as f64 * dk]
    }

    #[inline]
    pub fn xi_norm_sq(&self, flat: usize) -> f64 {
        let xi = self.xi(flat);
        xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]
    }

    /// Flat index of an integer wavevector (components reduced mod n).
    pub fn flat_index(&self, k: [i64; 3]) -> usize {
        let n = self.n as i64;
        let wrap = |c: i64| (((c % n) + n) % n) as usize;
        (wrap(k[0]) * self.n + wrap(k[1])) * self.n + wrap(k[2])
    }

    /// Flat index of the conjugate partner `-k`.
    pub fn conjugate_index(&self, flat: usize) -> usize {
        let n = self.n;
        let k2 = flat % n;
        let k1 = (flat / n) % n;
        let k0 = flat / (n * n);
        let neg = |i: usize| (n - i) % n;
        (neg(k0) * n + neg(k1)) * n + neg(k2)
    }

    /// Dealias limit in lattice units: modes with any `|k_i|` above this are
    /// zeroed after a product.
    pub fn dealias_limit(&self) -> f64 {
        self.dealias_fraction * self.n as f64 / 2.0
    }

    /// Largest retained `|ξ|` along an axis after dealiasing.
    pub fn xi_cutoff(&self) -> f64 {
        self.dealias_limit() * self.dk()
    }

    #[inline]
    pub fn is_aliased(&self, k: [i64; 3]) -> bool {
        let lim = self.dealias_limit();
        k.iter().any(|&c| (c.abs() as f64) > lim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequencies_cover_standard_fft_ordering() {
        let g = GridSpec::new(16, 2.0 * std::f64::consts::PI).unwrap();
        assert_eq!(g.signed_freq(0), 0);
        assert_eq!(g.signed_freq(7), 7);
        assert_eq!(g.signed_freq(8), -8);
        assert_eq!(g.signed_freq(15), -1);
        let flat = g.flat_index([3, -2, 5]);
        assert_eq!(g.wavevector(flat), [3, -2, 5]);
        assert_eq!(g.conjugate_index(flat), g.flat_index([-3, 2, -5]));
    }

    #[test]
    fn dealias_mask_threshold() {
        let g = GridSpec::new(32, 1.0).unwrap();
        // 2/3 * 16 = 10.666..: |k| = 10 kept, 11 dropped
        assert!(!g.is_aliased([10, 0, 0]));
        assert!(g.is_aliased([11, 0, 0]));
        assert!(g.is_aliased([0, 0, -11]));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GridSpec::new(8, 1.0).is_err());
        assert!(GridSpec::new(17, 1.0).is_err());
        assert!(GridSpec::new(16, -1.0).is_err());
        assert!(GridSpec::with_dealias(16, 1.0, 0.0).is_err());
    }
}
