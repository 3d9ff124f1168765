//! Spectral field containers: scalar, 3-vector and antisymmetric-matrix
//! fields stored as flat complex coefficient buffers over the wavevector
//! lattice.

use rand::Rng;

use crate::grid::GridSpec;
use crate::{par, Error, Result, C64};

/// A scalar field stored by its Fourier coefficients. `reality` marks fields
/// that represent real-valued data (conjugate-symmetric coefficients).
#[derive(Clone, Debug)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub modes: Vec<C64>,
    pub reality: bool,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, modes: vec![C64::new(0.0, 0.0); grid.modes()], reality: true }
    }

    pub fn from_modes(grid: GridSpec, modes: Vec<C64>, reality: bool) -> Result<Self> {
        if modes.len() != grid.modes() {
            return Err(Error::GridMismatch(format!(
                "coefficient buffer has {} entries, grid needs {}",
                modes.len(),
                grid.modes()
            )));
        }
        Ok(Self { grid, modes, reality })
    }

    /// Set coefficient at integer wavevector `k`; when the field is flagged
    /// real, also sets the conjugate partner at `-k`.
    pub fn set_mode(&mut self, k: [i64; 3], value: C64) {
        let i = self.grid.flat_index(k);
        self.modes[i] = value;
        if self.reality {
            let j = self.grid.conjugate_index(i);
            if j != i {
                self.modes[j] = value.conj();
            }
        }
    }

    pub fn mode(&self, k: [i64; 3]) -> C64 {
        self.modes[self.grid.flat_index(k)]
    }

    /// Largest violation of conjugate symmetry relative to the largest
    /// coefficient (0 for the zero field).
    pub fn reality_defect(&self) -> f64 {
        let scale = par::max_indexed(self.modes.len(), |i| self.modes[i].norm());
        if scale == 0.0 {
            return 0.0;
        }
        let defect = par::max_indexed(self.modes.len(), |i| {
            let j = self.grid.conjugate_index(i);
            (self.modes[i] - self.modes[j].conj()).norm()
        });
        defect / scale
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(|c| c.norm_sqr() == 0.0)
    }

    pub fn scaled(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.reality &= c.im == 0.0;
        par::for_each_mut(&mut out.modes, |_, v| *v *= c);
        out
    }

    pub fn add_scaled(&mut self, other: &Self, c: C64) -> Result<()> {
        same_grid(self, other)?;
        self.reality &= other.reality && c.im == 0.0;
        let src = &other.modes;
        par::for_each_mut(&mut self.modes, |i, v| *v += c * src[i]);
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.add_scaled(other, C64::new(-1.0, 0.0))?;
        Ok(out)
    }

    pub fn has_non_finite(&self) -> bool {
        self.modes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite())
    }

    /// Band-limited random real field: independent Gaussian coefficients on
    /// all modes with every `|k_i| <= kmax`, conjugate-symmetrised.
    pub fn random_band_limited<R: Rng>(grid: GridSpec, kmax: i64, rng: &mut R) -> Self {
        let mut f = Self::zeros(grid);
        let normal = rand_distr_standard_normal;
        for k0 in -kmax..=kmax {
            for k1 in -kmax..=kmax {
                for k2 in -kmax..=kmax {
                    let k = [k0, k1, k2];
                    let v = C64::new(normal(rng), normal(rng));
                    let i = f.grid.flat_index(k);
                    f.modes[i] = v;
                }
            }
        }
        f.symmetrize();
        f
    }

    /// Overwrite the coefficients with their conjugate-symmetric part and set
    /// the reality flag (zero mode made real).
    pub fn symmetrize(&mut self) {
        let copy = self.modes.clone();
        let grid = self.grid;
        par::for_each_mut(&mut self.modes, |i, v| {
            let j = grid.conjugate_index(i);
            *v = 0.5 * (copy[i] + copy[j].conj());
        });
        self.reality = true;
    }
}

/// Standard-normal sample via Box–Muller, so only `Rng::gen` is needed.
fn rand_distr_standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn same_grid(a: &ScalarField, b: &ScalarField) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch(format!(
            "n = {} / L = {} vs n = {} / L = {}",
            a.grid.n, a.grid.box_length, b.grid.n, b.grid.box_length
        )));
    }
    Ok(())
}

/// A 3-component vector field; components share one grid.
#[derive(Clone, Debug)]
pub struct VectorField {
    pub c: [ScalarField; 3],
}

impl VectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            c: [ScalarField::zeros(grid), ScalarField::zeros(grid), ScalarField::zeros(grid)],
        }
    }

    pub fn new(c: [ScalarField; 3]) -> Result<Self> {
        same_grid(&c[0], &c[1])?;
        same_grid(&c[0], &c[2])?;
        Ok(Self { c })
    }

    pub fn grid(&self) -> GridSpec {
        self.c[0].grid
    }

    pub fn add_scaled(&mut self, other: &Self, s: C64) -> Result<()> {
        for i in 0..3 {
            self.c[i].add_scaled(&other.c[i], s)?;
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.add_scaled(other, C64::new(-1.0, 0.0))?;
        Ok(out)
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self { c: [self.c[0].scaled(s), self.c[1].scaled(s), self.c[2].scaled(s)] }
    }

    pub fn random_band_limited<R: Rng>(grid: GridSpec, kmax: i64, rng: &mut R) -> Self {
        Self {
            c: [
                ScalarField::random_band_limited(grid, kmax, rng),
                ScalarField::random_band_limited(grid, kmax, rng),
                ScalarField::random_band_limited(grid, kmax, rng),
            ],
        }
    }

    pub fn has_non_finite(&self) -> bool {
        self.c.iter().any(ScalarField::has_non_finite)
    }
}

/// Antisymmetric 3×3 matrix field storing the independent upper-triangle
/// entries `(1,2)`, `(1,3)`, `(2,3)`; the diagonal is zero and the lower
/// triangle is minus the transpose by construction.
#[derive(Clone, Debug)]
pub struct AMatrixField {
    pub a12: ScalarField,
    pub a13: ScalarField,
    pub a23: ScalarField,
}

impl AMatrixField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            a12: ScalarField::zeros(grid),
            a13: ScalarField::zeros(grid),
            a23: ScalarField::zeros(grid),
        }
    }

    pub fn new(a12: ScalarField, a13: ScalarField, a23: ScalarField) -> Result<Self> {
        same_grid(&a12, &a13)?;
        same_grid(&a12, &a23)?;
        Ok(Self { a12, a13, a23 })
    }

    pub fn grid(&self) -> GridSpec {
        self.a12.grid
    }

    pub fn add_scaled(&mut self, other: &Self, s: C64) -> Result<()> {
        self.a12.add_scaled(&other.a12, s)?;
        self.a13.add_scaled(&other.a13, s)?;
        self.a23.add_scaled(&other.a23, s)?;
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.add_scaled(other, C64::new(-1.0, 0.0))?;
        Ok(out)
    }

    pub fn has_non_finite(&self) -> bool {
        self.a12.has_non_finite() || self.a13.has_non_finite() || self.a23.has_non_finite()
    }
}

/// Uniform access to the scalar entries of a field aggregate, with the
/// multiplicity each stored entry carries in summed-entry norms (matrix
/// entries appear twice in the full 3×3 matrix).
pub trait Entries {
    fn entries(&self) -> Vec<&ScalarField>;
    fn entry_multiplicity(&self) -> f64 {
        1.0
    }
}

impl Entries for ScalarField {
    fn entries(&self) -> Vec<&ScalarField> {
        vec![self]
    }
}

impl Entries for VectorField {
    fn entries(&self) -> Vec<&ScalarField> {
        self.c.iter().collect()
    }
}

impl Entries for AMatrixField {
    fn entries(&self) -> Vec<&ScalarField> {
        vec![&self.a12, &self.a13, &self.a23]
    }
    fn entry_multiplicity(&self) -> f64 {
        2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> GridSpec {
        GridSpec::new(16, 2.0 * std::f64::consts::PI).unwrap()
    }

    #[test]
    fn set_mode_keeps_reality() {
        let mut f = ScalarField::zeros(grid());
        f.set_mode([1, 2, -3], C64::new(0.3, 0.8));
        assert!(f.reality_defect() < 1e-15);
        assert_eq!(f.mode([-1, -2, 3]), C64::new(0.3, -0.8));
    }

    #[test]
    fn random_band_limited_is_real_and_band_limited() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = ScalarField::random_band_limited(grid(), 3, &mut rng);
        assert!(f.reality_defect() < 1e-14);
        assert_eq!(f.mode([4, 0, 0]), C64::new(0.0, 0.0));
        assert_ne!(f.mode([3, 1, -2]).norm(), 0.0);
    }

    #[test]
    fn grid_mismatch_detected() {
        let a = ScalarField::zeros(grid());
        let b = ScalarField::zeros(GridSpec::new(32, 1.0).unwrap());
        assert!(matches!(same_grid(&a, &b), Err(Error::GridMismatch(_))));
    }
}
