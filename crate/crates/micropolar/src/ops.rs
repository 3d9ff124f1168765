//! Fourier-multiplier calculus and collocation products.

use crate::field::{same_grid, AMatrixField, Entries, ScalarField, VectorField};
use crate::grid::GridSpec;
use crate::{fft, par, Error, Result, C64};

/// Lebesgue exponent, with `Inf` as the collocation maximum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lebesgue {
    P(f64),
    Inf,
}

impl Lebesgue {
    pub fn parse(text: &str) -> Result<Self> {
        if text.eq_ignore_ascii_case("inf") {
            return Ok(Self::Inf);
        }
        let p: f64 = text
            .parse()
            .map_err(|_| Error::Config(format!("bad Lebesgue exponent {text:?}")))?;
        if p < 1.0 {
            return Err(Error::Config(format!("Lebesgue exponent {p} < 1")));
        }
        Ok(Self::P(p))
    }
}

impl std::fmt::Display for Lebesgue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::P(p) => write!(f, "{p}"),
            Self::Inf => write!(f, "inf"),
        }
    }
}

/// Collocation values of the field (inverse transform of the coefficients).
pub fn to_physical(f: &ScalarField) -> Vec<C64> {
    let mut buf = f.modes.clone();
    fft::inverse(&mut buf, f.grid.n);
    buf
}

/// Build a field from collocation values.
pub fn from_physical(grid: GridSpec, values: Vec<C64>, reality: bool) -> Result<ScalarField> {
    let mut buf = values;
    if buf.len() != grid.modes() {
        return Err(Error::GridMismatch(format!(
            "{} collocation values for an n = {} grid",
            buf.len(),
            grid.n
        )));
    }
    fft::forward(&mut buf, grid.n);
    ScalarField::from_modes(grid, buf, reality)
}

/// `∂^α f`: multiply coefficients by `(iξ)^α`. Orders above 4 are rejected.
pub fn derivative(f: &ScalarField, alpha: [usize; 3]) -> Result<ScalarField> {
    let order = alpha[0] + alpha[1] + alpha[2];
    if order > 4 {
        return Err(Error::UnsupportedOrder(order));
    }
    let mut out = f.clone();
    let grid = f.grid;
    par::for_each_mut(&mut out.modes, |i, v| {
        let xi = grid.xi(i);
        let mut m = C64::new(1.0, 0.0);
        for (a, x) in alpha.iter().zip(xi.iter()) {
            for _ in 0..*a {
                m *= C64::new(0.0, *x);
            }
        }
        *v *= m;
    });
    Ok(out)
}

/// `Λ^s f`: multiply by `|ξ|^s`; the zero mode is annihilated whenever
/// `s ≠ 0` (homogeneous-space convention).
pub fn lambda_power(f: &ScalarField, s: f64) -> Result<ScalarField> {
    if !(-2.0..=2.0).contains(&s) {
        return Err(Error::UnsupportedExponent(s));
    }
    let mut out = f.clone();
    if s == 0.0 {
        return Ok(out);
    }
    let grid = f.grid;
    par::for_each_mut(&mut out.modes, |i, v| {
        let r2 = grid.xi_norm_sq(i);
        *v *= if r2 == 0.0 { 0.0 } else { r2.sqrt().powf(s) };
    });
    Ok(out)
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let dx = derivative(f, [1, 0, 0]).expect("order 1");
    let dy = derivative(f, [0, 1, 0]).expect("order 1");
    let dz = derivative(f, [0, 0, 1]).expect("order 1");
    VectorField { c: [dx, dy, dz] }
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let mut out = derivative(&v.c[0], [1, 0, 0]).expect("order 1");
    out.add_scaled(&derivative(&v.c[1], [0, 1, 0]).expect("order 1"), C64::new(1.0, 0.0))
        .expect("same grid");
    out.add_scaled(&derivative(&v.c[2], [0, 0, 1]).expect("order 1"), C64::new(1.0, 0.0))
        .expect("same grid");
    out
}

/// Vector curl `∇×v`.
pub fn curl(v: &VectorField) -> VectorField {
    let d = |i: usize, alpha: [usize; 3]| derivative(&v.c[i], alpha).expect("order 1");
    let one = C64::new(1.0, 0.0);
    let mut c0 = d(2, [0, 1, 0]);
    c0.add_scaled(&d(1, [0, 0, 1]), -one).expect("same grid");
    let mut c1 = d(0, [0, 0, 1]);
    c1.add_scaled(&d(2, [1, 0, 0]), -one).expect("same grid");
    let mut c2 = d(1, [1, 0, 0]);
    c2.add_scaled(&d(0, [0, 1, 0]), -one).expect("same grid");
    VectorField { c: [c0, c1, c2] }
}

/// Matrix curl `(curl z)^i_j = ∂_j z^i − ∂_i z^j`, stored entries
/// `(1,2), (1,3), (2,3)`.
pub fn curl_matrix(z: &VectorField) -> AMatrixField {
    let d = |i: usize, alpha: [usize; 3]| derivative(&z.c[i], alpha).expect("order 1");
    let one = C64::new(1.0, 0.0);
    let mut a12 = d(0, [0, 1, 0]);
    a12.add_scaled(&d(1, [1, 0, 0]), -one).expect("same grid");
    let mut a13 = d(0, [0, 0, 1]);
    a13.add_scaled(&d(2, [1, 0, 0]), -one).expect("same grid");
    let mut a23 = d(1, [0, 0, 1]);
    a23.add_scaled(&d(2, [0, 1, 0]), -one).expect("same grid");
    AMatrixField { a12, a13, a23 }
}

/// Row-wise divergence of an antisymmetric matrix field,
/// `(div M)^i = ∂_j M^i_j` with the lower triangle filled by `−Mᵀ`.
pub fn div_matrix(m: &AMatrixField) -> VectorField {
    let one = C64::new(1.0, 0.0);
    let mut r0 = derivative(&m.a12, [0, 1, 0]).expect("order 1");
    r0.add_scaled(&derivative(&m.a13, [0, 0, 1]).expect("order 1"), one).expect("same grid");
    let mut r1 = derivative(&m.a23, [0, 0, 1]).expect("order 1");
    r1.add_scaled(&derivative(&m.a12, [1, 0, 0]).expect("order 1"), -one).expect("same grid");
    let mut r2 = derivative(&m.a13, [1, 0, 0]).expect("order 1").scaled(-one);
    r2.add_scaled(&derivative(&m.a23, [0, 1, 0]).expect("order 1"), -one).expect("same grid");
    VectorField { c: [r0, r1, r2] }
}

/// Leray projection `v̂ − ξ(ξ·v̂)/|ξ|²`; the zero mode passes through.
pub fn leray_project(v: &VectorField) -> VectorField {
    let grid = v.grid();
    let mut out = v.clone();
    // ξ(ξ·v̂)/|ξ|² per mode, computed once and subtracted from each component
    let mut kd = vec![C64::new(0.0, 0.0); grid.modes()];
    let src = [&v.c[0].modes, &v.c[1].modes, &v.c[2].modes];
    par::for_each_mut(&mut kd, |i, val| {
        let xi = grid.xi(i);
        let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        if r2 > 0.0 {
            *val = (xi[0] * src[0][i] + xi[1] * src[1][i] + xi[2] * src[2][i]) / r2;
        }
    });
    for comp in 0..3 {
        par::for_each_mut(&mut out.c[comp].modes, |i, val| {
            *val -= grid.xi(i)[comp] * kd[i];
        });
    }
    out
}

/// Zero every mode outside the dealias band.
pub fn apply_dealias(f: &mut ScalarField) {
    let grid = f.grid;
    par::for_each_mut(&mut f.modes, |i, v| {
        if grid.is_aliased(grid.wavevector(i)) {
            *v = C64::new(0.0, 0.0);
        }
    });
}

/// Pointwise product by collocation followed by the dealias mask.
pub fn dealiased_product(f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
    same_grid(f, g)?;
    let mut a = f.modes.clone();
    let mut b = g.modes.clone();
    {
        let mut bufs: [&mut [C64]; 2] = [&mut a, &mut b];
        fft::inverse_many(&mut bufs, f.grid.n);
    }
    par::for_each_mut(&mut a, |i, v| *v *= b[i]);
    let mut out = from_physical(f.grid, a, f.reality && g.reality)?;
    apply_dealias(&mut out);
    Ok(out)
}

/// Convection term `u·∇w` computed component-wise as
/// `Σ_i dealiased_product(u^i, ∂_i w^j)`; transforms are batched.
pub fn convect(u: &VectorField, w: &VectorField) -> Result<VectorField> {
    same_grid(&u.c[0], &w.c[0])?;
    let grid = u.grid();
    let n = grid.n;
    let mut u_phys: Vec<Vec<C64>> = u.c.iter().map(|f| f.modes.clone()).collect();
    let mut dw_phys: Vec<Vec<C64>> = Vec::with_capacity(9);
    for j in 0..3 {
        for i in 0..3 {
            let mut alpha = [0usize; 3];
            alpha[i] = 1;
            dw_phys.push(derivative(&w.c[j], alpha)?.modes);
        }
    }
    {
        let mut bufs: Vec<&mut [C64]> = u_phys
            .iter_mut()
            .chain(dw_phys.iter_mut())
            .map(|v| v.as_mut_slice())
            .collect();
        fft::inverse_many(&mut bufs, n);
    }
    let reality = u.c[0].reality && w.c[0].reality;
    let mut products: Vec<Vec<C64>> = Vec::with_capacity(3);
    for j in 0..3 {
        let mut acc = vec![C64::new(0.0, 0.0); grid.modes()];
        for i in 0..3 {
            let up = &u_phys[i];
            let dp = &dw_phys[j * 3 + i];
            par::for_each_mut(&mut acc, |m, v| *v += up[m] * dp[m]);
        }
        products.push(acc);
    }
    {
        let mut bufs: Vec<&mut [C64]> = products.iter_mut().map(|v| v.as_mut_slice()).collect();
        fft::forward_many(&mut bufs, n);
    }
    let mut comps = Vec::with_capacity(3);
    for buf in products {
        let mut f = ScalarField::from_modes(grid, buf, reality)?;
        apply_dealias(&mut f);
        comps.push(f);
    }
    Ok(VectorField { c: [comps.remove(0), comps.remove(0), comps.remove(0)] })
}

/// Squared spatial L² norm via Parseval: `L³ Σ_k |f̂_k|²`.
pub fn l2_norm_sq(f: &ScalarField) -> f64 {
    let modes = &f.modes;
    f.grid.volume() * par::sum_indexed(modes.len(), |i| modes[i].norm_sqr())
}

pub fn l2_norm(f: &ScalarField) -> f64 {
    l2_norm_sq(f).sqrt()
}

/// Spatial L^p norm by collocation quadrature, `(cell volume · Σ|f|^p)^{1/p}`;
/// the collocation maximum for `p = ∞`.
pub fn lp_norm(f: &ScalarField, p: Lebesgue) -> f64 {
    match p {
        Lebesgue::P(pv) if pv == 2.0 => l2_norm(f),
        Lebesgue::P(pv) => {
            let phys = to_physical(f);
            let s = par::sum_indexed(phys.len(), |i| phys[i].norm().powf(pv));
            (f.grid.cell_volume() * s).powf(1.0 / pv)
        }
        Lebesgue::Inf => {
            let phys = to_physical(f);
            par::max_indexed(phys.len(), |i| phys[i].norm())
        }
    }
}

/// Summed-entry L^p norm of a field aggregate (each stored matrix entry
/// counts twice, matching the full 3×3 matrix).
pub fn lp_norm_summed<T: Entries>(x: &T, p: Lebesgue) -> f64 {
    x.entry_multiplicity() * x.entries().iter().map(|f| lp_norm(f, p)).sum::<f64>()
}

/// Euclidean L² norm of a vector field, `(Σ_i ‖v^i‖₂²)^{1/2}`.
pub fn l2_norm_vec(v: &VectorField) -> f64 {
    v.c.iter().map(l2_norm_sq).sum::<f64>().sqrt()
}

/// Divergence residual `max_k |ξ·v̂|` normalised by the field size
/// (0 for the zero field).
pub fn divergence_residual(v: &VectorField) -> f64 {
    let norm = l2_norm_vec(v);
    if norm == 0.0 {
        return 0.0;
    }
    let grid = v.grid();
    let m = par::max_indexed(grid.modes(), |i| {
        let xi = grid.xi(i);
        (xi[0] * v.c[0].modes[i] + xi[1] * v.c[1].modes[i] + xi[2] * v.c[2].modes[i]).norm()
    });
    m * grid.volume().sqrt() / norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const PI: f64 = std::f64::consts::PI;

    fn grid() -> GridSpec {
        GridSpec::new(16, 2.0 * PI).unwrap()
    }

    #[test]
    fn derivative_of_plane_wave() {
        // f = e^{ix}: ∂_x f = i f on the L = 2π box
        let mut f = ScalarField::zeros(grid());
        f.reality = false;
        f.modes[f.grid.flat_index([1, 0, 0])] = C64::new(1.0, 0.0);
        let df = derivative(&f, [1, 0, 0]).unwrap();
        assert!((df.mode([1, 0, 0]) - C64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn derivative_constant_and_order_guard() {
        let mut f = ScalarField::zeros(grid());
        f.set_mode([0, 0, 0], C64::new(3.0, 0.0));
        let df = derivative(&f, [0, 2, 0]).unwrap();
        assert!(df.is_zero());
        assert!(matches!(derivative(&f, [3, 1, 1]), Err(Error::UnsupportedOrder(5))));
    }

    #[test]
    fn derivative_matches_closed_form() {
        // f = sin(2x)cos(y): ∂_x∂_y f = -2 cos(2x) sin(y)
        let g = grid();
        let mut f = ScalarField::zeros(g);
        // sin(2x) = (e^{2ix} - e^{-2ix})/2i; cos(y) = (e^{iy}+e^{-iy})/2
        for (k, v) in [
            ([2i64, 1i64, 0i64], C64::new(0.0, -0.25)),
            ([2, -1, 0], C64::new(0.0, -0.25)),
            ([-2, 1, 0], C64::new(0.0, 0.25)),
            ([-2, -1, 0], C64::new(0.0, 0.25)),
        ] {
            f.modes[g.flat_index(k)] = v;
        }
        let df = derivative(&f, [1, 1, 0]).unwrap();
        let phys = to_physical(&df);
        let n = g.n;
        let mut err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let x = 2.0 * PI * i as f64 / n as f64;
                let y = 2.0 * PI * j as f64 / n as f64;
                let expect = -2.0 * (2.0 * x).cos() * y.sin();
                let got = phys[(i * n + j) * n];
                err = err.max((got - C64::new(expect, 0.0)).norm());
            }
        }
        assert!(err < 1e-12, "max err {err}");
    }

    #[test]
    fn lambda_power_inverse_off_zero_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = ScalarField::random_band_limited(grid(), 4, &mut rng);
        let back = lambda_power(&lambda_power(&f, 1.0).unwrap(), -1.0).unwrap();
        let mut expect = f.clone();
        expect.modes[0] = C64::new(0.0, 0.0);
        let err = l2_norm(&back.sub(&expect).unwrap()) / l2_norm(&expect);
        assert!(err < 1e-13);
        // |ξ| = 2 mode scaled by √2 at s = 1/2
        let mut g1 = ScalarField::zeros(grid());
        g1.set_mode([0, 2, 0], C64::new(1.0, 0.0));
        let h = lambda_power(&g1, 0.5).unwrap();
        assert!((h.mode([0, 2, 0]).re - 2f64.sqrt()).abs() < 1e-14);
        assert!(lambda_power(&g1, 2.5).is_err());
    }

    #[test]
    fn leray_annihilates_gradients_and_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = ScalarField::random_band_limited(grid(), 4, &mut rng);
        let grad = gradient(&g);
        let proj = leray_project(&grad);
        assert!(l2_norm_vec(&proj) < 1e-12 * l2_norm_vec(&grad).max(1.0));

        let v = VectorField::random_band_limited(grid(), 4, &mut rng);
        let pv = leray_project(&v);
        assert!(divergence_residual(&pv) < 1e-12);
        let ppv = leray_project(&pv);
        assert!(l2_norm_vec(&ppv.sub(&pv).unwrap()) < 1e-14 * l2_norm_vec(&pv));
        // L² contraction
        assert!(l2_norm_vec(&pv) <= l2_norm_vec(&v) * (1.0 + 1e-14));
    }

    #[test]
    fn dealiased_product_single_modes() {
        let g = grid();
        let mut f = ScalarField::zeros(g);
        f.reality = false;
        f.modes[g.flat_index([1, 0, 0])] = C64::new(2.0, 0.0);
        let mut h = ScalarField::zeros(g);
        h.reality = false;
        h.modes[g.flat_index([2, 0, 0])] = C64::new(0.5, 0.5);
        let prod = dealiased_product(&f, &h).unwrap();
        assert!((prod.mode([3, 0, 0]) - C64::new(1.0, 1.0)).norm() < 1e-13);
        let total: f64 = prod.modes.iter().map(|c| c.norm()).sum();
        assert!((total - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn dealiased_product_matches_padded_oracle() {
        // products of band-limited fields that stay inside the retained band
        // are exact, so a double-size grid computes the same coefficients
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let small = grid();
        let big = GridSpec::new(32, 2.0 * PI).unwrap();
        let f = ScalarField::random_band_limited(small, 2, &mut rng);
        let h = ScalarField::random_band_limited(small, 2, &mut rng);
        let lift = |x: &ScalarField| {
            let mut out = ScalarField::zeros(big);
            for k0 in -2i64..=2 {
                for k1 in -2i64..=2 {
                    for k2 in -2i64..=2 {
                        out.modes[big.flat_index([k0, k1, k2])] = x.mode([k0, k1, k2]);
                    }
                }
            }
            out
        };
        let prod_small = dealiased_product(&f, &h).unwrap();
        let prod_big = dealiased_product(&lift(&f), &lift(&h)).unwrap();
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for k0 in -4i64..=4 {
            for k1 in -4i64..=4 {
                for k2 in -4i64..=4 {
                    let a = prod_small.mode([k0, k1, k2]);
                    let b = prod_big.mode([k0, k1, k2]);
                    err = err.max((a - b).norm());
                    scale = scale.max(b.norm());
                }
            }
        }
        assert!(err < 1e-12 * scale, "err {err} scale {scale}");
    }

    #[test]
    fn product_with_constant_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let f = ScalarField::random_band_limited(grid(), 3, &mut rng);
        let mut one = ScalarField::zeros(grid());
        one.set_mode([0, 0, 0], C64::new(1.0, 0.0));
        let prod = dealiased_product(&f, &one).unwrap();
        let err = l2_norm(&prod.sub(&f).unwrap()) / l2_norm(&f);
        assert!(err < 1e-13);
    }

    #[test]
    fn parseval_matches_collocation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let f = ScalarField::random_band_limited(grid(), 5, &mut rng);
        let a = l2_norm(&f);
        let b = lp_norm(&f, Lebesgue::P(2.000001)); // collocation path
        assert!((a - b).abs() / a < 1e-5);
        let phys = to_physical(&f);
        let direct = (f.grid.cell_volume()
            * phys.iter().map(|c| c.norm_sqr()).sum::<f64>())
        .sqrt();
        assert!((a - direct).abs() / a < 1e-12);
    }

    #[test]
    fn multiplier_calculus_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let f = ScalarField::random_band_limited(grid(), 4, &mut rng);
        // derivative commutes with lambda_power
        let a = derivative(&lambda_power(&f, 0.5).unwrap(), [1, 0, 0]).unwrap();
        let b = lambda_power(&derivative(&f, [1, 0, 0]).unwrap(), 0.5).unwrap();
        let err = a
            .modes
            .iter()
            .zip(&b.modes)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-13);
        // curl of a gradient vanishes
        let cg = curl(&gradient(&f));
        assert!(l2_norm_vec(&cg) < 1e-12);
        // div of a curl vanishes
        let v = VectorField::random_band_limited(grid(), 4, &mut rng);
        let dc = divergence(&curl(&v));
        assert!(l2_norm(&dc) < 1e-11);
    }
}
