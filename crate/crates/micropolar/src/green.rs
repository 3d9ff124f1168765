//! Exact per-mode linear semigroups.
//!
//! The transformed linear system decouples per mode and per matrix entry
//! into the 2×2 ODE
//! ```text
//!   d/dt [û_A, ω̂_Ω] = −Ã(ρ) [û_A, ω̂_Ω],   Ã(ρ) = [[ρ², −ρ], [−ρ, ρ²+2]]
//! ```
//! with `ρ = |ξ|`, plus the scalar damped-heat factor `e^{−(2ρ²+2)t}` for
//! `ω̂_d`. `Ã = (ρ²+1)I + R` with `R = [[−1,−ρ],[−ρ,1]]`, `R² = (1+ρ²)I`,
//! which gives the closed form `Ĝ = e^{−ρ²t}(𝒜R + ℬI)` and the eigenpairs
//! `λ∓ = ρ² + 1 ∓ √(1+ρ²)` used for the exponential-integrator weights.
//! The untransformed 6×6 semigroup `e^{−A(ξ)t}` is evaluated by Padé
//! scaling-and-squaring.

use nalgebra::{Matrix6, Vector6};

use crate::field::AMatrixField;
use crate::model::TransformedState;
use crate::{par, Error, Result, C64};

type M2 = [[f64; 2]; 2];

/// Closed-form reduced Green matrix `Ĝ(ρ, t)`, overflow-safe for all
/// `ρ² t ≤ 10⁶`: the growing factor is never formed alone — both exponents
/// `λ∓ = ρ²+1∓√(1+ρ²)` are nonnegative.
pub fn reduced_green_eval(rho: f64, t: f64) -> M2 {
    reduced_green_shifted(rho, t, 0.0)
}

/// `e^{σt}·Ĝ(ρ, t)` with the shift folded into the exponents, so normalized
/// quantities like `e^{ρ²t/3}Ĝ` can be formed without overflow (both
/// eigenvalues satisfy `λ∓ ≥ ρ²/3`, so the shifted exponents stay bounded
/// for any `σ ≤ ρ²/3` near `ρ`).
pub fn reduced_green_shifted(rho: f64, t: f64, sigma: f64) -> M2 {
    let s = (1.0 + rho * rho).sqrt();
    let lam_slow = rho * rho + 1.0 - s; // ~ ρ²/2 at low ρ, ≥ 0
    let lam_fast = rho * rho + 1.0 + s;
    let e_fast = ((sigma - lam_fast) * t).exp();
    let e_slow = ((sigma - lam_slow) * t).exp();
    // 𝒜 = e^{−(ρ²+1)t}·(−sinh(st))/s combined into the decayed exponents;
    // series in st when the difference of near-equal exponentials cancels
    let a = if s * t < 1e-4 {
        let st = s * t;
        let sinh_over_s = t * (1.0 + st * st / 6.0 + st * st * st * st / 120.0);
        -((sigma - (rho * rho + 1.0)) * t).exp() * sinh_over_s
    } else {
        (e_fast - e_slow) / (2.0 * s)
    };
    let b = (e_fast + e_slow) / 2.0;
    // Ĝ = 𝒜·R + ℬ·I with R = [[−1, −ρ], [−ρ, 1]]
    [[b - a, -rho * a], [-rho * a, b + a]]
}

/// Damped-heat multiplier for `ω̂_d`.
pub fn omega_d_multiplier(rho: f64, t: f64) -> f64 {
    (-(2.0 * rho * rho + 2.0) * t).exp()
}

/// `φ₁(z) = (1−e^{−z})/z`, the first exponential-integrator weight.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 - z / 2.0 + z * z / 6.0
    } else {
        (1.0 - (-z).exp()) / z
    }
}

/// `φ₂(z) = (e^{−z} − 1 + z)/z²`.
pub fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        0.5 - z / 6.0 + z * z / 24.0
    } else {
        ((-z).exp() - 1.0 + z) / (z * z)
    }
}

/// Spectral decomposition of `Ã(ρ)`, exposing scalar functions of the
/// generator as 2×2 matrices via the orthogonal projectors onto the
/// eigenvectors `v∓`.
#[derive(Clone, Copy, Debug)]
pub struct ModeEigen {
    pub lam_slow: f64,
    pub lam_fast: f64,
    /// unit eigenvector for λ₋ (the slowly decaying direction)
    v_slow: [f64; 2],
}

impl ModeEigen {
    pub fn new(rho: f64) -> Self {
        let s = (1.0 + rho * rho).sqrt();
        let lam_slow = rho * rho + 1.0 - s;
        let lam_fast = rho * rho + 1.0 + s;
        // R v = −s v with v = (ρ, s−1); at ρ = 0 this degenerates to e₁
        let v = [rho, s - 1.0];
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let v_slow = if n == 0.0 { [1.0, 0.0] } else { [v[0] / n, v[1] / n] };
        Self { lam_slow, lam_fast, v_slow }
    }

    /// `f(λ₋)P₋ + f(λ₊)P₊` for a scalar function of the generator.
    pub fn apply_scalar_fn<F: Fn(f64) -> f64>(&self, f: F) -> M2 {
        let fs = f(self.lam_slow);
        let ff = f(self.lam_fast);
        let [a, b] = self.v_slow;
        // P₋ = v v^T, P₊ = I − P₋ (orthonormal basis)
        [
            [fs * a * a + ff * b * b, (fs - ff) * a * b],
            [(fs - ff) * a * b, fs * b * b + ff * a * a],
        ]
    }

    pub fn semigroup(&self, t: f64) -> M2 {
        self.apply_scalar_fn(|lam| (-lam * t).exp())
    }

    /// `dt·φ₁(dt·Ã)` — the weight multiplying the frozen nonlinearity in an
    /// exponential Euler step.
    pub fn phi1_weight(&self, dt: f64) -> M2 {
        self.apply_scalar_fn(|lam| dt * phi1(lam * dt))
    }

    /// `dt·φ₂(dt·Ã)` — the weight multiplying the nonlinearity increment in
    /// the ETDRK2 corrector.
    pub fn phi2_weight(&self, dt: f64) -> M2 {
        self.apply_scalar_fn(|lam| dt * phi2(lam * dt))
    }
}

fn mat_vec(m: &M2, v: [C64; 2]) -> [C64; 2] {
    [v[0] * m[0][0] + v[1] * m[0][1], v[0] * m[1][0] + v[1] * m[1][1]]
}

/// Apply the exact linear evolution over a duration `t` to every mode:
/// `Ĝ(ρ,t)` entrywise on the `(û_A, ω̂_Ω)` pairs and the damped-heat factor
/// on `ω̂_d`.
pub fn apply_semigroups(ts: &TransformedState, t: f64) -> TransformedState {
    let mut out = ts.clone();
    let grid = ts.omega_d.grid;
    for (ua, om) in [
        (&mut out.u_a.a12, &mut out.omega_om.a12),
        (&mut out.u_a.a13, &mut out.omega_om.a13),
        (&mut out.u_a.a23, &mut out.omega_om.a23),
    ] {
        par::for_each_zip_mut(&mut ua.modes, &mut om.modes, |i, a, w| {
            let g = reduced_green_eval(grid.xi_norm_sq(i).sqrt(), t);
            let [na, nw] = mat_vec(&g, [*a, *w]);
            *a = na;
            *w = nw;
        });
    }
    par::for_each_mut(&mut out.omega_d.modes, |i, v| {
        *v *= omega_d_multiplier(grid.xi_norm_sq(i).sqrt(), t);
    });
    out.t = ts.t + t;
    out
}

/// Pair of weight matrices used by the exponential integrators, evaluated
/// per mode on demand.
pub fn mode_weights(rho: f64, dt: f64) -> (M2, M2, M2) {
    let eig = ModeEigen::new(rho);
    (eig.semigroup(dt), eig.phi1_weight(dt), eig.phi2_weight(dt))
}

/// Entrywise application of per-mode 2×2 weights to an `(u_A, ω_Ω)` pair of
/// matrix fields.
pub fn apply_mode_matrix<F>(ua: &mut AMatrixField, om: &mut AMatrixField, weight: F)
where
    F: Fn(f64) -> M2 + Sync,
{
    let grid = ua.grid();
    for (a, w) in [
        (&mut ua.a12, &mut om.a12),
        (&mut ua.a13, &mut om.a13),
        (&mut ua.a23, &mut om.a23),
    ] {
        par::for_each_zip_mut(&mut a.modes, &mut w.modes, |i, x, y| {
            let m = weight(grid.xi_norm_sq(i).sqrt());
            let [nx, ny] = mat_vec(&m, [*x, *y]);
            *x = nx;
            *y = ny;
        });
    }
}

// ---------------------------------------------------------------------------
// 6×6 untransformed semigroup
// ---------------------------------------------------------------------------

/// Generator `A(ξ)` of the untransformed linear system, defined by
/// `∂_t (û, ω̂) = −A(ξ)(û, ω̂)`:
/// upper-left `|ξ|²I`, lower-right `(|ξ|²+2)I + ξξᵀ`, off-diagonal blocks
/// `−i Ξ` with `Ξ v = ξ×v`. Hermitian.
pub fn full_generator(xi: [f64; 3]) -> Matrix6<C64> {
    let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    let z = C64::new(0.0, 0.0);
    let re = |x: f64| C64::new(x, 0.0);
    let im = |x: f64| C64::new(0.0, x);
    let mut a = Matrix6::from_element(z);
    for d in 0..3 {
        a[(d, d)] = re(r2);
        a[(d + 3, d + 3)] = re(r2 + 2.0);
    }
    for r in 0..3 {
        for c in 0..3 {
            a[(r + 3, c + 3)] += re(xi[r] * xi[c]);
        }
    }
    // Ξ = [[0, −ξ₃, ξ₂], [ξ₃, 0, −ξ₁], [−ξ₂, ξ₁, 0]]
    let cross = [
        (0usize, 1usize, -xi[2]),
        (0, 2, xi[1]),
        (1, 0, xi[2]),
        (1, 2, -xi[0]),
        (2, 0, -xi[1]),
        (2, 1, xi[0]),
    ];
    for &(r, c, v) in &cross {
        a[(r, c + 3)] = im(-v);
        a[(r + 3, c)] = im(-v);
    }
    a
}

/// 1-norm (max column sum of moduli).
fn one_norm(m: &Matrix6<C64>) -> f64 {
    (0..6)
        .map(|c| (0..6).map(|r| m[(r, c)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by Padé(13) scaling-and-squaring.
pub fn expm6(a: &Matrix6<C64>) -> Result<Matrix6<C64>> {
    const THETA13: f64 = 5.371920351148152;
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::Numeric("non-finite generator in matrix exponential".into()));
    }
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let scaled = a * C64::new((0.5f64).powi(s), 0.0);
    let ident = Matrix6::identity();
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let re = |x: f64| C64::new(x, 0.0);
    let u_inner = &a6 * re(B[13]) + &a4 * re(B[11]) + &a2 * re(B[9]);
    let u = &scaled
        * (&a6 * &u_inner + &a6 * re(B[7]) + &a4 * re(B[5]) + &a2 * re(B[3]) + ident * re(B[1]));
    let v_inner = &a6 * re(B[12]) + &a4 * re(B[10]) + &a2 * re(B[8]);
    let v = &a6 * &v_inner + &a6 * re(B[6]) + &a4 * re(B[4]) + &a2 * re(B[2]) + ident * re(B[0]);
    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut x = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numeric("singular Padé denominator in matrix exponential".into()))?;
    for _ in 0..s {
        x = &x * &x;
    }
    if x.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Numeric("matrix exponential did not converge".into()));
    }
    Ok(x)
}

/// `e^{−A(ξ)t}` acting on stacked `(û, ω̂)` amplitudes.
pub fn full_green_eval(xi: [f64; 3], t: f64) -> Result<Matrix6<C64>> {
    let a = full_generator(xi);
    expm6(&(a * C64::new(-t, 0.0)))
}

pub fn full_green_apply(xi: [f64; 3], t: f64, u: [C64; 3], om: [C64; 3]) -> Result<([C64; 3], [C64; 3])> {
    let g = full_green_eval(xi, t)?;
    let v = Vector6::from_iterator(u.into_iter().chain(om));
    let w = g * v;
    Ok(([w[0], w[1], w[2]], [w[3], w[4], w[5]]))
}

// ---------------------------------------------------------------------------
// Derivative-bound scans
// ---------------------------------------------------------------------------

/// Measured supremum of `|D^α_ρ Ĝ(ρ,t)| · e^{ρ²t/3} · ρ^{|α|}` over a
/// `(ρ, t)` grid. Finiteness and refinement-stability of this quantity are
/// the testable content of the pointwise Green-matrix bounds; the constant
/// itself is reported, not asserted against a target.
#[derive(Clone, Debug)]
pub struct BoundScanReport {
    pub alpha_order: usize,
    pub sup: f64,
    pub arg_rho: f64,
    pub arg_t: f64,
    pub samples: usize,
}

fn frobenius(m: &M2) -> f64 {
    (m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1]).sqrt()
}

fn mat_lin(a: &M2, ca: f64, b: &M2, cb: f64) -> M2 {
    [
        [a[0][0] * ca + b[0][0] * cb, a[0][1] * ca + b[0][1] * cb],
        [a[1][0] * ca + b[1][0] * cb, a[1][1] * ca + b[1][1] * cb],
    ]
}

/// Central-difference radial derivative of order ≤ 2, pre-weighted by
/// `e^{ρ²t/3}`: the shift is constant across the stencil, so differencing the
/// shifted evaluator gives exactly `e^{ρ²t/3} D^α_ρ Ĝ` without ever forming
/// the huge factor alone. (Ĝ is radial in ξ, so full ξ-derivatives reduce to
/// these up to bounded angular factors.)
fn weighted_radial_derivative(order: usize, rho: f64, t: f64) -> M2 {
    let sigma = rho * rho / 3.0;
    let eval = |r: f64| reduced_green_shifted(r, t, sigma);
    match order {
        0 => eval(rho),
        1 => {
            let h = 6e-6 * rho.max(1.0);
            let p = eval(rho + h);
            let m = eval(rho - h);
            mat_lin(&p, 0.5 / h, &m, -0.5 / h)
        }
        2 => {
            let h = 2e-4 * rho.max(1.0);
            let p = eval(rho + h);
            let c = eval(rho);
            let m = eval(rho - h);
            mat_lin(&mat_lin(&p, 1.0, &m, 1.0), 1.0 / (h * h), &c, -2.0 / (h * h))
        }
        _ => unreachable!(),
    }
}

pub fn scan_derivative_bounds(
    alpha_order: usize,
    rho_grid: &[f64],
    t_grid: &[f64],
) -> Result<BoundScanReport> {
    if alpha_order > 2 {
        return Err(Error::UnsupportedOrder(alpha_order));
    }
    if rho_grid.iter().any(|&r| r <= 0.0) {
        return Err(Error::Config("bound scan requires strictly positive ρ".into()));
    }
    let mut sup = 0.0f64;
    let mut arg = (0.0, 0.0);
    for &rho in rho_grid {
        for &t in t_grid {
            let d = weighted_radial_derivative(alpha_order, rho, t);
            let val = frobenius(&d) * rho.powi(alpha_order as i32);
            if !val.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite normalized derivative at ρ = {rho}, t = {t}"
                )));
            }
            if val > sup {
                sup = val;
                arg = (rho, t);
            }
        }
    }
    Ok(BoundScanReport {
        alpha_order,
        sup,
        arg_rho: arg.0,
        arg_t: arg.1,
        samples: rho_grid.len() * t_grid.len(),
    })
}

/// Geometric sample grid (log-uniform, inclusive endpoints).
pub fn geomspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
    (0..count).map(|i| lo * ratio.powi(i as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mat_err(a: &M2, b: &M2) -> f64 {
        let mut e = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                e = e.max((a[r][c] - b[r][c]).abs());
            }
        }
        e
    }

    /// Fine-step classical RK4 on the mode ODE — the independent oracle.
    fn ode_oracle(rho: f64, t: f64, v0: [f64; 2], steps: usize) -> [f64; 2] {
        let f = |v: [f64; 2]| {
            [
                -rho * rho * v[0] + rho * v[1],
                rho * v[0] - (rho * rho + 2.0) * v[1],
            ]
        };
        let h = t / steps as f64;
        let mut v = v0;
        for _ in 0..steps {
            let k1 = f(v);
            let k2 = f([v[0] + 0.5 * h * k1[0], v[1] + 0.5 * h * k1[1]]);
            let k3 = f([v[0] + 0.5 * h * k2[0], v[1] + 0.5 * h * k2[1]]);
            let k4 = f([v[0] + h * k3[0], v[1] + h * k3[1]]);
            v = [
                v[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                v[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ];
        }
        v
    }

    #[test]
    fn identity_at_time_zero_and_rho_zero_form() {
        for rho in [0.0, 0.3, 2.0, 25.0] {
            let g = reduced_green_eval(rho, 0.0);
            assert!(mat_err(&g, &[[1.0, 0.0], [0.0, 1.0]]) < 1e-14);
        }
        for t in [0.1, 1.0, 5.0] {
            let g = reduced_green_eval(0.0, t);
            let expect = [[1.0, 0.0], [0.0, (-2.0 * t).exp()]];
            assert!(mat_err(&g, &expect) < 1e-14, "t = {t}");
        }
    }

    #[test]
    fn matches_ode_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..100 {
            let rho: f64 = rng.gen_range(0.0..30.0);
            let t: f64 = rng.gen_range(0.0..10.0);
            let g = reduced_green_eval(rho, t);
            for v0 in [[1.0, 0.0], [0.0, 1.0]] {
                let direct = [g[0][0] * v0[0] + g[0][1] * v0[1], g[1][0] * v0[0] + g[1][1] * v0[1]];
                // step count balancing truncation against cost; error ~ (t/n)^4
                let steps = 4000 + (400.0 * rho * rho * t) as usize;
                let oracle = ode_oracle(rho, t, v0, steps);
                let scale = oracle[0].abs().max(oracle[1].abs()).max(1e-12);
                let err = ((direct[0] - oracle[0]).abs()).max((direct[1] - oracle[1]).abs());
                assert!(err <= 1e-8 * scale.max(1.0), "ρ={rho} t={t}: err {err}");
            }
        }
    }

    #[test]
    fn overflow_safe_at_extreme_arguments() {
        for (rho, t) in [(30.0, 10.0), (1000.0, 1.0), (50.0, 400.0), (1e3, 1e0)] {
            let g = reduced_green_eval(rho, t);
            assert!(g.iter().flatten().all(|v| v.is_finite()), "ρ={rho} t={t}");
        }
        // ρ²t up to 10⁶
        let g = reduced_green_eval(1000.0, 1.0);
        assert!(frobenius(&g) <= 1.0 + 1e-12);
    }

    #[test]
    fn small_t_series_branch_matches_eigen_path() {
        // in the series regime st < 1e−4, compare against the
        // eigendecomposition evaluation, which has no cancelling difference
        // of exponentials at leading order in the diagonal entries
        for rho in [0.5, 3.0, 20.0] {
            let s = (1.0 + rho * rho as f64).sqrt();
            let t = 0.5e-4 / s;
            let series = reduced_green_eval(rho, t);
            let eigen = ModeEigen::new(rho).semigroup(t);
            assert!(mat_err(&series, &eigen) < 1e-12, "ρ = {rho}");
        }
    }

    #[test]
    fn eigen_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let rho: f64 = rng.gen_range(1e-3..30.0);
            let eig = ModeEigen::new(rho);
            let s = (1.0 + rho * rho).sqrt();
            assert!((eig.lam_slow - (rho * rho + 1.0 - s)).abs() < 1e-12 * (1.0 + rho * rho));
            assert!((eig.lam_fast - (rho * rho + 1.0 + s)).abs() < 1e-12 * (1.0 + rho * rho));
            assert!(eig.lam_slow > 0.0);
            // reconstruct the generator from the spectral decomposition
            let a = eig.apply_scalar_fn(|l| l);
            let expect = [[rho * rho, -rho], [-rho, rho * rho + 2.0]];
            assert!(mat_err(&a, &expect) < 1e-10 * (1.0 + rho * rho), "ρ = {rho}");
            // semigroup from eigen matches the closed form
            let g1 = eig.semigroup(0.7);
            let g2 = reduced_green_eval(rho, 0.7);
            assert!(mat_err(&g1, &g2) < 1e-12);
        }
    }

    #[test]
    fn semigroup_property_and_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let rho: f64 = rng.gen_range(0.0..20.0);
            let t: f64 = rng.gen_range(0.0..3.0);
            let s: f64 = rng.gen_range(0.0..3.0);
            let gt = reduced_green_eval(rho, t);
            let gs = reduced_green_eval(rho, s);
            let gts = reduced_green_eval(rho, t + s);
            let mut prod = [[0.0; 2]; 2];
            for r in 0..2 {
                for c in 0..2 {
                    prod[r][c] = gt[r][0] * gs[0][c] + gt[r][1] * gs[1][c];
                }
            }
            assert!(mat_err(&prod, &gts) < 1e-11);
            // operator norm ≤ 1 + δ: symmetric 2×2, largest |eigenvalue|
            let tr = gt[0][0] + gt[1][1];
            let det = gt[0][0] * gt[1][1] - gt[0][1] * gt[1][0];
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            let op = (tr / 2.0 + disc).abs().max((tr / 2.0 - disc).abs());
            assert!(op <= 1.05, "ρ={rho} t={t}: op norm {op}");
        }
    }

    #[test]
    fn phi_weights_reproduce_forced_ode() {
        // exact discrete solution with constant forcing:
        //   v(h) = G(h)v₀ + h·φ₁(hÃ)N
        let rho = 1.7;
        let h = 0.3;
        let eig = ModeEigen::new(rho);
        let g = eig.semigroup(h);
        let w1 = eig.phi1_weight(h);
        let forcing = [0.4, -0.9];
        let v0 = [1.0, 0.5];
        // oracle: RK4 on dv/dt = −Ãv + N with N constant
        let f = |v: [f64; 2]| {
            [
                -rho * rho * v[0] + rho * v[1] + forcing[0],
                rho * v[0] - (rho * rho + 2.0) * v[1] + forcing[1],
            ]
        };
        let steps = 20000;
        let dt = h / steps as f64;
        let mut v = v0;
        for _ in 0..steps {
            let k1 = f(v);
            let k2 = f([v[0] + 0.5 * dt * k1[0], v[1] + 0.5 * dt * k1[1]]);
            let k3 = f([v[0] + 0.5 * dt * k2[0], v[1] + 0.5 * dt * k2[1]]);
            let k4 = f([v[0] + dt * k3[0], v[1] + dt * k3[1]]);
            v = [
                v[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                v[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ];
        }
        let pred = [
            g[0][0] * v0[0] + g[0][1] * v0[1] + w1[0][0] * forcing[0] + w1[0][1] * forcing[1],
            g[1][0] * v0[0] + g[1][1] * v0[1] + w1[1][0] * forcing[0] + w1[1][1] * forcing[1],
        ];
        assert!((pred[0] - v[0]).abs() + (pred[1] - v[1]).abs() < 1e-10);

        // linear-in-time forcing N(τ) = N₀ + (τ/h)ΔN adds h·φ₂(hÃ)ΔN
        let delta = [-0.2, 0.7];
        let f2 = |v: [f64; 2], tau: f64| {
            let n = [forcing[0] + tau / h * delta[0], forcing[1] + tau / h * delta[1]];
            [
                -rho * rho * v[0] + rho * v[1] + n[0],
                rho * v[0] - (rho * rho + 2.0) * v[1] + n[1],
            ]
        };
        let mut v2 = v0;
        let mut tau = 0.0;
        for _ in 0..steps {
            let k1 = f2(v2, tau);
            let k2 = f2([v2[0] + 0.5 * dt * k1[0], v2[1] + 0.5 * dt * k1[1]], tau + 0.5 * dt);
            let k3 = f2([v2[0] + 0.5 * dt * k2[0], v2[1] + 0.5 * dt * k2[1]], tau + 0.5 * dt);
            let k4 = f2([v2[0] + dt * k3[0], v2[1] + dt * k3[1]], tau + dt);
            v2 = [
                v2[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                v2[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ];
            tau += dt;
        }
        let w2 = eig.phi2_weight(h);
        let pred2 = [
            pred[0] + w2[0][0] * delta[0] + w2[0][1] * delta[1],
            pred[1] + w2[1][0] * delta[0] + w2[1][1] * delta[1],
        ];
        assert!((pred2[0] - v2[0]).abs() + (pred2[1] - v2[1]).abs() < 1e-10);
    }

    #[test]
    fn full_green_identity_and_parallel_direction() {
        let xi = [1.2, -0.7, 2.1];
        let g0 = full_green_eval(xi, 0.0).unwrap();
        let err: f64 = (&g0 - Matrix6::<C64>::identity()).iter().map(|c| c.norm()).sum();
        assert!(err < 1e-12);
        // ω̂ ∥ ξ decays by e^{−(2|ξ|²+2)t}
        let r2: f64 = xi.iter().map(|x| x * x).sum();
        let r = r2.sqrt();
        let t = 0.37;
        let (u1, om1) = full_green_apply(
            xi,
            t,
            [C64::new(0.0, 0.0); 3],
            [
                C64::new(xi[0] / r, 0.0),
                C64::new(xi[1] / r, 0.0),
                C64::new(xi[2] / r, 0.0),
            ],
        )
        .unwrap();
        let factor = omega_d_multiplier(r, t);
        for d in 0..3 {
            assert!(u1[d].norm() < 1e-12);
            assert!((om1[d] - C64::new(factor * xi[d] / r, 0.0)).norm() < 1e-11);
        }
    }

    #[test]
    fn full_green_matches_reduced_through_transformation() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..20 {
            let xi = [
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(0.3..4.0),
            ];
            let t: f64 = rng.gen_range(0.0..2.0);
            let r2: f64 = xi.iter().map(|x| x * x).sum();
            let r = r2.sqrt();
            let randc =
                |rng: &mut ChaCha8Rng| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            // divergence-free û
            let mut u = [randc(&mut rng), randc(&mut rng), randc(&mut rng)];
            let kd = (xi[0] * u[0] + xi[1] * u[1] + xi[2] * u[2]) / r2;
            for d in 0..3 {
                u[d] -= kd * xi[d];
            }
            let om = [randc(&mut rng), randc(&mut rng), randc(&mut rng)];

            // per-mode transformation to (û_A, ω̂_Ω, ω̂_d) amplitudes
            let to_amps = |u: &[C64; 3], om: &[C64; 3]| {
                let i = C64::new(0.0, 1.0);
                let ua = [u[2], -u[1], u[0]];
                // ω̂_Ω = −|ξ|⁻¹ · i(ξ_j ω̂^i − ξ_i ω̂^j)
                let cw = |a: usize, b: usize| -(i * (om[a] * xi[b] - om[b] * xi[a])) / r;
                let oom = [cw(0, 1), cw(0, 2), cw(1, 2)];
                let od = i * (om[0] * xi[0] + om[1] * xi[1] + om[2] * xi[2]) / r;
                (ua, oom, od)
            };
            let (ua0, oom0, od0) = to_amps(&u, &om);
            let (u1, om1) = full_green_apply(xi, t, u, om).unwrap();
            let (ua1, oom1, od1) = to_amps(&u1, &om1);

            let g = reduced_green_eval(r, t);
            let mut scale = 0.0f64;
            let mut err = 0.0f64;
            for e in 0..3 {
                let pa = ua0[e] * g[0][0] + oom0[e] * g[0][1];
                let pw = ua0[e] * g[1][0] + oom0[e] * g[1][1];
                err = err.max((pa - ua1[e]).norm()).max((pw - oom1[e]).norm());
                scale = scale.max(pa.norm()).max(pw.norm());
            }
            let pd = od0 * omega_d_multiplier(r, t);
            err = err.max((pd - od1).norm());
            assert!(err <= 1e-8 * scale.max(1.0), "ξ={xi:?} t={t}: err {err}");
        }
    }

    #[test]
    fn bound_scan_finite_and_positive_rho_required() {
        let rho = geomspace(0.1, 30.0, 40);
        let t = geomspace(0.01, 10.0, 40);
        for order in 0..=2 {
            let rep = scan_derivative_bounds(order, &rho, &t).unwrap();
            assert!(rep.sup.is_finite() && rep.sup > 0.0);
            assert_eq!(rep.samples, 1600);
        }
        assert!(scan_derivative_bounds(0, &[0.0, 1.0], &t).is_err());
        assert!(scan_derivative_bounds(3, &rho, &t).is_err());
    }
}
