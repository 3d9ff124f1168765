//! The micropolar system in primitive and transformed variables.
//!
//! Primitive (Leray-projected, default coefficients):
//! ```text
//!   ∂_t u = Δu − P(u·∇u) + ∇×ω
//!   ∂_t ω = Δω − u·∇ω − 2ω + ∇div ω + ∇×u
//! ```
//! Transformed variables: `u_A` is the antisymmetric matrix with entries
//! `(1,2) = u³, (1,3) = −u², (2,3) = u¹`; `ω` splits into its gradient part
//! `ω_d = Λ⁻¹div ω` and rotation part `ω_Ω = −Λ⁻¹curl ω` (matrix curl
//! `(curl z)^i_j = ∂_j z^i − ∂_i z^j`), with reconstruction
//! `ω = −Λ⁻¹∇ω_d + Λ⁻¹div ω_Ω`. The signs are fixed so that the matrix
//! identity `(∇×ω)_A = −curl ω` makes the transformed system
//! ```text
//!   ∂_t u_A  = Δu_A  + Λω_Ω − (P(u·∇u))_A
//!   ∂_t ω_Ω  = Δω_Ω − 2ω_Ω + Λu_A + Λ⁻¹curl(u·∇ω)
//!   ∂_t ω_d  = 2Δω_d − 2ω_d − Λ⁻¹div(u·∇ω)
//! ```
//! exactly equivalent to the primitive one.

use crate::field::{AMatrixField, ScalarField, VectorField};
use crate::ops::{
    convect, curl, curl_matrix, div_matrix, divergence, gradient, l2_norm_sq, l2_norm_vec,
    lambda_power, leray_project,
};
use crate::{par, Error, Result, C64};

/// Viscosity coefficients of the full system; the transformed path and the
/// Green matrices are only valid at the defaults `χ = ν = 1/2`, `κ = μ = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams {
    pub chi: f64,
    pub nu: f64,
    pub kappa: f64,
    pub mu: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self { chi: 0.5, nu: 0.5, kappa: 1.0, mu: 1.0 }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.chi >= 0.0 && self.nu >= 0.0 && self.kappa >= 0.0 && self.mu > 0.0) {
            return Err(Error::Config(format!(
                "viscosities must satisfy χ,ν,κ ≥ 0 and μ > 0 (got χ={} ν={} κ={} μ={})",
                self.chi, self.nu, self.kappa, self.mu
            )));
        }
        if self.chi + self.nu <= 0.0 {
            return Err(Error::Config("χ + ν must be positive".into()));
        }
        Ok(())
    }

    pub fn is_default(&self) -> bool {
        *self == Self::default()
    }
}

/// Primitive state `(u, ω)` at time `t`; `u` divergence-free.
#[derive(Clone, Debug)]
pub struct State {
    pub u: VectorField,
    pub omega: VectorField,
    pub t: f64,
}

/// Transformed state `(u_A, ω_Ω, ω_d)` at time `t`.
#[derive(Clone, Debug)]
pub struct TransformedState {
    pub u_a: AMatrixField,
    pub omega_om: AMatrixField,
    pub omega_d: ScalarField,
    pub t: f64,
}

/// `u ↦ u_A` with entries `(1,2) = u³, (1,3) = −u², (2,3) = u¹`.
pub fn to_antisymmetric(u: &VectorField) -> AMatrixField {
    AMatrixField {
        a12: u.c[2].clone(),
        a13: u.c[1].scaled(C64::new(-1.0, 0.0)),
        a23: u.c[0].clone(),
    }
}

pub fn from_antisymmetric(m: &AMatrixField) -> VectorField {
    VectorField {
        c: [m.a23.clone(), m.a13.scaled(C64::new(-1.0, 0.0)), m.a12.clone()],
    }
}

/// `ω ↦ (ω_d, ω_Ω) = (Λ⁻¹div ω, −Λ⁻¹curl ω)`; both parts zero-mode-free.
pub fn decompose_omega(omega: &VectorField) -> Result<(ScalarField, AMatrixField)> {
    let omega_d = lambda_power(&divergence(omega), -1.0)?;
    let cm = curl_matrix(omega);
    let neg = C64::new(-1.0, 0.0);
    let omega_om = AMatrixField {
        a12: lambda_power(&cm.a12, -1.0)?.scaled(neg),
        a13: lambda_power(&cm.a13, -1.0)?.scaled(neg),
        a23: lambda_power(&cm.a23, -1.0)?.scaled(neg),
    };
    Ok((omega_d, omega_om))
}

/// Inverse of [`decompose_omega`] off the zero mode:
/// `ω = −Λ⁻¹∇ω_d + Λ⁻¹div ω_Ω`.
pub fn reconstruct_omega(omega_d: &ScalarField, omega_om: &AMatrixField) -> Result<VectorField> {
    let grad_part = gradient(&lambda_power(omega_d, -1.0)?);
    let div_part = div_matrix(omega_om);
    let mut out = VectorField {
        c: [
            lambda_power(&div_part.c[0], -1.0)?,
            lambda_power(&div_part.c[1], -1.0)?,
            lambda_power(&div_part.c[2], -1.0)?,
        ],
    };
    out.add_scaled(&grad_part, C64::new(-1.0, 0.0))?;
    Ok(out)
}

pub fn transform(s: &State) -> Result<TransformedState> {
    let (omega_d, omega_om) = decompose_omega(&s.omega)?;
    Ok(TransformedState { u_a: to_antisymmetric(&s.u), omega_om, omega_d, t: s.t })
}

/// Rebuild the primitive state; the zero mode of `ω` is lost in the
/// transformed variables and comes back as zero.
pub fn reconstruct_state(ts: &TransformedState) -> Result<State> {
    Ok(State {
        u: from_antisymmetric(&ts.u_a),
        omega: reconstruct_omega(&ts.omega_d, &ts.omega_om)?,
        t: ts.t,
    })
}

fn laplacian(f: &ScalarField) -> ScalarField {
    let mut out = f.clone();
    let grid = f.grid;
    par::for_each_mut(&mut out.modes, |i, v| *v *= -grid.xi_norm_sq(i));
    out
}

fn laplacian_vec(v: &VectorField) -> VectorField {
    VectorField { c: [laplacian(&v.c[0]), laplacian(&v.c[1]), laplacian(&v.c[2])] }
}

fn laplacian_mat(m: &AMatrixField) -> AMatrixField {
    AMatrixField { a12: laplacian(&m.a12), a13: laplacian(&m.a13), a23: laplacian(&m.a23) }
}

fn lambda_mat(m: &AMatrixField, s: f64) -> Result<AMatrixField> {
    Ok(AMatrixField {
        a12: lambda_power(&m.a12, s)?,
        a13: lambda_power(&m.a13, s)?,
        a23: lambda_power(&m.a23, s)?,
    })
}

/// Tendencies of the Leray-projected system (general coefficients):
/// ```text
///   ∂_t u = (χ+ν)Δu − P(u·∇u) + 2χ∇×ω
///   ∂_t ω = μΔω − u·∇ω − 4χω + κ∇div ω + 2χ∇×u
/// ```
pub fn rhs_projected(s: &State, params: &PhysicalParams) -> Result<(VectorField, VectorField)> {
    params.validate()?;
    let one = C64::new(1.0, 0.0);
    let two_chi = C64::new(2.0 * params.chi, 0.0);

    let conv_u = leray_project(&convect(&s.u, &s.u)?);
    let conv_om = convect(&s.u, &s.omega)?;

    let mut du = laplacian_vec(&s.u).scaled(C64::new(params.chi + params.nu, 0.0));
    du.add_scaled(&conv_u, -one)?;
    du.add_scaled(&curl(&s.omega), two_chi)?;

    let mut dom = laplacian_vec(&s.omega).scaled(C64::new(params.mu, 0.0));
    dom.add_scaled(&conv_om, -one)?;
    dom.add_scaled(&s.omega, C64::new(-4.0 * params.chi, 0.0))?;
    dom.add_scaled(&gradient(&divergence(&s.omega)), C64::new(params.kappa, 0.0))?;
    dom.add_scaled(&curl(&s.u), two_chi)?;
    Ok((du, dom))
}

/// Nonlinear tendencies in transformed variables (default coefficients):
/// `(−(P(u·∇u))_A, Λ⁻¹curl(u·∇ω), −Λ⁻¹div(u·∇ω))`.
pub fn transformed_nonlinearity(
    s: &State,
) -> Result<(AMatrixField, AMatrixField, ScalarField)> {
    let neg = C64::new(-1.0, 0.0);
    let conv_u = leray_project(&convect(&s.u, &s.u)?);
    let conv_om = convect(&s.u, &s.omega)?;
    let n_ua = {
        let mut m = to_antisymmetric(&conv_u);
        m.a12 = m.a12.scaled(neg);
        m.a13 = m.a13.scaled(neg);
        m.a23 = m.a23.scaled(neg);
        m
    };
    let cm = curl_matrix(&conv_om);
    let n_om = AMatrixField {
        a12: lambda_power(&cm.a12, -1.0)?,
        a13: lambda_power(&cm.a13, -1.0)?,
        a23: lambda_power(&cm.a23, -1.0)?,
    };
    let n_od = lambda_power(&divergence(&conv_om), -1.0)?.scaled(neg);
    Ok((n_ua, n_om, n_od))
}

/// Linear tendencies in transformed variables (default coefficients).
pub fn transformed_linear(
    ts: &TransformedState,
) -> Result<(AMatrixField, AMatrixField, ScalarField)> {
    let one = C64::new(1.0, 0.0);
    let mut d_ua = laplacian_mat(&ts.u_a);
    d_ua.add_scaled(&lambda_mat(&ts.omega_om, 1.0)?, one)?;

    let mut d_om = laplacian_mat(&ts.omega_om);
    d_om.add_scaled(&ts.omega_om, C64::new(-2.0, 0.0))?;
    d_om.add_scaled(&lambda_mat(&ts.u_a, 1.0)?, one)?;

    let mut d_od = laplacian(&ts.omega_d).scaled(C64::new(2.0, 0.0));
    d_od.add_scaled(&ts.omega_d, C64::new(-2.0, 0.0))?;
    Ok((d_ua, d_om, d_od))
}

/// Full transformed tendencies. `ts` must be the transform of `s`
/// (checked; the pair carries the nonlinearity through `s`).
pub fn rhs_transformed(
    ts: &TransformedState,
    s: &State,
) -> Result<(AMatrixField, AMatrixField, ScalarField)> {
    check_consistent(ts, s)?;
    let one = C64::new(1.0, 0.0);
    let (mut d_ua, mut d_om, mut d_od) = transformed_linear(ts)?;
    let (n_ua, n_om, n_od) = transformed_nonlinearity(s)?;
    d_ua.add_scaled(&n_ua, one)?;
    d_om.add_scaled(&n_om, one)?;
    d_od.add_scaled(&n_od, one)?;
    Ok((d_ua, d_om, d_od))
}

/// Relative L² distance between `ts` and `transform(s)`.
pub fn consistency_defect(ts: &TransformedState, s: &State) -> Result<f64> {
    let ref_ts = transform(s)?;
    let scale = mat_l2(&ref_ts.u_a) + mat_l2(&ref_ts.omega_om) + l2_norm_sq(&ref_ts.omega_d).sqrt();
    let diff = mat_l2(&ts.u_a.sub(&ref_ts.u_a)?)
        + mat_l2(&ts.omega_om.sub(&ref_ts.omega_om)?)
        + l2_norm_sq(&ts.omega_d.sub(&ref_ts.omega_d)?).sqrt();
    Ok(if scale == 0.0 { diff } else { diff / scale })
}

fn check_consistent(ts: &TransformedState, s: &State) -> Result<()> {
    if (ts.t - s.t).abs() > 1e-12 * (1.0 + s.t.abs()) {
        return Err(Error::Config(format!(
            "transformed state at t = {} paired with primitive state at t = {}",
            ts.t, s.t
        )));
    }
    let defect = consistency_defect(ts, s)?;
    if defect > 1e-6 {
        return Err(Error::Config(format!(
            "transformed/primitive pair inconsistent (relative defect {defect:.3e})"
        )));
    }
    Ok(())
}

fn mat_l2(m: &AMatrixField) -> f64 {
    (l2_norm_sq(&m.a12) + l2_norm_sq(&m.a13) + l2_norm_sq(&m.a23)).sqrt()
}

/// Kinetic + micro-rotational energy `½(‖u‖²_{L²} + ‖ω‖²_{L²})`.
pub fn energy(s: &State) -> f64 {
    0.5 * (l2_norm_vec(&s.u).powi(2) + l2_norm_vec(&s.omega).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::ops::{divergence_residual, l2_norm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const PI: f64 = std::f64::consts::PI;

    fn grid() -> GridSpec {
        GridSpec::new(16, 2.0 * PI).unwrap()
    }

    fn random_state(seed: u64, amp: f64) -> State {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = leray_project(&VectorField::random_band_limited(grid(), 3, &mut rng))
            .scaled(C64::new(amp, 0.0));
        let omega = VectorField::random_band_limited(grid(), 3, &mut rng).scaled(C64::new(amp, 0.0));
        State { u, omega, t: 0.0 }
    }

    fn mat_err(a: &AMatrixField, b: &AMatrixField) -> f64 {
        mat_l2(&a.sub(b).unwrap())
    }

    #[test]
    fn antisymmetric_entries_and_norm_bookkeeping() {
        // constant u = (1, 0, 0) → entries (a12, a13, a23) = (0, 0, 1)
        let mut u = VectorField::zeros(grid());
        u.c[0].set_mode([0, 0, 0], C64::new(1.0, 0.0));
        let m = to_antisymmetric(&u);
        assert!(m.a12.is_zero() && m.a13.is_zero());
        assert!((m.a23.mode([0, 0, 0]) - C64::new(1.0, 0.0)).norm() < 1e-15);

        let s = random_state(1, 1.0);
        let m = to_antisymmetric(&s.u);
        let summed = crate::ops::lp_norm_summed(&m, crate::ops::Lebesgue::P(2.0));
        let direct: f64 = s.u.c.iter().map(l2_norm).sum();
        assert!((summed - 2.0 * direct).abs() < 1e-12 * summed);
        // round trip
        let back = from_antisymmetric(&m);
        assert!(l2_norm_vec(&back.sub(&s.u).unwrap()) < 1e-15 * l2_norm_vec(&s.u));
    }

    #[test]
    fn omega_split_round_trip_and_special_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // gradient field: ω_Ω = 0, ω_d = Λ⁻¹Δg = −Λg
        let g = ScalarField::random_band_limited(grid(), 3, &mut rng);
        let (od, oom) = decompose_omega(&gradient(&g)).unwrap();
        assert!(mat_l2(&oom) < 1e-12 * l2_norm(&od));
        let neg_lam_g = lambda_power(&g, 1.0).unwrap().scaled(C64::new(-1.0, 0.0));
        assert!(l2_norm(&od.sub(&neg_lam_g).unwrap()) < 1e-12 * l2_norm(&od));
        // divergence-free field: ω_d = 0
        let v = leray_project(&VectorField::random_band_limited(grid(), 3, &mut rng));
        let (od2, _) = decompose_omega(&v).unwrap();
        assert!(l2_norm(&od2) < 1e-12 * l2_norm_vec(&v));
        // round trip on random fields (zero mode dropped)
        for seed in 0..5 {
            let mut r = ChaCha8Rng::seed_from_u64(20 + seed);
            let mut w = VectorField::random_band_limited(grid(), 3, &mut r);
            for c in &mut w.c {
                c.modes[0] = C64::new(0.0, 0.0);
            }
            let (od, oom) = decompose_omega(&w).unwrap();
            let back = reconstruct_omega(&od, &oom).unwrap();
            let err = l2_norm_vec(&back.sub(&w).unwrap()) / l2_norm_vec(&w);
            assert!(err < 1e-10, "round trip err {err}");
        }
    }

    #[test]
    fn antisymmetrized_curl_sign() {
        // (∇×ω)_A = −curl ω as matrices
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let w = VectorField::random_band_limited(grid(), 3, &mut rng);
            let lhs = to_antisymmetric(&curl(&w));
            let rhs = curl_matrix(&w);
            let mut sum = lhs.clone();
            sum.add_scaled(&rhs, C64::new(1.0, 0.0)).unwrap();
            let scale = mat_l2(&rhs);
            assert!(mat_l2(&sum) < 1e-12 * scale, "σ must be −1");
        }
    }

    #[test]
    fn formulation_equivalence() {
        for seed in 0..20 {
            let s = random_state(100 + seed, 1e-2);
            let ts = transform(&s).unwrap();
            let (d_ua, d_om, d_od) = rhs_transformed(&ts, &s).unwrap();
            let (du, dom) = rhs_projected(&s, &PhysicalParams::default()).unwrap();
            let ref_ua = to_antisymmetric(&du);
            let (ref_od, ref_om) = decompose_omega(&dom).unwrap();
            let scale = mat_l2(&ref_ua) + mat_l2(&ref_om) + l2_norm(&ref_od);
            let err =
                mat_err(&d_ua, &ref_ua) + mat_err(&d_om, &ref_om) + l2_norm(&d_od.sub(&ref_od).unwrap());
            assert!(err < 1e-8 * scale, "equivalence err {}", err / scale);
        }
    }

    #[test]
    fn inconsistent_pair_rejected() {
        let s = random_state(3, 1e-2);
        let mut ts = transform(&s).unwrap();
        ts.u_a.a12.set_mode([1, 0, 0], C64::new(1.0, 0.0));
        assert!(rhs_transformed(&ts, &s).is_err());
    }

    #[test]
    fn xi_parallel_omega_decouples() {
        // u = 0, ω̂ ∥ ξ: dω/dt = −(2|ξ|² + 2)ω and ω_Ω stays zero
        let g = grid();
        let mut omega = VectorField::zeros(g);
        // ξ = (0, 2, 0), ω̂ = ξ-direction
        omega.c[1].set_mode([0, 2, 0], C64::new(0.0, 0.5));
        let s = State { u: VectorField::zeros(g), omega: omega.clone(), t: 0.0 };
        let (_, dom) = rhs_projected(&s, &PhysicalParams::default()).unwrap();
        let expect = omega.scaled(C64::new(-(2.0 * 4.0 + 2.0), 0.0));
        assert!(l2_norm_vec(&dom.sub(&expect).unwrap()) < 1e-12 * l2_norm_vec(&expect));
        let (_, oom) = decompose_omega(&omega).unwrap();
        assert!(mat_l2(&oom) < 1e-14);
        // and the transformed scalar obeys the damped-heat multiplier
        let ts = transform(&s).unwrap();
        let (_, _, d_od) = rhs_transformed(&ts, &s).unwrap();
        let expect_od = ts.omega_d.scaled(C64::new(-(2.0 * 4.0 + 2.0), 0.0));
        assert!(l2_norm(&d_od.sub(&expect_od).unwrap()) < 1e-12 * l2_norm(&expect_od));
    }

    #[test]
    fn tendencies_preserve_divergence_and_reality() {
        let s = random_state(42, 1e-1);
        assert!(divergence_residual(&s.u) < 1e-12);
        let (du, dom) = rhs_projected(&s, &PhysicalParams::default()).unwrap();
        assert!(divergence_residual(&du) < 1e-10);
        for c in du.c.iter().chain(dom.c.iter()) {
            assert!(c.reality_defect() < 1e-12);
        }
    }

    #[test]
    fn energy_parseval_example() {
        let g = grid();
        let mut u = VectorField::zeros(g);
        // real single mode: cos(2π·k·x/L) has coefficients ½ at ±k
        u.c[0].set_mode([1, 0, 0], C64::new(0.5, 0.0));
        let s = State { u, omega: VectorField::zeros(g), t: 0.0 };
        // ‖cos‖² = L³/2 → energy = L³/4
        let expect = g.volume() / 4.0;
        assert!((energy(&s) - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn general_params_reduce_to_default() {
        let s = random_state(77, 1e-2);
        let p1 = PhysicalParams::default();
        let p2 = PhysicalParams { chi: 0.5, nu: 0.5, kappa: 1.0, mu: 1.0 };
        let (a1, b1) = rhs_projected(&s, &p1).unwrap();
        let (a2, b2) = rhs_projected(&s, &p2).unwrap();
        assert!(l2_norm_vec(&a1.sub(&a2).unwrap()) == 0.0);
        assert!(l2_norm_vec(&b1.sub(&b2).unwrap()) == 0.0);
        assert!(PhysicalParams { chi: 0.0, nu: 0.0, kappa: 1.0, mu: 1.0 }.validate().is_err());
        assert!(PhysicalParams { chi: 0.5, nu: 0.5, kappa: 1.0, mu: 0.0 }.validate().is_err());
    }
}
