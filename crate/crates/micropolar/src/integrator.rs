//! Time integration of the transformed system and reference schemes.
//!
//! The exponential schemes advance the transformed variables
//! `(u_A, ω_Ω, ω_d)` with the exact per-mode linear propagator, so only the
//! nonlinearity is approximated. A classical RK4 scheme on the primitive
//! projected system serves as an independent reference.

use crate::field::{AMatrixField, ScalarField, VectorField};
use crate::green::{self, ModeEigen};
use crate::grid::GridSpec;
use crate::lp::{self, besov_norm, BesovParams, ShellRange};
use crate::model::{
    energy, reconstruct_state, rhs_projected, transform, transformed_nonlinearity,
    PhysicalParams, State, TransformedState,
};
use crate::ops::{
    curl, divergence_residual, from_physical, l2_norm_sq, lambda_power, leray_project,
    lp_norm_summed, Lebesgue,
};
use crate::{par, Error, Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Time-stepping scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Exponential Euler on the transformed system.
    Etd1,
    /// Two-stage exponential Runge–Kutta on the transformed system.
    Etdrk2,
    /// Classical RK4 on the primitive projected system (reference).
    RefRk4,
}

impl Scheme {
    pub fn parse(text: &str) -> Result<Self> {
        match text.to_ascii_lowercase().as_str() {
            "etd1" => Ok(Self::Etd1),
            "etdrk2" => Ok(Self::Etdrk2),
            "ref_rk4" | "rk4" => Ok(Self::RefRk4),
            other => Err(Error::Config(format!("unknown scheme {other:?}"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Etd1 => write!(f, "etd1"),
            Self::Etdrk2 => write!(f, "etdrk2"),
            Self::RefRk4 => write!(f, "ref_rk4"),
        }
    }
}

/// Margin of the explicit RK4 real-axis stability interval.
const RK4_STABILITY: f64 = 2.78;

/// Stiffest linear rate on the grid: the damped-heat direction carries
/// `2|ξ|² + 2`. Dealiasing is applied per axis, so the retained corner
/// modes reach `|ξ|² = 3·ξ_cut²`, three times the on-axis cutoff.
pub fn max_linear_rate(grid: GridSpec) -> f64 {
    6.0 * grid.xi_cutoff().powi(2) + 2.0
}

/// Run parameters for [`run`].
#[derive(Clone, Copy, Debug)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    /// Record probes every this many steps (the initial and final states are
    /// always recorded).
    pub sample_stride: usize,
}

impl IntegratorConfig {
    pub fn validate(&self, grid: GridSpec, params: &PhysicalParams) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!(
                "t_end = {} must be positive",
                self.t_end
            )));
        }
        if self.sample_stride == 0 {
            return Err(Error::Config("sample_stride must be at least 1".into()));
        }
        let steps = self.t_end / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::Config(format!(
                "t_end = {} is not an integer number of dt = {} steps",
                self.t_end, self.dt
            )));
        }
        match self.scheme {
            Scheme::RefRk4 => {
                let rate = max_linear_rate(grid);
                if self.dt * rate > RK4_STABILITY {
                    return Err(Error::Config(format!(
                        "RK4 unstable: dt·λ_max = {:.3e} exceeds {RK4_STABILITY} \
                         (need dt ≤ {:.3e})",
                        self.dt * rate,
                        RK4_STABILITY / rate
                    )));
                }
            }
            Scheme::Etd1 | Scheme::Etdrk2 => {
                if !params.is_default() {
                    return Err(Error::Config(
                        "exponential schemes use the exact propagator of the \
                         default-coefficient system; use ref_rk4 for general \
                         coefficients"
                            .into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------

/// Families of divergence-free initial data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DataFamily {
    /// Smooth compactly-concentrated vortex: `u₀ = ∇×(0,0,ψ)` with a Gaussian
    /// stream function of width `L/16`, and an analogous micro-rotation.
    GaussianVortex,
    /// Shear layer oscillating at frequency `m·(2π/L)` in `x₃`:
    /// `u₀ = A sin(m·dk·x₃)(−∂₂φ, ∂₁φ, 0)` with a Gaussian profile `φ`.
    /// The amplitude is applied as a raw prefactor (no normalisation) so the
    /// norm's dependence on the oscillation frequency is preserved.
    Oscillatory { m: i64 },
    /// Random field supported on the plateau of dyadic shell `j`.
    ShellRandom { j: i32 },
    /// Random field spread over every retained mode with per-mode weight
    /// `|ξ|⁻²`, so the critical-norm shell profile is flat.
    MultiShell,
}

/// Critical regularity used to normalise initial-data amplitudes.
fn critical_besov() -> BesovParams {
    BesovParams::new(0.5, Lebesgue::P(2.0), Lebesgue::Inf)
}

/// Build divergence-free initial data of the requested family.
///
/// For every family except [`DataFamily::Oscillatory`] the pair is rescaled
/// so `‖u₀‖ + ‖ω₀‖ = amplitude` in the critical space `Ḃ^{1/2}_{2,∞}`; the
/// oscillatory family keeps `amplitude` as a raw prefactor.
pub fn make_initial_data(
    grid: GridSpec,
    family: DataFamily,
    amplitude: f64,
    seed: u64,
) -> Result<State> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::Config(format!(
            "amplitude = {amplitude} must be positive"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut u, mut omega) = match family {
        DataFamily::GaussianVortex => gaussian_vortex(grid)?,
        DataFamily::Oscillatory { m } => oscillatory(grid, m, amplitude)?,
        DataFamily::ShellRandom { j } => {
            let range = lp::shell_range(grid)?;
            if j < range.j_min || j > range.j_max {
                return Err(Error::Config(format!(
                    "shell {j} outside the grid's range {}..={}",
                    range.j_min, range.j_max
                )));
            }
            let lo = (4.0 / 3.0) * 2f64.powi(j);
            let hi = 2.0 * 2f64.powi(j);
            (
                random_annulus_vector(grid, lo, hi, &mut rng),
                random_annulus_vector(grid, lo, hi, &mut rng),
            )
        }
        DataFamily::MultiShell => (
            weighted_random_vector(grid, &mut rng),
            weighted_random_vector(grid, &mut rng),
        ),
    };
    u = leray_project(&u);
    for c in u.c.iter_mut().chain(omega.c.iter_mut()) {
        crate::ops::apply_dealias(c);
        c.symmetrize();
    }
    if !matches!(family, DataFamily::Oscillatory { .. }) {
        let crit =
            besov_norm(&u, critical_besov())? + besov_norm(&omega, critical_besov())?;
        if crit == 0.0 {
            return Err(Error::Numeric("initial data vanished".into()));
        }
        let scale = C64::new(amplitude / crit, 0.0);
        u = u.scaled(scale);
        omega = omega.scaled(scale);
    }
    Ok(State { u, omega, t: 0.0 })
}

/// Periodic Gaussian of width `w` centred at `c` (in box coordinates).
fn gaussian_scalar(grid: GridSpec, c: [f64; 3], w: f64) -> Result<ScalarField> {
    let n = grid.n;
    let h = grid.box_length / n as f64;
    let half = 0.5 * grid.box_length;
    let mut values = vec![C64::new(0.0, 0.0); grid.modes()];
    par::for_each_mut(&mut values, |flat, v| {
        let k = [flat / (n * n), (flat / n) % n, flat % n];
        let mut r2 = 0.0;
        for a in 0..3 {
            // nearest periodic image
            let mut d = k[a] as f64 * h - c[a];
            if d > half {
                d -= grid.box_length;
            }
            if d < -half {
                d += grid.box_length;
            }
            r2 += d * d;
        }
        *v = C64::new((-r2 / (2.0 * w * w)).exp(), 0.0);
    });
    let mut f = from_physical(grid, values, true)?;
    f.symmetrize();
    Ok(f)
}

/// Smooth periodic bump `Π_d (1 + cos(2π x_d / L)) / 2` centred mid-box.
/// Unlike a truncated Gaussian it is exactly periodic, so its spectrum is
/// exactly 27 modes (`|k_d| <= 1`) with no broadband kink tails — modulating
/// it keeps each oscillatory state inside one or two dyadic shells.
fn cosine_bump(grid: GridSpec) -> Result<ScalarField> {
    let n = grid.n;
    let h = 2.0 * std::f64::consts::PI / n as f64; // dk·dx = 2π/n
    let mid = 0.5 * n as f64;
    let mut values = vec![C64::new(0.0, 0.0); grid.modes()];
    par::for_each_mut(&mut values, |flat, v| {
        let k = [flat / (n * n), (flat / n) % n, flat % n];
        let mut prod = 1.0;
        for a in 0..3 {
            prod *= 0.5 * (1.0 + ((k[a] as f64 - mid) * h).cos());
        }
        *v = C64::new(prod, 0.0);
    });
    let mut f = from_physical(grid, values, true)?;
    f.symmetrize();
    Ok(f)
}

fn gaussian_vortex(grid: GridSpec) -> Result<(VectorField, VectorField)> {
    let l = grid.box_length;
    let w = l / 16.0;
    let psi_u = gaussian_scalar(grid, [l / 2.0, l / 2.0, l / 2.0], w)?;
    let psi_w = gaussian_scalar(grid, [l / 2.0 + l / 8.0, l / 2.0, l / 2.0], w)?;
    let zero = ScalarField::zeros(grid);
    let u = curl(&VectorField::new([zero.clone(), zero.clone(), psi_u])?);
    let omega = curl(&VectorField::new([psi_w, zero.clone(), zero])?);
    Ok((u, omega))
}

/// Oscillatory shear: multiply the divergence-free profile
/// `(−∂₂φ, ∂₁φ, 0)` by `sin(m·dk·x₃)`, realised as a spectral shift of the
/// profile by `±m` along the third axis. Shifting every component of a mode
/// together preserves exact divergence-freeness.
fn oscillatory(grid: GridSpec, m: i64, amplitude: f64) -> Result<(VectorField, VectorField)> {
    if m < 1 {
        return Err(Error::Config(format!(
            "oscillation index m = {m} must be at least 1"
        )));
    }
    // Exactly periodic full-box envelope: the slowest probed oscillation
    // still completes many periods across it, and the envelope's three-mode
    // spectrum keeps every modulated state shell-localized.
    let phi = cosine_bump(grid)?;
    let zero = ScalarField::zeros(grid);
    let profile = curl(&VectorField::new([zero.clone(), zero.clone(), phi.clone()])?);

    let half = (grid.n / 2) as i64;
    let mut u = VectorField::zeros(grid);
    for (src, dst) in profile.c.iter().zip(u.c.iter_mut()) {
        // sin(m·dk·x₃)·f has coefficients (f̂(k−m e₃) − f̂(k+m e₃))·A/(2i)
        let w = C64::new(0.0, -0.5 * amplitude); // A/(2i)
        for flat in 0..grid.modes() {
            let v = src.modes[flat];
            if v.norm_sqr() == 0.0 {
                continue;
            }
            let k = grid.wavevector(flat);
            for (sign, coef) in [(1i64, w), (-1i64, -w)] {
                let k3 = k[2] + sign * m;
                if k3 < -half || k3 >= half {
                    continue; // drop modes shifted out of the band
                }
                let idx = grid.flat_index([k[0], k[1], k3]);
                dst.modes[idx] += v * coef;
            }
        }
        dst.symmetrize();
    }
    // micro-rotation: the same profile modulated in quadrature, kept real
    let mut omega = VectorField::zeros(grid);
    for (src, dst) in profile.c.iter().zip(omega.c.iter_mut()) {
        let w = C64::new(0.5 * amplitude, 0.0); // A/2 for a cosine shift
        for flat in 0..grid.modes() {
            let v = src.modes[flat];
            if v.norm_sqr() == 0.0 {
                continue;
            }
            let k = grid.wavevector(flat);
            for sign in [1i64, -1i64] {
                let k3 = k[2] + sign * m;
                if k3 < -half || k3 >= half {
                    continue;
                }
                let idx = grid.flat_index([k[0], k[1], k3]);
                dst.modes[idx] += v * w;
            }
        }
        dst.symmetrize();
    }
    Ok((u, omega))
}

pub(crate) fn random_annulus_scalar<R: Rng>(
    grid: GridSpec,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> ScalarField {
    let mut f = ScalarField::zeros(grid);
    for flat in 0..grid.modes() {
        let r = grid.xi_norm_sq(flat).sqrt();
        if r < lo || r > hi || grid.is_aliased(grid.wavevector(flat)) {
            continue;
        }
        f.modes[flat] = standard_complex(rng);
    }
    f.reality = true;
    f.symmetrize();
    f
}

pub(crate) fn random_annulus_vector<R: Rng>(
    grid: GridSpec,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> VectorField {
    let c = [
        random_annulus_scalar(grid, lo, hi, rng),
        random_annulus_scalar(grid, lo, hi, rng),
        random_annulus_scalar(grid, lo, hi, rng),
    ];
    VectorField::new(c).expect("same grid by construction")
}

fn weighted_random_scalar<R: Rng>(grid: GridSpec, rng: &mut R) -> ScalarField {
    let mut f = ScalarField::zeros(grid);
    for flat in 0..grid.modes() {
        let r2 = grid.xi_norm_sq(flat);
        if r2 == 0.0 || grid.is_aliased(grid.wavevector(flat)) {
            continue;
        }
        f.modes[flat] = standard_complex(rng) / r2;
    }
    f.reality = true;
    f.symmetrize();
    f
}

fn weighted_random_vector<R: Rng>(grid: GridSpec, rng: &mut R) -> VectorField {
    let c = [
        weighted_random_scalar(grid, rng),
        weighted_random_scalar(grid, rng),
        weighted_random_scalar(grid, rng),
    ];
    VectorField::new(c).expect("same grid by construction")
}

/// Standard complex normal via Box–Muller.
fn standard_complex<R: Rng>(rng: &mut R) -> C64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (-2.0 * u1.ln()).sqrt();
    C64::new(r * u2.cos(), r * u2.sin())
}

// ---------------------------------------------------------------------------
// Probes
// ---------------------------------------------------------------------------

/// Which field a probe measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeField {
    Velocity,
    Spin,
}

impl ProbeField {
    fn tag(self) -> &'static str {
        match self {
            Self::Velocity => "u",
            Self::Spin => "w",
        }
    }

    fn pick(self, s: &State) -> &VectorField {
        match self {
            Self::Velocity => &s.u,
            Self::Spin => &s.omega,
        }
    }
}

/// Scalar diagnostic recorded along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProbeKind {
    /// Summed-component Lebesgue norm.
    Lp(Lebesgue),
    /// Besov norm with the given indices.
    Besov { s: f64, p: Lebesgue, q: Lebesgue },
    /// `‖Λ^order f‖_{L²}` (order ≤ 2).
    DerivL2 { order: u32 },
    /// Besov norm of `Λ^order f` (order ≤ 2).
    DerivBesov {
        order: u32,
        s: f64,
        p: Lebesgue,
        q: Lebesgue,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub field: ProbeField,
    pub kind: ProbeKind,
}

impl Probe {
    /// Column name used in CSV output.
    pub fn name(&self) -> String {
        let f = self.field.tag();
        match self.kind {
            ProbeKind::Lp(p) => format!("{f}_L{p}"),
            ProbeKind::Besov { s, p, q } => format!("{f}_B[{s};{p};{q}]"),
            ProbeKind::DerivL2 { order } => format!("{f}_D{order}_L2"),
            ProbeKind::DerivBesov { order, s, p, q } => {
                format!("{f}_D{order}_B[{s};{p};{q}]")
            }
        }
    }

    pub fn eval(&self, s: &State) -> Result<f64> {
        let v = self.field.pick(s);
        match self.kind {
            ProbeKind::Lp(p) => Ok(lp_norm_summed(v, p)),
            ProbeKind::Besov { s: sm, p, q } => besov_norm(v, BesovParams::new(sm, p, q)),
            ProbeKind::DerivL2 { order } => {
                if order > 2 {
                    return Err(Error::UnsupportedOrder(order as usize));
                }
                let mut acc = 0.0;
                for c in &v.c {
                    acc += l2_norm_sq(&lambda_power(c, order as f64)?);
                }
                Ok(acc.sqrt())
            }
            ProbeKind::DerivBesov { order, s, p, q } => {
                if order > 2 {
                    return Err(Error::UnsupportedOrder(order as usize));
                }
                let d = VectorField::new([
                    lambda_power(&v.c[0], order as f64)?,
                    lambda_power(&v.c[1], order as f64)?,
                    lambda_power(&v.c[2], order as f64)?,
                ])?;
                besov_norm(&d, BesovParams::new(s, p, q))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Trajectory records
// ---------------------------------------------------------------------------

/// One sampled instant of a trajectory.
#[derive(Clone, Debug)]
pub struct Record {
    pub t: f64,
    pub probes: Vec<f64>,
    pub energy: f64,
    pub div_residual: f64,
    /// Running value of `sup_j ∫₀ᵗ ‖Δ_j(∇×u)‖_∞ dτ` (trapezoid in time).
    pub continuation: f64,
}

/// Full output of a [`run`].
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub probe_names: Vec<String>,
    pub records: Vec<Record>,
    pub final_state: State,
}

/// Per-shell sup norms of the vorticity, used by the continuation monitor.
fn vorticity_shell_sups(s: &State, range: ShellRange) -> Vec<f64> {
    lp::shell_lp_norms(&curl(&s.u), Lebesgue::Inf, range)
}

struct ContinuationMonitor {
    range: ShellRange,
    acc: Vec<f64>,
    prev_t: f64,
    prev: Vec<f64>,
}

impl ContinuationMonitor {
    fn new(s: &State, range: ShellRange) -> Self {
        let prev = vorticity_shell_sups(s, range);
        Self {
            range,
            acc: vec![0.0; range.len()],
            prev_t: s.t,
            prev,
        }
    }

    /// Advance to the state's time and return the current sup over shells.
    fn update(&mut self, s: &State) -> f64 {
        let cur = vorticity_shell_sups(s, self.range);
        let dt = s.t - self.prev_t;
        for ((a, &p), &c) in self.acc.iter_mut().zip(&self.prev).zip(&cur) {
            *a += 0.5 * (p + c) * dt;
        }
        self.prev = cur;
        self.prev_t = s.t;
        self.acc.iter().copied().fold(0.0, f64::max)
    }

    /// Shell carrying the largest accumulated integral (blow-up attribution).
    fn worst_shell(&self) -> i32 {
        let mut best = self.range.j_min;
        let mut val = f64::NEG_INFINITY;
        for (off, &a) in self.acc.iter().enumerate() {
            if a > val || a.is_nan() {
                val = a;
                best = self.range.j_min + off as i32;
            }
        }
        best
    }
}

// ---------------------------------------------------------------------------
// Steps
// ---------------------------------------------------------------------------

/// Damped-heat rate carried by the `ω_d` component.
fn od_rate(rho2: f64) -> f64 {
    2.0 * rho2 + 2.0
}

/// `out := G(dt)·ts + W·n` on all transformed components, where `G` is the
/// exact propagator and `W` the given per-mode weight of the nonlinearity.
fn propagate_with_forcing(
    ts: &TransformedState,
    n: &(AMatrixField, AMatrixField, ScalarField),
    dt: f64,
    phi: fn(f64) -> f64,
) -> Result<TransformedState> {
    let one = C64::new(1.0, 0.0);
    let grid = ts.omega_d.grid;
    let mut out = ts.clone();
    green::apply_mode_matrix(&mut out.u_a, &mut out.omega_om, |rho| {
        ModeEigen::new(rho).semigroup(dt)
    });
    let mut f_ua = n.0.clone();
    let mut f_om = n.1.clone();
    green::apply_mode_matrix(&mut f_ua, &mut f_om, |rho| {
        ModeEigen::new(rho).apply_scalar_fn(|lam| dt * phi(lam * dt))
    });
    out.u_a.add_scaled(&f_ua, one)?;
    out.omega_om.add_scaled(&f_om, one)?;
    let forcing = &n.2.modes;
    par::for_each_mut(&mut out.omega_d.modes, |i, v| {
        let lam = od_rate(grid.xi_norm_sq(i));
        *v = *v * (-lam * dt).exp() + forcing[i] * (dt * phi(lam * dt));
    });
    out.t = ts.t + dt;
    Ok(out)
}

/// Add `W₂(dt)·d` to all components of `ts` in place.
fn add_phi2_correction(
    ts: &mut TransformedState,
    d: &(AMatrixField, AMatrixField, ScalarField),
    dt: f64,
) -> Result<()> {
    let one = C64::new(1.0, 0.0);
    let grid = ts.omega_d.grid;
    let mut c_ua = d.0.clone();
    let mut c_om = d.1.clone();
    green::apply_mode_matrix(&mut c_ua, &mut c_om, |rho| ModeEigen::new(rho).phi2_weight(dt));
    ts.u_a.add_scaled(&c_ua, one)?;
    ts.omega_om.add_scaled(&c_om, one)?;
    let inc = &d.2.modes;
    par::for_each_mut(&mut ts.omega_d.modes, |i, v| {
        let lam = od_rate(grid.xi_norm_sq(i));
        *v += inc[i] * (dt * green::phi2(lam * dt));
    });
    Ok(())
}

/// One exponential-Euler step.
pub fn etd1_step(ts: &TransformedState, s: &State, dt: f64) -> Result<TransformedState> {
    let n = transformed_nonlinearity(s)?;
    propagate_with_forcing(ts, &n, dt, green::phi1)
}

/// One two-stage exponential Runge–Kutta step.
pub fn etdrk2_step(ts: &TransformedState, s: &State, dt: f64) -> Result<TransformedState> {
    let n0 = transformed_nonlinearity(s)?;
    let mut stage = propagate_with_forcing(ts, &n0, dt, green::phi1)?;
    let s_stage = reconstruct_state(&stage)?;
    let n1 = transformed_nonlinearity(&s_stage)?;
    let d = (n1.0.sub(&n0.0)?, n1.1.sub(&n0.1)?, n1.2.sub(&n0.2)?);
    add_phi2_correction(&mut stage, &d, dt)?;
    Ok(stage)
}

fn state_axpy(base: &State, k: &(VectorField, VectorField), c: f64, t: f64) -> Result<State> {
    let cc = C64::new(c, 0.0);
    let mut u = base.u.clone();
    let mut omega = base.omega.clone();
    u.add_scaled(&k.0, cc)?;
    omega.add_scaled(&k.1, cc)?;
    Ok(State { u, omega, t })
}

/// One classical RK4 step on the primitive projected system.
pub fn rk4_step(s: &State, params: &PhysicalParams, dt: f64) -> Result<State> {
    let k1 = rhs_projected(s, params)?;
    let s2 = state_axpy(s, &k1, 0.5 * dt, s.t + 0.5 * dt)?;
    let k2 = rhs_projected(&s2, params)?;
    let s3 = state_axpy(s, &k2, 0.5 * dt, s.t + 0.5 * dt)?;
    let k3 = rhs_projected(&s3, params)?;
    let s4 = state_axpy(s, &k3, dt, s.t + dt)?;
    let k4 = rhs_projected(&s4, params)?;
    let mut out = state_axpy(s, &k1, dt / 6.0, s.t + dt)?;
    out.u.add_scaled(&k2.0, C64::new(dt / 3.0, 0.0))?;
    out.omega.add_scaled(&k2.1, C64::new(dt / 3.0, 0.0))?;
    out.u.add_scaled(&k3.0, C64::new(dt / 3.0, 0.0))?;
    out.omega.add_scaled(&k3.1, C64::new(dt / 3.0, 0.0))?;
    out.u.add_scaled(&k4.0, C64::new(dt / 6.0, 0.0))?;
    out.omega.add_scaled(&k4.1, C64::new(dt / 6.0, 0.0))?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

/// Integrate to `t_end`, sampling probes, energy, divergence residual and the
/// continuation monitor along the way. Fails with [`Error::BlowUp`] when a
/// field stops being finite.
pub fn run(
    initial: &State,
    params: &PhysicalParams,
    cfg: &IntegratorConfig,
    probes: &[Probe],
) -> Result<RunOutput> {
    let grid = initial.u.grid();
    cfg.validate(grid, params)?;
    let range = lp::shell_range(grid)?;
    let steps = cfg.steps();

    let probe_names: Vec<String> = probes.iter().map(Probe::name).collect();
    let mut records = Vec::new();
    let mut monitor = ContinuationMonitor::new(initial, range);

    let record =
        |s: &State, monitor: &mut ContinuationMonitor, records: &mut Vec<Record>| -> Result<()> {
            if s.u.has_non_finite() || s.omega.has_non_finite() {
                return Err(Error::BlowUp {
                    t: s.t,
                    shell: monitor.worst_shell(),
                });
            }
            let continuation = monitor.update(s);
            let mut values = Vec::with_capacity(probes.len());
            for p in probes {
                values.push(p.eval(s)?);
            }
            records.push(Record {
                t: s.t,
                probes: values,
                energy: energy(s),
                div_residual: divergence_residual(&s.u),
                continuation,
            });
            Ok(())
        };

    record(initial, &mut monitor, &mut records)?;

    let final_state = match cfg.scheme {
        Scheme::RefRk4 => {
            let mut s = initial.clone();
            for step in 1..=steps {
                s = rk4_step(&s, params, cfg.dt)?;
                s.t = step as f64 * cfg.dt; // avoid accumulated rounding
                if s.u.has_non_finite() || s.omega.has_non_finite() {
                    return Err(Error::BlowUp {
                        t: s.t,
                        shell: monitor.worst_shell(),
                    });
                }
                if step % cfg.sample_stride == 0 || step == steps {
                    record(&s, &mut monitor, &mut records)?;
                }
            }
            s
        }
        Scheme::Etd1 | Scheme::Etdrk2 => {
            let mut ts = transform(initial)?;
            for step in 1..=steps {
                let s = reconstruct_state(&ts)?;
                ts = match cfg.scheme {
                    Scheme::Etd1 => etd1_step(&ts, &s, cfg.dt)?,
                    _ => etdrk2_step(&ts, &s, cfg.dt)?,
                };
                ts.t = step as f64 * cfg.dt;
                if ts.u_a.has_non_finite() || ts.omega_om.has_non_finite() {
                    return Err(Error::BlowUp {
                        t: ts.t,
                        shell: monitor.worst_shell(),
                    });
                }
                if step % cfg.sample_stride == 0 || step == steps {
                    let s_now = reconstruct_state(&ts)?;
                    record(&s_now, &mut monitor, &mut records)?;
                }
            }
            reconstruct_state(&ts)?
        }
    };

    Ok(RunOutput {
        probe_names,
        records,
        final_state,
    })
}

/// Relative L² distance between the velocity/micro-rotation pairs of two
/// states (used to compare schemes).
pub fn state_distance(a: &State, b: &State) -> Result<f64> {
    let du = a.u.sub(&b.u)?;
    let dw = a.omega.sub(&b.omega)?;
    let num = (sq(&du) + sq(&dw)).sqrt();
    let den = (sq(&b.u) + sq(&b.omega)).sqrt();
    Ok(if den == 0.0 { num } else { num / den })
}

fn sq(v: &VectorField) -> f64 {
    v.c.iter().map(l2_norm_sq).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::apply_semigroups;
    use crate::ops::l2_norm_vec;

    const PI: f64 = std::f64::consts::PI;

    fn small_grid() -> GridSpec {
        GridSpec::new(16, 2.0 * PI).unwrap()
    }

    #[test]
    fn initial_data_families_are_divergence_free_and_normalised() {
        let grid = small_grid();
        for family in [
            DataFamily::GaussianVortex,
            DataFamily::Oscillatory { m: 2 },
            DataFamily::ShellRandom { j: 1 },
            DataFamily::MultiShell,
        ] {
            let s = make_initial_data(grid, family, 0.01, 7).unwrap();
            assert!(
                divergence_residual(&s.u) < 1e-10,
                "{family:?} divergence residual"
            );
            for c in s.u.c.iter().chain(s.omega.c.iter()) {
                assert!(c.reality_defect() < 1e-12, "{family:?} reality");
            }
            if !matches!(family, DataFamily::Oscillatory { .. }) {
                let crit = besov_norm(&s.u, critical_besov()).unwrap()
                    + besov_norm(&s.omega, critical_besov()).unwrap();
                assert!((crit - 0.01).abs() < 1e-12, "{family:?} amplitude {crit}");
            }
        }
    }

    #[test]
    fn oscillatory_data_concentrates_at_the_shifted_frequency() {
        let grid = small_grid();
        let m = 4;
        let s = make_initial_data(grid, DataFamily::Oscillatory { m }, 1.0, 0).unwrap();
        // energy-weighted mean |k₃| should sit near m
        let mut num = 0.0;
        let mut den = 0.0;
        for c in &s.u.c {
            for flat in 0..grid.modes() {
                let w = c.modes[flat].norm_sqr();
                num += w * grid.wavevector(flat)[2].abs() as f64;
                den += w;
            }
        }
        let mean = num / den;
        assert!(
            (mean - m as f64).abs() < 1.0,
            "mean |k₃| = {mean}, expected ≈ {m}"
        );
    }

    #[test]
    fn shell_random_data_is_shell_pure() {
        let grid = small_grid();
        let j = 2;
        let s = make_initial_data(grid, DataFamily::ShellRandom { j }, 0.5, 3).unwrap();
        let range = lp::shell_range(grid).unwrap();
        let norms = lp::shell_lp_norms(&s.u, Lebesgue::P(2.0), range);
        let total: f64 = norms.iter().map(|x| x * x).sum();
        // annulus [4/3·2^j, 2·2^j] meets shells j and j+1 only
        let kept: f64 = range
            .iter()
            .zip(&norms)
            .filter(|(jj, _)| *jj == j || *jj == j + 1)
            .map(|(_, x)| x * x)
            .sum();
        assert!(kept / total > 1.0 - 1e-12);
    }

    #[test]
    fn exponential_step_matches_exact_flow_for_tiny_data() {
        let grid = small_grid();
        let s0 = make_initial_data(grid, DataFamily::GaussianVortex, 1e-6, 0).unwrap();
        let ts0 = transform(&s0).unwrap();
        let dt = 0.1;
        let stepped = etd1_step(&ts0, &s0, dt).unwrap();
        let exact = apply_semigroups(&ts0, dt);
        let stepped_s = reconstruct_state(&stepped).unwrap();
        let exact_s = reconstruct_state(&exact).unwrap();
        // the nonlinearity is O(amplitude²), so the relative gap is O(amplitude)
        let rel = state_distance(&stepped_s, &exact_s).unwrap();
        assert!(rel < 1e-4, "relative gap {rel:.3e}");
    }

    #[test]
    fn etdrk2_converges_at_second_order_against_rk4_reference() {
        let grid = small_grid();
        let s0 = make_initial_data(grid, DataFamily::GaussianVortex, 0.5, 1).unwrap();
        let params = PhysicalParams::default();
        let t_end = 0.4;
        let reference = run(
            &s0,
            &params,
            &IntegratorConfig {
                scheme: Scheme::RefRk4,
                dt: t_end / 100.0,
                t_end,
                sample_stride: 100,
            },
            &[],
        )
        .unwrap()
        .final_state;

        let err_at = |dt: f64| {
            let out = run(
                &s0,
                &params,
                &IntegratorConfig {
                    scheme: Scheme::Etdrk2,
                    dt,
                    t_end,
                    sample_stride: 1000,
                },
                &[],
            )
            .unwrap();
            state_distance(&out.final_state, &reference).unwrap()
        };
        let e1 = err_at(0.05);
        let e2 = err_at(0.025);
        let order = (e1 / e2).log2();
        assert!(
            (1.6..=2.6).contains(&order),
            "observed order {order:.2} (errors {e1:.3e}, {e2:.3e})"
        );
    }

    #[test]
    fn etd1_is_first_order() {
        let grid = small_grid();
        let s0 = make_initial_data(grid, DataFamily::GaussianVortex, 0.5, 1).unwrap();
        let params = PhysicalParams::default();
        let t_end = 0.4;
        let reference = run(
            &s0,
            &params,
            &IntegratorConfig {
                scheme: Scheme::RefRk4,
                dt: t_end / 100.0,
                t_end,
                sample_stride: 100,
            },
            &[],
        )
        .unwrap()
        .final_state;
        let err_at = |dt: f64| {
            let out = run(
                &s0,
                &params,
                &IntegratorConfig {
                    scheme: Scheme::Etd1,
                    dt,
                    t_end,
                    sample_stride: 1000,
                },
                &[],
            )
            .unwrap();
            state_distance(&out.final_state, &reference).unwrap()
        };
        let order = (err_at(0.05) / err_at(0.025)).log2();
        assert!((0.7..=1.4).contains(&order), "observed order {order:.2}");
    }

    #[test]
    fn run_records_expected_samples_and_monotone_continuation() {
        let grid = small_grid();
        let s0 = make_initial_data(grid, DataFamily::MultiShell, 0.05, 11).unwrap();
        let probes = [
            Probe {
                field: ProbeField::Velocity,
                kind: ProbeKind::Lp(Lebesgue::P(2.0)),
            },
            Probe {
                field: ProbeField::Spin,
                kind: ProbeKind::Besov {
                    s: 0.5,
                    p: Lebesgue::P(2.0),
                    q: Lebesgue::Inf,
                },
            },
            Probe {
                field: ProbeField::Velocity,
                kind: ProbeKind::DerivL2 { order: 1 },
            },
        ];
        let out = run(
            &s0,
            &PhysicalParams::default(),
            &IntegratorConfig {
                scheme: Scheme::Etdrk2,
                dt: 0.1,
                t_end: 1.0,
                sample_stride: 2,
            },
            &probes,
        )
        .unwrap();
        assert_eq!(out.probe_names.len(), 3);
        assert_eq!(out.records.len(), 6); // t = 0, 0.2, ..., 1.0
        assert!((out.records.last().unwrap().t - 1.0).abs() < 1e-12);
        for w in out.records.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!(w[1].continuation >= w[0].continuation);
            assert!(w[1].energy <= w[0].energy * (1.0 + 1e-12), "energy grew");
        }
        for r in &out.records {
            assert!(r.div_residual < 1e-9);
            assert!(r.probes.iter().all(|x| x.is_finite()));
        }
        assert!(l2_norm_vec(&out.final_state.u) > 0.0);
    }

    #[test]
    fn rk4_guard_rejects_unstable_step() {
        let grid = GridSpec::new(64, 2.0 * PI).unwrap();
        let cfg = IntegratorConfig {
            scheme: Scheme::RefRk4,
            dt: 0.1,
            t_end: 1.0,
            sample_stride: 1,
        };
        assert!(cfg.validate(grid, &PhysicalParams::default()).is_err());
    }

    #[test]
    fn exponential_schemes_require_default_coefficients() {
        let grid = small_grid();
        let params = PhysicalParams {
            chi: 0.25,
            nu: 0.75,
            kappa: 1.0,
            mu: 1.0,
        };
        let cfg = IntegratorConfig {
            scheme: Scheme::Etdrk2,
            dt: 0.1,
            t_end: 1.0,
            sample_stride: 1,
        };
        assert!(cfg.validate(grid, &params).is_err());
        let rk = IntegratorConfig {
            scheme: Scheme::RefRk4,
            dt: 0.002,
            t_end: 0.01,
            sample_stride: 1,
        };
        assert!(rk.validate(grid, &params).is_ok());
    }

    #[test]
    fn scheme_parse_round_trip() {
        for s in [Scheme::Etd1, Scheme::Etdrk2, Scheme::RefRk4] {
            assert_eq!(Scheme::parse(&s.to_string()).unwrap(), s);
        }
        assert!(Scheme::parse("leapfrog").is_err());
    }
}
