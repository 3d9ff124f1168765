//! Verification suites binding every quantitative estimate to a measured
//! number and a verdict.
//!
//! Three suites cover the analysis toolbox (dyadic decomposition, norm
//! inequalities), the per-mode propagators (closed form, derivative bounds,
//! low-frequency smoothing), and the nonlinear dynamics (boundedness, decay,
//! oscillation scaling). Constants the theory leaves unspecified are fitted
//! and tested for stability across scales, never against hardcoded targets.

use crate::field::{ScalarField, VectorField};
use crate::green::{
    full_green_apply, geomspace, omega_d_multiplier, reduced_green_eval,
    reduced_green_shifted, scan_derivative_bounds, ModeEigen,
};
use crate::grid::GridSpec;
use crate::integrator::{
    make_initial_data, random_annulus_scalar, random_annulus_vector, DataFamily,
    IntegratorConfig, Probe, ProbeField, ProbeKind, Scheme,
};
use crate::lp::{
    besov_norm, bony_decompose, chemin_lerner_norm, project_shell, shell_range,
    BesovParams, TimeSeries,
};
use crate::model::{reconstruct_state, transform, PhysicalParams};
use crate::ops::{
    dealiased_product, derivative, l2_norm, lp_norm, lp_norm_summed, to_physical, Lebesgue,
};
use crate::{par, Error, Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

// ---------------------------------------------------------------------------
// Report types
// ---------------------------------------------------------------------------

/// Outcome of one check. `Info` rows report measured quantities without a
/// pass/fail gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Info,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub anchor: String,
    pub measured: Value,
    pub tolerance: String,
    pub verdict: Verdict,
}

impl Check {
    fn gate(anchor: &str, measured: Value, tolerance: &str, ok: bool) -> Self {
        Self {
            anchor: anchor.to_string(),
            measured,
            tolerance: tolerance.to_string(),
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        }
    }

    fn info(anchor: &str, measured: Value, note: &str) -> Self {
        Self {
            anchor: anchor.to_string(),
            measured,
            tolerance: note.to_string(),
            verdict: Verdict::Info,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportEnv {
    pub description: String,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub env: ReportEnv,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict != Verdict::Fail)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }

    /// First check with the given anchor, if any.
    pub fn find(&self, anchor: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.anchor == anchor)
    }
}

// ---------------------------------------------------------------------------
// Numeric helpers
// ---------------------------------------------------------------------------

/// Least-squares line through `(xs, ys)`: returns `(slope, intercept)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn mean(vals: &[f64]) -> f64 {
    vals.iter().sum::<f64>() / vals.len() as f64
}

/// Largest relative deviation from the mean: `max_i |v_i − v̄| / |v̄|`.
fn spread_from_mean(vals: &[f64]) -> f64 {
    let m = mean(vals);
    vals.iter()
        .map(|v| (v - m).abs())
        .fold(0.0, f64::max)
        / m.abs()
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// `L^p` norm straight from collocation values (lets several exponents share
/// one inverse transform).
fn lp_of_phys(phys: &[C64], grid: GridSpec, p: Lebesgue) -> f64 {
    match p {
        Lebesgue::P(pv) => {
            let s = par::sum_indexed(phys.len(), |i| phys[i].norm().powf(pv));
            (grid.cell_volume() * s).powf(1.0 / pv)
        }
        Lebesgue::Inf => par::max_indexed(phys.len(), |i| phys[i].norm()),
    }
}

fn random_mean_free(grid: GridSpec, kmax: i64, rng: &mut ChaCha8Rng) -> ScalarField {
    let mut f = ScalarField::random_band_limited(grid, kmax, rng);
    f.modes[0] = C64::new(0.0, 0.0);
    f
}

/// Three mid-range shells of the grid, used wherever a scale-stability
/// protocol needs a shell triple away from the truncation edges.
fn mid_shells(grid: GridSpec) -> Result<[i32; 3]> {
    let range = shell_range(grid)?;
    if range.len() < 5 {
        return Err(Error::EmptyShellRange);
    }
    let mid = range.j_min + (range.len() as i32) / 2;
    Ok([mid - 1, mid, mid + 1])
}

fn plateau(j: i32) -> (f64, f64) {
    ((4.0 / 3.0) * 2f64.powi(j), 2.0 * 2f64.powi(j))
}

// ---------------------------------------------------------------------------
// Reduced-propagator ODE oracle
// ---------------------------------------------------------------------------

/// Relative error of the closed-form reduced propagator at `(ρ, t)` against a
/// fine-step RK4 integration of the per-mode system. Both sides carry the
/// stabilising factor `e^{ρ²t}`, so the comparison never underflows: the
/// oracle integrates `w' = −(Ã − ρ²I)w` and the closed form is evaluated in
/// the same shifted gauge.
pub fn reduced_ode_oracle_error(rho: f64, t: f64) -> f64 {
    // shifted generator [[0, −ρ], [−ρ, 2]]; growth rate ≤ √(1+ρ²) − 1
    let rate = (1.0 + rho * rho).sqrt() + 1.0;
    let steps = 400 + (200.0 * rate * t).ceil() as usize;
    let dt = t / steps as f64;
    let rhs = |w: [f64; 2]| [rho * w[1], rho * w[0] - 2.0 * w[1]];
    let mut cols = [[1.0, 0.0], [0.0, 1.0]];
    for col in cols.iter_mut() {
        let mut w = *col;
        for _ in 0..steps {
            let k1 = rhs(w);
            let k2 = rhs([w[0] + 0.5 * dt * k1[0], w[1] + 0.5 * dt * k1[1]]);
            let k3 = rhs([w[0] + 0.5 * dt * k2[0], w[1] + 0.5 * dt * k2[1]]);
            let k4 = rhs([w[0] + dt * k3[0], w[1] + dt * k3[1]]);
            w[0] += dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            w[1] += dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        }
        *col = w;
    }
    let g = reduced_green_shifted(rho, t, rho * rho);
    let mut err = 0.0f64;
    let mut scale = 0.0f64;
    for (c, col) in cols.iter().enumerate() {
        for r in 0..2 {
            err = err.max((g[r][c] - col[r]).abs());
            scale = scale.max(col[r].abs());
        }
    }
    err / scale.max(1.0)
}

/// Relative error of the 6×6 propagator against the reduced one at a single
/// mode, compared through the per-mode change of variables.
pub fn full_vs_reduced_error(xi: [f64; 3], t: f64, mut u: [C64; 3], om: [C64; 3]) -> Result<f64> {
    let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    let r = r2.sqrt();
    // the reduced picture represents only divergence-free velocities
    let kd = (u[0] * xi[0] + u[1] * xi[1] + u[2] * xi[2]) / r2;
    for d in 0..3 {
        u[d] -= kd * xi[d];
    }
    let to_amps = |u: &[C64; 3], om: &[C64; 3]| {
        let i = C64::new(0.0, 1.0);
        let ua = [u[2], -u[1], u[0]];
        let cw = |a: usize, b: usize| -(i * (om[a] * xi[b] - om[b] * xi[a])) / r;
        let oom = [cw(0, 1), cw(0, 2), cw(1, 2)];
        let od = i * (om[0] * xi[0] + om[1] * xi[1] + om[2] * xi[2]) / r;
        (ua, oom, od)
    };
    let (ua0, oom0, od0) = to_amps(&u, &om);
    let (u1, om1) = full_green_apply(xi, t, u, om)?;
    let (ua1, oom1, od1) = to_amps(&u1, &om1);
    let g = reduced_green_eval(r, t);
    let mut err = 0.0f64;
    let mut scale = 0.0f64;
    for e in 0..3 {
        let pa = ua0[e] * g[0][0] + oom0[e] * g[0][1];
        let pw = ua0[e] * g[1][0] + oom0[e] * g[1][1];
        err = err.max((pa - ua1[e]).norm()).max((pw - oom1[e]).norm());
        scale = scale.max(pa.norm()).max(pw.norm());
    }
    let pd = od0 * omega_d_multiplier(r, t);
    err = err.max((pd - od1).norm());
    Ok(err / scale.max(1.0))
}

// ---------------------------------------------------------------------------
// Analysis suite
// ---------------------------------------------------------------------------

/// Toolbox suite: partition of unity, shell orthogonality, recomposition,
/// Bernstein (direct and reverse), shell Poincaré, interpolation, product
/// laws, paraproducts with the Bony identity, and heat maximal regularity.
pub fn verify_analysis_suite(grid: GridSpec, seed: u64) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let range = shell_range(grid)?;
    let shells = mid_shells(grid)?;
    let mut checks = Vec::new();

    // partition of unity over the telescoped band
    let band_lo = (4.0 / 3.0) * 2f64.powi(range.j_min);
    let band_hi = 2f64.powi(range.j_max + 1);
    let defect = par::max_indexed(grid.modes(), |i| {
        let r = grid.xi_norm_sq(i).sqrt();
        if r < band_lo || r > band_hi {
            return 0.0;
        }
        let s: f64 = range.iter().map(|j| crate::lp::phi(r / 2f64.powi(j))).sum();
        (s - 1.0).abs()
    });
    checks.push(Check::gate(
        "partition_of_unity",
        json!(defect),
        "max defect <= 1e-8 on the resolved band",
        defect <= 1e-8,
    ));

    // orthogonality of separated shells
    let f = random_mean_free(grid, (grid.dealias_limit() as i64).max(2), &mut rng);
    let f_norm = l2_norm(&f).max(1e-300);
    let mut ortho = 0.0f64;
    for (j, k) in [
        (shells[0], shells[0] + 2),
        (shells[0], shells[2] + 1),
        (range.j_min, range.j_min + 3),
    ] {
        let d = project_shell(&project_shell(&f, j), k);
        ortho = ortho.max(l2_norm(&d) / f_norm);
    }
    checks.push(Check::gate(
        "shell_orthogonality",
        json!(ortho),
        "‖Δ_jΔ_k f‖/‖f‖ <= 1e-12 for |j−k| >= 2",
        ortho <= 1e-12,
    ));

    // recomposition on the interior band
    {
        let mut g = f.clone();
        par::for_each_mut(&mut g.modes, |i, v| {
            let r = grid.xi_norm_sq(i).sqrt();
            if r < band_lo || r > band_hi {
                *v = C64::new(0.0, 0.0);
            }
        });
        let mut sum = ScalarField::zeros(grid);
        for j in range.iter() {
            sum.add_scaled(&project_shell(&g, j), C64::new(1.0, 0.0))?;
        }
        let rel = l2_norm(&sum.sub(&g)?) / l2_norm(&g).max(1e-300);
        checks.push(Check::gate(
            "shell_recomposition",
            json!(rel),
            "‖Σ_j Δ_j f − f‖/‖f‖ <= 1e-8 for band-interior f",
            rel <= 1e-8,
        ));
    }

    checks.extend(bernstein_checks(grid, shells)?);
    checks.push(poincare_check(grid, shells, &mut rng)?);
    checks.push(interpolation_check(grid, &mut rng)?);
    checks.push(product_law_check(grid, shells)?);
    checks.extend(paraproduct_checks(grid, &mut rng)?);
    checks.extend(heat_regularity_checks(grid, shells, &mut rng));

    Ok(VerificationReport {
        suite: "analysis".into(),
        checks,
        env: ReportEnv {
            description: format!("n = {}, L = {:.6}", grid.n, grid.box_length),
            seed,
        },
    })
}

const BERNSTEIN_FIELDS: usize = 3;
const LP_SET: [Lebesgue; 3] = [Lebesgue::P(2.0), Lebesgue::P(4.0), Lebesgue::Inf];

fn inv(p: Lebesgue) -> f64 {
    match p {
        Lebesgue::P(v) => 1.0 / v,
        Lebesgue::Inf => 0.0,
    }
}

/// A deterministic wave packet: a Gaussian spectral blob of width `0.4·2^j`
/// centred at radius `(5/3)·2^j` along `dir`. The family is exactly
/// self-similar across shells, so it saturates both directions of the
/// Bernstein inequalities with a scale-independent constant; broadband random
/// fields do not (their `L^p → L^q` ratios are governed by Gaussian moment
/// universality rather than by concentration, and drift with the shell).
fn wave_packet(grid: GridSpec, j: i32, dir: [f64; 3]) -> ScalarField {
    let scale = 2f64.powi(j);
    let r0 = 5.0 / 3.0 * scale;
    let sig = 0.4 * scale;
    let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    let c = [dir[0] / norm * r0, dir[1] / norm * r0, dir[2] / norm * r0];
    let mut f = ScalarField::zeros(grid);
    for flat in 0..grid.modes() {
        if grid.is_aliased(grid.wavevector(flat)) {
            continue;
        }
        let xi = grid.xi(flat);
        let d2 = |s: f64| -> f64 {
            let v = [xi[0] - s * c[0], xi[1] - s * c[1], xi[2] - s * c[2]];
            v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
        };
        let w = (-d2(1.0) / (2.0 * sig * sig)).exp() + (-d2(-1.0) / (2.0 * sig * sig)).exp();
        if w > 1e-14 {
            f.modes[flat] = C64::new(w, 0.0);
        }
    }
    f.reality = true;
    f
}

fn bernstein_checks(grid: GridSpec, shells: [i32; 3]) -> Result<Vec<Check>> {
    let gammas: [[usize; 3]; 3] = [[0, 0, 0], [1, 0, 0], [1, 1, 0]];
    // per shell, the mean over fields of the direct-Bernstein ratio, indexed
    // by (gamma, p, q); and the reverse ratio indexed by (order, p)
    let mut direct: Vec<Vec<f64>> = Vec::new();
    let mut reverse: Vec<Vec<f64>> = Vec::new();
    let order2: [[usize; 3]; 6] = [
        [2, 0, 0],
        [0, 2, 0],
        [0, 0, 2],
        [1, 1, 0],
        [1, 0, 1],
        [0, 1, 1],
    ];
    let order1: [[usize; 3]; 3] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];

    let dirs: [[f64; 3]; BERNSTEIN_FIELDS] = [[2.0, 1.0, 1.0], [1.0, 2.0, -1.0], [-1.0, 1.0, 2.0]];
    for &j in &shells {
        let mut dir_acc = vec![0.0; gammas.len() * LP_SET.len() * LP_SET.len()];
        let mut rev_acc = vec![0.0; 2 * LP_SET.len()];
        for dir in dirs {
            let f = wave_packet(grid, j, dir);
            let phys = to_physical(&f);
            let base: Vec<f64> = LP_SET.iter().map(|&p| lp_of_phys(&phys, grid, p)).collect();

            for (gi, gamma) in gammas.iter().enumerate() {
                let order: usize = gamma.iter().sum();
                let dphys = to_physical(&derivative(&f, *gamma)?);
                for (pi, &p) in LP_SET.iter().enumerate() {
                    for (qi, &q) in LP_SET.iter().enumerate() {
                        if inv(p) < inv(q) {
                            continue; // Bernstein needs p <= q
                        }
                        let dq = lp_of_phys(&dphys, grid, q);
                        let weight =
                            2f64.powi(j).powf(order as f64 + 3.0 * (inv(p) - inv(q)));
                        dir_acc[(gi * LP_SET.len() + pi) * LP_SET.len() + qi] +=
                            dq / (weight * base[pi]);
                    }
                }
            }

            for (oi, betas) in [&order1[..], &order2[..]].iter().enumerate() {
                let order = oi + 1;
                let mut sup: Vec<f64> = vec![0.0; LP_SET.len()];
                for beta in betas.iter() {
                    let bphys = to_physical(&derivative(&f, *beta)?);
                    for (pi, &p) in LP_SET.iter().enumerate() {
                        sup[pi] = sup[pi].max(lp_of_phys(&bphys, grid, p));
                    }
                }
                for (pi, s) in sup.iter().enumerate() {
                    rev_acc[oi * LP_SET.len() + pi] +=
                        2f64.powi(j).powi(order as i32) * base[pi] / s;
                }
            }
        }
        direct.push(dir_acc.iter().map(|v| v / BERNSTEIN_FIELDS as f64).collect());
        reverse.push(rev_acc.iter().map(|v| v / BERNSTEIN_FIELDS as f64).collect());
    }

    let worst = |per_shell: &[Vec<f64>]| -> f64 {
        let combos = per_shell[0].len();
        (0..combos)
            .map(|c| {
                let vals: Vec<f64> = per_shell.iter().map(|row| row[c]).collect();
                if vals.iter().all(|v| *v == 0.0) {
                    0.0 // skipped (p > q) slots
                } else {
                    spread_from_mean(&vals)
                }
            })
            .fold(0.0, f64::max)
    };
    let dir_spread = worst(&direct);
    let rev_spread = worst(&reverse);
    Ok(vec![
        Check::gate(
            "bernstein_constant_stability",
            json!({"max_shell_spread": dir_spread, "shells": shells.to_vec()}),
            "fitted constant varies <= 20% across shells, all (p,q,|γ|<=2)",
            dir_spread <= 0.20,
        ),
        Check::gate(
            "reverse_bernstein_constant_stability",
            json!({"max_shell_spread": rev_spread, "shells": shells.to_vec()}),
            "fitted constant varies <= 20% across shells, |γ| in {1,2}",
            rev_spread <= 0.20,
        ),
    ])
}

fn poincare_check(grid: GridSpec, shells: [i32; 3], rng: &mut ChaCha8Rng) -> Result<Check> {
    let ps = [2.0, 4.0];
    let mut per_shell: Vec<Vec<f64>> = Vec::new();
    for &j in &shells {
        let (lo, hi) = plateau(j);
        let mut acc = vec![0.0; ps.len()];
        for _ in 0..BERNSTEIN_FIELDS {
            let f = random_annulus_scalar(grid, lo, hi, rng);
            let phys = to_physical(&f);
            let mut lap = f.clone();
            par::for_each_mut(&mut lap.modes, |i, v| {
                *v *= grid.xi_norm_sq(i);
            });
            let lap_phys = to_physical(&lap);
            for (pi, &p) in ps.iter().enumerate() {
                let num = par::sum_indexed(phys.len(), |i| {
                    lap_phys[i].re * phys[i].re.abs().powf(p - 2.0) * phys[i].re
                });
                let den = par::sum_indexed(phys.len(), |i| phys[i].re.abs().powf(p));
                acc[pi] += num / (4f64.powi(j) * den);
            }
        }
        per_shell.push(acc.iter().map(|v| v / BERNSTEIN_FIELDS as f64).collect());
    }
    let mut worst = 0.0f64;
    let mut min_c = f64::INFINITY;
    for pi in 0..ps.len() {
        let vals: Vec<f64> = per_shell.iter().map(|row| row[pi]).collect();
        worst = worst.max(spread_from_mean(&vals));
        min_c = min_c.min(vals.iter().fold(f64::INFINITY, |a, &b| a.min(b)));
    }
    Ok(Check::gate(
        "shell_poincare_stability",
        json!({"max_shell_spread": worst, "min_constant": min_c}),
        "c > 0 and varies <= 20% across shells, p in {2,4}",
        min_c > 0.0 && worst <= 0.20,
    ))
}

fn interpolation_check(grid: GridSpec, rng: &mut ChaCha8Rng) -> Result<Check> {
    let (s1, s2) = (-0.5, 1.0);
    let p2 = Lebesgue::P(2.0);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let f = random_mean_free(grid, (grid.dealias_limit() as i64).max(2), rng);
        let n1 = besov_norm(&f, BesovParams::new(s1, p2, Lebesgue::Inf))?;
        let n2 = besov_norm(&f, BesovParams::new(s2, p2, Lebesgue::Inf))?;
        for theta in [0.25, 0.5, 0.75] {
            let s = theta * s1 + (1.0 - theta) * s2;
            let nmid = besov_norm(&f, BesovParams::new(s, p2, Lebesgue::Inf))?;
            worst = worst.max(nmid / (n1.powf(theta) * n2.powf(1.0 - theta)));
        }
    }
    Ok(Check::gate(
        "besov_interpolation",
        json!(worst),
        "‖f‖_{θs₁+(1−θ)s₂} <= ‖f‖_{s₁}^θ ‖f‖_{s₂}^{1−θ}, ratio <= 1 + 1e-10",
        worst <= 1.0 + 1e-10,
    ))
}

fn product_law_check(grid: GridSpec, shells: [i32; 3]) -> Result<Check> {
    let (s1, s2) = (0.75, 0.75);
    let p2 = Lebesgue::P(2.0);
    let target = s1 + s2 - 1.5; // s₁ + s₂ − 3/p at p = 2
    // co-located wave packets saturate the law and are exactly self-similar;
    // broadband random shell fields dilute the product by a 2^(−3j/2) volume
    // factor and cannot exhibit a scale-stable constant
    let pairs: [([f64; 3], [f64; 3]); 2] = [
        ([2.0, 1.0, 1.0], [1.0, 2.0, -1.0]),
        ([-1.0, 1.0, 2.0], [2.0, -1.0, 1.0]),
    ];
    let mut per_shell = Vec::new();
    for &j in &shells {
        let mut acc = 0.0;
        for (d1, d2) in pairs {
            let f = wave_packet(grid, j, d1);
            let g = wave_packet(grid, j, d2);
            let prod = dealiased_product(&f, &g)?;
            let num = besov_norm(&prod, BesovParams::new(target, p2, Lebesgue::Inf))?;
            let den = besov_norm(&f, BesovParams::new(s1, p2, Lebesgue::Inf))?
                * besov_norm(&g, BesovParams::new(s2, p2, Lebesgue::Inf))?;
            acc += num / den;
        }
        per_shell.push(acc / pairs.len() as f64);
    }
    let spread = spread_from_mean(&per_shell);
    Ok(Check::gate(
        "product_law_constant_stability",
        json!({"max_shell_spread": spread, "constants": per_shell}),
        "product-law constant varies <= 20% across shells",
        spread <= 0.20,
    ))
}

fn paraproduct_checks(grid: GridSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let p2 = Lebesgue::P(2.0);
    let kmax = ((grid.dealias_limit() / 2.0) as i64).max(2);
    let mut identity = 0.0f64;
    let mut c_t = 0.0f64;
    let mut c_r = 0.0f64;
    for _ in 0..2 {
        let f = random_mean_free(grid, kmax, rng);
        let g = random_mean_free(grid, kmax, rng);
        let (tfg, tgf, rem) = bony_decompose(&f, &g)?;
        let mut sum = tfg.clone();
        sum.add_scaled(&tgf, C64::new(1.0, 0.0))?;
        sum.add_scaled(&rem, C64::new(1.0, 0.0))?;
        let prod = dealiased_product(&f, &g)?;
        identity = identity
            .max(l2_norm(&sum.sub(&prod)?) / l2_norm(&prod).max(1e-300));
        let s = 0.5;
        c_t = c_t.max(
            besov_norm(&tfg, BesovParams::new(s, p2, Lebesgue::Inf))?
                / (lp_norm(&f, Lebesgue::Inf)
                    * besov_norm(&g, BesovParams::new(s, p2, Lebesgue::Inf))?),
        );
        c_r = c_r.max(
            besov_norm(&rem, BesovParams::new(0.0, p2, Lebesgue::Inf))?
                / (besov_norm(&f, BesovParams::new(0.75, p2, Lebesgue::Inf))?
                    * besov_norm(&g, BesovParams::new(0.75, p2, Lebesgue::Inf))?),
        );
    }
    Ok(vec![
        Check::gate(
            "bony_identity",
            json!(identity),
            "‖T_f g + T_g f + R − fg‖/‖fg‖ <= 1e-8",
            identity <= 1e-8,
        ),
        Check::gate(
            "paraproduct_continuity",
            json!({"C_T": c_t, "C_R": c_r}),
            "empirical operator constants finite",
            c_t.is_finite() && c_r.is_finite(),
        ),
    ])
}

fn heat_regularity_checks(
    grid: GridSpec,
    shells: [i32; 3],
    rng: &mut ChaCha8Rng,
) -> Vec<Check> {
    // shell-pure data under the heat flow: the smoothing index 2/r gained in
    // the time-integrated norm must come with a shell-independent constant
    let rs = [Lebesgue::P(1.0), Lebesgue::P(2.0), Lebesgue::Inf];
    let mut ratios: Vec<Vec<f64>> = vec![Vec::new(); rs.len()];
    for &j in &shells {
        let (lo, hi) = plateau(j);
        let f = random_annulus_scalar(grid, lo, hi, rng);
        let support: Vec<(f64, f64)> = (0..grid.modes())
            .filter(|&i| f.modes[i].norm_sqr() > 0.0)
            .map(|i| (grid.xi_norm_sq(i), f.modes[i].norm_sqr()))
            .collect();
        let norm_at = |t: f64| -> f64 {
            support
                .iter()
                .map(|&(r2, a2)| a2 * (-2.0 * r2 * t).exp())
                .sum::<f64>()
                .sqrt()
        };
        let scale = 4f64.powi(j);
        let mut times = vec![0.0];
        times.extend(geomspace(1e-3 / scale, 30.0 / scale, 80));
        let profile: Vec<f64> = times.iter().map(|&t| norm_at(t)).collect();
        let n0 = profile[0];
        for (ri, &r) in rs.iter().enumerate() {
            let val = match r {
                Lebesgue::Inf => profile.iter().fold(0.0, |a: f64, &b| a.max(b)) / n0,
                Lebesgue::P(rv) => {
                    let mut acc = 0.0;
                    for k in 1..times.len() {
                        let dt = times[k] - times[k - 1];
                        acc += 0.5
                            * dt
                            * (profile[k - 1].powf(rv) + profile[k].powf(rv));
                    }
                    scale.powf(1.0 / rv) * acc.powf(1.0 / rv) / n0
                }
            };
            ratios[ri].push(val);
        }
    }
    let mut worst = 0.0f64;
    for row in &ratios {
        let max = row.iter().fold(0.0f64, |a, &b| a.max(b));
        let min = row.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        worst = worst.max(max / min);
    }
    vec![Check::gate(
        "heat_maximal_regularity",
        json!({"max_over_min": worst}),
        "time-integrated smoothing constant uniform across shells (<= 2x), r in {1,2,inf}",
        worst <= 2.0,
    )]
}

// ---------------------------------------------------------------------------
// Green suite
// ---------------------------------------------------------------------------

/// Sizes for [`verify_green_suite`].
#[derive(Clone, Debug)]
pub struct GreenPreset {
    /// Grid resolution shared by the large-box and unit-box fits.
    pub n: usize,
    /// Random fields averaged per (shell, exponent) fit.
    pub seeds: usize,
    /// Sample count of the rescaled-time window.
    pub taus: usize,
}

impl GreenPreset {
    pub fn full() -> Self {
        Self { n: 64, seeds: 2, taus: 8 }
    }

    pub fn quick() -> Self {
        Self { n: 32, seeds: 1, taus: 5 }
    }
}

/// Propagator suite: closed form vs ODE oracle, eigenvalue formula,
/// contraction, derivative-bound scans with refinement stability,
/// low-frequency `L^p` smoothing fits, full-vs-reduced cross-check, and the
/// rough-bound contrast for the untransformed system.
pub fn verify_green_suite(preset: &GreenPreset, seed: u64) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    // closed form vs fine-step ODE integration
    let mut ode_err = 0.0f64;
    for _ in 0..10 {
        let rho = rng.gen_range(0.0..30.0);
        let t = rng.gen_range(0.01..10.0);
        ode_err = ode_err.max(reduced_ode_oracle_error(rho, t));
    }
    checks.push(Check::gate(
        "reduced_vs_ode_oracle",
        json!(ode_err),
        "rel err <= 1e-8 over random (ρ, t)",
        ode_err <= 1e-8,
    ));

    // eigenvalue closed form vs the quadratic formula on the generator
    let mut eig_err = 0.0f64;
    for _ in 0..100 {
        let rho: f64 = rng.gen_range(0.0..40.0);
        let eig = ModeEigen::new(rho);
        let tr = 2.0 * rho * rho + 2.0;
        let det = rho * rho * (rho * rho + 2.0) - rho * rho;
        let disc = (tr * tr - 4.0 * det).sqrt();
        let lam_slow = 0.5 * (tr - disc);
        let lam_fast = 0.5 * (tr + disc);
        eig_err = eig_err
            .max((eig.lam_slow - lam_slow).abs() / lam_fast.max(1.0))
            .max((eig.lam_fast - lam_fast).abs() / lam_fast.max(1.0));
    }
    checks.push(Check::gate(
        "eigenvalue_formula",
        json!(eig_err),
        "rel err <= 1e-12 against the quadratic formula",
        eig_err <= 1e-12,
    ));

    // uniform contraction of the propagator
    let mut op_norm = 0.0f64;
    for &rho in &geomspace(1e-3, 40.0, 60) {
        for &t in &geomspace(1e-3, 10.0, 60) {
            let g = reduced_green_eval(rho, t);
            // spectral norm of a symmetric 2x2
            let a = g[0][0];
            let b = g[0][1];
            let d = g[1][1];
            let m = 0.5 * (a + d);
            let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            op_norm = op_norm.max((m.abs() + r).max((m - r).abs()));
        }
    }
    checks.push(Check::gate(
        "propagator_contraction",
        json!(op_norm),
        "operator norm <= 1.05 over the scanned (ρ, t) grid",
        op_norm <= 1.05,
    ));

    // weighted derivative bounds, refinement-stable
    for order in 0..=2usize {
        let coarse = scan_derivative_bounds(
            order,
            &geomspace(0.1, 30.0, 48),
            &geomspace(0.01, 10.0, 48),
        )?;
        let fine = scan_derivative_bounds(
            order,
            &geomspace(0.1, 30.0, 96),
            &geomspace(0.01, 10.0, 96),
        )?;
        let drift = (fine.sup - coarse.sup).abs() / coarse.sup;
        checks.push(Check::gate(
            &format!("derivative_bound_scan_order_{order}"),
            json!({"sup": fine.sup, "refinement_drift": drift,
                   "arg_rho": fine.arg_rho, "arg_t": fine.arg_t}),
            "normalized sup finite; 2x refinement moves it <= 5%",
            fine.sup.is_finite() && drift <= 0.05,
        ));
    }

    // low- and mid-frequency L^p smoothing fits
    let low_grid = GridSpec::new(preset.n, 32.0 * std::f64::consts::PI)?;
    let high_grid = GridSpec::new(preset.n, 2.0 * std::f64::consts::PI)?;
    let shell_plan: [(GridSpec, &[i32]); 2] =
        [(low_grid, &[-2, -1]), (high_grid, &[1, 2, 3])];
    for &p in &LP_SET {
        let mut cs = Vec::new();
        let mut cees = Vec::new();
        let mut js = Vec::new();
        for (g, shells) in &shell_plan {
            for &j in shells.iter() {
                let (cee, c) = smoothing_fit(*g, j, p, preset, &mut rng)?;
                cees.push(cee);
                cs.push(c);
                js.push(j);
            }
        }
        let c_spread = spread_from_mean(&cs);
        let cee_spread = spread_from_mean(&cees);
        let all_pos = cs.iter().all(|&c| c > 0.0);
        checks.push(Check::gate(
            &format!("lp_smoothing_p_{p}"),
            json!({"shells": js, "c": cs, "C": cees,
                   "c_spread": c_spread, "C_spread": cee_spread}),
            "c > 0; fitted (C, c) vary <= 25% across shells (incl. j < 0)",
            all_pos && c_spread <= 0.25 && cee_spread <= 0.25,
        ));
    }

    // full 6x6 vs reduced through the change of variables
    let mut cross_err = 0.0f64;
    for _ in 0..20 {
        let xi: [f64; 3] = [
            rng.gen_range(-4.0..4.0),
            rng.gen_range(-4.0..4.0),
            rng.gen_range(0.2..4.0),
        ];
        let t = rng.gen_range(0.05..3.0);
        let rand_c = |rng: &mut ChaCha8Rng| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        };
        let u = [rand_c(&mut rng), rand_c(&mut rng), rand_c(&mut rng)];
        let om = [rand_c(&mut rng), rand_c(&mut rng), rand_c(&mut rng)];
        cross_err = cross_err.max(full_vs_reduced_error(xi, t, u, om)?);
    }
    checks.push(Check::gate(
        "full_vs_reduced_cross_check",
        json!(cross_err),
        "rel err <= 1e-8 over 20 random modes",
        cross_err <= 1e-8,
    ));

    // contrast: the same low-frequency protocol on the untransformed system
    {
        let (cee, c) = full_system_smoothing_fit(low_grid, -2, preset, &mut rng)?;
        checks.push(Check::info(
            "untransformed_low_frequency_contrast",
            json!({"shell": -2, "C": cee, "c": c}),
            "reported for contrast only: the 6x6 system's sup-norm fit at low \
             frequency, no gate",
        ));
    }

    Ok(VerificationReport {
        suite: "green".into(),
        checks,
        env: ReportEnv {
            description: format!(
                "fits on n = {} boxes L = 2π and 32π; {} fields x {} times",
                preset.n, preset.seeds, preset.taus
            ),
            seed,
        },
    })
}

/// Fit `‖G(t)f‖_p / ‖f‖_p ≈ C e^{−c λ² t}` on shell-`j` data; returns
/// `(C, c)` with `c` in rescaled-time units (`x = λ²t`).
fn smoothing_fit(
    grid: GridSpec,
    j: i32,
    p: Lebesgue,
    preset: &GreenPreset,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64)> {
    let (lo, hi) = plateau(j);
    // rescale time by the predicted slow decay rate at the plateau centre, so
    // the fitted exponent directly measures "observed rate / predicted rate";
    // the raw 4^j rescaling is structurally unstable across ρ ≈ 1 because the
    // slow eigenvalue is ≈ ρ²/2 at low frequency but ≈ ρ² at high frequency
    let lam2 = ModeEigen::new(0.5 * (lo + hi)).lam_slow;
    let taus = linspace(0.2, 2.0, preset.taus);
    let mut mean_ln = vec![0.0; taus.len()];
    for _ in 0..preset.seeds {
        // velocity-channel data: at low frequency a random spin component is
        // mostly fast eigenvector and relaxes at the O(1) rate, which would
        // fold an order-one shell-dependent transient into the intercept
        let a0 = random_annulus_scalar(grid, lo, hi, rng);
        let w0 = ScalarField::zeros(grid);
        let n0 = lp_norm(&a0, p) + lp_norm(&w0, p);
        for (k, &tau) in taus.iter().enumerate() {
            let t = tau / lam2;
            let mut a = a0.clone();
            let mut w = w0.clone();
            par::for_each_zip_mut(&mut a.modes, &mut w.modes, |i, x, y| {
                let g = reduced_green_eval(grid.xi_norm_sq(i).sqrt(), t);
                let nx = *x * g[0][0] + *y * g[0][1];
                let ny = *x * g[1][0] + *y * g[1][1];
                *x = nx;
                *y = ny;
            });
            mean_ln[k] += ((lp_norm(&a, p) + lp_norm(&w, p)) / n0).ln();
        }
    }
    for v in mean_ln.iter_mut() {
        *v /= preset.seeds as f64;
    }
    let (slope, intercept) = linear_fit(&taus, &mean_ln);
    Ok((intercept.exp(), -slope))
}

/// Same protocol on the untransformed 6×6 propagator acting on primitive
/// `(u, ω)` annulus data, sup norm.
fn full_system_smoothing_fit(
    grid: GridSpec,
    j: i32,
    preset: &GreenPreset,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64)> {
    let lam2 = 4f64.powi(j);
    let (lo, hi) = plateau(j);
    let u0 = random_annulus_vector(grid, lo, hi, rng);
    let om0 = random_annulus_vector(grid, lo, hi, rng);
    let support: Vec<usize> = (0..grid.modes())
        .filter(|&i| {
            u0.c.iter().chain(om0.c.iter()).any(|f| f.modes[i].norm_sqr() > 0.0)
        })
        .collect();
    let p = Lebesgue::Inf;
    let n0 = lp_norm_summed(&u0, p) + lp_norm_summed(&om0, p);
    let taus = linspace(0.2, 2.0, preset.taus);
    let mut lns = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let t = tau / lam2;
        let mut u = VectorField::zeros(grid);
        let mut om = VectorField::zeros(grid);
        for &i in &support {
            let xi = grid.xi(i);
            let uv = [u0.c[0].modes[i], u0.c[1].modes[i], u0.c[2].modes[i]];
            let wv = [om0.c[0].modes[i], om0.c[1].modes[i], om0.c[2].modes[i]];
            let (nu, nw) = full_green_apply(xi, t, uv, wv)?;
            for a in 0..3 {
                u.c[a].modes[i] = nu[a];
                om.c[a].modes[i] = nw[a];
            }
        }
        lns.push(((lp_norm_summed(&u, p) + lp_norm_summed(&om, p)) / n0).ln());
    }
    let (slope, intercept) = linear_fit(&taus, &lns);
    Ok((intercept.exp(), -slope))
}

// ---------------------------------------------------------------------------
// Dynamics suite
// ---------------------------------------------------------------------------

/// Sizes for [`verify_dynamics_suite`].
#[derive(Clone, Debug)]
pub struct DynamicsPreset {
    pub grid_n: usize,
    pub box_length: f64,
    pub dt: f64,
    pub t_end: f64,
    pub sample_stride: usize,
    pub amplitude: f64,
    pub ledger_n: usize,
    pub ledger_dt: f64,
    pub ledger_t_end: f64,
    pub osc_n: usize,
    pub osc_box: f64,
    pub osc_m: Vec<i64>,
}

impl DynamicsPreset {
    /// Production preset: long horizon on a large box.
    pub fn full() -> Self {
        Self {
            grid_n: 128,
            box_length: 32.0 * std::f64::consts::PI,
            dt: 0.5,
            t_end: 50.0,
            sample_stride: 4,
            amplitude: 0.01,
            ledger_n: 64,
            ledger_dt: 0.1,
            ledger_t_end: 5.0,
            osc_n: 160,
            osc_box: 8.0 * std::f64::consts::PI,
            osc_m: vec![3, 6, 12, 24, 48],
        }
    }

    /// Small sizes for fast plumbing tests; tolerance gates are not expected
    /// to be meaningful at these sizes.
    pub fn quick() -> Self {
        Self {
            grid_n: 32,
            box_length: 32.0 * std::f64::consts::PI,
            dt: 0.25,
            t_end: 4.0,
            sample_stride: 4,
            amplitude: 0.01,
            ledger_n: 16,
            ledger_dt: 0.1,
            ledger_t_end: 1.0,
            osc_n: 48,
            osc_box: 8.0 * std::f64::consts::PI,
            osc_m: vec![3, 6, 12],
        }
    }
}

/// Dynamics suite: one long small-data trajectory feeding the boundedness and
/// decay checks, plus the oscillation-scaling fit and the a-priori norm
/// ledger on auxiliary runs.
pub fn verify_dynamics_suite(preset: &DynamicsPreset, seed: u64) -> Result<VerificationReport> {
    let mut checks = Vec::new();
    let params = PhysicalParams::default();
    let grid = GridSpec::new(preset.grid_n, preset.box_length)?;
    let p2 = Lebesgue::P(2.0);
    let pinf = Lebesgue::Inf;
    let critical = |field| Probe {
        field,
        kind: ProbeKind::Besov { s: 0.5, p: p2, q: pinf },
    };
    let quarter = |field| Probe {
        field,
        kind: ProbeKind::Besov { s: -0.25, p: Lebesgue::P(4.0), q: pinf },
    };
    let deriv = |field, order| Probe {
        field,
        kind: ProbeKind::DerivBesov { order, s: 0.5, p: p2, q: pinf },
    };
    let probes = [
        critical(ProbeField::Velocity),
        critical(ProbeField::Spin),
        quarter(ProbeField::Velocity),
        quarter(ProbeField::Spin),
        deriv(ProbeField::Velocity, 1),
        deriv(ProbeField::Spin, 1),
        deriv(ProbeField::Velocity, 2),
        deriv(ProbeField::Spin, 2),
    ];
    let s0 = make_initial_data(grid, DataFamily::MultiShell, preset.amplitude, seed)?;
    let cfg = IntegratorConfig {
        scheme: Scheme::Etdrk2,
        dt: preset.dt,
        t_end: preset.t_end,
        sample_stride: preset.sample_stride,
    };
    match crate::integrator::run(&s0, &params, &cfg, &probes) {
        Err(Error::BlowUp { t, shell }) => {
            checks.push(Check::gate(
                "small_data_global_existence",
                json!({"blow_up_t": t, "shell": shell}),
                "small-data run completes the horizon",
                false,
            ));
        }
        Err(e) => return Err(e),
        Ok(out) => {
            checks.push(Check::gate(
                "small_data_global_existence",
                json!({"t_end": preset.t_end}),
                "small-data run completes the horizon",
                true,
            ));
            let records = &out.records;
            let pair = |r: &crate::integrator::Record, a: usize| r.probes[a] + r.probes[a + 1];

            let init2 = pair(&records[0], 0);
            let m2 = records.iter().map(|r| pair(r, 0)).fold(0.0, f64::max) / init2;
            checks.push(Check::gate(
                "critical_norm_boundedness",
                json!({"amplification": m2}),
                "sup_t ‖(u,ω)‖ over the run <= 10x initial, critical p = 2 index",
                m2 <= 10.0,
            ));
            let init4 = pair(&records[0], 2);
            let m4 = records.iter().map(|r| pair(r, 2)).fold(0.0, f64::max) / init4;
            checks.push(Check::info(
                "critical_norm_boundedness_p4",
                json!({"amplification": m4}),
                "amplification at the p = 4 critical index, reported",
            ));

            let max_div = records.iter().map(|r| r.div_residual).fold(0.0, f64::max);
            checks.push(Check::gate(
                "divergence_residual",
                json!(max_div),
                "max over the run <= 1e-10",
                max_div <= 1e-10,
            ));

            let energy_ok = records
                .windows(2)
                .all(|w| w[1].energy <= w[0].energy * (1.0 + 1e-12));
            checks.push(Check::gate(
                "energy_nonincreasing",
                json!({"initial": records[0].energy,
                       "final": records.last().unwrap().energy}),
                "energy never increases between samples",
                energy_ok,
            ));

            // decay-rate fits on the shared trajectory
            let fit_window = |lo: f64, col: usize| -> Option<f64> {
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                for r in records {
                    if r.t >= lo {
                        xs.push(r.t.ln());
                        ys.push(pair(r, col).ln());
                    }
                }
                (xs.len() >= 3).then(|| linear_fit(&xs, &ys).0)
            };
            let decay_lo = 1f64.min(preset.t_end / 4.0);
            for (order, col) in [(1u32, 4usize), (2, 6)] {
                let target = -(order as f64) / 2.0;
                match fit_window(decay_lo, col) {
                    Some(slope) => checks.push(Check::gate(
                        &format!("derivative_decay_order_{order}"),
                        json!({"slope": slope, "target": target}),
                        "log-log slope within ±0.15 of −|α|/2",
                        (slope - target).abs() <= 0.15,
                    )),
                    None => checks.push(Check::gate(
                        &format!("derivative_decay_order_{order}"),
                        json!(null),
                        "log-log slope within ±0.15 of −|α|/2",
                        false,
                    )),
                }
            }
            let late_lo = 0.2 * preset.t_end;
            match fit_window(late_lo, 0) {
                Some(slope) => checks.push(Check::gate(
                    "critical_norm_late_slope",
                    json!({"slope": slope}),
                    "no systematic late-time growth: slope <= 0.05 \
                     (finite box induces slow decay, so no lower gate)",
                    slope <= 0.05,
                )),
                None => checks.push(Check::info(
                    "critical_norm_late_slope",
                    json!(null),
                    "horizon too short for a late-window fit",
                )),
            }

            // continuation monitor: accumulation slows over later windows
            let cont_at = |t: f64| -> f64 {
                records
                    .iter()
                    .min_by(|a, b| {
                        (a.t - t).abs().partial_cmp(&(b.t - t).abs()).unwrap()
                    })
                    .unwrap()
                    .continuation
            };
            let (a, b, c) = (0.5 * preset.t_end, 0.75 * preset.t_end, preset.t_end);
            let inc1 = cont_at(b) - cont_at(a);
            let inc2 = cont_at(c) - cont_at(b);
            checks.push(Check::gate(
                "continuation_monitor_decreasing",
                json!({"window_1": inc1, "window_2": inc2}),
                "later-window increment does not exceed the earlier one",
                inc2 <= inc1 * (1.0 + 1e-9) + 1e-300,
            ));
        }
    }

    checks.push(oscillation_check(preset, seed)?);
    checks.push(ledger_check(preset, seed)?);

    Ok(VerificationReport {
        suite: "dynamics".into(),
        checks,
        env: ReportEnv {
            description: format!(
                "main run n = {} L = {:.3} dt = {} to t = {}",
                preset.grid_n, preset.box_length, preset.dt, preset.t_end
            ),
            seed,
        },
    })
}

/// Critical Besov norms `Ḃ^(3/p−1)_{p,∞}` of spin data at several `p`,
/// sharing one physical transform per significant shell. Shells holding a
/// negligible fraction of the mass cannot furnish the sup, so they are
/// skipped — oscillatory data occupies one or two shells out of the ladder,
/// and this keeps the scaling fit inside its time budget on large grids.
fn oscillatory_critical_norms(omega: &VectorField, ps: &[f64]) -> Result<Vec<f64>> {
    let grid = omega.c[0].grid;
    let range = shell_range(grid)?;
    let mut sums = vec![vec![0.0; range.len()]; ps.len()];
    for comp in omega.c.iter() {
        let profile = crate::lp::shell_l2_sq_profile(comp, range);
        let peak = profile.iter().fold(0.0f64, |a, &b| a.max(b));
        for j in range.iter() {
            let idx = (j - range.j_min) as usize;
            if profile[idx] <= peak * 1e-16 {
                continue;
            }
            let phys = to_physical(&project_shell(comp, j));
            for (pi, &p) in ps.iter().enumerate() {
                let s = par::sum_indexed(phys.len(), |i| phys[i].norm().powf(p));
                sums[pi][idx] += (grid.cell_volume() * s).powf(1.0 / p);
            }
        }
    }
    Ok(ps
        .iter()
        .enumerate()
        .map(|(pi, &p)| {
            let sreg = 3.0 / p - 1.0;
            range
                .iter()
                .map(|j| {
                    let idx = (j - range.j_min) as usize;
                    2f64.powf(j as f64 * sreg) * sums[pi][idx]
                })
                .fold(0.0, f64::max)
        })
        .collect())
}

/// Slope of the critical-norm of oscillatory data against the oscillation
/// scale: `log‖ω₀‖ vs log ε` should fit `1 − 3/p`.
pub fn oscillation_check(preset: &DynamicsPreset, seed: u64) -> Result<Check> {
    let grid = GridSpec::new(preset.osc_n, preset.osc_box)?;
    let mut measured = serde_json::Map::new();
    let mut ok = true;
    let states: Vec<(f64, crate::model::State)> = preset
        .osc_m
        .iter()
        .map(|&m| {
            let eps = 1.0 / (m as f64 * grid.dk());
            make_initial_data(grid, DataFamily::Oscillatory { m }, 1.0, seed)
                .map(|s| (eps, s))
        })
        .collect::<Result<_>>()?;
    let ps = [4.0, 6.0];
    let per_state: Vec<Vec<f64>> = states
        .iter()
        .map(|(_, s)| oscillatory_critical_norms(&s.omega, &ps))
        .collect::<Result<_>>()?;
    for (pi, &p) in ps.iter().enumerate() {
        let target = 1.0 - 3.0 / p;
        let xs: Vec<f64> = states.iter().map(|(eps, _)| eps.ln()).collect();
        let ys: Vec<f64> = per_state.iter().map(|ns| ns[pi].ln()).collect();
        let (slope, _) = linear_fit(&xs, &ys);
        ok &= (slope - target).abs() <= 0.1;
        measured.insert(format!("slope_p_{p}"), json!(slope));
        measured.insert(format!("target_p_{p}"), json!(target));
    }
    Ok(Check::gate(
        "oscillation_scaling",
        Value::Object(measured),
        "slope of log-norm vs log ε within ±0.1 of 1 − 3/p, p in {4, 6}",
        ok,
    ))
}

/// A-priori ledger: the solution's mixed time-space norm `E` against
/// `C(‖init‖ + E²)`; the implied constant is reported.
fn ledger_check(preset: &DynamicsPreset, seed: u64) -> Result<Check> {
    let grid = GridSpec::new(preset.ledger_n, 2.0 * std::f64::consts::PI)?;
    let s0 = make_initial_data(grid, DataFamily::MultiShell, preset.amplitude, seed ^ 0x1ed6e5)?;
    let p2 = Lebesgue::P(2.0);
    let pinf = Lebesgue::Inf;
    let steps = (preset.ledger_t_end / preset.ledger_dt).round() as usize;
    let stride = (steps / 10).max(1);
    let mut series_u = TimeSeries::new();
    let mut series_w = TimeSeries::new();
    series_u.push(0.0, s0.u.clone())?;
    series_w.push(0.0, s0.omega.clone())?;
    let mut ts = transform(&s0)?;
    for step in 1..=steps {
        let s = reconstruct_state(&ts)?;
        ts = crate::integrator::etdrk2_step(&ts, &s, preset.ledger_dt)?;
        ts.t = step as f64 * preset.ledger_dt;
        if step % stride == 0 || step == steps {
            let s_now = reconstruct_state(&ts)?;
            series_u.push(ts.t, s_now.u)?;
            series_w.push(ts.t, s_now.omega)?;
        }
    }
    let sup_part = chemin_lerner_norm(&series_u, pinf, BesovParams::new(0.5, p2, pinf))?
        + chemin_lerner_norm(&series_w, pinf, BesovParams::new(0.5, p2, pinf))?;
    let int_part =
        chemin_lerner_norm(&series_u, Lebesgue::P(1.0), BesovParams::new(2.5, p2, pinf))?
            + chemin_lerner_norm(&series_w, Lebesgue::P(1.0), BesovParams::new(2.5, p2, pinf))?;
    let e_norm = sup_part + int_part;
    let init = besov_norm(&s0.u, BesovParams::new(0.5, p2, pinf))?
        + besov_norm(&s0.omega, BesovParams::new(0.5, p2, pinf))?;
    let implied_c = e_norm / (init + e_norm * e_norm);
    Ok(Check::gate(
        "a_priori_norm_ledger",
        json!({"E": e_norm, "initial": init, "implied_C": implied_c}),
        "E <= C(init + E²) with finite implied C, reported",
        implied_c.is_finite() && implied_c > 0.0,
    ))
}
