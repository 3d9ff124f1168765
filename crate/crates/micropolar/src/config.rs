//! TOML run configuration for the command-line driver.
//!
//! Raw serde structures mirror the file layout; [`RunConfig::from_toml`]
//! validates everything at once and reports every violation together, then
//! converts to the typed structures used by the integrator.

use crate::grid::GridSpec;
use crate::integrator::{DataFamily, IntegratorConfig, Probe, ProbeField, ProbeKind, Scheme};
use crate::model::PhysicalParams;
use crate::ops::Lebesgue;
use crate::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    grid: RawGrid,
    #[serde(default)]
    params: RawParams,
    integrator: RawIntegrator,
    data: RawData,
    #[serde(default)]
    probes: Vec<RawProbe>,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n: usize,
    box_length: f64,
    dealias_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    chi: Option<f64>,
    nu: Option<f64>,
    kappa: Option<f64>,
    mu: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    scheme: String,
    dt: f64,
    t_end: f64,
    sample_stride: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    family: String,
    amplitude: f64,
    /// Oscillation index for the oscillatory family (`1/ε = m·2π/L`).
    m: Option<i64>,
    /// Shell index for the shell-random family.
    j: Option<i32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProbe {
    field: String,
    kind: String,
    s: Option<f64>,
    p: Option<String>,
    q: Option<String>,
    order: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    csv: Option<String>,
    snapshot: Option<String>,
}

/// Fully validated run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: PhysicalParams,
    pub integrator: IntegratorConfig,
    pub family: DataFamily,
    pub amplitude: f64,
    pub probes: Vec<Probe>,
    pub csv_name: String,
    pub snapshot_name: Option<String>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("TOML parse error: {e}")))?;
        let mut problems = Vec::new();

        let grid = match raw.grid.dealias_fraction {
            Some(f) => GridSpec::with_dealias(raw.grid.n, raw.grid.box_length, f),
            None => GridSpec::new(raw.grid.n, raw.grid.box_length),
        };
        let grid = match grid {
            Ok(g) => Some(g),
            Err(e) => {
                problems.push(format!("grid: {e}"));
                None
            }
        };

        let d = PhysicalParams::default();
        let params = PhysicalParams {
            chi: raw.params.chi.unwrap_or(d.chi),
            nu: raw.params.nu.unwrap_or(d.nu),
            kappa: raw.params.kappa.unwrap_or(d.kappa),
            mu: raw.params.mu.unwrap_or(d.mu),
        };
        if let Err(e) = params.validate() {
            problems.push(format!("params: {e}"));
        }

        let scheme = match Scheme::parse(&raw.integrator.scheme) {
            Ok(s) => Some(s),
            Err(e) => {
                problems.push(format!("integrator: {e}"));
                None
            }
        };
        let integrator = scheme.map(|scheme| IntegratorConfig {
            scheme,
            dt: raw.integrator.dt,
            t_end: raw.integrator.t_end,
            sample_stride: raw.integrator.sample_stride.unwrap_or(1),
        });
        if let (Some(cfg), Some(g)) = (&integrator, &grid) {
            if let Err(e) = cfg.validate(*g, &params) {
                problems.push(format!("integrator: {e}"));
            }
        }

        let family = match raw.data.family.as_str() {
            "gaussian_vortex" => Some(DataFamily::GaussianVortex),
            "oscillatory" => match raw.data.m {
                Some(m) if m >= 1 => Some(DataFamily::Oscillatory { m }),
                Some(m) => {
                    problems.push(format!("data: oscillation index m = {m} must be ≥ 1"));
                    None
                }
                None => {
                    problems.push("data: the oscillatory family needs `m`".into());
                    None
                }
            },
            "shell_random" => match raw.data.j {
                Some(j) => Some(DataFamily::ShellRandom { j }),
                None => {
                    problems.push("data: the shell_random family needs `j`".into());
                    None
                }
            },
            "multi_shell" => Some(DataFamily::MultiShell),
            other => {
                problems.push(format!("data: unknown family {other:?}"));
                None
            }
        };
        if !(raw.data.amplitude > 0.0 && raw.data.amplitude.is_finite()) {
            problems.push(format!(
                "data: amplitude = {} must be positive",
                raw.data.amplitude
            ));
        }

        let mut probes = Vec::new();
        for (i, rp) in raw.probes.iter().enumerate() {
            match parse_probe(rp) {
                Ok(p) => probes.push(p),
                Err(e) => problems.push(format!("probes[{i}]: {e}")),
            }
        }

        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        Ok(Self {
            grid: grid.unwrap(),
            params,
            integrator: integrator.unwrap(),
            family: family.unwrap(),
            amplitude: raw.data.amplitude,
            probes,
            csv_name: raw.output.csv.unwrap_or_else(|| "trajectory.csv".into()),
            snapshot_name: raw.output.snapshot,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }
}

fn parse_probe(rp: &RawProbe) -> Result<Probe> {
    let field = match rp.field.as_str() {
        "u" | "velocity" => ProbeField::Velocity,
        "w" | "omega" | "spin" => ProbeField::Spin,
        other => return Err(Error::Config(format!("unknown field {other:?}"))),
    };
    let need_p = |o: &Option<String>| -> Result<Lebesgue> {
        match o {
            Some(text) => Lebesgue::parse(text),
            None => Err(Error::Config("missing Lebesgue exponent".into())),
        }
    };
    let kind = match rp.kind.as_str() {
        "lp" => ProbeKind::Lp(need_p(&rp.p)?),
        "besov" => ProbeKind::Besov {
            s: rp
                .s
                .ok_or_else(|| Error::Config("besov probe needs `s`".into()))?,
            p: need_p(&rp.p)?,
            q: need_p(&rp.q)?,
        },
        "deriv_l2" => {
            let order = rp
                .order
                .ok_or_else(|| Error::Config("deriv_l2 probe needs `order`".into()))?;
            if order > 2 {
                return Err(Error::UnsupportedOrder(order as usize));
            }
            ProbeKind::DerivL2 { order }
        }
        other => return Err(Error::Config(format!("unknown probe kind {other:?}"))),
    };
    Ok(Probe { field, kind })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
[grid]
n = 32
box_length = 6.283185307179586

[integrator]
scheme = "etdrk2"
dt = 0.1
t_end = 1.0
sample_stride = 2

[data]
family = "multi_shell"
amplitude = 0.01

[[probes]]
field = "u"
kind = "besov"
s = 0.5
p = "2"
q = "inf"

[[probes]]
field = "w"
kind = "lp"
p = "4"

[output]
csv = "run.csv"
snapshot = "final.mpsf"
"#;

    #[test]
    fn parses_a_complete_configuration() {
        let cfg = RunConfig::from_toml(GOOD).unwrap();
        assert_eq!(cfg.grid.n, 32);
        assert_eq!(cfg.integrator.scheme, Scheme::Etdrk2);
        assert_eq!(cfg.family, DataFamily::MultiShell);
        assert_eq!(cfg.probes.len(), 2);
        assert_eq!(cfg.probes[0].name(), "u_B[0.5;2;inf]");
        assert_eq!(cfg.csv_name, "run.csv");
        assert_eq!(cfg.snapshot_name.as_deref(), Some("final.mpsf"));
        assert!(cfg.params.is_default());
    }

    #[test]
    fn collects_every_violation_in_one_message() {
        let bad = r#"
[grid]
n = 7
box_length = -1.0

[integrator]
scheme = "leapfrog"
dt = 0.1
t_end = 1.0

[data]
family = "nope"
amplitude = -3.0
"#;
        let err = RunConfig::from_toml(bad).unwrap_err().to_string();
        assert!(err.contains("grid:"), "{err}");
        assert!(err.contains("leapfrog"), "{err}");
        assert!(err.contains("nope"), "{err}");
        assert!(err.contains("amplitude"), "{err}");
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = "[grid]\nn = 32\nbox_length = 1.0\nsurprise = true\n";
        assert!(RunConfig::from_toml(bad).is_err());
    }

    #[test]
    fn rk4_stability_violation_is_reported() {
        let bad = GOOD
            .replace("scheme = \"etdrk2\"", "scheme = \"ref_rk4\"")
            .replace("dt = 0.1", "dt = 0.5");
        let err = RunConfig::from_toml(&bad).unwrap_err().to_string();
        assert!(err.contains("RK4 unstable"), "{err}");
    }
}
