//! Batch front door: simulation runs, verification suites, and norm
//! evaluation on stored snapshots.
//!
//! Exit codes: 0 when every gated check passes, 1 when any check fails,
//! 2 on a runtime error (bad config, I/O, blow-up).
//!
//! The environment variable `MICROPOLAR_THREADS` caps the worker-thread
//! count; all reported numbers are identical for any thread count because
//! reductions run in a fixed order.

use clap::{Args, Parser, Subcommand};
use micropolar::config::RunConfig;
use micropolar::grid::GridSpec;
use micropolar::integrator::{make_initial_data, run, RunOutput};
use micropolar::snapshot;
use micropolar::verify::{
    verify_analysis_suite, verify_dynamics_suite, verify_green_suite, DynamicsPreset, GreenPreset,
    VerificationReport, Verdict,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "micropolar",
    about = "Pseudospectral laboratory for the 3-D incompressible micropolar fluid system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration (optional for the verification suites).
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed for data generation and randomized checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for all written artifacts.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Use small fast presets (plumbing checks, not production tolerances).
    #[arg(long)]
    quick: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate an initial-value problem and write the probe trajectory.
    Simulate(Common),
    /// Check the dyadic-analysis toolbox (partition, Bernstein, products…).
    VerifyAnalysis(Common),
    /// Check the linear propagator (oracles, scans, smoothing fits).
    VerifyGreen(Common),
    /// Check the nonlinear dynamics (boundedness, decay, oscillation, ledger).
    VerifyDynamics(Common),
    /// Evaluate the configured probes on a stored snapshot.
    Norms(Common),
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(c) => simulate(c),
        Command::VerifyAnalysis(c) => report_outcome(c, analysis_report(c)),
        Command::VerifyGreen(c) => report_outcome(c, green_report(c)),
        Command::VerifyDynamics(c) => report_outcome(c, dynamics_report(c)),
        Command::Norms(c) => norms(c),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn init_thread_pool() {
    #[cfg(feature = "parallel")]
    if let Ok(text) = std::env::var("MICROPOLAR_THREADS") {
        match text.parse::<usize>() {
            Ok(k) if k >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build_global();
            }
            _ => eprintln!("warning: ignoring invalid MICROPOLAR_THREADS = {text:?}"),
        }
    }
}

fn simulate(c: &Common) -> micropolar::Result<ExitCode> {
    let path = c
        .config
        .as_ref()
        .ok_or_else(|| micropolar::Error::Config("simulate needs --config".into()))?;
    let cfg = RunConfig::load(path)?;
    std::fs::create_dir_all(&c.out_dir)?;
    let initial = make_initial_data(cfg.grid, cfg.family, cfg.amplitude, c.seed)?;
    let out = run(&initial, &cfg.params, &cfg.integrator, &cfg.probes)?;
    snapshot::write_text_atomic(&c.out_dir.join(&cfg.csv_name), &trajectory_csv(&out))?;
    if let Some(name) = &cfg.snapshot_name {
        snapshot::write_state(&c.out_dir.join(name), &out.final_state)?;
    }
    println!(
        "simulate: {} samples to t = {}, final energy {:.6e}",
        out.records.len(),
        out.final_state.t,
        out.records.last().map_or(0.0, |r| r.energy)
    );
    Ok(ExitCode::SUCCESS)
}

fn trajectory_csv(out: &RunOutput) -> String {
    let mut csv = String::from("t");
    for name in &out.probe_names {
        csv.push(',');
        csv.push_str(name);
    }
    csv.push_str(",energy,div_residual,continuation\n");
    for r in &out.records {
        csv.push_str(&format!("{}", r.t));
        for v in &r.probes {
            csv.push_str(&format!(",{v}"));
        }
        csv.push_str(&format!(
            ",{},{},{}\n",
            r.energy, r.div_residual, r.continuation
        ));
    }
    csv
}

fn analysis_report(c: &Common) -> micropolar::Result<VerificationReport> {
    let grid = match &c.config {
        Some(path) => RunConfig::load(path)?.grid,
        None if c.quick => GridSpec::new(32, 2.0 * std::f64::consts::PI)?,
        None => GridSpec::new(128, 2.0 * std::f64::consts::PI)?,
    };
    verify_analysis_suite(grid, c.seed)
}

fn green_report(c: &Common) -> micropolar::Result<VerificationReport> {
    let preset = if c.quick {
        GreenPreset::quick()
    } else {
        GreenPreset::full()
    };
    verify_green_suite(&preset, c.seed)
}

fn dynamics_report(c: &Common) -> micropolar::Result<VerificationReport> {
    let preset = if c.quick {
        DynamicsPreset::quick()
    } else {
        DynamicsPreset::full()
    };
    verify_dynamics_suite(&preset, c.seed)
}

fn report_outcome(
    c: &Common,
    report: micropolar::Result<VerificationReport>,
) -> micropolar::Result<ExitCode> {
    let report = report?;
    std::fs::create_dir_all(&c.out_dir)?;
    let path = c.out_dir.join(format!("{}.json", report.suite));
    snapshot::write_text_atomic(&path, &report.to_json())?;
    for check in &report.checks {
        let tag = match check.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::Info => "info",
        };
        println!("[{tag}] {}: {}", check.anchor, check.tolerance);
    }
    println!("report written to {}", path.display());
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn norms(c: &Common) -> micropolar::Result<ExitCode> {
    let path = c
        .config
        .as_ref()
        .ok_or_else(|| micropolar::Error::Config("norms needs --config".into()))?;
    let cfg = RunConfig::load(path)?;
    let name = cfg.snapshot_name.as_ref().ok_or_else(|| {
        micropolar::Error::Config("norms needs [output].snapshot naming the stored state".into())
    })?;
    let state = snapshot::read_state(&resolve(&c.out_dir, Path::new(name)))?;
    std::fs::create_dir_all(&c.out_dir)?;
    let mut header = String::from("t");
    let mut row = format!("{}", state.t);
    for probe in &cfg.probes {
        header.push(',');
        header.push_str(&probe.name());
        row.push_str(&format!(",{}", probe.eval(&state)?));
    }
    let csv = format!("{header}\n{row}\n");
    snapshot::write_text_atomic(&c.out_dir.join("norms.csv"), &csv)?;
    print!("{csv}");
    Ok(ExitCode::SUCCESS)
}

fn resolve(out_dir: &Path, name: &Path) -> PathBuf {
    if name.is_absolute() {
        name.to_path_buf()
    } else {
        out_dir.join(name)
    }
}
