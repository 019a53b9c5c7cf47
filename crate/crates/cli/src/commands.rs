//! Subcommand implementations and the clap surface.

use std::path::{Path, PathBuf};

use atl_core::{
    alpha_by_name, certify_controllability, lyapunov_budget, probe_bl, run, tracking_metrics,
    AuxiliaryMatrixSpec, CertificateVerdict, CertificationDomain, NussbaumFn, TrackingMetrics,
    PROBE_CAP,
};
use clap::{Parser, Subcommand, ValueEnum};

use crate::bundle;
use crate::config::{self, Resolved};
use crate::Failure;

/// Default horizons swept by `probe-nussbaum` and by the `outputs.probe`
/// artifact of `run`.
pub const DEFAULT_PROBE_HORIZONS: [f64; 4] = [15.0, 30.0, 45.0, 60.0];

/// Default swing-ratio target for the probe's two-sided test.
pub const DEFAULT_L_TARGET: f64 = 10.0;

#[derive(Parser)]
#[command(
    name = "atl",
    version,
    about = "Adaptive fault-tolerant tracking laboratory",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CertifyMode {
    /// Sample the surrogate over the certification box declared in the
    /// scenario's `[oracle]` section.
    Box,
    /// Integrate the scenario first, then sample along the produced trace.
    Trace,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Integrate a scenario file and write a run bundle.
    Run {
        /// Scenario file (TOML grammar, see docs/scenario-format.md).
        scenario: PathBuf,
        /// Output directory for the run bundle.
        #[arg(long, default_value = "atl-out")]
        out: PathBuf,
        /// Override a scenario key before validation, e.g.
        /// `--override controller.k=50` (repeatable).
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Decide uniform definiteness of the controllability surrogate.
    Certify {
        /// Scenario file providing the plant, faults, and (for box mode)
        /// the certification box.
        scenario: PathBuf,
        /// Auxiliary matrix: a registry name (identity, two_channel_demo,
        /// two_channel_study, robot_inertia) or a path to a TOML file with
        /// an `alpha = "<name>"` key. Defaults to the scenario's
        /// `[oracle].alpha`.
        #[arg(long)]
        alpha: Option<String>,
        /// Sampling domain.
        #[arg(long, value_enum, default_value = "box")]
        mode: CertifyMode,
        /// Output directory for certificate.txt.
        #[arg(long, default_value = "atl-out")]
        out: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Classify a gain function's sign-swing behaviour over growing
    /// horizons.
    ProbeNussbaum {
        /// Gain spec: exp_quad_cos(a,b), exp_quad_sin(a), quad_sin,
        /// exp_sin, or const(c).
        spec: String,
        /// Comma-separated increasing horizons to sweep.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_PROBE_HORIZONS)]
        horizons: Vec<f64>,
        /// Swing-ratio target the two-sided verdict must exceed.
        #[arg(long, default_value_t = DEFAULT_L_TARGET)]
        l_target: f64,
        /// Output directory for probe.txt.
        #[arg(long, default_value = "atl-out")]
        out: PathBuf,
    },
    /// Run every `.cfg` scenario in a directory and print an aggregate
    /// table.
    Batch {
        /// Directory containing scenario `.cfg` files.
        dir: PathBuf,
        /// Output root; each scenario gets `<out>/<stem>/`.
        #[arg(long, default_value = "atl-out")]
        out: PathBuf,
        /// Worker threads (defaults to the number of cores).
        #[arg(long, value_name = "N")]
        parallel: Option<usize>,
        /// Overrides applied to every scenario in the batch.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

pub fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Run { scenario, out, overrides } => cmd_run(&scenario, &out, &overrides),
        Cmd::Certify { scenario, alpha, mode, out, overrides } => {
            cmd_certify(&scenario, alpha.as_deref(), mode, &out, &overrides)
        }
        Cmd::ProbeNussbaum { spec, horizons, l_target, out } => {
            cmd_probe_nussbaum(&spec, &horizons, l_target, &out)
        }
        Cmd::Batch { dir, out, parallel, overrides } => cmd_batch(&dir, &out, parallel, &overrides),
    }
}

/// Everything a completed (or runtime-failed) run produced. `failure` is
/// set for runtime failures — divergence, gain overflow, a failed
/// configured assertion — after the bundle artifacts were written.
pub struct RunOutcome {
    pub name: String,
    pub verdict_line: String,
    pub completed: bool,
    pub metrics: TrackingMetrics,
    pub rows: usize,
    pub failure: Option<Failure>,
}

fn load_and_resolve(scenario_path: &Path, overrides: &[String]) -> Result<Resolved, Failure> {
    let env_h = config::env_default_h()?;
    let (file, stem) = config::load_scenario_file(scenario_path, overrides)?;
    config::resolve(&file, &stem, env_h)
}

/// Core of `run` and of each `batch` member: resolve, integrate, write
/// the bundle. Returns `Err` only for configuration/IO problems; runtime
/// failures come back inside the outcome so callers can keep the
/// artifacts and the table row.
pub fn execute_run(
    scenario_path: &Path,
    out_dir: &Path,
    overrides: &[String],
) -> Result<RunOutcome, Failure> {
    let resolved = load_and_resolve(scenario_path, overrides)?;
    let scenario = &resolved.scenario;
    let outputs = &resolved.echo.outputs;

    if outputs.certificate && scenario.oracle.is_none() {
        return Err(Failure::config(format!(
            "scenario {}: outputs.certificate requires an [oracle] section naming alpha",
            scenario.name
        )));
    }

    std::fs::create_dir_all(out_dir).map_err(|e| {
        Failure::config(format!("cannot create output directory {}: {e}", out_dir.display()))
    })?;

    // The echo goes out first so even a diverging run leaves a
    // reproducible record of what was executed.
    bundle::write_text(&out_dir.join("scenario.echo"), &config::echo_toml(&resolved.echo)?)?;

    let trace = run(scenario).map_err(Failure::from)?;
    let metrics = tracking_metrics(&trace);

    let budget = match (&scenario.oracle, trace.verdict.is_completed()) {
        (Some(_), true) => Some(lyapunov_budget(scenario, &trace).map_err(Failure::from)?),
        _ => None,
    };

    if outputs.trace {
        bundle::write_trace_csv(&out_dir.join("trace.csv"), &trace)?;
    }
    if outputs.metrics {
        bundle::write_text(
            &out_dir.join("metrics.txt"),
            &bundle::metrics_text(scenario, &trace, &metrics, budget.as_ref()),
        )?;
    }
    if outputs.certificate {
        let alpha = &scenario.oracle.as_ref().unwrap().alpha;
        let cert = certify_controllability(
            &scenario.plant,
            Some(&scenario.schedule),
            alpha,
            CertificationDomain::Trace(&trace),
        )
        .map_err(Failure::from)?;
        let subject = format!(
            "subject: scenario {} with alpha {} along the executed trace",
            scenario.name, alpha.name
        );
        bundle::write_text(
            &out_dir.join("certificate.txt"),
            &bundle::certificate_text(&subject, &cert),
        )?;
    }
    if outputs.probe {
        let spec = resolved.echo.controller.nussbaum.as_deref().unwrap_or("exp_quad_cos(0.07,0.1)");
        let probe_fn = NussbaumFn::with_cap(scenario.hbar.kind, PROBE_CAP);
        let report = probe_bl(&probe_fn, &DEFAULT_PROBE_HORIZONS, DEFAULT_L_TARGET)
            .map_err(Failure::from)?;
        bundle::write_text(
            &out_dir.join("probe.txt"),
            &bundle::probe_text(spec, DEFAULT_L_TARGET, &report),
        )?;
    }

    let mut failure = None;
    if !trace.verdict.is_completed() {
        failure = Some(Failure::run(format!(
            "scenario {}: run ended with {}",
            scenario.name, trace.verdict
        )));
    } else if let Some(bound) = outputs.assert_band_below {
        if !(metrics.band < bound) {
            failure = Some(Failure::run(format!(
                "scenario {}: assertion failed: steady band {:.6e} is not below {bound:.6e}",
                scenario.name, metrics.band
            )));
        }
    }

    Ok(RunOutcome {
        name: scenario.name.clone(),
        verdict_line: trace.verdict.to_string(),
        completed: trace.verdict.is_completed(),
        metrics,
        rows: trace.records.len(),
        failure,
    })
}

pub fn cmd_run(scenario_path: &Path, out_dir: &Path, overrides: &[String]) -> Result<(), Failure> {
    let outcome = execute_run(scenario_path, out_dir, overrides)?;
    println!(
        "{}: {} ({} records, band {:.6e}, bundle in {})",
        outcome.name,
        outcome.verdict_line,
        outcome.rows,
        outcome.metrics.band,
        out_dir.display()
    );
    match outcome.failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

/// Resolve the `--alpha` argument: a registry name, or a path to a TOML
/// file whose `alpha` key names one.
fn resolve_alpha_arg(arg: &str, m: usize) -> Result<AuxiliaryMatrixSpec, Failure> {
    let path = Path::new(arg);
    let name = if path.is_file() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        let doc: toml::Value = text
            .parse()
            .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        doc.get("alpha")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .ok_or_else(|| {
                Failure::config(format!(
                    "{}: expected a string key `alpha` naming an auxiliary matrix",
                    path.display()
                ))
            })?
    } else {
        arg.to_string()
    };
    alpha_by_name(&name, m).map_err(|e| Failure::config(format!("--alpha: {e}")))
}

pub fn cmd_certify(
    scenario_path: &Path,
    alpha_arg: Option<&str>,
    mode: CertifyMode,
    out_dir: &Path,
    overrides: &[String],
) -> Result<(), Failure> {
    let resolved = load_and_resolve(scenario_path, overrides)?;
    let scenario = &resolved.scenario;

    let alpha = match alpha_arg {
        Some(arg) => resolve_alpha_arg(arg, scenario.plant.m)?,
        None => scenario
            .oracle
            .as_ref()
            .map(|o| o.alpha.clone())
            .ok_or_else(|| {
                Failure::config(
                    "certify needs --alpha or an [oracle] section in the scenario".to_string(),
                )
            })?,
    };

    let (cert, subject) = match mode {
        CertifyMode::Box => {
            let bx = resolved.box_domain.as_ref().ok_or_else(|| {
                Failure::config(format!(
                    "scenario {}: box certification needs oracle.box_x_lo, box_x_hi, \
                     box_points, box_t, box_t_points",
                    scenario.name
                ))
            })?;
            let cert = certify_controllability(
                &scenario.plant,
                Some(&scenario.schedule),
                &alpha,
                CertificationDomain::StateBox(bx),
            )
            .map_err(Failure::from)?;
            let subject = format!(
                "subject: plant {} with alpha {} over the declared state box",
                scenario.plant.name, alpha.name
            );
            (cert, subject)
        }
        CertifyMode::Trace => {
            let trace = run(scenario).map_err(Failure::from)?;
            if !trace.verdict.is_completed() {
                return Err(Failure::run(format!(
                    "scenario {}: run ended with {}; no trace to certify along",
                    scenario.name, trace.verdict
                )));
            }
            let cert = certify_controllability(
                &scenario.plant,
                Some(&scenario.schedule),
                &alpha,
                CertificationDomain::Trace(&trace),
            )
            .map_err(Failure::from)?;
            let subject = format!(
                "subject: scenario {} with alpha {} along the executed trace",
                scenario.name, alpha.name
            );
            (cert, subject)
        }
    };

    let text = bundle::certificate_text(&subject, &cert);
    std::fs::create_dir_all(out_dir).map_err(|e| {
        Failure::config(format!("cannot create output directory {}: {e}", out_dir.display()))
    })?;
    bundle::write_text(&out_dir.join("certificate.txt"), &text)?;
    print!("{text}");

    match cert.verdict {
        CertificateVerdict::UniformlyPositive | CertificateVerdict::UniformlyNegative => Ok(()),
        CertificateVerdict::Violated => Err(Failure::violated(format!(
            "certification violated: no uniform sign over the sampled domain (alpha {})",
            alpha.name
        ))),
    }
}

pub fn cmd_probe_nussbaum(
    spec: &str,
    horizons: &[f64],
    l_target: f64,
    out_dir: &Path,
) -> Result<(), Failure> {
    let kind = config::parse_nussbaum_spec("spec", spec)?;
    let probe_fn = NussbaumFn::with_cap(kind, PROBE_CAP);
    let report = probe_bl(&probe_fn, horizons, l_target).map_err(Failure::from)?;
    let text = bundle::probe_text(spec, l_target, &report);
    std::fs::create_dir_all(out_dir).map_err(|e| {
        Failure::config(format!("cannot create output directory {}: {e}", out_dir.display()))
    })?;
    bundle::write_text(&out_dir.join("probe.txt"), &text)?;
    print!("{text}");
    match report.verdict {
        atl_core::ProbeVerdict::Inconsistent => Err(Failure::violated(format!(
            "gain {spec} is inconsistent with the sign-swing requirements"
        ))),
        _ => Ok(()),
    }
}

struct BatchRow {
    name: String,
    verdict: String,
    checkpoints: Vec<String>,
    chatter: String,
    failure: Option<Failure>,
}

fn batch_row(path: &Path, out_root: &Path, overrides: &[String]) -> BatchRow {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    match execute_run(path, &out_root.join(&stem), overrides) {
        // Metrics of a run that diverged or overflowed describe a
        // truncated trace; show them only for completed runs.
        Ok(outcome) if outcome.completed => BatchRow {
            name: outcome.name,
            verdict: outcome.verdict_line,
            checkpoints: bundle::checkpoint_cells(&outcome.metrics),
            chatter: format!("{:.6}", outcome.metrics.chatter_index),
            failure: outcome.failure,
        },
        Ok(outcome) => BatchRow {
            name: outcome.name,
            verdict: outcome.verdict_line,
            checkpoints: vec!["-".to_string(); 4],
            chatter: "-".to_string(),
            failure: outcome.failure,
        },
        Err(e) => BatchRow {
            name: stem,
            verdict: "config error".to_string(),
            checkpoints: vec!["-".to_string(); 4],
            chatter: "-".to_string(),
            failure: Some(e),
        },
    }
}

fn batch_table(rows: &[BatchRow]) -> String {
    let headers =
        ["scenario", "verdict", "|e(5)|", "|e(10)|", "|e(20)|", "|e(30)|", "chatter"];
    let mut cells: Vec<Vec<String>> = vec![headers.iter().map(|s| s.to_string()).collect()];
    for r in rows {
        let mut row = vec![r.name.clone(), r.verdict.clone()];
        row.extend(r.checkpoints.iter().cloned());
        row.push(r.chatter.clone());
        cells.push(row);
    }
    let widths: Vec<usize> = (0..headers.len())
        .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &cells {
        let line: Vec<String> =
            row.iter().zip(&widths).map(|(cell, &w)| format!("{cell:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn cmd_batch(
    dir: &Path,
    out_root: &Path,
    parallel: Option<usize>,
    overrides: &[String],
) -> Result<(), Failure> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Failure::config(format!("cannot read directory {}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cfg") && p.is_file())
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::config(format!(
            "no .cfg scenario files in {}",
            dir.display()
        )));
    }

    std::fs::create_dir_all(out_root).map_err(|e| {
        Failure::config(format!("cannot create output directory {}: {e}", out_root.display()))
    })?;

    let run_all = || -> Vec<BatchRow> {
        use rayon::prelude::*;
        paths.par_iter().map(|p| batch_row(p, out_root, overrides)).collect()
    };
    let rows = match parallel {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Failure::config(format!("cannot build thread pool: {e}")))?
            .install(run_all),
        None => run_all(),
    };

    let mut summary = batch_table(&rows);
    let first_failure = rows.iter().find_map(|r| {
        r.failure.as_ref().map(|f| (r.name.clone(), f.message.clone(), f.code))
    });
    if let Some((name, message, _)) = &first_failure {
        summary.push_str(&format!("first failure: {name}: {message}\n"));
    } else {
        summary.push_str(&format!("all {} scenarios passed\n", rows.len()));
    }

    bundle::write_text(&out_root.join("batch_summary.txt"), &summary)?;
    print!("{summary}");

    match first_failure {
        None => Ok(()),
        Some((name, message, code)) => Err(Failure {
            code,
            message: format!("batch: first failure in {name}: {message}"),
        }),
    }
}
