//! Run-bundle artifacts: `trace.csv`, `metrics.txt`, `certificate.txt`,
//! `probe.txt`, `scenario.echo`.
//!
//! The CSV column order is fixed: `t`, the state entries `x_11 … x_nm`
//! (block i holds the i-th derivative level, channel-major within a
//! block), then `ystar`, `e`, `s`, `Phi` per channel, the scalars `phi`,
//! `nu`, `zeta`, `hbar`, `theta_hat`, and per channel `eta`, `u`,
//! `rho_diag`, `eps`, `u_a`. Every value is written with 17 significant
//! digits, so parsing the file back reproduces the in-memory doubles
//! bit-exactly.

use std::io::Write;
use std::path::Path;

use atl_core::{
    BLProbeReport, ControllabilityCertificate, LyapunovDiagnostic, Scenario, SimulationTrace,
    TraceRecord, TrackingMetrics, CHECKPOINT_TIMES,
};

use crate::Failure;

fn io_fail(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::config(format!("cannot write {}: {e}", path.display()))
}

/// Column names for a trace with `m` channels and order `n`.
pub fn csv_header(m: usize, n: usize) -> Vec<String> {
    let mut cols = Vec::with_capacity(1 + m * n + 9 * m + 5);
    cols.push("t".to_string());
    for i in 1..=n {
        for j in 1..=m {
            cols.push(format!("x_{i}{j}"));
        }
    }
    let channel_groups = ["ystar", "e", "s", "Phi"];
    for g in channel_groups {
        for j in 1..=m {
            cols.push(format!("{g}_{j}"));
        }
    }
    for scalar in ["phi", "nu", "zeta", "hbar", "theta_hat"] {
        cols.push(scalar.to_string());
    }
    for g in ["eta", "u", "rho_diag", "eps", "u_a"] {
        for j in 1..=m {
            cols.push(format!("{g}_{j}"));
        }
    }
    cols
}

/// One record flattened in the documented column order.
pub fn record_row(rec: &TraceRecord) -> Vec<f64> {
    let mut row = Vec::new();
    row.push(rec.t);
    row.extend_from_slice(rec.x.as_slice());
    for v in [&rec.y_star, &rec.e, &rec.s, &rec.phi_vec] {
        row.extend_from_slice(v.as_slice());
    }
    row.extend_from_slice(&[rec.phi, rec.nu, rec.zeta, rec.hbar, rec.theta_hat]);
    for v in [&rec.eta, &rec.u, &rec.rho_diag, &rec.eps, &rec.u_a] {
        row.extend_from_slice(v.as_slice());
    }
    row
}

/// Serialize one double with 17 significant digits (round-trip exact).
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write the full trace as CSV.
pub fn write_trace_csv(path: &Path, trace: &SimulationTrace) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_fail(path, e))?;
    w.write_record(csv_header(trace.m, trace.n)).map_err(|e| io_fail(path, e))?;
    for rec in &trace.records {
        let row: Vec<String> = record_row(rec).into_iter().map(format_f64).collect();
        w.write_record(&row).map_err(|e| io_fail(path, e))?;
    }
    w.flush().map_err(|e| io_fail(path, e))?;
    Ok(())
}

/// Parse a trace CSV back into its header and numeric rows.
pub fn read_trace_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), Failure> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    let header: Vec<String> =
        r.headers().map_err(|e| io_fail(path, e))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| io_fail(path, e))?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| {
                    Failure::config(format!("{}: non-numeric cell {s:?}", path.display()))
                })
            })
            .collect::<Result<Vec<f64>, Failure>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Verify that a written CSV reproduces the in-memory trace bit-exactly.
pub fn verify_roundtrip(path: &Path, trace: &SimulationTrace) -> Result<(), Failure> {
    let (header, rows) = read_trace_csv(path)?;
    if header != csv_header(trace.m, trace.n) {
        return Err(Failure::config(format!("{}: header mismatch", path.display())));
    }
    if rows.len() != trace.records.len() {
        return Err(Failure::config(format!(
            "{}: {} rows vs {} records",
            path.display(),
            rows.len(),
            trace.records.len()
        )));
    }
    for (i, (row, rec)) in rows.iter().zip(&trace.records).enumerate() {
        let want = record_row(rec);
        if row.len() != want.len()
            || row.iter().zip(&want).any(|(a, b)| a.to_bits() != b.to_bits())
        {
            return Err(Failure::config(format!(
                "{}: row {i} does not round-trip bit-exactly",
                path.display()
            )));
        }
    }
    Ok(())
}

/// Human-readable run summary: verdict, checkpoints, band, chatter,
/// adaptation, and (when an oracle is configured) the energy budget.
pub fn metrics_text(
    scenario: &Scenario,
    trace: &SimulationTrace,
    metrics: &TrackingMetrics,
    budget: Option<&LyapunovDiagnostic>,
) -> String {
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(format!("scenario: {}", scenario.name));
    line(format!("verdict: {}", trace.verdict));
    line(format!(
        "grid: horizon {} s, step {:e}, {} records, fault switches at {:?}",
        scenario.horizon,
        scenario.h,
        trace.records.len(),
        trace.segment_change_times()
    ));
    line("tracking error |e(t)| at checkpoints:".to_string());
    for &(t, v) in &metrics.error_checkpoints {
        line(format!("  t = {t:>4} s: {v:.6e}"));
    }
    line(format!("steady band (max |e| over last 20%): {:.6e}", metrics.band));
    line(format!(
        "peak |e|: {:.6e} at t = {:.4} s",
        metrics.peak_error, metrics.peak_error_t
    ));
    line(format!("sup |s|: {:.6e}, sup |u|: {:.6e}", metrics.sup_s, metrics.sup_u));
    line(format!(
        "zeta: final {:.8}, growth over last 10%: {:.4}%",
        metrics.zeta_final,
        100.0 * metrics.zeta_growth_last_tenth
    ));
    line(format!(
        "theta_hat: final {:.8}, growth over last 10%: {:.4}%",
        metrics.theta_final,
        100.0 * metrics.theta_growth_last_tenth
    ));
    line(format!(
        "chatter index (total variation of u per second, last 20%): {:.6}",
        metrics.chatter_index
    ));
    line(format!("theta_hat nonnegativity clamp events: {}", metrics.clamp_events));
    if let Some(b) = budget {
        line("energy budget (auxiliary-matrix oracle):".to_string());
        line(format!(
            "  theta bound {:.8} (1.25 safety over ratio max {:.8}), nu integral bound {}",
            b.theta, b.theta_ratio_max, b.nu_bar
        ));
        line(format!("  budget constant delta: {:.8}", b.delta));
        line(format!(
            "  min margin {:.8} at t = {:.4} s (holds: {})",
            b.min_margin,
            b.min_margin_t,
            b.margin_holds()
        ));
        line(format!(
            "  int |s|^2: total {:.6e}, last-quarter fraction {:.4}%",
            b.int_s2_total,
            100.0 * b.int_s2_last_quarter_fraction
        ));
        line(format!("  beta range along trace: [{:.6}, {:.6}]", b.beta_range.0, b.beta_range.1));
    }
    out
}

/// Checkpoint values aligned to the standard times, `-` when outside the
/// horizon; used by the batch aggregate table.
pub fn checkpoint_cells(metrics: &TrackingMetrics) -> Vec<String> {
    CHECKPOINT_TIMES
        .iter()
        .map(|t| {
            metrics
                .error_checkpoints
                .iter()
                .find(|(ct, _)| ct == t)
                .map(|(_, v)| format!("{v:.4e}"))
                .unwrap_or_else(|| "-".to_string())
        })
        .collect()
}

/// Certificate report: verdict, bounds, witness.
pub fn certificate_text(subject_line: &str, cert: &ControllabilityCertificate) -> String {
    format!("{subject_line}\n{cert}\n")
}

/// Probe report: per-horizon one-sided masses and tail ratio sups.
pub fn probe_text(spec: &str, l_target: f64, report: &BLProbeReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("gain: {spec}\n"));
    out.push_str(&format!("l_target: {l_target}\n"));
    out.push_str(&format!("verdict: {}\n", report.verdict));
    out.push_str(
        "horizon  int_pos        int_neg        mean_pos       mean_neg       \
         tailsup(+/-)   tailsup(-/+)\n",
    );
    for (i, z) in report.zeta_grid.iter().enumerate() {
        out.push_str(&format!(
            "{z:>7}  {:<13.6e}  {:<13.6e}  {:<13.6e}  {:<13.6e}  {:<13.6e}  {:<13.6e}\n",
            report.pos_integral[i],
            report.neg_integral[i],
            report.growth_pos[i],
            report.growth_neg[i],
            report.ratio_sup_pos_at[i],
            report.ratio_sup_neg_at[i],
        ));
    }
    out.push_str(&format!(
        "final tail sups: +/- {:.6e}, -/+ {:.6e}\n",
        report.ratio_sup_pos_over_neg, report.ratio_sup_neg_over_pos
    ));
    match report.overflowed_at {
        Some(z) => out.push_str(&format!(
            "note: evaluation overflowed at zeta = {z:.6}; horizons beyond it were skipped\n"
        )),
        None => out.push_str("overflow: none\n"),
    }
    out
}

/// Write a text artifact.
pub fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    let mut f = std::fs::File::create(path).map_err(|e| io_fail(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_fail(path, e))?;
    Ok(())
}
