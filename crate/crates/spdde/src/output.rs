//! Deterministic text serialization: CSV tables and certificate reports.
//!
//! Floats are written in scientific notation with 17 significant digits and
//! a `.` decimal separator, so reruns with the same seed produce
//! byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::comparison::ScalarCurve;
use crate::error::Result;
use crate::integrator::Trajectory;
use crate::stability::{CertificateReport, MeasureCurve};

/// 17-significant-digit rendering, stable across runs.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Trajectory CSV: `time,mode_1,...,mode_M,active_index`.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let dim = traj.states[0].dim();
    let header: Vec<String> = std::iter::once("time".to_string())
        .chain((1..=dim).map(|k| format!("mode_{k}")))
        .chain(std::iter::once("active_index".to_string()))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (m, state) in traj.states.iter().enumerate() {
        let mut row = vec![fmt_f64(traj.time(m))];
        row.extend(state.coords.iter().map(|&c| fmt_f64(c)));
        row.push(traj.indices[m].to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Moment-curve CSV: `time,mean,stderr`.
pub fn write_moments_csv(path: &Path, curve: &MeasureCurve) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "time,mean,stderr")?;
    for ((t, mean), se) in curve.times.iter().zip(&curve.means).zip(&curve.stderrs) {
        writeln!(out, "{},{},{}", fmt_f64(*t), fmt_f64(*mean), fmt_f64(*se))?;
    }
    Ok(())
}

/// Scalar-curve CSV: `time,value[,envelope]`.
pub fn write_curve_csv(
    path: &Path,
    curve: &ScalarCurve,
    envelope: Option<&[f64]>,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    match envelope {
        Some(env) => {
            writeln!(out, "time,value,envelope")?;
            for (m, (&v, &e)) in curve.values.iter().zip(env).enumerate() {
                writeln!(
                    out,
                    "{},{},{}",
                    fmt_f64(curve.time(m)),
                    fmt_f64(v),
                    fmt_f64(e)
                )?;
            }
        }
        None => {
            writeln!(out, "time,value")?;
            for (m, &v) in curve.values.iter().enumerate() {
                writeln!(out, "{},{}", fmt_f64(curve.time(m)), fmt_f64(v))?;
            }
        }
    }
    Ok(())
}

/// Yosida ladder CSV: `n,gap`.
pub fn write_gap_table(path: &Path, ladder: &[f64], gaps: &[f64]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "n,gap")?;
    for (n, gap) in ladder.iter().zip(gaps) {
        writeln!(out, "{},{}", fmt_f64(*n), fmt_f64(*gap))?;
    }
    Ok(())
}

/// Structured text rendering of a certificate: verdict, margin, notes, and
/// the per-time table.
pub fn render_report(report: &CertificateReport) -> String {
    let mut text = String::new();
    text.push_str(&format!("certificate: {}\n", report.name));
    text.push_str(&format!(
        "verdict: {}\n",
        if report.verdict { "PASS" } else { "FAIL" }
    ));
    text.push_str(&format!("margin: {}\n", fmt_f64(report.margin)));
    for note in &report.notes {
        text.push_str(&format!("note: {note}\n"));
    }
    text.push_str("time,estimate,bound,stderr,margin\n");
    for row in &report.rows {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(row.t),
            fmt_f64(row.estimate),
            fmt_f64(row.bound),
            fmt_f64(row.stderr),
            fmt_f64(row.margin)
        ));
    }
    text
}

pub fn write_report(path: &Path, report: &CertificateReport) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(render_report(report).as_bytes())?;
    Ok(())
}
