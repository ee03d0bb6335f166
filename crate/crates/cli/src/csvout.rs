//! CSV writers. Dot decimal separator, newline-terminated rows, mandatory
//! header row. Floating values print in shortest round-trip form, so files
//! are byte-identical across runs with identical seeds.

use afom_restart_core::RestartTrace;
use anyhow::{Context, Result};
use std::path::Path;

use crate::runner::SeriesPoint;
use crate::summary::BenchmarkSummary;

fn write(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

/// Outer trace: one row per restart round, plus a final row for the last
/// point (empty round columns). The gap column is the distance to the
/// certified optimal value when one exists, and the decrease to the next
/// outer point otherwise.
pub fn trace_csv(trace: &RestartTrace, optimal_value: Option<f64>) -> String {
    let mut out = String::from("j,n_j,s_j,m_jplus1,f_zj,gap,cumulative_iterations\n");
    let values = trace.values();
    let counts = trace.inner_counts();
    let mut cumulative = 0usize;
    for j in 0..trace.rounds() {
        cumulative += counts[j + 1];
        let gap = match optimal_value {
            Some(f_star) => values[j] - f_star,
            None => values[j] - values[j + 1],
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            j,
            trace.lower_bounds()[j],
            trace.ratios()[j],
            counts[j + 1],
            values[j],
            gap,
            cumulative
        ));
    }
    let last = trace.rounds();
    let final_gap = match optimal_value {
        Some(f_star) => values[last] - f_star,
        None => 0.0,
    };
    out.push_str(&format!(
        "{},,,,{},{},{}\n",
        last, values[last], final_gap, cumulative
    ));
    out
}

/// Companion per-iteration file for recorded inner runs.
pub fn inner_csv(trace: &RestartTrace) -> Option<String> {
    let inner = trace.inner_runs()?;
    let mut out = String::from("outer_j,k,f_xk\n");
    for (j, run) in inner.iter().enumerate() {
        for (k, value) in run.values.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", j, k, value));
        }
    }
    Some(out)
}

/// Per-iteration series: objective and (when certified) the relative
/// decision-space distance.
pub fn series_csv(series: &[SeriesPoint]) -> String {
    let mut out = String::from("iteration,objective,metric\n");
    for p in series {
        match p.metric {
            Some(m) => out.push_str(&format!("{},{},{}\n", p.iteration, p.objective, m)),
            None => out.push_str(&format!("{},{},\n", p.iteration, p.objective)),
        }
    }
    out
}

pub fn write_trace(path: &Path, trace: &RestartTrace, optimal_value: Option<f64>) -> Result<()> {
    write(path, &trace_csv(trace, optimal_value))
}

pub fn write_inner(path: &Path, trace: &RestartTrace) -> Result<bool> {
    match inner_csv(trace) {
        Some(content) => {
            write(path, &content)?;
            Ok(true)
        }
        None => Ok(false),
    }
}

pub fn write_series(path: &Path, series: &[SeriesPoint]) -> Result<()> {
    write(path, &series_csv(series))
}

/// Summary table: one row per scheme.
pub fn summary_csv(summary: &BenchmarkSummary) -> String {
    let mut out = String::from("scheme,average,median,max,min\n");
    for row in &summary.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.scheme, row.average, row.median, row.max, row.min
        ));
    }
    out
}

/// Per-instance benchmark records; wall time is the only
/// non-reproducible column.
pub fn instances_csv(summary: &BenchmarkSummary) -> String {
    let mut out = String::from("scheme,instance,iterations,converged,final_metric,wall_seconds\n");
    for rec in &summary.instances {
        let metric = rec.final_metric.map(|m| format!("{m}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            rec.scheme, rec.index, rec.iterations, rec.converged, metric, rec.wall_seconds
        ));
    }
    out
}

/// Long-form plot data: one row per (scheme, iteration).
pub fn plot_csv(label: &str, rows: &[(String, usize, f64)], distance_based: bool) -> String {
    let mut out = String::new();
    if !distance_based {
        out.push_str("# note: objective-gap series (no certificate reference)\n");
    }
    out.push_str(&format!("scheme,iteration,{label}\n"));
    for (scheme, iteration, value) in rows {
        out.push_str(&format!("{},{},{}\n", scheme, iteration, value));
    }
    out
}
