//! Batch statistics across schemes.

use anyhow::{bail, Result};

#[derive(Debug, Clone)]
pub struct SchemeRow {
    pub scheme: String,
    pub average: f64,
    pub median: f64,
    pub max: usize,
    pub min: usize,
}

#[derive(Debug, Clone)]
pub struct InstanceRecord {
    pub scheme: String,
    pub index: usize,
    pub iterations: usize,
    pub converged: bool,
    pub final_metric: Option<f64>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BenchmarkSummary {
    pub rows: Vec<SchemeRow>,
    pub instances: Vec<InstanceRecord>,
}

impl BenchmarkSummary {
    pub fn push_instance(&mut self, record: InstanceRecord) {
        self.instances.push(record);
    }

    /// Aggregate per-scheme statistics from the recorded instances, in the
    /// order schemes first appear.
    pub fn finalize(&mut self) -> Result<()> {
        let mut order: Vec<String> = Vec::new();
        for rec in &self.instances {
            if !order.contains(&rec.scheme) {
                order.push(rec.scheme.clone());
            }
        }
        self.rows.clear();
        for scheme in order {
            let mut counts: Vec<usize> = self
                .instances
                .iter()
                .filter(|r| r.scheme == scheme)
                .map(|r| r.iterations)
                .collect();
            if counts.is_empty() {
                bail!("scheme {scheme} has no recorded instances");
            }
            counts.sort_unstable();
            let n = counts.len();
            let average = counts.iter().sum::<usize>() as f64 / n as f64;
            let median = if n % 2 == 1 {
                counts[n / 2] as f64
            } else {
                0.5 * (counts[n / 2 - 1] + counts[n / 2]) as f64
            };
            self.rows.push(SchemeRow {
                scheme,
                average,
                median,
                max: counts[n - 1],
                min: counts[0],
            });
        }
        Ok(())
    }

    pub fn row(&self, scheme: &str) -> Option<&SchemeRow> {
        self.rows.iter().find(|r| r.scheme == scheme)
    }

    pub fn any_capped(&self) -> bool {
        self.instances.iter().any(|r| !r.converged)
    }

    /// Render as an aligned text table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<12} {:>12} {:>12} {:>10} {:>10}\n",
            "scheme", "avg iter", "med iter", "max", "min"
        ));
        for row in &self.rows {
            out.push_str(&format!(
                "{:<12} {:>12.1} {:>12.1} {:>10} {:>10}\n",
                row.scheme, row.average, row.median, row.max, row.min
            ));
        }
        out
    }
}
