//! `plot`: merge per-iteration series files into long-form plot data and an
//! optional SVG chart with a logarithmic vertical axis.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;

use super::EXIT_OK;
use crate::csvout;
use crate::formats::{self, RunMeta};
use crate::svg::{line_chart, SvgSeries};

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// Series files written by `solve` (`<tag>_series.csv`, with a sibling
    /// `<tag>_meta.json`).
    #[arg(required = true)]
    pub files: Vec<PathBuf>,

    #[arg(long, default_value = "plot.csv")]
    pub out: PathBuf,

    /// Also render a self-contained SVG chart.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

struct LoadedSeries {
    scheme: String,
    /// (iteration, value) in the chosen metric.
    points: Vec<(usize, f64)>,
    distance_based: bool,
}

fn meta_path_for(series: &Path) -> PathBuf {
    let name = series
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let meta_name = if let Some(stripped) = name.strip_suffix("_series.csv") {
        format!("{stripped}_meta.json")
    } else {
        format!("{name}.meta.json")
    };
    series.with_file_name(meta_name)
}

fn load_series(path: &Path) -> Result<LoadedSeries> {
    let meta: RunMeta = formats::load_json(&meta_path_for(path))
        .with_context(|| format!("series file {} needs its sidecar metadata", path.display()))?;
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows: Vec<(usize, f64, Option<f64>)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 || line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let iteration: usize = parts
            .next()
            .and_then(|v| v.parse().ok())
            .with_context(|| format!("bad row {idx} in {}", path.display()))?;
        let objective: f64 = parts
            .next()
            .and_then(|v| v.parse().ok())
            .with_context(|| format!("bad row {idx} in {}", path.display()))?;
        let metric: Option<f64> = parts.next().and_then(|v| v.parse().ok());
        rows.push((iteration, objective, metric));
    }
    if rows.is_empty() {
        bail!("series {} holds no data rows", path.display());
    }
    let distance_based = meta.has_distance_metric && rows.iter().all(|r| r.2.is_some());
    let points = if distance_based {
        rows.iter().map(|&(k, _, m)| (k, m.unwrap())).collect()
    } else {
        // Fall back to the objective gap against the certified or best value.
        let floor = meta
            .optimal_value
            .unwrap_or_else(|| rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min));
        rows.iter().map(|&(k, f, _)| (k, f - floor)).collect()
    };
    Ok(LoadedSeries {
        scheme: meta.scheme,
        points,
        distance_based,
    })
}

pub fn run(args: &PlotArgs) -> Result<u8> {
    if args.files.is_empty() {
        bail!("no series files given");
    }
    let mut loaded = Vec::new();
    for path in &args.files {
        loaded.push(load_series(path)?);
    }
    let all_distance = loaded.iter().all(|s| s.distance_based);
    let label = if all_distance {
        "relative_distance"
    } else {
        "objective_gap"
    };
    let mut rows: Vec<(String, usize, f64)> = Vec::new();
    for series in &loaded {
        for &(k, v) in &series.points {
            rows.push((series.scheme.clone(), k, v));
        }
    }
    std::fs::write(&args.out, csvout::plot_csv(label, &rows, all_distance))
        .with_context(|| format!("writing {}", args.out.display()))?;

    if let Some(svg_path) = &args.svg {
        let series: Vec<SvgSeries> = loaded
            .iter()
            .map(|s| SvgSeries {
                label: s.scheme.clone(),
                points: s.points.iter().copied().filter(|&(_, v)| v > 0.0).collect(),
            })
            .collect();
        std::fs::write(svg_path, line_chart(&series, label))
            .with_context(|| format!("writing {}", svg_path.display()))?;
    }
    println!(
        "plotted {} series ({} rows) as {}",
        loaded.len(),
        rows.len(),
        label
    );
    Ok(EXIT_OK)
}
