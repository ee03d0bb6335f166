//! `solve`: run one scheme on one instance and export its trace.

use std::path::PathBuf;

use afom_restart_core::rng::Pcg32;
use afom_restart_core::suite::{generate, start_with_gap, EngineHandle, SolverInput};
use afom_restart_core::SolveSettings;
use anyhow::{anyhow, bail, Result};
use clap::Args;

use super::{parse_point, resolve_out_dir, GeneratorArgs, EXIT_CAP, EXIT_OK};
use crate::csvout;
use crate::formats::{self, RunMeta};
use crate::runner::{nbar_hint_for, run_scheme, Scheme, StopRule};

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,

    /// Load the instance from a problem document instead of generating it.
    #[arg(long)]
    pub problem: Option<PathBuf>,

    #[arg(long, default_value = "adaptive")]
    pub scheme: String,

    /// Objective-gap exit tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,

    /// Use the gradient-mapping-norm exit with this tolerance instead.
    #[arg(long)]
    pub eps_grad: Option<f64>,

    /// Fixed-rate block length (defaults to the optimal block when the
    /// growth constant is certified).
    #[arg(long)]
    pub n_restart: Option<usize>,

    /// Explicit starting point, comma-separated.
    #[arg(long)]
    pub x0: Option<String>,

    /// Target objective gap of the sampled start (composite instances).
    #[arg(long, default_value_t = 50.0)]
    pub gap0: f64,

    #[arg(long, default_value_t = 10_000_000)]
    pub cap: usize,

    /// Record per-iteration inner sequences into a companion file.
    #[arg(long)]
    pub record_inner: bool,

    #[arg(long)]
    pub out_dir: Option<PathBuf>,

    /// Basename of the emitted files.
    #[arg(long, default_value = "trace")]
    pub tag: String,

    /// Also write the instance itself as a problem document.
    #[arg(long)]
    pub save_problem: Option<PathBuf>,
}

pub fn run(args: &SolveArgs) -> Result<u8> {
    let scheme = Scheme::parse(&args.scheme)?;
    if let Some(block) = args.n_restart {
        if block < 1 {
            bail!("--n-restart must be at least 1");
        }
    }
    let problem = match &args.problem {
        Some(path) => formats::load_problem(path)?,
        None => generate(&args.generator.to_spec()?).map_err(|e| anyhow!("generator: {e}"))?,
    };
    if let Some(path) = &args.save_problem {
        formats::save_problem(&problem, path)?;
    }
    let start = match &args.x0 {
        Some(text) => {
            let point = parse_point(text)?;
            if point.len() != problem.input.engine_dimension() {
                bail!(
                    "--x0 has {} coordinates, expected {}",
                    point.len(),
                    problem.input.engine_dimension()
                );
            }
            point
        }
        None => match &problem.input {
            SolverInput::Composite(objective) => {
                let certificate = problem
                    .certificate
                    .as_ref()
                    .ok_or_else(|| anyhow!("instance lacks a certificate; pass --x0"))?;
                let mut rng = Pcg32::with_stream(problem.spec.seed(), 6);
                let direction = rng.unit_direction(objective.dimension());
                start_with_gap(objective, certificate, &direction, args.gap0)
                    .map_err(|e| anyhow!("start sampling: {e}"))?
            }
            SolverInput::Dual(dual) => vec![0.0; dual.dual_dimension()],
        },
    };
    let (input, info) = problem.split();
    let handle = EngineHandle::from_input(input).map_err(|e| anyhow!("engine: {e}"))?;

    let mut settings = match args.eps_grad {
        Some(eps) => SolveSettings::gradient_norm(eps),
        None => SolveSettings::objective_gap(args.eps),
    }
    .with_cap(args.cap)
    .with_record_inner(args.record_inner);
    if let Some(nbar) = nbar_hint_for(&info, &handle) {
        settings = settings.with_nbar_hint(nbar);
    }
    let run = run_scheme(
        &info,
        &handle,
        scheme,
        &start,
        &settings,
        StopRule::Native,
        args.n_restart,
        true,
    )?;

    let out_dir = resolve_out_dir(&args.out_dir)?;
    let optimal = info.certificate.as_ref().map(|c| c.optimal_value());
    csvout::write_trace(
        &out_dir.join(format!("{}.csv", args.tag)),
        &run.trace,
        optimal,
    )?;
    let wrote_inner =
        csvout::write_inner(&out_dir.join(format!("{}_inner.csv", args.tag)), &run.trace)?;
    csvout::write_series(
        &out_dir.join(format!("{}_series.csv", args.tag)),
        &run.series,
    )?;
    let has_metric = run.series.iter().any(|p| p.metric.is_some());
    formats::save_json(
        &RunMeta {
            scheme: scheme.label().to_string(),
            family: info.label.clone(),
            epsilon: args.eps_grad.unwrap_or(args.eps),
            l_f: handle.as_dyn().l_f(),
            a_f: handle.as_dyn().a_f(),
            total_iterations: run.trace.total_iterations(),
            converged: run.trace.is_complete(),
            optimal_value: optimal,
            has_distance_metric: has_metric,
        },
        &out_dir.join(format!("{}_meta.json", args.tag)),
    )?;

    let final_gap = match optimal {
        Some(f_star) => run.trace.final_value() - f_star,
        None => run.trace.final_value(),
    };
    println!(
        "scheme={} iterations={} rounds={} final_gap={:e} complete={}{}",
        scheme.label(),
        run.trace.total_iterations(),
        run.trace.rounds(),
        final_gap,
        run.trace.is_complete(),
        if wrote_inner { " inner=recorded" } else { "" }
    );
    Ok(if run.trace.is_complete() {
        EXIT_OK
    } else {
        EXIT_CAP
    })
}
