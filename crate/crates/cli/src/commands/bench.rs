//! `bench`: run a scheme list over a generated batch and summarize.

use std::path::PathBuf;
use std::time::Instant;

use afom_restart_core::suite::{batch, BatchOptions, EngineHandle};
use afom_restart_core::SolveSettings;
use anyhow::{anyhow, bail, Result};
use clap::Args;

use super::{resolve_out_dir, GeneratorArgs, EXIT_OK};
use crate::csvout;
use crate::formats::{self, BenchConfig};
use crate::runner::{run_scheme, Scheme, StopRule};
use crate::summary::{BenchmarkSummary, InstanceRecord};

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,

    /// Batch configuration document (overrides generator flags).
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long, default_value_t = 50)]
    pub count: usize,

    /// Comma-separated scheme list.
    #[arg(long, default_value = "none,adaptive,fixed,functional,gradient")]
    pub schemes: String,

    /// Stop rule: relative decision-space distance to the certified optimum,
    /// or each scheme's native exit.
    #[arg(long, default_value = "rel-primal", value_parser = ["rel-primal", "eps-gap"])]
    pub stop_rule: String,

    /// Tolerance of the rel-primal stop rule.
    #[arg(long, default_value_t = 1e-5)]
    pub rel_tol: f64,

    /// Native exit tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,

    #[arg(long, default_value_t = 5_000_000)]
    pub cap: usize,

    /// Target start gap for composite families.
    #[arg(long, default_value_t = 50.0)]
    pub initial_gap: f64,

    /// Fixed-rate block override.
    #[arg(long)]
    pub n_restart: Option<usize>,

    #[arg(long)]
    pub out_dir: Option<PathBuf>,

    #[arg(long, default_value = "bench")]
    pub tag: String,
}

pub fn run(args: &BenchArgs) -> Result<u8> {
    let (spec, count, schemes, stop, eps, initial_gap) = match &args.config {
        Some(path) => {
            let config: BenchConfig = formats::load_json(path)?;
            let stop_rule = config
                .stop_rule
                .clone()
                .unwrap_or_else(|| "rel-primal".into());
            let stop = parse_stop_rule(
                &stop_rule,
                config.relative_tolerance.unwrap_or(args.rel_tol),
            )?;
            (
                config.generator.to_spec(),
                config.count,
                formats::parse_schemes(&config.schemes.join(","))?,
                stop,
                config.epsilon.unwrap_or(args.eps),
                config.initial_gap,
            )
        }
        None => (
            args.generator.to_spec()?,
            args.count,
            formats::parse_schemes(&args.schemes)?,
            parse_stop_rule(&args.stop_rule, args.rel_tol)?,
            args.eps,
            args.initial_gap,
        ),
    };
    if count == 0 {
        bail!("batch count must be at least 1");
    }
    let instances = batch(&spec, &BatchOptions { count, initial_gap })
        .map_err(|e| anyhow!("batch generation: {e}"))?;

    let mut summary = BenchmarkSummary::default();
    for (index, instance) in instances.into_iter().enumerate() {
        let start = instance.start;
        let (input, info) = instance.problem.split();
        let handle = EngineHandle::from_input(input).map_err(|e| anyhow!("engine: {e}"))?;
        let settings = SolveSettings::objective_gap(eps).with_cap(args.cap);
        for scheme_name in &schemes {
            let scheme = Scheme::parse(scheme_name)?;
            let clock = Instant::now();
            let run = run_scheme(
                &info,
                &handle,
                scheme,
                &start,
                &settings,
                stop,
                args.n_restart,
                false,
            )?;
            summary.push_instance(InstanceRecord {
                scheme: scheme.label().to_string(),
                index,
                iterations: run.iterations,
                converged: run.converged,
                final_metric: run.final_metric,
                wall_seconds: clock.elapsed().as_secs_f64(),
            });
        }
    }
    summary.finalize()?;

    let out_dir = resolve_out_dir(&args.out_dir)?;
    std::fs::write(
        out_dir.join(format!("{}_summary.csv", args.tag)),
        csvout::summary_csv(&summary),
    )?;
    std::fs::write(
        out_dir.join(format!("{}_instances.csv", args.tag)),
        csvout::instances_csv(&summary),
    )?;
    print!("{}", summary.table());
    if summary.any_capped() {
        eprintln!("warning: some runs hit the iteration cap before the stop rule");
    }
    Ok(EXIT_OK)
}

fn parse_stop_rule(name: &str, rel_tol: f64) -> Result<StopRule> {
    Ok(match name {
        "rel-primal" => StopRule::RelativeDecision { tolerance: rel_tol },
        "eps-gap" => StopRule::Native,
        other => bail!("unknown stop rule `{other}`"),
    })
}
