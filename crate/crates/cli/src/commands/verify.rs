//! `verify`: run every invariant checker against one instance and report
//! pass/fail lines with worst margins.

use std::path::PathBuf;

use afom_restart_core::bounds::{check_trace_against_bounds, nbar_rho, phi, BoundsReport};
use afom_restart_core::engine::check_engine_conformance;
use afom_restart_core::problem::verify_qfg;
use afom_restart_core::rng::Pcg32;
use afom_restart_core::suite::{generate, start_with_gap, EngineHandle, ProblemInfo, SolverInput};
use afom_restart_core::{AfomEngine, AfomRun, RestartTrace, SolveSettings};
use anyhow::{anyhow, bail, Result};
use clap::Args;

use super::{GeneratorArgs, EXIT_OK, EXIT_VERIFY};
use crate::formats;
use crate::runner::{run_scheme, Scheme, StopRule};

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,

    #[arg(long)]
    pub problem: Option<PathBuf>,

    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,

    /// Envelope check horizon.
    #[arg(long, default_value_t = 100)]
    pub k_max: usize,

    #[arg(long, default_value_t = 2_000_000)]
    pub cap: usize,

    /// Start gap for composite instances.
    #[arg(long, default_value_t = 50.0)]
    pub gap0: f64,

    /// Deliberate fault injection for exercising the checkers
    /// (`understated-rate` reports a tenth of the true envelope constant).
    #[arg(long, hide = true)]
    pub inject_fault: Option<String>,
}

struct Report {
    failed: bool,
}

impl Report {
    fn line(&mut self, name: &str, pass: bool, detail: &str) {
        println!(
            "{:<42} {} {detail}",
            name,
            if pass { "PASS" } else { "FAIL" }
        );
        self.failed |= !pass;
    }

    fn unavailable(&mut self, name: &str, why: &str) {
        println!("{name:<42} unavailable ({why})");
    }
}

/// Engine wrapper reporting a deliberately understated envelope constant.
struct UnderstatedRate<'a>(&'a dyn AfomEngine);

impl AfomEngine for UnderstatedRate<'_> {
    fn dimension(&self) -> usize {
        self.0.dimension()
    }
    fn l_f(&self) -> f64 {
        self.0.l_f()
    }
    fn a_f(&self) -> f64 {
        self.0.l_f() / 10.0
    }
    fn objective_value(&self, x: &[f64]) -> f64 {
        self.0.objective_value(x)
    }
    fn gradient_map(&self, x: &[f64]) -> Vec<f64> {
        self.0.gradient_map(x)
    }
    fn start(&self, x0: &[f64]) -> Box<dyn AfomRun + '_> {
        self.0.start(x0)
    }
}

pub fn run(args: &VerifyArgs) -> Result<u8> {
    let problem = match &args.problem {
        Some(path) => formats::load_problem(path)?,
        None => generate(&args.generator.to_spec()?).map_err(|e| anyhow!("generator: {e}"))?,
    };
    let start = match &problem.input {
        SolverInput::Composite(objective) => match &problem.certificate {
            Some(certificate) => {
                let mut rng = Pcg32::with_stream(problem.spec.seed(), 6);
                let direction = rng.unit_direction(objective.dimension());
                start_with_gap(objective, certificate, &direction, args.gap0)
                    .map_err(|e| anyhow!("start sampling: {e}"))?
            }
            None => vec![0.5; objective.dimension()],
        },
        SolverInput::Dual(dual) => vec![0.0; dual.dual_dimension()],
    };
    let (input, info) = problem.split();
    let handle = EngineHandle::from_input(input).map_err(|e| anyhow!("engine: {e}"))?;

    let fault = match args.inject_fault.as_deref() {
        None => false,
        Some("understated-rate") => true,
        Some(other) => bail!("unknown fault `{other}`"),
    };
    let base_engine = handle.as_dyn();
    let understated = UnderstatedRate(base_engine);
    let engine: &dyn AfomEngine = if fault { &understated } else { base_engine };

    let mut report = Report { failed: false };

    // Certificate sanity.
    match (&info.certificate, &problem_objective(&info, &handle)) {
        (Some(cert), Some(objective)) => match cert.validate(objective) {
            Ok(()) => report.line("certificate consistency", true, ""),
            Err(e) => report.line("certificate consistency", false, &format!("{e}")),
        },
        _ => {}
    }

    // First-step decrease and gap envelope.
    match &info.certificate {
        Some(cert) if cert.has_projection() => {
            let conf = check_engine_conformance(engine, cert, &[start.clone()], args.k_max)
                .map_err(|e| anyhow!("envelope check: {e}"))?;
            report.line(
                "first-step decrease",
                conf.worst_decrease_slack() >= -conf.tolerance,
                &format!("worst slack {:e}", conf.worst_decrease_slack()),
            );
            report.line(
                "objective-gap envelope",
                conf.worst_envelope_slack() >= -conf.tolerance,
                &format!("worst slack {:e}", conf.worst_envelope_slack()),
            );
        }
        _ => report.unavailable("engine conformance", "no projection-bearing certificate"),
    }

    // Adaptive run with recorded inner sequences.
    let settings = SolveSettings::objective_gap(args.eps)
        .with_cap(args.cap)
        .with_record_inner(true);
    let run = run_scheme(
        &info,
        &handle,
        Scheme::Adaptive,
        &start,
        &settings,
        StopRule::Native,
        None,
        false,
    )?;
    let trace = &run.trace;
    report.line(
        "adaptive run completion",
        trace.is_complete(),
        &format!("{} iterations", trace.total_iterations()),
    );

    check_trace_structure(&mut report, engine, trace);
    check_running_minimum_replay(&mut report, engine, trace, &start);

    // Bound checks need the growth certificate and the starting gap.
    match (&info.qfg, &info.certificate) {
        (Some(qfg), Some(cert)) => {
            let gap0 = engine.objective_value(&start) - cert.optimal_value();
            let bounds = BoundsReport::compute(engine.a_f(), qfg.mu(), gap0, args.eps, None)
                .map_err(|e| anyhow!("bounds: {e}"))?;
            let verdict = check_trace_against_bounds(trace, &bounds)
                .map_err(|e| anyhow!("trace check: {e}"))?;
            for check in &verdict.checks {
                let detail = if check.applicable {
                    format!("margin {:e}", check.margin)
                } else {
                    String::from("(vacuous)")
                };
                report.line(check.name, check.pass, &detail);
            }
        }
        _ => report.unavailable("trace-vs-bound checks", "no growth certificate"),
    }

    // Quadratic growth on sampled points.
    match (
        &info.qfg,
        &info.certificate,
        problem_objective(&info, &handle),
    ) {
        (Some(qfg), Some(cert), Some(objective)) if cert.has_projection() => {
            let mut rng = Pcg32::with_stream(info.spec.seed(), 8);
            let samples: Vec<Vec<f64>> = (0..100)
                .map(|_| {
                    cert.optimal_point()
                        .iter()
                        .map(|v| v + 0.3 * rng.normal())
                        .collect()
                })
                .collect();
            match verify_qfg(objective, cert, qfg, &samples) {
                Ok(qr) => report.line(
                    "quadratic growth on samples",
                    qr.pass,
                    &format!("min ratio {:.6}", qr.min_ratio),
                ),
                Err(e) => report.line("quadratic growth on samples", false, &format!("{e}")),
            }
        }
        _ => report.unavailable(
            "quadratic growth on samples",
            "needs growth certificate and projection",
        ),
    }

    // Ratio-potential grid check (problem independent).
    let grid_pass = phi_grid_minimum();
    report.line(
        "ratio potential grid minimum",
        grid_pass.0 >= 15.0 - 1e-9,
        &format!("min {:.12}", grid_pass.0),
    );
    report.line("ratio potential at its two minimizers", grid_pass.1, "");

    // Contraction horizon echo, when certified.
    if let Some(qfg) = &info.qfg {
        if let Ok(nbar) = nbar_rho(engine.a_f(), qfg.mu()) {
            println!("contraction horizon: {nbar}");
        }
    }

    Ok(if report.failed { EXIT_VERIFY } else { EXIT_OK })
}

fn problem_objective<'a>(
    _info: &'a ProblemInfo,
    handle: &'a EngineHandle,
) -> Option<&'a afom_restart_core::CompositeObjective> {
    match handle {
        EngineHandle::Fista(engine) => Some(engine.oracle()),
        EngineHandle::DualQp(_) => None,
    }
}

fn check_trace_structure(report: &mut Report, engine: &dyn AfomEngine, trace: &RestartTrace) {
    let m = trace.inner_counts();
    let n = trace.lower_bounds();
    let s = trace.ratios();
    let rounds = trace.rounds();
    let mut interleaved = true;
    let mut ratios_ok = true;
    for j in 0..rounds {
        interleaved &= (m[j] as f64) <= n[j] + 1e-15 && n[j] <= m[j + 1] as f64;
        if j >= 2 {
            ratios_ok &= s[j] > 0.0 && s[j] <= 1.0;
        } else {
            ratios_ok &= s[j] == 0.0;
        }
    }
    report.line("count/bound interleaving", interleaved, "");
    report.line("decrease ratios in (0,1]", ratios_ok, "");
    let mut monotone = true;
    for w in trace.values().windows(2) {
        monotone &= w[1] <= w[0];
    }
    report.line("outer values non-increasing", monotone, "");
    // Gradient-mapping norm against the recorded decrease.
    let two_l = 2.0 * engine.l_f();
    let mut worst = f64::INFINITY;
    for j in 0..rounds {
        let g = engine.gradient_map(&trace.points()[j]);
        let g_sq: f64 = g.iter().map(|v| v * v).sum();
        let slack = two_l * (trace.values()[j] - trace.values()[j + 1]) - g_sq;
        worst = worst.min(slack + 1e-9 * (1.0 + g_sq));
    }
    report.line(
        "gradient-norm decrease inequality",
        worst >= 0.0,
        &format!("worst slack {worst:e}"),
    );
}

/// Replay the raw engine sequence of the first round and compare with the
/// recorded running-minimum values.
fn check_running_minimum_replay(
    report: &mut Report,
    engine: &dyn AfomEngine,
    trace: &RestartTrace,
    start: &[f64],
) {
    let Some(inner) = trace.inner_runs() else {
        report.unavailable("running-minimum replay", "inner sequences not recorded");
        return;
    };
    let Some(first) = inner.first() else {
        report.unavailable("running-minimum replay", "trace has no rounds");
        return;
    };
    let mut run = engine.start(start);
    let mut best = engine.objective_value(start);
    let mut exact = true;
    for k in 1..=first.exit_iteration {
        let raw = run.step();
        let value = engine.objective_value(raw);
        if value <= best {
            best = value;
        }
        exact &= first.values[k] == best;
    }
    report.line("running-minimum replay", exact, "");
}

/// Grid minimum of the ratio potential over (1e-6, sqrt(15)/4] and the value
/// at its two exact minimizers.
fn phi_grid_minimum() -> (f64, bool) {
    let hi = (15.0f64).sqrt() / 4.0;
    let lo = 1e-6;
    let n = 100_000;
    let mut min = f64::INFINITY;
    for i in 0..n {
        let s = lo + (hi - lo) * ((i + 1) as f64) / (n as f64);
        min = min.min(phi(s).expect("grid avoids zero"));
    }
    let at_quarter = (phi(0.25).unwrap() - 15.0).abs() <= 1e-9;
    let at_upper = (phi(hi).unwrap() - 15.0).abs() <= 1e-9;
    (min, at_quarter && at_upper)
}
