//! Restart schemes over accelerated first-order engines.
//!
//! All schemes produce a uniform [`RestartTrace`]: outer points, objective
//! values, inner iteration counts, the adaptive scheme's lower bounds and
//! ratios, and the total engine iteration count. Observers receive every raw
//! engine iterate, which lets callers impose external stop rules (e.g. a
//! relative-distance criterion against a certified optimum) uniformly across
//! schemes.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::engine::AfomEngine;
use crate::linalg;
use crate::math;

/// Default hard stop on total engine iterations.
pub const DEFAULT_ITERATION_CAP: usize = 10_000_000;

/// Native exit rule of a scheme run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExitRule {
    /// Stop once the objective decrease between consecutive outer points is
    /// at most the given tolerance.
    ObjectiveGap(f64),
    /// Stop once the gradient-mapping norm falls below the given tolerance.
    GradientNorm(f64),
}

impl ExitRule {
    fn tolerance(&self) -> f64 {
        match self {
            ExitRule::ObjectiveGap(e) | ExitRule::GradientNorm(e) => *e,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSettings {
    pub exit: ExitRule,
    pub max_total_iterations: usize,
    pub record_inner: bool,
    /// Contraction horizon, when known; only used to flag fixed-rate traces
    /// whose block length is too short for the convergence guarantee.
    pub nbar_hint: Option<f64>,
}

impl SolveSettings {
    pub fn objective_gap(epsilon: f64) -> Self {
        SolveSettings {
            exit: ExitRule::ObjectiveGap(epsilon),
            max_total_iterations: DEFAULT_ITERATION_CAP,
            record_inner: false,
            nbar_hint: None,
        }
    }

    pub fn gradient_norm(epsilon: f64) -> Self {
        SolveSettings {
            exit: ExitRule::GradientNorm(epsilon),
            ..SolveSettings::objective_gap(epsilon)
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.max_total_iterations = cap;
        self
    }

    pub fn with_record_inner(mut self, record: bool) -> Self {
        self.record_inner = record;
        self
    }

    pub fn with_nbar_hint(mut self, nbar: f64) -> Self {
        self.nbar_hint = Some(nbar);
        self
    }

    fn validate(&self) -> Result<(), SolveError> {
        if !(self.exit.tolerance() > 0.0) {
            return Err(SolveError::InvalidSettings(
                "exit tolerance must be positive",
            ));
        }
        if self.max_total_iterations < 1 {
            return Err(SolveError::InvalidSettings(
                "iteration cap must be at least 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepSignal {
    Continue,
    Stop,
}

/// Callback invoked on every raw engine iterate across a scheme run.
pub trait StepObserver {
    fn on_step(&mut self, total_iterations: usize, iterate: &[f64], value: f64) -> StepSignal;
}

/// Observer that never stops the run.
pub struct NoObserver;

impl StepObserver for NoObserver {
    fn on_step(&mut self, _: usize, _: &[f64], _: f64) -> StepSignal {
        StepSignal::Continue
    }
}

#[derive(Debug)]
pub enum SolveError {
    /// Starting point has infinite objective value.
    StartOutsideDomain,
    /// Objective returned NaN; oracle misconfiguration.
    NonFiniteValue,
    InvalidSettings(&'static str),
    /// Iteration cap hit inside a standalone inner run; carries the partial run.
    InnerCapExceeded(Box<InnerRun>),
    /// Iteration cap hit inside a scheme; carries the partial trace.
    CapExceeded(Box<RestartTrace>),
    /// A restart round reproduced its starting point bit-for-bit without
    /// meeting the exit rule; the deterministic recursion can never
    /// terminate, so the requested tolerance is below what the objective
    /// resolves in floating point. Carries the trace up to the fixed point.
    Stalled(Box<RestartTrace>),
}

impl core::fmt::Display for SolveError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SolveError::StartOutsideDomain => write!(f, "starting point is outside the domain"),
            SolveError::NonFiniteValue => write!(f, "objective oracle returned NaN"),
            SolveError::InvalidSettings(what) => write!(f, "invalid settings: {what}"),
            SolveError::InnerCapExceeded(run) => {
                write!(f, "iteration cap exceeded after {} inner iterations", run.exit_iteration)
            }
            SolveError::CapExceeded(trace) => {
                write!(f, "iteration cap exceeded after {} iterations", trace.total_iterations())
            }
            SolveError::Stalled(trace) => write!(
                f,
                "stalled at a fixed point after {} iterations; exit tolerance below floating-point resolution",
                trace.total_iterations()
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SolveError {}

/// Record of one performance-exit inner run.
#[derive(Debug, Clone)]
pub struct InnerRun {
    /// Exit iteration `m`.
    pub exit_iteration: usize,
    /// Output point (the best iterate seen).
    pub output: Vec<f64>,
    /// Tracked objective values `f(x_0), …, f(x_m)`; non-increasing by
    /// construction for performance-exit runs.
    pub values: Vec<f64>,
}

impl InnerRun {
    /// Exit iteration satisfies the requested real-valued lower bound.
    pub fn lower_bound_holds(&self, lower: f64) -> bool {
        self.exit_iteration as f64 >= lower
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicRule {
    /// Reset momentum when the objective stops decreasing between raw iterates.
    Functional,
    /// Reset momentum when the step moves against the gradient mapping.
    Gradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeKind {
    Adaptive,
    FixedRate { block: usize },
    Heuristic { rule: HeuristicRule },
    NonRestarted,
}

impl SchemeKind {
    pub fn label(&self) -> &'static str {
        match self {
            SchemeKind::Adaptive => "adaptive",
            SchemeKind::FixedRate { .. } => "fixed",
            SchemeKind::Heuristic {
                rule: HeuristicRule::Functional,
            } => "functional",
            SchemeKind::Heuristic {
                rule: HeuristicRule::Gradient,
            } => "gradient",
            SchemeKind::NonRestarted => "none",
        }
    }
}

/// Uniform record of a scheme run.
#[derive(Debug, Clone)]
pub struct RestartTrace {
    scheme: SchemeKind,
    exit: ExitRule,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    inner_counts: Vec<usize>,
    lower_bounds: Vec<f64>,
    ratios: Vec<f64>,
    inner_runs: Option<Vec<InnerRun>>,
    total_iterations: usize,
    stopped_by_observer: bool,
    complete: bool,
    bound_applicable: Option<bool>,
    ratio_guard_events: usize,
}

impl RestartTrace {
    fn new(scheme: SchemeKind, exit: ExitRule, z0: &[f64], f0: f64, record_inner: bool) -> Self {
        RestartTrace {
            scheme,
            exit,
            points: vec![z0.to_vec()],
            values: vec![f0],
            inner_counts: vec![1],
            lower_bounds: Vec::new(),
            ratios: Vec::new(),
            inner_runs: if record_inner { Some(Vec::new()) } else { None },
            total_iterations: 0,
            stopped_by_observer: false,
            complete: true,
            bound_applicable: None,
            ratio_guard_events: 0,
        }
    }

    fn push_round(&mut self, ratio: f64, lower_bound: f64, run: InnerRun, value: f64) {
        self.total_iterations += run.exit_iteration;
        self.points.push(run.output.clone());
        self.values.push(value);
        self.inner_counts.push(run.exit_iteration);
        self.ratios.push(ratio);
        self.lower_bounds.push(lower_bound);
        if let Some(inner) = self.inner_runs.as_mut() {
            inner.push(run);
        }
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    pub fn exit_rule(&self) -> ExitRule {
        self.exit
    }

    /// Number of completed restart rounds (inner calls).
    pub fn rounds(&self) -> usize {
        self.points.len() - 1
    }

    /// Outer points `z_0, …, z_{rounds}`.
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Objective values at the outer points.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Inner counts `m_0 = 1, m_1, …`; entry `j+1` is the length of round `j`.
    pub fn inner_counts(&self) -> &[usize] {
        &self.inner_counts
    }

    /// Iteration lower bounds `n_j`, one per round.
    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower_bounds
    }

    /// Decrease ratios `s_j`, one per round (zero outside the adaptive scheme).
    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn inner_runs(&self) -> Option<&[InnerRun]> {
        self.inner_runs.as_deref()
    }

    /// Total engine iterations consumed by the run.
    pub fn total_iterations(&self) -> usize {
        self.total_iterations
    }

    pub fn final_point(&self) -> &[f64] {
        self.points.last().expect("trace holds the start")
    }

    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("trace holds the start")
    }

    pub fn largest_inner_count(&self) -> usize {
        self.inner_counts[1..].iter().copied().max().unwrap_or(0)
    }

    pub fn stopped_by_observer(&self) -> bool {
        self.stopped_by_observer
    }

    /// False when the run was cut short by the iteration cap.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// Fixed-rate only: whether the block length exceeds the known
    /// contraction horizon, making the convergence guarantee applicable.
    pub fn bound_applicable(&self) -> Option<bool> {
        self.bound_applicable
    }

    /// Rounds where the ratio denominator degenerated to a nonpositive value.
    pub fn ratio_guard_events(&self) -> usize {
        self.ratio_guard_events
    }

    #[cfg(test)]
    pub(crate) fn fabricate(
        scheme: SchemeKind,
        values: Vec<f64>,
        inner_counts: Vec<usize>,
        lower_bounds: Vec<f64>,
        ratios: Vec<f64>,
    ) -> RestartTrace {
        let total = inner_counts[1..].iter().sum();
        let dim_placeholder = vec![vec![0.0]; values.len()];
        RestartTrace {
            scheme,
            exit: ExitRule::ObjectiveGap(1e-9),
            points: dim_placeholder,
            values,
            inner_counts,
            lower_bounds,
            ratios,
            inner_runs: None,
            total_iterations: total,
            stopped_by_observer: false,
            complete: true,
            bound_applicable: None,
            ratio_guard_events: 0,
        }
    }
}

fn entry_value(engine: &dyn AfomEngine, z0: &[f64]) -> Result<f64, SolveError> {
    let f0 = engine.objective_value(z0);
    if f0.is_nan() {
        return Err(SolveError::NonFiniteValue);
    }
    if f0 == f64::INFINITY {
        return Err(SolveError::StartOutsideDomain);
    }
    Ok(f0)
}

/// One performance-exit inner run; shared by the standalone operation and
/// the adaptive scheme.
fn inner_run(
    engine: &dyn AfomEngine,
    start: &[f64],
    lower_iterations: f64,
    budget: usize,
    observer: &mut dyn StepObserver,
    iterations_before: usize,
) -> Result<(InnerRun, bool), SolveError> {
    if lower_iterations.is_nan() || lower_iterations < 0.0 {
        return Err(SolveError::InvalidSettings(
            "iteration lower bound must be a nonnegative real",
        ));
    }
    let f0 = entry_value(engine, start)?;
    let mut values = vec![f0];
    let mut best = start.to_vec();
    let mut best_value = f0;
    let mut run = engine.start(start);
    let mut k = 0usize;
    loop {
        if k >= budget {
            return Err(SolveError::InnerCapExceeded(Box::new(InnerRun {
                exit_iteration: k,
                output: best,
                values,
            })));
        }
        k += 1;
        let raw = run.step();
        let raw_value = engine.objective_value(raw);
        if raw_value.is_nan() {
            return Err(SolveError::NonFiniteValue);
        }
        // Ties adopt the new iterate.
        if raw_value <= best_value {
            best_value = raw_value;
            best = raw.to_vec();
        }
        values.push(best_value);
        let stop = observer.on_step(iterations_before + k, raw, raw_value) == StepSignal::Stop;
        let half = k / 2;
        // Exit once at least `lower_iterations` steps were taken and the
        // second-half decrease is at most a third of the first-half decrease.
        // Exact floating-point comparison; both sides are nonnegative by the
        // monotone construction.
        let exit = (k as f64) >= lower_iterations
            && values[half] - best_value <= (values[0] - values[half]) / 3.0;
        if stop || exit {
            return Ok((
                InnerRun {
                    exit_iteration: k,
                    output: best,
                    values,
                },
                stop,
            ));
        }
    }
}

/// Run the engine from `start` until the performance-based exit condition
/// fires at some iteration `k ≥ lower_iterations` (a real-valued bound).
///
/// The tracked sequence takes each new raw iterate only when it does not
/// increase the objective, so the recorded values are non-increasing.
pub fn afom_with_exit(
    engine: &dyn AfomEngine,
    start: &[f64],
    lower_iterations: f64,
    cap: usize,
) -> Result<InnerRun, SolveError> {
    let (run, _) = inner_run(engine, start, lower_iterations, cap, &mut NoObserver, 0)?;
    Ok(run)
}

/// Adaptive restart scheme: repeated performance-exit runs whose iteration
/// lower bounds are driven by the observed decrease ratios.
pub fn restart_adaptive(
    engine: &dyn AfomEngine,
    z0: &[f64],
    settings: &SolveSettings,
) -> Result<RestartTrace, SolveError> {
    restart_adaptive_observed(engine, z0, settings, &mut NoObserver)
}

pub fn restart_adaptive_observed(
    engine: &dyn AfomEngine,
    z0: &[f64],
    settings: &SolveSettings,
    observer: &mut dyn StepObserver,
) -> Result<RestartTrace, SolveError> {
    settings.validate()?;
    let f0 = entry_value(engine, z0)?;
    let mut trace = RestartTrace::new(
        SchemeKind::Adaptive,
        settings.exit,
        z0,
        f0,
        settings.record_inner,
    );
    let mut round = 0usize;
    loop {
        // Decrease ratio s_j: zero for the first two rounds, then the square
        // root of the last-gap / two-gap quotient. A nonpositive denominator
        // can only arise from roundoff at extreme accuracy; fall back to zero
        // and count the event.
        let ratio = if round >= 2 {
            let num = trace.values[round - 1] - trace.values[round];
            let den = trace.values[round - 2] - trace.values[round];
            if den > 0.0 && num >= 0.0 {
                math::sqrt(num / den)
            } else {
                trace.ratio_guard_events += 1;
                0.0
            }
        } else {
            0.0
        };
        let m_current = trace.inner_counts[round] as f64;
        let m_previous = if round == 0 {
            1.0
        } else {
            trace.inner_counts[round - 1] as f64
        };
        let lower_bound = m_current.max(4.0 * ratio * m_previous);
        let budget = settings.max_total_iterations - trace.total_iterations;
        let start = trace.points[round].clone();
        match inner_run(
            engine,
            &start,
            lower_bound,
            budget,
            observer,
            trace.total_iterations,
        ) {
            Ok((run, stopped)) => {
                let value = engine.objective_value(&run.output);
                trace.push_round(ratio, lower_bound, run, value);
                if stopped {
                    trace.stopped_by_observer = true;
                    return Ok(trace);
                }
                let exit = match settings.exit {
                    ExitRule::ObjectiveGap(eps) => {
                        trace.values[round] - trace.values[round + 1] <= eps
                    }
                    ExitRule::GradientNorm(eps) => {
                        linalg::norm2(&engine.gradient_map(&trace.points[round])) <= eps
                    }
                };
                if exit {
                    return Ok(trace);
                }
                // Two consecutive rounds frozen at the same point with the
                // same length force the next lower bound back to the same
                // value, so the recursion cycles forever; fail fast instead
                // of spinning until the cap.
                if round >= 1
                    && trace.points[round + 1] == trace.points[round]
                    && trace.points[round] == trace.points[round - 1]
                    && trace.inner_counts[round + 1] == trace.inner_counts[round]
                {
                    trace.complete = false;
                    return Err(SolveError::Stalled(Box::new(trace)));
                }
            }
            Err(SolveError::InnerCapExceeded(partial)) => {
                let value = engine.objective_value(&partial.output);
                trace.push_round(ratio, lower_bound, *partial, value);
                trace.complete = false;
                return Err(SolveError::CapExceeded(Box::new(trace)));
            }
            Err(other) => return Err(other),
        }
        round += 1;
    }
}

/// Fixed-rate restart: raw engine restarts every `block` iterations until the
/// exit rule fires between consecutive outer points.
pub fn restart_fixed_rate(
    engine: &dyn AfomEngine,
    v0: &[f64],
    block: usize,
    settings: &SolveSettings,
) -> Result<RestartTrace, SolveError> {
    restart_fixed_rate_observed(engine, v0, block, settings, &mut NoObserver)
}

pub fn restart_fixed_rate_observed(
    engine: &dyn AfomEngine,
    v0: &[f64],
    block: usize,
    settings: &SolveSettings,
    observer: &mut dyn StepObserver,
) -> Result<RestartTrace, SolveError> {
    settings.validate()?;
    if block < 1 {
        return Err(SolveError::InvalidSettings(
            "block length must be at least 1",
        ));
    }
    let f0 = entry_value(engine, v0)?;
    let mut trace = RestartTrace::new(
        SchemeKind::FixedRate { block },
        settings.exit,
        v0,
        f0,
        settings.record_inner,
    );
    trace.bound_applicable = settings.nbar_hint.map(|nbar| (block as f64) > nbar);
    let mut round = 0usize;
    loop {
        let start = trace.points[round].clone();
        let mut run = engine.start(&start);
        let mut values = vec![trace.values[round]];
        let mut taken = 0usize;
        let mut stopped = false;
        while taken < block {
            if trace.total_iterations + taken >= settings.max_total_iterations {
                let point = run.current().to_vec();
                let value = engine.objective_value(&point);
                trace.push_round(
                    0.0,
                    block as f64,
                    InnerRun {
                        exit_iteration: taken,
                        output: point,
                        values,
                    },
                    value,
                );
                trace.complete = false;
                return Err(SolveError::CapExceeded(Box::new(trace)));
            }
            taken += 1;
            let raw = run.step();
            let value = engine.objective_value(raw);
            if value.is_nan() {
                return Err(SolveError::NonFiniteValue);
            }
            values.push(value);
            if observer.on_step(trace.total_iterations + taken, raw, value) == StepSignal::Stop {
                stopped = true;
                break;
            }
        }
        let point = run.current().to_vec();
        let value = engine.objective_value(&point);
        trace.push_round(
            0.0,
            block as f64,
            InnerRun {
                exit_iteration: taken,
                output: point,
                values,
            },
            value,
        );
        if stopped {
            trace.stopped_by_observer = true;
            return Ok(trace);
        }
        let exit = match settings.exit {
            ExitRule::ObjectiveGap(eps) => trace.values[round] - trace.values[round + 1] <= eps,
            ExitRule::GradientNorm(eps) => {
                linalg::norm2(&engine.gradient_map(&trace.points[round + 1])) <= eps
            }
        };
        if exit {
            return Ok(trace);
        }
        // Constant block length: a frozen round repeats forever.
        if trace.points[round + 1] == trace.points[round] {
            trace.complete = false;
            return Err(SolveError::Stalled(Box::new(trace)));
        }
        round += 1;
    }
}

/// Classic per-step heuristic restarts: momentum is reset whenever the rule
/// fires, continuing from the iterate that triggered it.
///
/// The native exit is evaluated at every step through the gradient mapping;
/// in objective-gap mode the threshold is the gradient-norm level implied by
/// the gap tolerance (`‖g‖² ≤ 2 l_f ε`).
pub fn restart_heuristic(
    engine: &dyn AfomEngine,
    z0: &[f64],
    rule: HeuristicRule,
    settings: &SolveSettings,
) -> Result<RestartTrace, SolveError> {
    restart_heuristic_observed(engine, z0, rule, settings, &mut NoObserver)
}

pub fn restart_heuristic_observed(
    engine: &dyn AfomEngine,
    z0: &[f64],
    rule: HeuristicRule,
    settings: &SolveSettings,
    observer: &mut dyn StepObserver,
) -> Result<RestartTrace, SolveError> {
    stepwise_run(engine, z0, Some(rule), settings, observer)
}

/// The engine without any restarts, same exit semantics as the heuristics.
pub fn run_non_restarted(
    engine: &dyn AfomEngine,
    z0: &[f64],
    settings: &SolveSettings,
) -> Result<RestartTrace, SolveError> {
    run_non_restarted_observed(engine, z0, settings, &mut NoObserver)
}

pub fn run_non_restarted_observed(
    engine: &dyn AfomEngine,
    z0: &[f64],
    settings: &SolveSettings,
    observer: &mut dyn StepObserver,
) -> Result<RestartTrace, SolveError> {
    stepwise_run(engine, z0, None, settings, observer)
}

fn stepwise_run(
    engine: &dyn AfomEngine,
    z0: &[f64],
    rule: Option<HeuristicRule>,
    settings: &SolveSettings,
    observer: &mut dyn StepObserver,
) -> Result<RestartTrace, SolveError> {
    settings.validate()?;
    let f0 = entry_value(engine, z0)?;
    let kind = match rule {
        Some(rule) => SchemeKind::Heuristic { rule },
        None => SchemeKind::NonRestarted,
    };
    let mut trace = RestartTrace::new(kind, settings.exit, z0, f0, settings.record_inner);
    let gradient_threshold = match settings.exit {
        ExitRule::ObjectiveGap(eps) => math::sqrt(2.0 * engine.l_f() * eps),
        ExitRule::GradientNorm(eps) => eps,
    };
    let mut run = engine.start(z0);
    let mut previous = z0.to_vec();
    let mut previous_value = f0;
    let mut previous_map = engine.gradient_map(z0);
    let mut segment_values = vec![f0];
    let mut segment_len = 0usize;
    loop {
        if trace.total_iterations + segment_len >= settings.max_total_iterations {
            let value = engine.objective_value(&previous);
            trace.push_round(
                0.0,
                0.0,
                InnerRun {
                    exit_iteration: segment_len,
                    output: previous,
                    values: segment_values,
                },
                value,
            );
            trace.complete = false;
            return Err(SolveError::CapExceeded(Box::new(trace)));
        }
        segment_len += 1;
        let raw = run.step().to_vec();
        let value = engine.objective_value(&raw);
        if value.is_nan() {
            return Err(SolveError::NonFiniteValue);
        }
        segment_values.push(value);
        let stopped =
            observer.on_step(trace.total_iterations + segment_len, &raw, value) == StepSignal::Stop;
        let map = engine.gradient_map(&raw);
        let exit = stopped || linalg::norm2(&map) <= gradient_threshold;
        let fired = !exit
            && match rule {
                Some(HeuristicRule::Functional) => value >= previous_value,
                Some(HeuristicRule::Gradient) => {
                    // Fire when the step moves against the gradient mapping of
                    // the previous iterate (uphill move in minimization form).
                    linalg::dot(&previous_map, &linalg::sub(&raw, &previous)) >= 0.0
                }
                None => false,
            };
        if exit || fired {
            trace.push_round(
                0.0,
                0.0,
                InnerRun {
                    exit_iteration: segment_len,
                    output: raw.clone(),
                    values: core::mem::take(&mut segment_values),
                },
                value,
            );
            if exit {
                trace.stopped_by_observer = stopped;
                return Ok(trace);
            }
            // Momentum reset from the current iterate.
            run.restart(&raw);
            segment_values = vec![value];
            segment_len = 0;
        }
        previous = raw;
        previous_value = value;
        previous_map = map;
    }
}
