//! Scheme dispatch with per-iteration monitoring.

use afom_restart_core::bounds::nbar_rho;
use afom_restart_core::restart::{
    restart_adaptive_observed, restart_fixed_rate_observed, restart_heuristic_observed,
    run_non_restarted_observed, SolveError, StepObserver, StepSignal,
};
use afom_restart_core::suite::{EngineHandle, ProblemInfo};
use afom_restart_core::{HeuristicRule, RestartTrace, SolveSettings};
use anyhow::{anyhow, bail, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Adaptive,
    Fixed,
    Functional,
    Gradient,
    None,
}

impl Scheme {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "adaptive" => Scheme::Adaptive,
            "fixed" => Scheme::Fixed,
            "functional" => Scheme::Functional,
            "gradient" => Scheme::Gradient,
            "none" => Scheme::None,
            other => bail!("unknown scheme `{other}`"),
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Adaptive => "adaptive",
            Scheme::Fixed => "fixed",
            Scheme::Functional => "functional",
            Scheme::Gradient => "gradient",
            Scheme::None => "none",
        }
    }
}

/// External stop rule evaluated on every engine iterate.
#[derive(Debug, Clone, Copy)]
pub enum StopRule {
    /// Stop once the decision-space iterate is within the given relative
    /// distance of the certified optimum.
    RelativeDecision { tolerance: f64 },
    /// Let each scheme exit by its native rule.
    Native,
}

#[derive(Debug, Clone, Copy)]
pub struct SeriesPoint {
    pub iteration: usize,
    pub objective: f64,
    /// Relative decision-space distance to the certified optimum, when known.
    pub metric: Option<f64>,
}

/// Per-step monitor: computes the decision metric, records the series and
/// enforces the external stop rule.
pub struct RunMonitor<'a> {
    handle: &'a EngineHandle,
    target: Option<Vec<f64>>,
    target_norm: f64,
    stop_tolerance: Option<f64>,
    pub series: Vec<SeriesPoint>,
    record_series: bool,
    pub crossed_at: Option<usize>,
}

impl<'a> RunMonitor<'a> {
    pub fn new(
        handle: &'a EngineHandle,
        decision_target: Option<&[f64]>,
        stop_tolerance: Option<f64>,
        record_series: bool,
    ) -> Self {
        let target = decision_target.map(|t| t.to_vec());
        let target_norm = target
            .as_ref()
            .map(|t| t.iter().map(|v| v * v).sum::<f64>().sqrt())
            .unwrap_or(0.0);
        RunMonitor {
            handle,
            target,
            target_norm,
            stop_tolerance,
            series: Vec::new(),
            record_series,
            crossed_at: None,
        }
    }

    fn metric_of(&self, iterate: &[f64]) -> Option<f64> {
        let target = self.target.as_ref()?;
        let decision = self.handle.decision_of(iterate);
        let dist = decision
            .iter()
            .zip(target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        // Degenerate optimum: fall back to absolute distance.
        Some(if self.target_norm > 1e-9 {
            dist / self.target_norm
        } else {
            dist
        })
    }
}

impl StepObserver for RunMonitor<'_> {
    fn on_step(&mut self, total: usize, iterate: &[f64], value: f64) -> StepSignal {
        let needs_metric = self.stop_tolerance.is_some() || self.record_series;
        let metric = if needs_metric {
            self.metric_of(iterate)
        } else {
            None
        };
        if self.record_series {
            self.series.push(SeriesPoint {
                iteration: total,
                objective: value,
                metric,
            });
        }
        if let (Some(tol), Some(m)) = (self.stop_tolerance, metric) {
            if m <= tol {
                self.crossed_at = Some(total);
                return StepSignal::Stop;
            }
        }
        StepSignal::Continue
    }
}

pub struct SchemeRun {
    pub scheme: Scheme,
    pub trace: RestartTrace,
    pub iterations: usize,
    pub converged: bool,
    pub final_metric: Option<f64>,
    pub series: Vec<SeriesPoint>,
}

/// Fixed-rate block length: explicit override, else the optimal block from
/// certified constants, else a conventional default.
pub fn fixed_block_for(
    problem: &ProblemInfo,
    handle: &EngineHandle,
    requested: Option<usize>,
) -> Result<usize> {
    if let Some(block) = requested {
        if block < 1 {
            bail!("fixed-rate block length must be at least 1");
        }
        return Ok(block);
    }
    if let Some(qfg) = &problem.qfg {
        let nbar = nbar_rho(handle.as_dyn().a_f(), qfg.mu()).map_err(|e| anyhow!("bounds: {e}"))?;
        return Ok((std::f64::consts::E * nbar).ceil() as usize);
    }
    Ok(100)
}

/// Contraction horizon from certified constants, when available.
pub fn nbar_hint_for(problem: &ProblemInfo, handle: &EngineHandle) -> Option<f64> {
    problem
        .qfg
        .as_ref()
        .and_then(|qfg| nbar_rho(handle.as_dyn().a_f(), qfg.mu()).ok())
}

#[allow(clippy::too_many_arguments)]
pub fn run_scheme(
    problem: &ProblemInfo,
    handle: &EngineHandle,
    scheme: Scheme,
    start: &[f64],
    settings: &SolveSettings,
    stop: StopRule,
    fixed_block: Option<usize>,
    record_series: bool,
) -> Result<SchemeRun> {
    let decision_target: Option<Vec<f64>> = match stop {
        StopRule::RelativeDecision { .. } => {
            let cert = problem
                .decision_certificate
                .as_ref()
                .or(problem.certificate.as_ref())
                .ok_or_else(|| anyhow!("relative-distance stop rule needs a certified optimum"))?;
            Some(cert.optimal_point().to_vec())
        }
        StopRule::Native => problem
            .decision_certificate
            .as_ref()
            .or(problem.certificate.as_ref())
            .map(|c| c.optimal_point().to_vec()),
    };
    let stop_tolerance = match stop {
        StopRule::RelativeDecision { tolerance } => Some(tolerance),
        StopRule::Native => None,
    };
    let mut monitor = RunMonitor::new(
        handle,
        decision_target.as_deref(),
        stop_tolerance,
        record_series,
    );
    // Under an external stop rule the native exit must not preempt it; an
    // effectively unreachable gap tolerance still terminates exactly
    // converged (flat) runs.
    let settings: SolveSettings = match stop {
        StopRule::RelativeDecision { .. } => {
            let mut s = *settings;
            s.exit = afom_restart_core::ExitRule::ObjectiveGap(f64::MIN_POSITIVE);
            s
        }
        StopRule::Native => *settings,
    };
    let settings = &settings;
    let engine = handle.as_dyn();
    let outcome = match scheme {
        Scheme::Adaptive => restart_adaptive_observed(engine, start, settings, &mut monitor),
        Scheme::Fixed => {
            let block = fixed_block_for(problem, handle, fixed_block)?;
            let mut settings = *settings;
            if let Some(nbar) = nbar_hint_for(problem, handle) {
                settings = settings.with_nbar_hint(nbar);
            }
            restart_fixed_rate_observed(engine, start, block, &settings, &mut monitor)
        }
        Scheme::Functional => restart_heuristic_observed(
            engine,
            start,
            HeuristicRule::Functional,
            settings,
            &mut monitor,
        ),
        Scheme::Gradient => restart_heuristic_observed(
            engine,
            start,
            HeuristicRule::Gradient,
            settings,
            &mut monitor,
        ),
        Scheme::None => run_non_restarted_observed(engine, start, settings, &mut monitor),
    };
    let trace = match outcome {
        Ok(trace) => trace,
        Err(SolveError::CapExceeded(trace)) | Err(SolveError::Stalled(trace)) => *trace,
        Err(e) => return Err(anyhow!("solve failed: {e}")),
    };
    let converged = match stop {
        StopRule::RelativeDecision { .. } => monitor.crossed_at.is_some(),
        StopRule::Native => trace.is_complete(),
    };
    let iterations = match stop {
        StopRule::RelativeDecision { .. } => monitor.crossed_at.unwrap_or(trace.total_iterations()),
        StopRule::Native => trace.total_iterations(),
    };
    let final_metric = monitor.metric_of(trace.final_point());
    Ok(SchemeRun {
        scheme,
        trace,
        iterations,
        converged,
        final_metric,
        series: monitor.series,
    })
}
