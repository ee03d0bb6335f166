//! Accelerated first-order engines.
//!
//! An [`AfomEngine`] is any solver exposing the iterate oracle `A(x0, k)`,
//! a gradient-mapping operator vanishing exactly on the optimal set, and two
//! constants: `l_f` (the smoothness/step constant) and `a_f` (the coefficient
//! of its `O(1/k^2)` objective-gap envelope). Engines additionally expose
//! incremental stepping so a restart scheme pays one engine step per
//! iteration rather than re-running from scratch.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::linalg;
use crate::math;
use crate::problem::{
    CertificateQuality, CompositeObjective, ExtReal, OptimumCertificate, ProblemError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineError {
    /// Smoothness constant is not a positive finite real.
    InvalidSmoothness,
    /// Quadratic form is not positive definite.
    IndefiniteHessian,
    /// Constraint bounds describe an empty feasible set.
    InfeasibleConstraints,
    /// Constraint set is empty or otherwise degenerate.
    DegenerateConstraints,
}

impl core::fmt::Display for EngineError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EngineError::InvalidSmoothness => write!(f, "smoothness constant must be positive"),
            EngineError::IndefiniteHessian => write!(f, "hessian is not positive definite"),
            EngineError::InfeasibleConstraints => write!(f, "constraints are infeasible"),
            EngineError::DegenerateConstraints => write!(f, "constraint set is degenerate"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EngineError {}

/// Oracle surface the generic FISTA recursion runs against.
pub trait CompositeOracle: Send + Sync {
    fn dimension(&self) -> usize;
    fn lipschitz(&self) -> f64;
    fn smooth_value(&self, x: &[f64]) -> f64;
    fn smooth_gradient(&self, x: &[f64]) -> Vec<f64>;
    fn prox(&self, x: &[f64], step: f64) -> Vec<f64>;
    fn nonsmooth_value(&self, x: &[f64]) -> ExtReal;

    fn value_of(&self, x: &[f64]) -> f64 {
        self.nonsmooth_value(x).plus(self.smooth_value(x)).to_f64()
    }
}

impl CompositeOracle for CompositeObjective {
    fn dimension(&self) -> usize {
        CompositeObjective::dimension(self)
    }
    fn lipschitz(&self) -> f64 {
        self.smoothness_constant()
    }
    fn smooth_value(&self, x: &[f64]) -> f64 {
        CompositeObjective::smooth_value(self, x)
    }
    fn smooth_gradient(&self, x: &[f64]) -> Vec<f64> {
        CompositeObjective::smooth_gradient(self, x)
    }
    fn prox(&self, x: &[f64], step: f64) -> Vec<f64> {
        CompositeObjective::prox(self, x, step)
    }
    fn nonsmooth_value(&self, x: &[f64]) -> ExtReal {
        CompositeObjective::nonsmooth_value(self, x)
    }
}

/// A solver with sufficient decrease on its first step and an `a_f/(k+1)^2`
/// objective-gap envelope.
pub trait AfomEngine: Send + Sync {
    fn dimension(&self) -> usize;

    /// Smoothness constant `L_f` (reciprocal step size).
    fn l_f(&self) -> f64;

    /// Envelope coefficient `a_f`.
    fn a_f(&self) -> f64;

    /// Objective value; `f64::INFINITY` outside the domain.
    fn objective_value(&self, x: &[f64]) -> f64;

    /// Gradient-mapping operator; zero exactly on the optimal set.
    fn gradient_map(&self, x: &[f64]) -> Vec<f64>;

    /// Begin a fresh run from `x0`.
    fn start(&self, x0: &[f64]) -> Box<dyn AfomRun + '_>;

    /// The iterate oracle `A(x0, k)`: the k-th iterate of a fresh run.
    fn iterate(&self, x0: &[f64], k: usize) -> Vec<f64> {
        let mut run = self.start(x0);
        for _ in 0..k {
            run.step();
        }
        run.current().to_vec()
    }
}

/// Stateful engine run; `step` advances the recursion by one iteration.
pub trait AfomRun {
    /// Advance one iteration and return the new raw iterate.
    fn step(&mut self) -> &[f64];

    /// Current raw iterate (initially the starting point).
    fn current(&self) -> &[f64];

    /// Iterations taken so far, counted across momentum resets.
    fn steps_taken(&self) -> usize;

    /// Reset momentum, continuing from `x0`.
    fn restart(&mut self, x0: &[f64]);
}

/// FISTA with constant step `1/L` and the standard momentum sequence
/// `t_1 = 1`, `t_{k+1} = (1 + sqrt(1 + 4 t_k^2))/2`. The envelope constant
/// is `a_f = 2L`.
pub struct Fista<C: CompositeOracle> {
    oracle: C,
}

impl<C: CompositeOracle> Fista<C> {
    pub fn new(oracle: C) -> Result<Self, EngineError> {
        let l = oracle.lipschitz();
        if !(l > 0.0) || !l.is_finite() {
            return Err(EngineError::InvalidSmoothness);
        }
        Ok(Fista { oracle })
    }

    pub fn oracle(&self) -> &C {
        &self.oracle
    }

    pub fn into_oracle(self) -> C {
        self.oracle
    }

    /// One proximal-gradient step from `x` (also the first FISTA iterate).
    fn prox_gradient_step(&self, x: &[f64]) -> Vec<f64> {
        let l = self.oracle.lipschitz();
        let g = self.oracle.smooth_gradient(x);
        let forward: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - gi / l).collect();
        self.oracle.prox(&forward, 1.0 / l)
    }
}

impl<C: CompositeOracle> AfomEngine for Fista<C> {
    fn dimension(&self) -> usize {
        self.oracle.dimension()
    }

    fn l_f(&self) -> f64 {
        self.oracle.lipschitz()
    }

    fn a_f(&self) -> f64 {
        2.0 * self.oracle.lipschitz()
    }

    fn objective_value(&self, x: &[f64]) -> f64 {
        self.oracle.value_of(x)
    }

    fn gradient_map(&self, x: &[f64]) -> Vec<f64> {
        let l = self.oracle.lipschitz();
        let p = self.prox_gradient_step(x);
        x.iter().zip(&p).map(|(xi, pi)| l * (xi - pi)).collect()
    }

    fn start(&self, x0: &[f64]) -> Box<dyn AfomRun + '_> {
        assert_eq!(x0.len(), self.dimension(), "starting point dimension");
        Box::new(FistaRun {
            engine: self,
            x: x0.to_vec(),
            x_prev: x0.to_vec(),
            y: x0.to_vec(),
            t: 1.0,
            steps: 0,
        })
    }
}

struct FistaRun<'a, C: CompositeOracle> {
    engine: &'a Fista<C>,
    x: Vec<f64>,
    x_prev: Vec<f64>,
    y: Vec<f64>,
    t: f64,
    steps: usize,
}

impl<C: CompositeOracle> AfomRun for FistaRun<'_, C> {
    fn step(&mut self) -> &[f64] {
        let next = self.engine.prox_gradient_step(&self.y);
        let t_next = 0.5 * (1.0 + math::sqrt(1.0 + 4.0 * self.t * self.t));
        let beta = (self.t - 1.0) / t_next;
        self.y = next
            .iter()
            .zip(&self.x)
            .map(|(ni, xi)| ni + beta * (ni - xi))
            .collect();
        self.x_prev = core::mem::replace(&mut self.x, next);
        self.t = t_next;
        self.steps += 1;
        &self.x
    }

    fn current(&self) -> &[f64] {
        &self.x
    }

    fn steps_taken(&self) -> usize {
        self.steps
    }

    fn restart(&mut self, x0: &[f64]) {
        self.x = x0.to_vec();
        self.x_prev = x0.to_vec();
        self.y = x0.to_vec();
        self.t = 1.0;
    }
}

/// FISTA over a [`CompositeObjective`].
pub type FistaEngine = Fista<CompositeObjective>;

/// Build a FISTA engine for a composite objective.
pub fn fista_engine(objective: CompositeObjective) -> Result<FistaEngine, EngineError> {
    Fista::new(objective)
}

/// Conformance report for the sufficient-decrease and envelope inequalities.
#[derive(Debug, Clone)]
pub struct ConformanceReport {
    pub entries: Vec<StartConformance>,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct StartConformance {
    /// Slack of `f(A(x0,1)) ≤ f(x0) - ‖g(x0)‖²/(2 l_f)`; negative = violated.
    pub decrease_slack: f64,
    /// Worst slack of `f(A(x0,k)) - f* ≤ a_f ‖x0 - x̄0‖²/(k+1)²` over `k`.
    pub envelope_worst_slack: f64,
    pub envelope_worst_k: usize,
}

impl ConformanceReport {
    pub fn worst_decrease_slack(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.decrease_slack)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn worst_envelope_slack(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.envelope_worst_slack)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Check the first-step decrease and the gap envelope along fresh runs from
/// each starting point, up to `k_max` iterations.
///
/// Needs the certificate's projection oracle to measure `‖x0 - x̄0‖`.
pub fn check_engine_conformance(
    engine: &dyn AfomEngine,
    optimum: &OptimumCertificate,
    starts: &[Vec<f64>],
    k_max: usize,
) -> Result<ConformanceReport, ProblemError> {
    if !optimum.has_projection() {
        return Err(ProblemError::UnsupportedQuery(
            "envelope check needs the projection oracle",
        ));
    }
    let f_star = optimum.optimal_value();
    let tolerance = match optimum.quality() {
        CertificateQuality::Exact => 1e-9 * (1.0 + math::abs(f_star)),
        // Numerical certificates only support relaxed comparisons.
        CertificateQuality::Numerical { .. } => 1e-6 * (1.0 + math::abs(f_star)),
    };
    let mut entries = Vec::with_capacity(starts.len());
    let mut pass = true;
    for x0 in starts {
        let f0 = engine.objective_value(x0);
        let g0 = engine.gradient_map(x0);
        let g0_sq = linalg::dot(&g0, &g0);
        let projected = optimum.project(x0).expect("projection checked above");
        let dist_sq = {
            let d = linalg::sub(x0, &projected);
            linalg::dot(&d, &d)
        };
        let mut run = engine.start(x0);
        let mut decrease_slack = f64::INFINITY;
        let mut envelope_worst_slack = f64::INFINITY;
        let mut envelope_worst_k = 0;
        for k in 1..=k_max {
            let xk = run.step().to_vec();
            let fk = engine.objective_value(&xk);
            if k == 1 {
                decrease_slack = (f0 - g0_sq / (2.0 * engine.l_f())) - fk;
            }
            let envelope = engine.a_f() * dist_sq / (((k + 1) * (k + 1)) as f64);
            let slack = envelope - (fk - f_star);
            if slack < envelope_worst_slack {
                envelope_worst_slack = slack;
                envelope_worst_k = k;
            }
        }
        pass &= decrease_slack >= -tolerance && envelope_worst_slack >= -tolerance;
        entries.push(StartConformance {
            decrease_slack,
            envelope_worst_slack,
            envelope_worst_k,
        });
    }
    Ok(ConformanceReport {
        entries,
        tolerance,
        pass,
    })
}
