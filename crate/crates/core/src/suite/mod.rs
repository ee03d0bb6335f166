//! Reproducible problem generators with optimum certificates.
//!
//! Four families: random strongly convex QPs with log-spaced spectra (exact
//! certificates and a quadratic-growth certificate), box-constrained QPs
//! solved through the dual engine (exact certificates by activity-pattern
//! enumeration up to dimension 12, high-accuracy reference runs beyond),
//! Lasso instances (numerical certificate, no growth certificate), and the
//! condensed spring-mass MPC QP.

pub mod active_set;
pub mod mpc;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::dual::{dual_qp_engine, DualQpEngine, DualQpProblem};
use crate::engine::{fista_engine, AfomEngine, EngineError, FistaEngine};
use crate::linalg::{self, Matrix};
use crate::problem::{
    CertificateQuality, CompositeObjective, ExtReal, OptimumCertificate, QfgCertificate,
};
use crate::restart::{restart_adaptive, SolveSettings};
use crate::rng::{split_seed, Pcg32};

pub use active_set::{solve_box_qp_exact, BoxQpSolution, MAX_ENUMERATION_DIMENSION};
pub use mpc::{MpcSpringsSpec, MpcSystem};

/// Safety factor on certified spectral constants of rotated matrices: the
/// claimed smoothness constant slightly overstates the true spectrum and the
/// claimed growth constant slightly understates it, so both stay valid under
/// the roundoff of the product `QᵀΛQ`.
const SPECTRUM_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    /// Unconstrained QP with eigenvalues log-spaced on `[1, condition]`.
    Qp {
        dimension: usize,
        condition: f64,
        seed: u64,
    },
    /// Same quadratic with a bounding box, solved via the dual engine.
    BoxQp {
        dimension: usize,
        condition: f64,
        seed: u64,
    },
    /// Least squares plus an l1 penalty.
    Lasso {
        rows: usize,
        cols: usize,
        weight: f64,
        seed: u64,
    },
    /// Condensed spring-mass MPC QP for a sampled initial state.
    MpcSprings(MpcSpringsSpec),
    /// Instance rebuilt from a stored document; no generator parameters.
    External,
}

impl GeneratorSpec {
    pub fn seed(&self) -> u64 {
        match self {
            GeneratorSpec::Qp { seed, .. }
            | GeneratorSpec::BoxQp { seed, .. }
            | GeneratorSpec::Lasso { seed, .. } => *seed,
            GeneratorSpec::MpcSprings(spec) => spec.seed,
            GeneratorSpec::External => 0,
        }
    }

    pub fn with_seed(&self, seed: u64) -> GeneratorSpec {
        let mut out = self.clone();
        match &mut out {
            GeneratorSpec::Qp { seed: s, .. }
            | GeneratorSpec::BoxQp { seed: s, .. }
            | GeneratorSpec::Lasso { seed: s, .. } => *s = seed,
            GeneratorSpec::MpcSprings(spec) => spec.seed = seed,
            GeneratorSpec::External => {}
        }
        out
    }

    pub fn family_label(&self) -> &'static str {
        match self {
            GeneratorSpec::Qp { .. } => "qp",
            GeneratorSpec::BoxQp { .. } => "boxqp",
            GeneratorSpec::Lasso { .. } => "lasso",
            GeneratorSpec::MpcSprings(_) => "mpc-springs",
            GeneratorSpec::External => "external",
        }
    }
}

#[derive(Debug)]
pub enum GeneratorError {
    InvalidConditionNumber,
    InvalidDimension,
    InvalidParameter(&'static str),
    Mpc(mpc::MpcBuildError),
    Engine(EngineError),
    /// High-accuracy reference run failed its optimality verification.
    ReferenceRunFailed(&'static str),
}

impl core::fmt::Display for GeneratorError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GeneratorError::InvalidConditionNumber => {
                write!(f, "condition number must be at least 1")
            }
            GeneratorError::InvalidDimension => write!(f, "dimension must be positive"),
            GeneratorError::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            GeneratorError::Mpc(e) => write!(f, "mpc construction: {e}"),
            GeneratorError::Engine(e) => write!(f, "engine construction: {e}"),
            GeneratorError::ReferenceRunFailed(what) => {
                write!(f, "reference run failed: {what}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GeneratorError {}

impl From<mpc::MpcBuildError> for GeneratorError {
    fn from(e: mpc::MpcBuildError) -> Self {
        GeneratorError::Mpc(e)
    }
}

impl From<EngineError> for GeneratorError {
    fn from(e: EngineError) -> Self {
        GeneratorError::Engine(e)
    }
}

/// What the solver consumes: a composite objective or a dual-form QP.
pub enum SolverInput {
    Composite(CompositeObjective),
    Dual(DualQpProblem),
}

impl SolverInput {
    pub fn engine_dimension(&self) -> usize {
        match self {
            SolverInput::Composite(obj) => obj.dimension(),
            SolverInput::Dual(problem) => problem.dual_dimension(),
        }
    }
}

impl core::fmt::Debug for SolverInput {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SolverInput::Composite(obj) => write!(f, "Composite({} vars)", obj.dimension()),
            SolverInput::Dual(p) => write!(
                f,
                "Dual({} multipliers over {} vars)",
                p.dual_dimension(),
                p.primal_dimension()
            ),
        }
    }
}

/// Raw instance data, retained so problems can be written to and rebuilt
/// from structured documents.
#[derive(Debug, Clone, PartialEq)]
pub enum RawProblemData {
    Quadratic {
        hessian: Matrix,
        linear: Vec<f64>,
        smoothness: f64,
        growth: Option<f64>,
    },
    BoxQuadratic {
        hessian: Matrix,
        linear: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        sigma: f64,
        jacobi: bool,
    },
    Lasso {
        design: Matrix,
        rhs: Vec<f64>,
        weight: f64,
    },
}

/// A generated instance: solver input plus certificates.
///
/// `certificate` lives in the engine's iterate space (multiplier space for
/// dual inputs); `decision_certificate` describes the original decision
/// variables and coincides with `certificate` for composite inputs.
#[derive(Debug)]
pub struct GeneratedProblem {
    pub spec: GeneratorSpec,
    pub input: SolverInput,
    pub raw: RawProblemData,
    pub certificate: Option<OptimumCertificate>,
    pub decision_certificate: Option<OptimumCertificate>,
    pub qfg: Option<QfgCertificate>,
    pub preconditioned: bool,
    pub label: String,
}

/// Everything about an instance except the solver input itself; lets the
/// input be consumed by an engine while certificates stay usable.
#[derive(Debug)]
pub struct ProblemInfo {
    pub spec: GeneratorSpec,
    pub raw: RawProblemData,
    pub certificate: Option<OptimumCertificate>,
    pub decision_certificate: Option<OptimumCertificate>,
    pub qfg: Option<QfgCertificate>,
    pub preconditioned: bool,
    pub label: String,
}

impl GeneratedProblem {
    pub fn split(self) -> (SolverInput, ProblemInfo) {
        (
            self.input,
            ProblemInfo {
                spec: self.spec,
                raw: self.raw,
                certificate: self.certificate,
                decision_certificate: self.decision_certificate,
                qfg: self.qfg,
                preconditioned: self.preconditioned,
                label: self.label,
            },
        )
    }
}

/// Engine assembled from a generated instance.
pub enum EngineHandle {
    Fista(FistaEngine),
    DualQp(DualQpEngine),
}

impl EngineHandle {
    pub fn from_input(input: SolverInput) -> Result<Self, EngineError> {
        Ok(match input {
            SolverInput::Composite(obj) => EngineHandle::Fista(fista_engine(obj)?),
            SolverInput::Dual(problem) => EngineHandle::DualQp(dual_qp_engine(problem)?),
        })
    }

    pub fn as_dyn(&self) -> &dyn AfomEngine {
        match self {
            EngineHandle::Fista(e) => e,
            EngineHandle::DualQp(e) => e,
        }
    }

    /// Map an engine iterate to the decision space (identity for composite
    /// problems, primal recovery for dual ones).
    pub fn decision_of(&self, iterate: &[f64]) -> Vec<f64> {
        match self {
            EngineHandle::Fista(_) => iterate.to_vec(),
            EngineHandle::DualQp(e) => e.recover_primal(iterate),
        }
    }

    /// Conventional starting point: zero multipliers for dual engines.
    pub fn cold_start(&self) -> Option<Vec<f64>> {
        match self {
            EngineHandle::Fista(_) => None,
            EngineHandle::DualQp(e) => Some(e.cold_start()),
        }
    }
}

/// Dense quadratic `½xᵀHx + cᵀx` as a composite objective with `Ψ ≡ 0`.
pub fn quadratic_objective(
    hessian: Matrix,
    linear: Vec<f64>,
    smoothness: f64,
) -> Result<CompositeObjective, crate::problem::ProblemError> {
    let n = hessian.rows();
    let h = Arc::new(hessian);
    let c = Arc::new(linear);
    let h_value = Arc::clone(&h);
    let c_value = Arc::clone(&c);
    let h_grad = Arc::clone(&h);
    let c_grad = Arc::clone(&c);
    CompositeObjective::smooth(
        n,
        smoothness,
        Box::new(move |x: &[f64]| {
            0.5 * linalg::dot(x, &h_value.matvec(x)) + linalg::dot(&c_value, x)
        }),
        Box::new(move |x: &[f64]| {
            let mut g = h_grad.matvec(x);
            for (gi, ci) in g.iter_mut().zip(c_grad.iter()) {
                *gi += ci;
            }
            g
        }),
    )
}

/// Exactly diagonal quadratic; spectral constants are exact, so no margin is
/// applied. Handy for desk-scale reference instances.
pub fn diagonal_qp(diagonal: &[f64], linear: Vec<f64>) -> Result<GeneratedProblem, GeneratorError> {
    if diagonal.is_empty() {
        return Err(GeneratorError::InvalidDimension);
    }
    let l = diagonal.iter().cloned().fold(f64::MIN, f64::max);
    let mu = diagonal.iter().cloned().fold(f64::MAX, f64::min);
    if !(mu > 0.0) {
        return Err(GeneratorError::InvalidParameter(
            "diagonal must be positive",
        ));
    }
    let h = Matrix::from_diagonal(diagonal);
    let factor = linalg::cholesky(&h).expect("positive diagonal");
    let mut x_star = linalg::cholesky_solve(&factor, &linear);
    for v in x_star.iter_mut() {
        *v = -*v;
    }
    let raw = RawProblemData::Quadratic {
        hessian: h.clone(),
        linear: linear.clone(),
        smoothness: l,
        growth: Some(mu),
    };
    let objective = quadratic_objective(h, linear, l).expect("valid quadratic");
    let f_star = objective.value_of(&x_star);
    let certificate = OptimumCertificate::singleton(f_star, x_star);
    Ok(GeneratedProblem {
        spec: GeneratorSpec::Qp {
            dimension: diagonal.len(),
            condition: l / mu,
            seed: 0,
        },
        input: SolverInput::Composite(objective),
        raw,
        certificate: Some(certificate),
        decision_certificate: None,
        qfg: Some(QfgCertificate::global(mu).expect("positive")),
        preconditioned: false,
        label: String::from("qp-diagonal"),
    })
}

/// Random orthogonal matrix via Gram-Schmidt on a Gaussian sample, with one
/// re-orthogonalization pass.
fn random_orthogonal(n: usize, rng: &mut Pcg32) -> Matrix {
    loop {
        let mut q = Matrix::zeros(n, n);
        let mut ok = true;
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
        for _ in 0..n {
            let mut v = rng.normal_vec(n);
            for _pass in 0..2 {
                for b in &basis {
                    let proj = linalg::dot(&v, b);
                    for (vi, bi) in v.iter_mut().zip(b) {
                        *vi -= proj * bi;
                    }
                }
            }
            let nrm = linalg::norm2(&v);
            if nrm < 1e-8 {
                ok = false;
                break;
            }
            for vi in v.iter_mut() {
                *vi /= nrm;
            }
            basis.push(v);
        }
        if ok {
            for (i, row) in basis.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    q[(i, j)] = v;
                }
            }
            return q;
        }
    }
}

/// Eigenvalues log-spaced on `[1, condition]` with exact endpoints.
fn log_spaced_spectrum(n: usize, condition: f64) -> Vec<f64> {
    if n == 1 {
        return vec![condition];
    }
    let ln_k = crate::math::ln(condition);
    (0..n)
        .map(|i| {
            if i == 0 {
                1.0
            } else if i == n - 1 {
                condition
            } else {
                crate::math::exp(ln_k * (i as f64) / ((n - 1) as f64))
            }
        })
        .collect()
}

struct RandomQuadratic {
    hessian: Matrix,
    linear: Vec<f64>,
    smoothness: f64,
    growth: f64,
    minimizer: Vec<f64>,
}

fn random_quadratic(
    dimension: usize,
    condition: f64,
    seed: u64,
    stream: u64,
) -> Result<RandomQuadratic, GeneratorError> {
    if dimension == 0 {
        return Err(GeneratorError::InvalidDimension);
    }
    if !(condition >= 1.0) || !condition.is_finite() {
        return Err(GeneratorError::InvalidConditionNumber);
    }
    let mut rng = Pcg32::with_stream(seed, stream);
    let spectrum = log_spaced_spectrum(dimension, condition);
    let q = random_orthogonal(dimension, &mut rng);
    // H = Qᵀ Λ Q, symmetrized.
    let mut lam_q = Matrix::zeros(dimension, dimension);
    for i in 0..dimension {
        for j in 0..dimension {
            lam_q[(i, j)] = spectrum[i] * q[(i, j)];
        }
    }
    let mut hessian = q.transpose().matmul(&lam_q).expect("square");
    hessian.symmetrize();
    let linear: Vec<f64> = rng.normal_vec(dimension);
    let factor = linalg::cholesky(&hessian).map_err(|_| {
        GeneratorError::InvalidParameter("generated quadratic lost positive definiteness")
    })?;
    let mut minimizer = linalg::cholesky_solve(&factor, &linear);
    for v in minimizer.iter_mut() {
        *v = -*v;
    }
    // Rotation roundoff safety: overstate the top of the spectrum and
    // understate the bottom. Exactly diagonal instances (dimension 1) keep
    // their exact constants.
    let (smoothness, growth) = if dimension == 1 {
        (condition, condition)
    } else {
        (condition * (1.0 + SPECTRUM_MARGIN), 1.0 - SPECTRUM_MARGIN)
    };
    Ok(RandomQuadratic {
        hessian,
        linear,
        smoothness,
        growth,
        minimizer,
    })
}

/// Build the instance described by `spec`.
pub fn generate(spec: &GeneratorSpec) -> Result<GeneratedProblem, GeneratorError> {
    match spec {
        GeneratorSpec::Qp {
            dimension,
            condition,
            seed,
        } => {
            let quad = random_quadratic(*dimension, *condition, *seed, 1)?;
            let raw = RawProblemData::Quadratic {
                hessian: quad.hessian.clone(),
                linear: quad.linear.clone(),
                smoothness: quad.smoothness,
                growth: Some(quad.growth),
            };
            let objective =
                quadratic_objective(quad.hessian, quad.linear, quad.smoothness).expect("valid");
            let f_star = objective.value_of(&quad.minimizer);
            let certificate = OptimumCertificate::singleton(f_star, quad.minimizer);
            Ok(GeneratedProblem {
                spec: spec.clone(),
                input: SolverInput::Composite(objective),
                raw,
                certificate: Some(certificate),
                decision_certificate: None,
                qfg: Some(QfgCertificate::global(quad.growth).expect("positive")),
                preconditioned: false,
                label: String::from("qp"),
            })
        }
        GeneratorSpec::BoxQp {
            dimension,
            condition,
            seed,
        } => {
            let quad = random_quadratic(*dimension, *condition, *seed, 2)?;
            let mut rng = Pcg32::with_stream(*seed, 3);
            let scale = quad
                .minimizer
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
                .max(1e-3);
            let upper: Vec<f64> = (0..*dimension)
                .map(|_| rng.uniform_in(0.1, 0.9) * scale)
                .collect();
            let lower: Vec<f64> = (0..*dimension)
                .map(|_| -rng.uniform_in(0.1, 0.9) * scale)
                .collect();
            build_box_instance(
                spec.clone(),
                quad.hessian,
                quad.linear,
                lower,
                upper,
                quad.growth,
                false,
                String::from("boxqp"),
            )
        }
        GeneratorSpec::Lasso {
            rows,
            cols,
            weight,
            seed,
        } => generate_lasso(spec.clone(), *rows, *cols, *weight, *seed),
        GeneratorSpec::MpcSprings(mpc_spec) => {
            let system = MpcSystem::build(mpc_spec)?;
            let mut rng = Pcg32::with_stream(mpc_spec.seed, 4);
            let state = sample_mpc_state(&mut rng);
            mpc_instance(&system, &state)
        }
        GeneratorSpec::External => Err(GeneratorError::InvalidParameter(
            "external specs are rebuilt from documents, not generated",
        )),
    }
}

/// Rebuild an instance from raw document data, recomputing certificates the
/// same way the generators do.
pub fn from_raw(raw: RawProblemData) -> Result<GeneratedProblem, GeneratorError> {
    match raw {
        RawProblemData::Quadratic {
            hessian,
            linear,
            smoothness,
            growth,
        } => {
            let factor = linalg::cholesky(&hessian).map_err(|_| {
                GeneratorError::InvalidParameter("hessian is not positive definite")
            })?;
            let mut minimizer = linalg::cholesky_solve(&factor, &linear);
            for v in minimizer.iter_mut() {
                *v = -*v;
            }
            let raw_echo = RawProblemData::Quadratic {
                hessian: hessian.clone(),
                linear: linear.clone(),
                smoothness,
                growth,
            };
            let objective = quadratic_objective(hessian, linear, smoothness)
                .map_err(|_| GeneratorError::InvalidParameter("invalid quadratic data"))?;
            let f_star = objective.value_of(&minimizer);
            let certificate = OptimumCertificate::singleton(f_star, minimizer);
            let qfg = match growth {
                Some(mu) => Some(
                    QfgCertificate::global(mu)
                        .map_err(|_| GeneratorError::InvalidParameter("growth constant"))?,
                ),
                None => None,
            };
            Ok(GeneratedProblem {
                spec: GeneratorSpec::External,
                input: SolverInput::Composite(objective),
                raw: raw_echo,
                certificate: Some(certificate),
                decision_certificate: None,
                qfg,
                preconditioned: false,
                label: String::from("qp"),
            })
        }
        RawProblemData::BoxQuadratic {
            hessian,
            linear,
            lower,
            upper,
            sigma,
            jacobi,
        } => build_box_instance(
            GeneratorSpec::External,
            hessian,
            linear,
            lower,
            upper,
            sigma,
            jacobi,
            String::from("boxqp"),
        ),
        RawProblemData::Lasso {
            design,
            rhs,
            weight,
        } => lasso_from_data(GeneratorSpec::External, design, rhs, weight),
    }
}

/// Sample an initial state: positions uniform on [0, 4], velocities uniform
/// on [-0.5, 0.5].
pub fn sample_mpc_state(rng: &mut Pcg32) -> Vec<f64> {
    let mut state = Vec::with_capacity(mpc::STATE_DIMENSION);
    for _ in 0..3 {
        state.push(rng.uniform_in(0.0, 4.0));
    }
    for _ in 0..3 {
        state.push(rng.uniform_in(-0.5, 0.5));
    }
    state
}

/// Condensed MPC instance for one initial state, Jacobi-scaled in the dual.
pub fn mpc_instance(system: &MpcSystem, state: &[f64]) -> Result<GeneratedProblem, GeneratorError> {
    let linear = system.linear_term(state);
    let (lower, upper) = system.input_bounds();
    build_box_instance(
        GeneratorSpec::MpcSprings(system.spec),
        system.hessian.clone(),
        linear,
        lower,
        upper,
        system.sigma,
        true,
        String::from("mpc-springs"),
    )
}

#[allow(clippy::too_many_arguments)]
fn build_box_instance(
    spec: GeneratorSpec,
    hessian: Matrix,
    linear: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    sigma: f64,
    jacobi: bool,
    label: String,
) -> Result<GeneratedProblem, GeneratorError> {
    let raw = RawProblemData::BoxQuadratic {
        hessian: hessian.clone(),
        linear: linear.clone(),
        lower: lower.clone(),
        upper: upper.clone(),
        sigma,
        jacobi,
    };
    let dimension = hessian.rows();
    let exact = dimension <= MAX_ENUMERATION_DIMENSION;
    let reference = if exact {
        Some(
            solve_box_qp_exact(&hessian, &linear, &lower, &upper)
                .map_err(|_| GeneratorError::ReferenceRunFailed("pattern enumeration"))?,
        )
    } else {
        None
    };
    let mut problem =
        DualQpProblem::box_constrained(hessian, linear, &lower, &upper)?.with_sigma(sigma);
    if jacobi {
        problem = problem.jacobi_scaled()?;
    }
    let (primal_point, primal_value, dual_point, quality) = match reference {
        Some(sol) => {
            let lambda = stacked_multipliers(&sol, &lower, &upper, problem.constraints());
            (sol.point, sol.value, lambda, CertificateQuality::Exact)
        }
        None => {
            // Moderate-accuracy dual run, then activity-pattern polishing:
            // one reduced solve verified against the full KKT system.
            let RawProblemData::BoxQuadratic {
                hessian: raw_h,
                linear: raw_c,
                lower: raw_l,
                upper: raw_u,
                ..
            } = &raw
            else {
                unreachable!("box instances carry box raw data")
            };
            let guess = moderate_dual_primal(&problem)?;
            let bound_scale = raw_u
                .iter()
                .chain(raw_l.iter())
                .filter(|v| v.is_finite())
                .fold(1.0f64, |m, v| m.max(v.abs()));
            let mut polished = None;
            for tol in [1e-3, 1e-5, 1e-7] {
                polished = active_set::polish_box_qp(
                    raw_h,
                    raw_c,
                    raw_l,
                    raw_u,
                    &guess,
                    tol * bound_scale,
                );
                if polished.is_some() {
                    break;
                }
            }
            match polished {
                Some(sol) => {
                    let lambda = stacked_multipliers(&sol, raw_l, raw_u, problem.constraints());
                    (sol.point, sol.value, lambda, CertificateQuality::Exact)
                }
                None => {
                    let (lambda, primal) = reference_dual_solve(&problem)?;
                    let value = problem.primal_value(&primal);
                    (
                        primal,
                        value,
                        lambda,
                        CertificateQuality::Numerical { accuracy: 1e-10 },
                    )
                }
            }
        }
    };
    let decision_certificate =
        OptimumCertificate::singleton(primal_value, primal_point).with_quality(quality);
    // Engine-space optimum: the dual objective attains the negated primal value.
    let dual_certificate =
        OptimumCertificate::singleton(-primal_value, dual_point).with_quality(quality);
    Ok(GeneratedProblem {
        spec,
        input: SolverInput::Dual(problem),
        raw,
        certificate: Some(dual_certificate),
        decision_certificate: Some(decision_certificate),
        qfg: None,
        preconditioned: jacobi,
        label,
    })
}

/// Map per-coordinate box multipliers onto the stacked (possibly row-scaled)
/// constraint rows of the dual problem.
fn stacked_multipliers(
    solution: &BoxQpSolution,
    lower: &[f64],
    upper: &[f64],
    constraints: &Matrix,
) -> Vec<f64> {
    let n = lower.len();
    let mut lambda = Vec::with_capacity(constraints.rows());
    let mut row = 0;
    for i in 0..n {
        if upper[i].is_finite() {
            // Row is s·eᵢ for some positive scale s; multiplier scales by 1/s.
            let s = constraints.row(row)[i];
            lambda.push(solution.upper_multipliers[i] / s);
            row += 1;
        }
    }
    for i in 0..n {
        if lower[i].is_finite() {
            let s = -constraints.row(row)[i];
            lambda.push(solution.lower_multipliers[i] / s);
            row += 1;
        }
    }
    debug_assert_eq!(row, constraints.rows());
    lambda
}

/// Moderate-accuracy dual run used to read off the optimal activity pattern.
fn moderate_dual_primal(problem: &DualQpProblem) -> Result<Vec<f64>, GeneratorError> {
    let engine = dual_qp_engine(clone_dual(problem))?;
    let start = engine.cold_start();
    let scale = 1.0 + linalg::norm2(&engine.gradient_map(&start));
    let settings = SolveSettings::gradient_norm(1e-6 * scale).with_cap(2_000_000);
    let trace = match restart_adaptive(&engine, &start, &settings) {
        Ok(trace) => trace,
        Err(crate::restart::SolveError::CapExceeded(trace)) => *trace,
        Err(_) => {
            return Err(GeneratorError::ReferenceRunFailed(
                "moderate dual run failed",
            ))
        }
    };
    Ok(engine.recover_primal(trace.final_point()))
}

/// High-accuracy dual reference run, verified against the box KKT system.
fn reference_dual_solve(problem: &DualQpProblem) -> Result<(Vec<f64>, Vec<f64>), GeneratorError> {
    let engine = dual_qp_engine(clone_dual(problem))?;
    let start = engine.cold_start();
    let settings = SolveSettings::gradient_norm(1e-10).with_cap(5_000_000);
    let trace = restart_adaptive(&engine, &start, &settings)
        .map_err(|_| GeneratorError::ReferenceRunFailed("dual reference run hit the cap"))?;
    let lambda = trace.final_point().to_vec();
    let primal = engine.recover_primal(&lambda);
    let worst = box_kkt_violation(problem, &primal);
    if worst > 1e-7 {
        return Err(GeneratorError::ReferenceRunFailed(
            "reference point fails the KKT system",
        ));
    }
    Ok((lambda, primal))
}

fn clone_dual(problem: &DualQpProblem) -> DualQpProblem {
    DualQpProblem::with_constants(
        problem.hessian().clone(),
        problem.linear().to_vec(),
        problem.constraints().clone(),
        problem.constraint_bounds().to_vec(),
        problem.sigma_f(),
        problem.spectral_bound(),
    )
    .expect("existing problem data stays valid")
}

/// Worst stationarity/feasibility violation of a candidate primal point for
/// the (stacked-row) inequality system of a dual problem.
pub fn box_kkt_violation(problem: &DualQpProblem, x: &[f64]) -> f64 {
    let mut residual = problem.hessian().matvec(x);
    for (ri, ci) in residual.iter_mut().zip(problem.linear()) {
        *ri += ci;
    }
    let g = problem.constraints();
    let bounds = problem.constraint_bounds();
    let mut worst = 0.0f64;
    // Feasibility of every row.
    let gx = g.matvec(x);
    for (gxi, bi) in gx.iter().zip(bounds) {
        worst = worst.max(gxi - bi);
    }
    // Stationarity: residual must be expressible with nonnegative multipliers
    // on the active rows only. For box rows this decouples per coordinate.
    let n = x.len();
    let mut active_any = vec![false; n];
    for r in 0..g.rows() {
        let row = g.row(r);
        if let Some(i) = row.iter().position(|&v| v != 0.0) {
            let slack = bounds[r] - gx[r];
            if slack.abs() <= 1e-8 * (1.0 + bounds[r].abs()) {
                active_any[i] = true;
                // Active row: residual sign must oppose the row direction.
                let aligned = residual[i] * row[i].signum();
                worst = worst.max(aligned);
            }
        }
    }
    for i in 0..n {
        if !active_any[i] {
            worst = worst.max(residual[i].abs());
        }
    }
    worst
}

fn soft_threshold(x: &[f64], amount: f64) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            if v > amount {
                v - amount
            } else if v < -amount {
                v + amount
            } else {
                0.0
            }
        })
        .collect()
}

fn generate_lasso(
    spec: GeneratorSpec,
    rows: usize,
    cols: usize,
    weight: f64,
    seed: u64,
) -> Result<GeneratedProblem, GeneratorError> {
    if rows == 0 || cols == 0 {
        return Err(GeneratorError::InvalidDimension);
    }
    let mut rng = Pcg32::with_stream(seed, 5);
    let mut design_rows = Vec::with_capacity(rows);
    for _ in 0..rows {
        design_rows.push(rng.normal_vec(cols));
    }
    let design = Matrix::from_rows(&design_rows).expect("rectangular");
    // Sparse ground signal plus small noise.
    let mut signal = vec![0.0; cols];
    for s in signal.iter_mut() {
        if rng.uniform() < 0.25 {
            *s = rng.normal();
        }
    }
    let mut rhs = design.matvec(&signal);
    for r in rhs.iter_mut() {
        *r += 0.01 * rng.normal();
    }
    lasso_from_data(spec, design, rhs, weight)
}

fn lasso_from_data(
    spec: GeneratorSpec,
    design: Matrix,
    rhs: Vec<f64>,
    weight: f64,
) -> Result<GeneratedProblem, GeneratorError> {
    let cols = design.cols();
    if design.rows() == 0 || cols == 0 {
        return Err(GeneratorError::InvalidDimension);
    }
    if !(weight > 0.0) {
        return Err(GeneratorError::InvalidParameter(
            "penalty weight must be positive",
        ));
    }
    let raw = RawProblemData::Lasso {
        design: design.clone(),
        rhs: rhs.clone(),
        weight,
    };
    let gram = design.transpose().matmul(&design).expect("shape");
    let smoothness = linalg::dominant_eigenvalue(&gram, 20_000, 1e-14) * (1.0 + SPECTRUM_MARGIN);
    let design = Arc::new(design);
    let rhs = Arc::new(rhs);
    let d_val = Arc::clone(&design);
    let r_val = Arc::clone(&rhs);
    let d_grad = Arc::clone(&design);
    let r_grad = Arc::clone(&rhs);
    let objective = CompositeObjective::new(
        cols,
        smoothness,
        Box::new(move |x: &[f64]| {
            let mut r = d_val.matvec(x);
            for (ri, bi) in r.iter_mut().zip(r_val.iter()) {
                *ri -= bi;
            }
            0.5 * linalg::dot(&r, &r)
        }),
        Box::new(move |x: &[f64]| {
            let mut r = d_grad.matvec(x);
            for (ri, bi) in r.iter_mut().zip(r_grad.iter()) {
                *ri -= bi;
            }
            d_grad.t_matvec(&r)
        }),
        Box::new(move |x: &[f64], step: f64| soft_threshold(x, step * weight)),
        Box::new(move |x: &[f64]| ExtReal::Finite(weight * x.iter().map(|v| v.abs()).sum::<f64>())),
    )
    .expect("valid composite");

    // High-accuracy reference run, then a coordinatewise optimality check
    // independent of the run itself.
    let engine = fista_engine(objective).map_err(GeneratorError::Engine)?;
    let start = vec![0.0; cols];
    let settings = SolveSettings::gradient_norm(1e-10).with_cap(5_000_000);
    let trace = restart_adaptive(&engine, &start, &settings)
        .map_err(|_| GeneratorError::ReferenceRunFailed("lasso reference run hit the cap"))?;
    let solution = trace.final_point().to_vec();
    let objective = engine.into_oracle();
    let gradient = objective.smooth_gradient(&solution);
    let tol = 1e-7 * (1.0 + weight);
    for (xi, gi) in solution.iter().zip(&gradient) {
        let violation = if xi.abs() > 1e-9 {
            (gi + weight * xi.signum()).abs()
        } else {
            (gi.abs() - weight).max(0.0)
        };
        if violation > tol {
            return Err(GeneratorError::ReferenceRunFailed(
                "lasso reference point fails coordinate optimality",
            ));
        }
    }
    let f_star = objective.value_of(&solution);
    // No projection oracle: the optimal set's geometry is unknown, so no
    // growth certificate is emitted either.
    let certificate = OptimumCertificate::new(f_star, solution)
        .with_quality(CertificateQuality::Numerical { accuracy: 1e-10 });
    Ok(GeneratedProblem {
        spec,
        input: SolverInput::Composite(objective),
        raw,
        certificate: Some(certificate),
        decision_certificate: None,
        qfg: None,
        preconditioned: false,
        label: String::from("lasso"),
    })
}

/// Scale a start `x* + r·direction` by bisection on `r` until the objective
/// gap matches `gap` within relative accuracy `1e-6`.
pub fn start_with_gap(
    objective: &CompositeObjective,
    certificate: &OptimumCertificate,
    direction: &[f64],
    gap: f64,
) -> Result<Vec<f64>, GeneratorError> {
    if !(gap > 0.0) {
        return Err(GeneratorError::InvalidParameter(
            "requested gap must be positive",
        ));
    }
    let x_star = certificate.optimal_point();
    let f_star = certificate.optimal_value();
    let point_at = |r: f64| -> Vec<f64> {
        x_star
            .iter()
            .zip(direction)
            .map(|(xi, di)| xi + r * di)
            .collect()
    };
    let gap_at = |r: f64| objective.value_of(&point_at(r)) - f_star;
    let mut hi = 1.0;
    let mut guard = 0;
    while gap_at(hi) < gap {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(GeneratorError::InvalidParameter(
                "direction cannot reach the requested gap",
            ));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g = gap_at(mid);
        if (g - gap).abs() <= 1e-7 * gap {
            return Ok(point_at(mid));
        }
        if g < gap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(point_at(0.5 * (lo + hi)))
}

#[derive(Debug, Clone, Copy)]
pub struct BatchOptions {
    pub count: usize,
    /// Target objective gap of sampled starts (composite families only).
    pub initial_gap: f64,
}

/// One batch entry: an instance plus its engine-space starting point.
pub struct BatchInstance {
    pub problem: GeneratedProblem,
    pub start: Vec<f64>,
}

/// Deterministically expand a template into `count` instances with starts.
///
/// MPC batches share one condensed system and vary the sampled state; other
/// families re-seed the generator per index and place the start on a sphere
/// scaled to the requested initial gap (dual families start at zero
/// multipliers).
pub fn batch(
    template: &GeneratorSpec,
    options: &BatchOptions,
) -> Result<Vec<BatchInstance>, GeneratorError> {
    if options.count == 0 {
        return Err(GeneratorError::InvalidParameter(
            "batch count must be positive",
        ));
    }
    let mut out = Vec::with_capacity(options.count);
    match template {
        GeneratorSpec::MpcSprings(mpc_spec) => {
            let system = MpcSystem::build(mpc_spec)?;
            for index in 0..options.count {
                let mut rng = Pcg32::with_stream(split_seed(mpc_spec.seed, index as u64), 4);
                let state = sample_mpc_state(&mut rng);
                let problem = mpc_instance(&system, &state)?;
                let start = vec![0.0; problem.input.engine_dimension()];
                out.push(BatchInstance { problem, start });
            }
        }
        _ => {
            for index in 0..options.count {
                let instance_spec = template.with_seed(split_seed(template.seed(), index as u64));
                let problem = generate(&instance_spec)?;
                let start = match &problem.input {
                    SolverInput::Composite(objective) => {
                        let certificate = problem
                            .certificate
                            .as_ref()
                            .expect("composite generators emit certificates");
                        let mut rng = Pcg32::with_stream(instance_spec.seed(), 6);
                        let direction = rng.unit_direction(objective.dimension());
                        start_with_gap(objective, certificate, &direction, options.initial_gap)?
                    }
                    SolverInput::Dual(problem) => vec![0.0; problem.dual_dimension()],
                };
                out.push(BatchInstance { problem, start });
            }
        }
    }
    Ok(out)
}
