//! Dual engine for linearly constrained strongly convex QPs.
//!
//! For `min ½xᵀHx + cᵀx  s.t.  Gx ≤ g` with `H ≻ 0`, the (negated) dual
//! function is a smooth convex quadratic over the nonnegative orthant, so the
//! generic FISTA recursion applies with the orthant projection as prox. The
//! resulting engine iterates in multiplier space and recovers primal points
//! through `x(λ) = -H⁻¹(c + Gᵀλ)`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::engine::{AfomEngine, AfomRun, CompositeOracle, EngineError, Fista};
use crate::linalg::{self, Matrix};
use crate::problem::ExtReal;

/// Safety slack applied to numerically estimated spectral quantities so the
/// derived step constant stays a valid upper bound on the true Lipschitz
/// constant of the dual gradient.
const SPECTRAL_SLACK: f64 = 1e-9;

/// Strongly convex QP with affine inequality constraints, prepared for
/// dual-space solving.
pub struct DualQpProblem {
    hessian: Matrix,
    linear: Vec<f64>,
    constraints: Matrix,
    constraint_bounds: Vec<f64>,
    sigma_f: f64,
    spectral_bound: f64,
    hessian_factor: Matrix,
}

impl DualQpProblem {
    /// Build from raw data, estimating the strong convexity constant and the
    /// constraint spectral bound numerically.
    pub fn new(
        hessian: Matrix,
        linear: Vec<f64>,
        constraints: Matrix,
        constraint_bounds: Vec<f64>,
    ) -> Result<Self, EngineError> {
        let sigma = linalg::smallest_eigenvalue_spd(&hessian)
            .map_err(|_| EngineError::IndefiniteHessian)?
            * (1.0 - SPECTRAL_SLACK);
        let gtg = constraints
            .transpose()
            .matmul(&constraints)
            .map_err(|_| EngineError::DegenerateConstraints)?;
        let rho = linalg::dominant_eigenvalue(&gtg, 20_000, 1e-14) * (1.0 + SPECTRAL_SLACK);
        Self::with_constants(hessian, linear, constraints, constraint_bounds, sigma, rho)
    }

    /// Build with externally certified constants (exact generator knowledge).
    pub fn with_constants(
        hessian: Matrix,
        linear: Vec<f64>,
        constraints: Matrix,
        constraint_bounds: Vec<f64>,
        sigma_f: f64,
        spectral_bound: f64,
    ) -> Result<Self, EngineError> {
        let n = hessian.rows();
        if n == 0 || hessian.cols() != n || linear.len() != n || constraints.cols() != n {
            return Err(EngineError::DegenerateConstraints);
        }
        if constraints.rows() == 0 {
            return Err(EngineError::DegenerateConstraints);
        }
        if constraints.rows() != constraint_bounds.len() {
            return Err(EngineError::DegenerateConstraints);
        }
        if !(sigma_f > 0.0) || !(spectral_bound > 0.0) {
            return Err(EngineError::IndefiniteHessian);
        }
        let factor = linalg::cholesky(&hessian).map_err(|_| EngineError::IndefiniteHessian)?;
        Ok(DualQpProblem {
            hessian,
            linear,
            constraints,
            constraint_bounds,
            sigma_f,
            spectral_bound,
            hessian_factor: factor,
        })
    }

    /// Box-constrained QP `lower ≤ x ≤ upper`; infinite entries drop the
    /// corresponding row. The constraint spectral bound is exact here: the
    /// Gram matrix of the stacked `±eᵢ` rows is diagonal.
    pub fn box_constrained(
        hessian: Matrix,
        linear: Vec<f64>,
        lower: &[f64],
        upper: &[f64],
    ) -> Result<Self, EngineError> {
        let n = hessian.rows();
        if lower.len() != n || upper.len() != n {
            return Err(EngineError::DegenerateConstraints);
        }
        if lower.iter().zip(upper).any(|(l, u)| l > u) {
            return Err(EngineError::InfeasibleConstraints);
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut bounds = Vec::new();
        let mut sides = vec![0u8; n];
        for (i, &u) in upper.iter().enumerate() {
            if u.is_finite() {
                let mut r = vec![0.0; n];
                r[i] = 1.0;
                rows.push(r);
                bounds.push(u);
                sides[i] += 1;
            }
        }
        for (i, &l) in lower.iter().enumerate() {
            if l.is_finite() {
                let mut r = vec![0.0; n];
                r[i] = -1.0;
                rows.push(r);
                bounds.push(-l);
                sides[i] += 1;
            }
        }
        if rows.is_empty() {
            return Err(EngineError::DegenerateConstraints);
        }
        let spectral = sides.iter().copied().max().unwrap_or(0) as f64;
        let sigma = linalg::smallest_eigenvalue_spd(&hessian)
            .map_err(|_| EngineError::IndefiniteHessian)?
            * (1.0 - SPECTRAL_SLACK);
        let constraints = Matrix::from_rows(&rows).expect("rows are rectangular");
        Self::with_constants(hessian, linear, constraints, bounds, sigma, spectral)
    }

    /// Override the numerically estimated strong convexity constant with an
    /// exactly known one.
    pub fn with_sigma(mut self, sigma_f: f64) -> Self {
        self.sigma_f = sigma_f;
        self
    }

    /// Symmetric diagonal (Jacobi) scaling of the dual quadratic: each
    /// constraint row is divided by the square root of the corresponding
    /// diagonal entry of `G H⁻¹ Gᵀ`. The feasible set is unchanged.
    pub fn jacobi_scaled(self) -> Result<Self, EngineError> {
        let m = self.constraints.rows();
        let mut scale = Vec::with_capacity(m);
        for i in 0..m {
            let row = self.constraints.row(i);
            let hinv_row = linalg::cholesky_solve(&self.hessian_factor, row);
            let d = linalg::dot(row, &hinv_row);
            if !(d > 0.0) {
                return Err(EngineError::DegenerateConstraints);
            }
            scale.push(1.0 / crate::math::sqrt(d));
        }
        let mut rows = Vec::with_capacity(m);
        let mut bounds = Vec::with_capacity(m);
        for i in 0..m {
            rows.push(
                self.constraints
                    .row(i)
                    .iter()
                    .map(|v| v * scale[i])
                    .collect::<Vec<_>>(),
            );
            bounds.push(self.constraint_bounds[i] * scale[i]);
        }
        let scaled = Matrix::from_rows(&rows).expect("rows are rectangular");
        let gtg = scaled.transpose().matmul(&scaled).expect("shape");
        let rho = linalg::dominant_eigenvalue(&gtg, 20_000, 1e-14) * (1.0 + SPECTRAL_SLACK);
        Self::with_constants(self.hessian, self.linear, scaled, bounds, self.sigma_f, rho)
    }

    pub fn primal_dimension(&self) -> usize {
        self.hessian.rows()
    }

    pub fn dual_dimension(&self) -> usize {
        self.constraints.rows()
    }

    /// Strong convexity constant of the primal objective.
    pub fn sigma_f(&self) -> f64 {
        self.sigma_f
    }

    /// Spectral bound of the constraint matrix (largest eigenvalue of `GᵀG`).
    pub fn spectral_bound(&self) -> f64 {
        self.spectral_bound
    }

    pub fn hessian(&self) -> &Matrix {
        &self.hessian
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn constraints(&self) -> &Matrix {
        &self.constraints
    }

    pub fn constraint_bounds(&self) -> &[f64] {
        &self.constraint_bounds
    }

    /// Primal minimizer of the Lagrangian at multipliers `λ`.
    pub fn recover_primal(&self, multipliers: &[f64]) -> Vec<f64> {
        let mut w = self.constraints.t_matvec(multipliers);
        for (wi, ci) in w.iter_mut().zip(&self.linear) {
            *wi += ci;
        }
        let mut x = linalg::cholesky_solve(&self.hessian_factor, &w);
        for xi in x.iter_mut() {
            *xi = -*xi;
        }
        x
    }

    /// Negated dual function (a smooth convex quadratic in `λ`).
    pub fn negated_dual_value(&self, multipliers: &[f64]) -> f64 {
        let mut w = self.constraints.t_matvec(multipliers);
        for (wi, ci) in w.iter_mut().zip(&self.linear) {
            *wi += ci;
        }
        let hinv_w = linalg::cholesky_solve(&self.hessian_factor, &w);
        0.5 * linalg::dot(&w, &hinv_w) + linalg::dot(&self.constraint_bounds, multipliers)
    }

    /// Gradient of the negated dual: `g - G x(λ)`.
    pub fn negated_dual_gradient(&self, multipliers: &[f64]) -> Vec<f64> {
        let x = self.recover_primal(multipliers);
        let gx = self.constraints.matvec(&x);
        self.constraint_bounds
            .iter()
            .zip(&gx)
            .map(|(gi, gxi)| gi - gxi)
            .collect()
    }

    /// Primal objective value `½xᵀHx + cᵀx`.
    pub fn primal_value(&self, x: &[f64]) -> f64 {
        0.5 * linalg::dot(x, &self.hessian.matvec(x)) + linalg::dot(&self.linear, x)
    }
}

impl core::fmt::Debug for DualQpProblem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DualQpProblem")
            .field("primal_dimension", &self.primal_dimension())
            .field("dual_dimension", &self.dual_dimension())
            .field("sigma_f", &self.sigma_f)
            .field("spectral_bound", &self.spectral_bound)
            .finish()
    }
}

/// The negated dual as a composite oracle: smooth quadratic plus the
/// indicator of the nonnegative orthant.
pub struct DualObjective {
    problem: DualQpProblem,
}

impl CompositeOracle for DualObjective {
    fn dimension(&self) -> usize {
        self.problem.dual_dimension()
    }

    fn lipschitz(&self) -> f64 {
        self.problem.spectral_bound / self.problem.sigma_f
    }

    fn smooth_value(&self, x: &[f64]) -> f64 {
        self.problem.negated_dual_value(x)
    }

    fn smooth_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.problem.negated_dual_gradient(x)
    }

    fn prox(&self, x: &[f64], _step: f64) -> Vec<f64> {
        x.iter().map(|v| v.max(0.0)).collect()
    }

    fn nonsmooth_value(&self, x: &[f64]) -> ExtReal {
        if x.iter().all(|v| *v >= 0.0) {
            ExtReal::Finite(0.0)
        } else {
            ExtReal::PosInfinity
        }
    }
}

/// FISTA on the negated dual, with primal recovery.
pub struct DualQpEngine {
    fista: Fista<DualObjective>,
}

impl DualQpEngine {
    pub fn problem(&self) -> &DualQpProblem {
        &self.fista.oracle().problem
    }

    pub fn recover_primal(&self, multipliers: &[f64]) -> Vec<f64> {
        self.problem().recover_primal(multipliers)
    }

    /// Zero multipliers, the conventional starting point.
    pub fn cold_start(&self) -> Vec<f64> {
        vec![0.0; self.dimension()]
    }
}

impl AfomEngine for DualQpEngine {
    fn dimension(&self) -> usize {
        self.fista.dimension()
    }
    fn l_f(&self) -> f64 {
        self.fista.l_f()
    }
    fn a_f(&self) -> f64 {
        self.fista.a_f()
    }
    fn objective_value(&self, x: &[f64]) -> f64 {
        self.fista.objective_value(x)
    }
    fn gradient_map(&self, x: &[f64]) -> Vec<f64> {
        self.fista.gradient_map(x)
    }
    fn start(&self, x0: &[f64]) -> Box<dyn AfomRun + '_> {
        self.fista.start(x0)
    }
}

/// Build the dual engine for a constrained strongly convex QP.
pub fn dual_qp_engine(problem: DualQpProblem) -> Result<DualQpEngine, EngineError> {
    let fista = Fista::new(DualObjective { problem })?;
    Ok(DualQpEngine { fista })
}
