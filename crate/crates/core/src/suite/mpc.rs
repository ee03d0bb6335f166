//! Spring-mass MPC problem: three objects in a chain, forces on the two
//! outer ones, condensed over the horizon into a box-constrained QP on the
//! input sequence.
//!
//! The chain is discretized with the bilinear (Tustin) map at the given
//! sampling period; the terminal weight is the discrete algebraic Riccati
//! fixed point obtained by iteration.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, Matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpcSpringsSpec {
    pub horizon: usize,
    /// Mass of each object (kg).
    pub mass: f64,
    /// Spring constant between neighbours (N/m).
    pub stiffness: f64,
    /// Viscous damping across each spring (N·s/m).
    pub damping: f64,
    /// Sampling period (s).
    pub period: f64,
    /// Symmetric force bound on each input (N).
    pub input_bound: f64,
    /// Diagonal state weight.
    pub state_weight: f64,
    /// Diagonal input weight.
    pub input_weight: f64,
    pub seed: u64,
}

impl Default for MpcSpringsSpec {
    fn default() -> Self {
        MpcSpringsSpec {
            horizon: 10,
            mass: 1.0,
            stiffness: 2.0,
            damping: 0.0,
            period: 0.2,
            input_bound: 0.5,
            state_weight: 1.0,
            input_weight: 0.1,
            seed: 0,
        }
    }
}

pub const STATE_DIMENSION: usize = 6;
pub const INPUT_DIMENSION: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpcBuildError {
    InvalidHorizon,
    InvalidPhysicalConstant(&'static str),
    /// Riccati iteration failed to converge; degenerate parameters.
    RiccatiDiverged,
    Discretization,
}

impl core::fmt::Display for MpcBuildError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MpcBuildError::InvalidHorizon => write!(f, "horizon must be positive"),
            MpcBuildError::InvalidPhysicalConstant(what) => {
                write!(f, "invalid physical constant: {what}")
            }
            MpcBuildError::RiccatiDiverged => write!(f, "Riccati iteration did not converge"),
            MpcBuildError::Discretization => write!(f, "discretization map is singular"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MpcBuildError {}

/// The condensed system: everything that does not depend on the initial
/// state. Each state then yields one QP through [`MpcSystem::linear_term`].
#[derive(Debug, Clone)]
pub struct MpcSystem {
    pub spec: MpcSpringsSpec,
    pub state_map: Matrix,
    pub input_map: Matrix,
    pub terminal_weight: Matrix,
    /// Condensed Hessian `2(ΓᵀQ̄Γ + R̄)` over the stacked input sequence.
    pub hessian: Matrix,
    /// `2 ΓᵀQ̄Φ`: maps an initial state to the condensed linear term.
    linear_map: Matrix,
    /// Smallest Hessian eigenvalue, deflated by a safety factor.
    pub sigma: f64,
}

impl MpcSystem {
    pub fn build(spec: &MpcSpringsSpec) -> Result<Self, MpcBuildError> {
        if spec.horizon == 0 {
            return Err(MpcBuildError::InvalidHorizon);
        }
        if !(spec.mass > 0.0) {
            return Err(MpcBuildError::InvalidPhysicalConstant("mass"));
        }
        if !(spec.stiffness > 0.0) {
            return Err(MpcBuildError::InvalidPhysicalConstant("stiffness"));
        }
        if !(spec.period > 0.0) {
            return Err(MpcBuildError::InvalidPhysicalConstant("period"));
        }
        if !(spec.input_bound > 0.0) {
            return Err(MpcBuildError::InvalidPhysicalConstant("input bound"));
        }
        if !(spec.damping >= 0.0) {
            return Err(MpcBuildError::InvalidPhysicalConstant("damping"));
        }
        if !(spec.state_weight > 0.0) || !(spec.input_weight > 0.0) {
            return Err(MpcBuildError::InvalidPhysicalConstant("cost weight"));
        }

        let (state_map, input_map) = discretize(spec)?;
        let stage_q = scaled_identity(STATE_DIMENSION, spec.state_weight);
        let stage_r = scaled_identity(INPUT_DIMENSION, spec.input_weight);
        let terminal_weight = riccati_fixed_point(&state_map, &input_map, &stage_q, &stage_r)?;

        let n_inputs = INPUT_DIMENSION * spec.horizon;
        // Powers of the state map.
        let mut powers: Vec<Matrix> = Vec::with_capacity(spec.horizon + 1);
        powers.push(Matrix::identity(STATE_DIMENSION));
        for k in 1..=spec.horizon {
            powers.push(powers[k - 1].matmul(&state_map).expect("square"));
        }
        // Prediction maps for x_1..x_N stacked.
        let rows = STATE_DIMENSION * spec.horizon;
        let mut phi = Matrix::zeros(rows, STATE_DIMENSION);
        let mut gamma = Matrix::zeros(rows, n_inputs);
        for k in 1..=spec.horizon {
            let row0 = STATE_DIMENSION * (k - 1);
            for i in 0..STATE_DIMENSION {
                for j in 0..STATE_DIMENSION {
                    phi[(row0 + i, j)] = powers[k][(i, j)];
                }
            }
            for step in 0..k {
                let block = powers[k - 1 - step].matmul(&input_map).expect("shape");
                for i in 0..STATE_DIMENSION {
                    for j in 0..INPUT_DIMENSION {
                        gamma[(row0 + i, INPUT_DIMENSION * step + j)] = block[(i, j)];
                    }
                }
            }
        }
        // Block-diagonal state weights with the terminal block last.
        let mut qbar = Matrix::zeros(rows, rows);
        for k in 1..=spec.horizon {
            let row0 = STATE_DIMENSION * (k - 1);
            let block = if k == spec.horizon {
                &terminal_weight
            } else {
                &stage_q
            };
            for i in 0..STATE_DIMENSION {
                for j in 0..STATE_DIMENSION {
                    qbar[(row0 + i, row0 + j)] = block[(i, j)];
                }
            }
        }
        let qbar_gamma = qbar.matmul(&gamma).expect("shape");
        let gamma_t = gamma.transpose();
        let mut hessian = gamma_t.matmul(&qbar_gamma).expect("shape");
        for step in 0..spec.horizon {
            for j in 0..INPUT_DIMENSION {
                let idx = INPUT_DIMENSION * step + j;
                hessian[(idx, idx)] += spec.input_weight;
            }
        }
        for i in 0..n_inputs {
            for j in 0..n_inputs {
                hessian[(i, j)] *= 2.0;
            }
        }
        hessian.symmetrize();
        let qbar_phi = qbar.matmul(&phi).expect("shape");
        let mut linear_map = gamma_t.matmul(&qbar_phi).expect("shape");
        for i in 0..n_inputs {
            for j in 0..STATE_DIMENSION {
                linear_map[(i, j)] *= 2.0;
            }
        }
        let sigma = linalg::smallest_eigenvalue_spd(&hessian)
            .map_err(|_| MpcBuildError::RiccatiDiverged)?
            * (1.0 - 1e-9);
        Ok(MpcSystem {
            spec: *spec,
            state_map,
            input_map,
            terminal_weight,
            hessian,
            linear_map,
            sigma,
        })
    }

    pub fn input_sequence_length(&self) -> usize {
        INPUT_DIMENSION * self.spec.horizon
    }

    /// Condensed linear term for an initial state.
    pub fn linear_term(&self, state: &[f64]) -> Vec<f64> {
        self.linear_map.matvec(state)
    }

    pub fn input_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.input_sequence_length();
        (
            vec![-self.spec.input_bound; n],
            vec![self.spec.input_bound; n],
        )
    }
}

fn scaled_identity(n: usize, scale: f64) -> Matrix {
    let mut m = Matrix::identity(n);
    for i in 0..n {
        m[(i, i)] = scale;
    }
    m
}

/// Continuous-time chain dynamics and the bilinear discretization.
fn discretize(spec: &MpcSpringsSpec) -> Result<(Matrix, Matrix), MpcBuildError> {
    let k = spec.stiffness / spec.mass;
    let d = spec.damping / spec.mass;
    let mut a = Matrix::zeros(STATE_DIMENSION, STATE_DIMENSION);
    // Positions feed velocities.
    a[(0, 3)] = 1.0;
    a[(1, 4)] = 1.0;
    a[(2, 5)] = 1.0;
    // Spring (and relative damping) forces: chain 1-2-3.
    a[(3, 0)] = -k;
    a[(3, 1)] = k;
    a[(4, 0)] = k;
    a[(4, 1)] = -2.0 * k;
    a[(4, 2)] = k;
    a[(5, 1)] = k;
    a[(5, 2)] = -k;
    a[(3, 3)] = -d;
    a[(3, 4)] = d;
    a[(4, 3)] = d;
    a[(4, 4)] = -2.0 * d;
    a[(4, 5)] = d;
    a[(5, 4)] = d;
    a[(5, 5)] = -d;
    let mut b = Matrix::zeros(STATE_DIMENSION, INPUT_DIMENSION);
    b[(3, 0)] = 1.0 / spec.mass;
    b[(5, 1)] = 1.0 / spec.mass;

    // (I - T/2·A) X = (I + T/2·A), (I - T/2·A) Y = T·B
    let half = 0.5 * spec.period;
    let mut minus = Matrix::identity(STATE_DIMENSION);
    let mut plus = Matrix::identity(STATE_DIMENSION);
    for i in 0..STATE_DIMENSION {
        for j in 0..STATE_DIMENSION {
            minus[(i, j)] -= half * a[(i, j)];
            plus[(i, j)] += half * a[(i, j)];
        }
    }
    let factors = linalg::lu_factor(&minus).map_err(|_| MpcBuildError::Discretization)?;
    let mut ad = Matrix::zeros(STATE_DIMENSION, STATE_DIMENSION);
    for j in 0..STATE_DIMENSION {
        let col: Vec<f64> = (0..STATE_DIMENSION).map(|i| plus[(i, j)]).collect();
        let solved = linalg::lu_solve(&factors, &col);
        for i in 0..STATE_DIMENSION {
            ad[(i, j)] = solved[i];
        }
    }
    let mut bd = Matrix::zeros(STATE_DIMENSION, INPUT_DIMENSION);
    for j in 0..INPUT_DIMENSION {
        let col: Vec<f64> = (0..STATE_DIMENSION)
            .map(|i| spec.period * b[(i, j)])
            .collect();
        let solved = linalg::lu_solve(&factors, &col);
        for i in 0..STATE_DIMENSION {
            bd[(i, j)] = solved[i];
        }
    }
    Ok((ad, bd))
}

/// Iterate the Riccati recursion to its fixed point.
fn riccati_fixed_point(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
) -> Result<Matrix, MpcBuildError> {
    let mut p = q.clone();
    for _ in 0..50_000 {
        let pa = p.matmul(a).expect("shape");
        let pb = p.matmul(b).expect("shape");
        let at_pa = a.transpose().matmul(&pa).expect("shape");
        let at_pb = a.transpose().matmul(&pb).expect("shape");
        let bt_pa = b.transpose().matmul(&pa).expect("shape");
        let mut inner = b.transpose().matmul(&pb).expect("shape");
        for i in 0..inner.rows() {
            for j in 0..inner.cols() {
                inner[(i, j)] += r[(i, j)];
            }
        }
        let factor = linalg::cholesky(&inner).map_err(|_| MpcBuildError::RiccatiDiverged)?;
        // inner⁻¹ (Bᵀ P A), column by column.
        let mut solved = Matrix::zeros(bt_pa.rows(), bt_pa.cols());
        for j in 0..bt_pa.cols() {
            let col: Vec<f64> = (0..bt_pa.rows()).map(|i| bt_pa[(i, j)]).collect();
            let s = linalg::cholesky_solve(&factor, &col);
            for i in 0..bt_pa.rows() {
                solved[(i, j)] = s[i];
            }
        }
        let correction = at_pb.matmul(&solved).expect("shape");
        let mut next = q.clone();
        for i in 0..next.rows() {
            for j in 0..next.cols() {
                next[(i, j)] += at_pa[(i, j)] - correction[(i, j)];
            }
        }
        next.symmetrize();
        let mut diff = 0.0f64;
        for i in 0..next.rows() {
            for j in 0..next.cols() {
                diff = diff.max((next[(i, j)] - p[(i, j)]).abs());
            }
        }
        let scale = 1.0 + next.max_abs();
        p = next;
        if diff <= 1e-13 * scale {
            return Ok(p);
        }
    }
    Err(MpcBuildError::RiccatiDiverged)
}
