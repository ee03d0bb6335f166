//! Exact reference solver for small box-constrained QPs.
//!
//! Enumerates every lower/free/upper activity pattern, solves the reduced
//! equality-constrained system on the free coordinates, and keeps the
//! feasible candidate with the smallest objective while verifying the
//! multiplier signs. Exponential in the dimension, so capped to small
//! problems; this is a test oracle and certificate source, not a solver.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, Matrix};

/// Largest dimension accepted for full enumeration (3^12 patterns).
pub const MAX_ENUMERATION_DIMENSION: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnumerationError {
    DimensionTooLarge,
    Shape,
    /// No activity pattern produced a KKT-consistent point.
    NoSolution,
}

impl core::fmt::Display for EnumerationError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EnumerationError::DimensionTooLarge => {
                write!(f, "dimension too large for pattern enumeration")
            }
            EnumerationError::Shape => write!(f, "dimension mismatch"),
            EnumerationError::NoSolution => write!(f, "no KKT-consistent pattern found"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EnumerationError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Activity {
    Free,
    AtLower,
    AtUpper,
}

/// Exact solution of `min ½xᵀHx + cᵀx` over a (possibly one-sided) box.
#[derive(Debug, Clone)]
pub struct BoxQpSolution {
    pub point: Vec<f64>,
    pub value: f64,
    /// Multipliers of the upper-bound rows (`x ≤ u`), one per coordinate,
    /// zero where inactive or the bound is infinite.
    pub upper_multipliers: Vec<f64>,
    /// Multipliers of the lower-bound rows (`x ≥ l`).
    pub lower_multipliers: Vec<f64>,
}

pub fn solve_box_qp_exact(
    hessian: &Matrix,
    linear: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> Result<BoxQpSolution, EnumerationError> {
    let n = hessian.rows();
    if hessian.cols() != n || linear.len() != n || lower.len() != n || upper.len() != n {
        return Err(EnumerationError::Shape);
    }
    if n > MAX_ENUMERATION_DIMENSION {
        return Err(EnumerationError::DimensionTooLarge);
    }
    // Multiplier-sign slack: stationarity residuals on clipped coordinates
    // carry the rounding of the reduced solve.
    let scale = hessian.max_abs().max(linalg::norm2(linear));
    let tol = 1e-9 * (1.0 + scale);

    let mut best: Option<BoxQpSolution> = None;
    let mut pattern = vec![Activity::Free; n];
    enumerate_patterns(
        hessian,
        linear,
        lower,
        upper,
        &mut pattern,
        0,
        tol,
        &mut best,
    );
    best.ok_or(EnumerationError::NoSolution)
}

/// Polish an approximate primal point into an exact KKT point: read the
/// activity pattern off the guess, solve the reduced system on the free
/// coordinates and verify feasibility and multiplier signs. Any dimension;
/// returns `None` when the guessed pattern is not KKT-consistent.
pub fn polish_box_qp(
    hessian: &Matrix,
    linear: &[f64],
    lower: &[f64],
    upper: &[f64],
    guess: &[f64],
    activity_tol: f64,
) -> Option<BoxQpSolution> {
    let n = hessian.rows();
    if guess.len() != n || lower.len() != n || upper.len() != n || linear.len() != n {
        return None;
    }
    let mut pattern = vec![Activity::Free; n];
    for i in 0..n {
        if lower[i].is_finite() && guess[i] - lower[i] <= activity_tol {
            pattern[i] = Activity::AtLower;
        } else if upper[i].is_finite() && upper[i] - guess[i] <= activity_tol {
            pattern[i] = Activity::AtUpper;
        }
    }
    let scale = hessian.max_abs().max(linalg::norm2(linear));
    let tol = 1e-9 * (1.0 + scale);
    try_pattern(hessian, linear, lower, upper, &pattern, tol)
}

#[allow(clippy::too_many_arguments)]
fn enumerate_patterns(
    hessian: &Matrix,
    linear: &[f64],
    lower: &[f64],
    upper: &[f64],
    pattern: &mut Vec<Activity>,
    index: usize,
    tol: f64,
    best: &mut Option<BoxQpSolution>,
) {
    if index == pattern.len() {
        if let Some(candidate) = try_pattern(hessian, linear, lower, upper, pattern, tol) {
            let better = match best {
                Some(current) => candidate.value < current.value,
                None => true,
            };
            if better {
                *best = Some(candidate);
            }
        }
        return;
    }
    pattern[index] = Activity::Free;
    enumerate_patterns(hessian, linear, lower, upper, pattern, index + 1, tol, best);
    if lower[index].is_finite() {
        pattern[index] = Activity::AtLower;
        enumerate_patterns(hessian, linear, lower, upper, pattern, index + 1, tol, best);
    }
    if upper[index].is_finite() {
        pattern[index] = Activity::AtUpper;
        enumerate_patterns(hessian, linear, lower, upper, pattern, index + 1, tol, best);
    }
    pattern[index] = Activity::Free;
}

fn try_pattern(
    hessian: &Matrix,
    linear: &[f64],
    lower: &[f64],
    upper: &[f64],
    pattern: &[Activity],
    tol: f64,
) -> Option<BoxQpSolution> {
    let n = pattern.len();
    let free: Vec<usize> = (0..n).filter(|&i| pattern[i] == Activity::Free).collect();
    let mut x = vec![0.0; n];
    for i in 0..n {
        match pattern[i] {
            Activity::AtLower => x[i] = lower[i],
            Activity::AtUpper => x[i] = upper[i],
            Activity::Free => {}
        }
    }
    if !free.is_empty() {
        // Reduced system: H_ff x_f = -(c_f + H_fb x_b).
        let mut reduced = Matrix::zeros(free.len(), free.len());
        let mut rhs = vec![0.0; free.len()];
        for (a, &i) in free.iter().enumerate() {
            let mut r = -linear[i];
            for j in 0..n {
                if pattern[j] != Activity::Free {
                    r -= hessian[(i, j)] * x[j];
                }
            }
            rhs[a] = r;
            for (b, &j) in free.iter().enumerate() {
                reduced[(a, b)] = hessian[(i, j)];
            }
        }
        let factor = linalg::cholesky(&reduced).ok()?;
        let xf = linalg::cholesky_solve(&factor, &rhs);
        for (a, &i) in free.iter().enumerate() {
            x[i] = xf[a];
        }
    }
    // Primal feasibility of the free coordinates.
    for &i in &free {
        if x[i] < lower[i] - tol || x[i] > upper[i] + tol {
            return None;
        }
    }
    // Dual feasibility: residual signs on the clipped coordinates.
    let residual = {
        let mut r = hessian.matvec(&x);
        for (ri, ci) in r.iter_mut().zip(linear) {
            *ri += ci;
        }
        r
    };
    let mut upper_multipliers = vec![0.0; n];
    let mut lower_multipliers = vec![0.0; n];
    for i in 0..n {
        match pattern[i] {
            Activity::AtLower => {
                if residual[i] < -tol {
                    return None;
                }
                lower_multipliers[i] = residual[i].max(0.0);
            }
            Activity::AtUpper => {
                if residual[i] > tol {
                    return None;
                }
                upper_multipliers[i] = (-residual[i]).max(0.0);
            }
            Activity::Free => {}
        }
    }
    let value = 0.5 * linalg::dot(&x, &hessian.matvec(&x)) + linalg::dot(linear, &x);
    Some(BoxQpSolution {
        point: x,
        value,
        upper_multipliers,
        lower_multipliers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipped_scalar_qp() {
        // min ½x² - x s.t. x ≤ 0.3: optimum at the bound.
        let h = Matrix::from_diagonal(&[1.0]);
        let sol = solve_box_qp_exact(&h, &[-1.0], &[f64::NEG_INFINITY], &[0.3]).unwrap();
        assert!((sol.point[0] - 0.3).abs() < 1e-14);
        assert!((sol.value - (-0.255)).abs() < 1e-14);
        assert!((sol.upper_multipliers[0] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn interior_optimum_has_zero_multipliers() {
        let h = Matrix::from_diagonal(&[2.0, 2.0]);
        let sol = solve_box_qp_exact(&h, &[-1.0, 1.0], &[-10.0, -10.0], &[10.0, 10.0]).unwrap();
        assert!((sol.point[0] - 0.5).abs() < 1e-13);
        assert!((sol.point[1] + 0.5).abs() < 1e-13);
        assert!(sol.upper_multipliers.iter().all(|&m| m == 0.0));
        assert!(sol.lower_multipliers.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn corner_optimum_matches_hand_kkt() {
        let h = Matrix::from_diagonal(&[2.0, 2.0]);
        let sol = solve_box_qp_exact(&h, &[-2.0, -2.0], &[0.0, 0.0], &[0.5, 0.5]).unwrap();
        assert_eq!(sol.point, vec![0.5, 0.5]);
        assert!((sol.value - (-1.5)).abs() < 1e-14);
        assert!((sol.upper_multipliers[0] - 1.0).abs() < 1e-12);
        assert!((sol.upper_multipliers[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_large_dimensions() {
        let n = MAX_ENUMERATION_DIMENSION + 1;
        let h = Matrix::identity(n);
        let z = vec![0.0; n];
        let err = solve_box_qp_exact(&h, &z, &z, &z).unwrap_err();
        assert_eq!(err, EnumerationError::DimensionTooLarge);
    }
}
