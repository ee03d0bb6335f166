//! Composite optimization problems `min f(x)`, `f = h + Ψ`, together with
//! the certificates used to verify solver behaviour.
//!
//! `h` is an `L`-smooth convex function given through value and gradient
//! oracles; `Ψ` is a (possibly nonsmooth) convex function given through its
//! proximal map and an extended-real value oracle. All norms are Euclidean.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::linalg;
use crate::math;

/// Extended real value: finite or `+∞` (outside the effective domain).
///
/// Arithmetic with the infinite value is deliberately not provided; only
/// comparisons and the addition of a finite amount to a possibly-infinite
/// value are meaningful here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInfinity,
}

impl ExtReal {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(*v),
            ExtReal::PosInfinity => None,
        }
    }

    /// Add a finite amount, preserving `+∞`.
    pub fn plus(&self, rhs: f64) -> ExtReal {
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(v + rhs),
            ExtReal::PosInfinity => ExtReal::PosInfinity,
        }
    }

    /// Collapse to `f64`, mapping `+∞` to `f64::INFINITY`.
    pub fn to_f64(&self) -> f64 {
        match self {
            ExtReal::Finite(v) => *v,
            ExtReal::PosInfinity => f64::INFINITY,
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

pub type ValueOracle = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorOracle = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type ExtValueOracle = Box<dyn Fn(&[f64]) -> ExtReal + Send + Sync>;
pub type ProxOracle = Box<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemError {
    DimensionMismatch {
        expected: usize,
        got: usize,
    },
    /// Operation needs a certificate field that is absent.
    UnsupportedQuery(&'static str),
    /// Empty or otherwise degenerate input set.
    DegenerateInput(&'static str),
    InvalidParameter(&'static str),
}

impl core::fmt::Display for ProblemError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ProblemError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            ProblemError::UnsupportedQuery(what) => write!(f, "unsupported query: {what}"),
            ProblemError::DegenerateInput(what) => write!(f, "degenerate input: {what}"),
            ProblemError::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ProblemError {}

/// Relative-absolute hybrid tolerance used to validate certificates.
pub fn certificate_tolerance(f_star: f64) -> f64 {
    1e-9 * (1.0 + math::abs(f_star))
}

/// Oracle bundle for a composite objective `f = h + Ψ`.
///
/// Oracles are pure; a `CompositeObjective` can be shared across threads and
/// queried concurrently without synchronization.
pub struct CompositeObjective {
    dimension: usize,
    smoothness_constant: f64,
    smooth_value: ValueOracle,
    smooth_gradient: VectorOracle,
    prox: ProxOracle,
    nonsmooth_value: ExtValueOracle,
}

impl CompositeObjective {
    pub fn new(
        dimension: usize,
        smoothness_constant: f64,
        smooth_value: ValueOracle,
        smooth_gradient: VectorOracle,
        prox: ProxOracle,
        nonsmooth_value: ExtValueOracle,
    ) -> Result<Self, ProblemError> {
        if dimension == 0 {
            return Err(ProblemError::InvalidParameter("dimension must be positive"));
        }
        if !(smoothness_constant > 0.0) || !smoothness_constant.is_finite() {
            return Err(ProblemError::InvalidParameter(
                "smoothness constant must be a positive finite real",
            ));
        }
        Ok(CompositeObjective {
            dimension,
            smoothness_constant,
            smooth_value,
            smooth_gradient,
            prox,
            nonsmooth_value,
        })
    }

    /// Purely smooth objective (`Ψ ≡ 0`, prox is the identity).
    pub fn smooth(
        dimension: usize,
        smoothness_constant: f64,
        value: ValueOracle,
        gradient: VectorOracle,
    ) -> Result<Self, ProblemError> {
        CompositeObjective::new(
            dimension,
            smoothness_constant,
            value,
            gradient,
            Box::new(|x: &[f64], _t: f64| x.to_vec()),
            Box::new(|_x: &[f64]| ExtReal::Finite(0.0)),
        )
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Lipschitz constant of the smooth gradient.
    pub fn smoothness_constant(&self) -> f64 {
        self.smoothness_constant
    }

    pub fn smooth_value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension);
        (self.smooth_value)(x)
    }

    pub fn smooth_gradient(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dimension);
        (self.smooth_gradient)(x)
    }

    pub fn prox(&self, x: &[f64], step: f64) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dimension);
        debug_assert!(step > 0.0);
        (self.prox)(x, step)
    }

    pub fn nonsmooth_value(&self, x: &[f64]) -> ExtReal {
        debug_assert_eq!(x.len(), self.dimension);
        (self.nonsmooth_value)(x)
    }

    /// Full objective value; `+∞` exactly when `x` is outside the domain.
    pub fn evaluate(&self, x: &[f64]) -> Result<ExtReal, ProblemError> {
        if x.len() != self.dimension {
            return Err(ProblemError::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        Ok(self.nonsmooth_value(x).plus(self.smooth_value(x)))
    }

    /// Objective value as `f64` with `+∞` for points outside the domain.
    /// Callers on hot paths evaluate only at points already known to have
    /// the right dimension.
    pub fn value_of(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension);
        self.nonsmooth_value(x).plus(self.smooth_value(x)).to_f64()
    }
}

impl core::fmt::Debug for CompositeObjective {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CompositeObjective")
            .field("dimension", &self.dimension)
            .field("smoothness_constant", &self.smoothness_constant)
            .finish_non_exhaustive()
    }
}

/// How an optimum certificate was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CertificateQuality {
    /// Closed-form or finite enumeration; trustworthy to roundoff.
    Exact,
    /// High-accuracy reference run; `accuracy` is the claimed absolute level.
    Numerical { accuracy: f64 },
}

/// Exactly known optimum: value, a representative minimizer and (optionally)
/// the projection onto the optimal set.
pub struct OptimumCertificate {
    optimal_value: f64,
    optimal_point: Vec<f64>,
    projection: Option<VectorOracle>,
    quality: CertificateQuality,
}

impl OptimumCertificate {
    pub fn new(optimal_value: f64, optimal_point: Vec<f64>) -> Self {
        OptimumCertificate {
            optimal_value,
            optimal_point,
            projection: None,
            quality: CertificateQuality::Exact,
        }
    }

    /// Certificate for a singleton optimal set: projection is constant.
    pub fn singleton(optimal_value: f64, optimal_point: Vec<f64>) -> Self {
        let target = optimal_point.clone();
        OptimumCertificate {
            optimal_value,
            optimal_point,
            projection: Some(Box::new(move |_x: &[f64]| target.clone())),
            quality: CertificateQuality::Exact,
        }
    }

    pub fn with_projection(mut self, projection: VectorOracle) -> Self {
        self.projection = Some(projection);
        self
    }

    pub fn with_quality(mut self, quality: CertificateQuality) -> Self {
        self.quality = quality;
        self
    }

    pub fn optimal_value(&self) -> f64 {
        self.optimal_value
    }

    pub fn optimal_point(&self) -> &[f64] {
        &self.optimal_point
    }

    pub fn quality(&self) -> CertificateQuality {
        self.quality
    }

    pub fn has_projection(&self) -> bool {
        self.projection.is_some()
    }

    /// Closest optimal point to `x`, when the projection oracle is present.
    pub fn project(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.projection.as_ref().map(|p| p(x))
    }

    /// Objective gap `f(x) - f*` given an already computed value.
    pub fn gap_of(&self, value: f64) -> f64 {
        value - self.optimal_value
    }

    /// Check the certificate against the objective it claims to describe.
    pub fn validate(&self, objective: &CompositeObjective) -> Result<(), ProblemError> {
        let tol = certificate_tolerance(self.optimal_value);
        let at_point = objective.evaluate(&self.optimal_point)?;
        match at_point.finite() {
            Some(v) if math::abs(v - self.optimal_value) <= tol => {}
            _ => {
                return Err(ProblemError::DegenerateInput(
                    "objective at the certified point does not match the certified value",
                ))
            }
        }
        if let Some(proj) = self.project(&self.optimal_point) {
            let v = objective.evaluate(&proj)?;
            match v.finite() {
                Some(v) if math::abs(v - self.optimal_value) <= tol => {}
                _ => {
                    return Err(ProblemError::DegenerateInput(
                        "projection output does not achieve the certified value",
                    ))
                }
            }
        }
        Ok(())
    }
}

impl core::fmt::Debug for OptimumCertificate {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("OptimumCertificate")
            .field("optimal_value", &self.optimal_value)
            .field("dimension", &self.optimal_point.len())
            .field("has_projection", &self.projection.is_some())
            .field("quality", &self.quality)
            .finish()
    }
}

/// Quadratic-growth certificate on a sublevel set: for every `x` with
/// `f(x) - f* ≤ level`, the gap dominates `(mu/2)·‖x - x̄‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfgCertificate {
    level: f64,
    mu: f64,
}

impl QfgCertificate {
    pub fn new(level: f64, mu: f64) -> Result<Self, ProblemError> {
        if !(level > 0.0) {
            return Err(ProblemError::InvalidParameter("level must be positive"));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(ProblemError::InvalidParameter(
                "growth constant must be a positive finite real",
            ));
        }
        Ok(QfgCertificate { level, mu })
    }

    /// Growth valid on the whole domain (`level = +∞`).
    pub fn global(mu: f64) -> Result<Self, ProblemError> {
        QfgCertificate::new(f64::INFINITY, mu)
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// Membership of `x` in the sublevel set `{f - f* ≤ rho}`.
pub fn level_set_membership(
    objective: &CompositeObjective,
    certificate: &OptimumCertificate,
    x: &[f64],
    rho: f64,
) -> Result<bool, ProblemError> {
    if !(rho >= 0.0) {
        return Err(ProblemError::InvalidParameter("rho must be nonnegative"));
    }
    let v = objective.evaluate(x)?;
    Ok(match v.finite() {
        Some(v) => certificate.gap_of(v) <= rho,
        None => false,
    })
}

/// Per-sample outcome of a quadratic-growth check.
#[derive(Debug, Clone, Copy)]
pub struct QfgSample {
    pub gap: f64,
    pub half_sq_distance: f64,
    /// `gap / (½·‖x - x̄‖²)`; `+∞` for samples sitting on the optimal set.
    pub ratio: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct QfgReport {
    pub samples: Vec<QfgSample>,
    pub skipped_outside_level: usize,
    pub min_ratio: f64,
    pub pass: bool,
}

/// Confront a quadratic-growth certificate with sampled points.
///
/// Samples outside the certified sublevel set are skipped (and counted);
/// each retained sample contributes the ratio `(f(x)-f*) / (½‖x-x̄‖²)`,
/// flagged when it falls below the certified constant.
pub fn verify_qfg(
    objective: &CompositeObjective,
    optimum: &OptimumCertificate,
    qfg: &QfgCertificate,
    samples: &[Vec<f64>],
) -> Result<QfgReport, ProblemError> {
    if !optimum.has_projection() {
        return Err(ProblemError::UnsupportedQuery(
            "quadratic-growth verification needs the projection oracle",
        ));
    }
    let mut report = QfgReport {
        samples: Vec::new(),
        skipped_outside_level: 0,
        min_ratio: f64::INFINITY,
        pass: true,
    };
    for x in samples {
        let v = objective.evaluate(x)?;
        let value = match v.finite() {
            Some(value) => value,
            None => {
                report.skipped_outside_level += 1;
                continue;
            }
        };
        let gap = optimum.gap_of(value);
        if gap > qfg.level() {
            report.skipped_outside_level += 1;
            continue;
        }
        let projected = optimum.project(x).expect("projection checked above");
        let half_sq = 0.5 * {
            let d = linalg::sub(x, &projected);
            linalg::dot(&d, &d)
        };
        let (ratio, flagged) = if half_sq <= f64::MIN_POSITIVE {
            // On the optimal set the growth inequality holds trivially.
            (f64::INFINITY, false)
        } else {
            let r = gap / half_sq;
            (r, r < qfg.mu())
        };
        report.min_ratio = report.min_ratio.min(ratio);
        report.pass &= !flagged;
        report.samples.push(QfgSample {
            gap,
            half_sq_distance: half_sq,
            ratio,
            flagged,
        });
    }
    if report.samples.is_empty() {
        return Err(ProblemError::DegenerateInput(
            "no samples inside the certified sublevel set",
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn half_sq_norm_1d() -> CompositeObjective {
        CompositeObjective::smooth(
            1,
            1.0,
            Box::new(|x: &[f64]| 0.5 * x[0] * x[0]),
            Box::new(|x: &[f64]| vec![x[0]]),
        )
        .unwrap()
    }

    /// `½ xᵀ diag(d) x` with the exact certificate at the origin.
    fn diag_quadratic(d: &'static [f64]) -> (CompositeObjective, OptimumCertificate) {
        let l = d.iter().cloned().fold(0.0, f64::max);
        let obj = CompositeObjective::smooth(
            d.len(),
            l,
            Box::new(move |x: &[f64]| {
                0.5 * x.iter().zip(d).map(|(xi, di)| di * xi * xi).sum::<f64>()
            }),
            Box::new(move |x: &[f64]| x.iter().zip(d).map(|(xi, di)| di * xi).collect()),
        )
        .unwrap();
        let cert = OptimumCertificate::singleton(0.0, vec![0.0; d.len()]);
        (obj, cert)
    }

    #[test]
    fn evaluate_centered_quadratic_at_origin() {
        let (obj, _) = diag_quadratic(&[1.0, 1.0]);
        assert_eq!(obj.evaluate(&[0.0, 0.0]).unwrap(), ExtReal::Finite(0.0));
    }

    #[test]
    fn evaluate_outside_indicator_domain_is_infinite() {
        // f(x) = ½x² + I_{x ≥ 1}
        let obj = CompositeObjective::new(
            1,
            1.0,
            Box::new(|x: &[f64]| 0.5 * x[0] * x[0]),
            Box::new(|x: &[f64]| vec![x[0]]),
            Box::new(|x: &[f64], _t| vec![x[0].max(1.0)]),
            Box::new(|x: &[f64]| {
                if x[0] >= 1.0 {
                    ExtReal::Finite(0.0)
                } else {
                    ExtReal::PosInfinity
                }
            }),
        )
        .unwrap();
        assert_eq!(obj.evaluate(&[0.5]).unwrap(), ExtReal::PosInfinity);
        assert!(obj.evaluate(&[1.5]).unwrap().is_finite());
    }

    #[test]
    fn evaluate_ill_conditioned_diag() {
        let (obj, _) = diag_quadratic(&[1.0, 100.0]);
        let v = obj.evaluate(&[1.0, 1.0]).unwrap().finite().unwrap();
        assert_eq!(v, 50.5);
    }

    #[test]
    fn evaluate_rejects_dimension_mismatch() {
        let obj = half_sq_norm_1d();
        assert!(matches!(
            obj.evaluate(&[1.0, 2.0]),
            Err(ProblemError::DimensionMismatch {
                expected: 1,
                got: 2
            })
        ));
    }

    #[test]
    fn level_set_membership_cases() {
        let obj = half_sq_norm_1d();
        let cert = OptimumCertificate::singleton(0.0, vec![0.0]);
        assert!(level_set_membership(&obj, &cert, &[1.0], 1.0).unwrap());
        assert!(!level_set_membership(&obj, &cert, &[2.0], 1.0).unwrap());
        assert!(level_set_membership(&obj, &cert, &[0.0], 1e-12).unwrap());
    }

    #[test]
    fn qfg_equality_case_passes_and_overstated_mu_fails() {
        // f(x) = ½·8·‖x‖²: the growth ratio is exactly 8 everywhere.
        let (obj, cert) = diag_quadratic(&[8.0, 8.0]);
        let samples: Vec<Vec<f64>> = vec![vec![1.0, 0.0], vec![0.3, -2.0], vec![-0.5, 0.5]];
        let ok = verify_qfg(&obj, &cert, &QfgCertificate::global(8.0).unwrap(), &samples).unwrap();
        assert!(ok.pass);
        for s in &ok.samples {
            assert!((s.ratio - 8.0).abs() < 1e-12);
        }
        let bad = verify_qfg(&obj, &cert, &QfgCertificate::global(9.0).unwrap(), &samples).unwrap();
        assert!(!bad.pass);
        assert_eq!(
            bad.samples.iter().filter(|s| s.flagged).count(),
            samples.len()
        );
    }

    #[test]
    fn qfg_on_ill_conditioned_quadratic_in_level_set() {
        let (obj, cert) = diag_quadratic(&[1.0, 100.0]);
        let qfg = QfgCertificate::new(10.0, 1.0).unwrap();
        let mut rng = crate::rng::Pcg32::new(11);
        let mut samples = Vec::new();
        while samples.len() < 100 {
            let x = vec![rng.uniform_in(-4.0, 4.0), rng.uniform_in(-0.4, 0.4)];
            if obj.value_of(&x) <= 10.0 {
                samples.push(x);
            }
        }
        let report = verify_qfg(&obj, &cert, &qfg, &samples).unwrap();
        assert!(report.pass, "min ratio {}", report.min_ratio);
        assert!(report.min_ratio >= 1.0);
    }

    #[test]
    fn qfg_empty_effective_sample_set_errors() {
        let (obj, cert) = diag_quadratic(&[1.0]);
        let qfg = QfgCertificate::new(0.5, 1.0).unwrap();
        // Single sample outside the level set.
        let err = verify_qfg(&obj, &cert, &qfg, &[vec![10.0]]).unwrap_err();
        assert!(matches!(err, ProblemError::DegenerateInput(_)));
    }

    #[test]
    fn certificate_validation_tolerance() {
        let (obj, _) = diag_quadratic(&[1.0, 100.0]);
        let good = OptimumCertificate::singleton(0.0, vec![0.0, 0.0]);
        good.validate(&obj).unwrap();
        let bad = OptimumCertificate::singleton(0.1, vec![0.0, 0.0]);
        assert!(bad.validate(&obj).is_err());
    }

    #[test]
    fn gradient_oracle_is_affine_for_quadratics() {
        let (obj, _) = diag_quadratic(&[1.0, 100.0]);
        let x = [0.7, -0.3];
        let g = obj.smooth_gradient(&x);
        let g0 = obj.smooth_gradient(&[0.0, 0.0]);
        for &alpha in &[2.0, 0.5] {
            // Powers of two keep the identity exact in floating point.
            let scaled: Vec<f64> = x.iter().map(|v| alpha * v).collect();
            let lhs = obj.smooth_gradient(&scaled);
            for i in 0..2 {
                assert_eq!(lhs[i], alpha * g[i] + (1.0 - alpha) * g0[i]);
            }
        }
    }

    #[test]
    fn oracles_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<CompositeObjective>();
        assert_send_sync::<OptimumCertificate>();
    }
}
