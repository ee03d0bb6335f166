//! Closed-form iteration bounds and trace checkers.
//!
//! Everything here is a pure function of problem constants. The central
//! quantity is the contraction horizon `n̄_ρ = max{1/2, sqrt(2 a_f/μ_ρ)}`;
//! from it derive the fixed-rate restart-count and total-iteration bounds,
//! the adaptive scheme's total-iteration bound, and the asymptotic ratio
//! between the two totals.

use alloc::vec::Vec;

use crate::math;
use crate::restart::RestartTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundsError {
    NonPositiveInput(&'static str),
    /// The requested block length does not exceed the contraction horizon,
    /// so the restart-count bound is meaningless.
    PreconditionViolated(&'static str),
    DomainError(&'static str),
    /// Trace was cut short by the iteration cap.
    IncompleteTrace,
}

impl core::fmt::Display for BoundsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            BoundsError::NonPositiveInput(what) => write!(f, "nonpositive input: {what}"),
            BoundsError::PreconditionViolated(what) => write!(f, "precondition violated: {what}"),
            BoundsError::DomainError(what) => write!(f, "domain error: {what}"),
            BoundsError::IncompleteTrace => write!(f, "trace is incomplete"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for BoundsError {}

fn require_positive(value: f64, what: &'static str) -> Result<f64, BoundsError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(BoundsError::NonPositiveInput(what))
    }
}

/// Contraction horizon `max{1/2, sqrt(2 a_f / mu_rho)}`.
pub fn nbar_rho(a_f: f64, mu_rho: f64) -> Result<f64, BoundsError> {
    require_positive(a_f, "a_f")?;
    require_positive(mu_rho, "mu_rho")?;
    Ok(0.5f64.max(math::sqrt(2.0 * a_f / mu_rho)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedRateBounds {
    /// Restart-count bound `M̄` for the evaluated block length.
    pub restart_bound: f64,
    /// Total-iteration bound at the optimal block length.
    pub total_bound: u64,
    /// Optimal block length `⌈e·n̄_ρ⌉`.
    pub optimal_block: u64,
}

/// Fixed-rate bounds: the restart count needed to drive consecutive block
/// decreases below `eps`, and the total-iteration bound at the optimal block.
///
/// `block`, when given, must strictly exceed the contraction horizon.
pub fn fixed_rate_bounds(
    nbar: f64,
    gap0: f64,
    eps: f64,
    block: Option<u64>,
) -> Result<FixedRateBounds, BoundsError> {
    require_positive(nbar, "nbar")?;
    require_positive(gap0, "gap0")?;
    require_positive(eps, "eps")?;
    let optimal_block = math::ceil(math::EULER * nbar) as u64;
    let evaluated_block = block.unwrap_or(optimal_block);
    if (evaluated_block as f64) <= nbar {
        return Err(BoundsError::PreconditionViolated(
            "block length must exceed the contraction horizon",
        ));
    }
    let log_total = math::ln(1.0 + gap0 / eps);
    let restart_bound =
        1.0 + log_total / (2.0 * (math::ln(evaluated_block as f64) - math::ln(nbar)));
    let total_bound = optimal_block * (math::ceil(1.0 + 0.5 * log_total) as u64);
    Ok(FixedRateBounds {
        restart_bound,
        total_bound,
        optimal_block,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveBounds {
    /// Total-iteration bound for the adaptive scheme.
    pub total_bound: f64,
    /// Ceiled logarithmic round scale entering the total bound and the
    /// inner-count growth check.
    pub round_scale: u64,
    /// Upper bound `(3/2)(1 + 1/(4 n̄_ρ))` on the asymptotic total ratio.
    pub ratio_limit: f64,
}

/// Adaptive-scheme bounds for a starting gap `gap0` and accuracy `eps`.
pub fn adaptive_bounds(nbar: f64, gap0: f64, eps: f64) -> Result<AdaptiveBounds, BoundsError> {
    require_positive(nbar, "nbar")?;
    require_positive(gap0, "gap0")?;
    require_positive(eps, "eps")?;
    let round_scale = math::ceil(5.0 + math::ln(1.0 + gap0 / eps) / math::ln(15.0)) as u64;
    let total_bound = math::EULER * math::ceil(4.0 * nbar) / 2.0 * (round_scale as f64);
    Ok(AdaptiveBounds {
        total_bound,
        round_scale,
        ratio_limit: 1.5 * (1.0 + 1.0 / (4.0 * nbar)),
    })
}

/// Adaptive total bound before the round-scale ceiling is applied. The
/// ceiled bound is a staircase in `ln(1/eps)`; this interior expression is
/// the affine trend it follows.
pub fn adaptive_total_bound_smooth(nbar: f64, gap0: f64, eps: f64) -> f64 {
    math::EULER * math::ceil(4.0 * nbar) / 2.0 * (5.0 + math::ln(1.0 + gap0 / eps) / math::ln(15.0))
}

/// Exact vanishing-accuracy limit of the adaptive/fixed total-bound ratio:
/// `e⌈4 n̄_ρ⌉ / (⌈e n̄_ρ⌉ ln 15)`.
pub fn asymptotic_ratio(nbar: f64) -> f64 {
    math::EULER * math::ceil(4.0 * nbar) / (math::ceil(math::EULER * nbar) * math::ln(15.0))
}

/// The decrease-ratio potential `(1/s² - 1)·max{1, (4s)⁴}`.
pub fn phi(s: f64) -> Result<f64, BoundsError> {
    if s == 0.0 || s.is_nan() {
        return Err(BoundsError::DomainError("phi is undefined at s = 0"));
    }
    let four_s = 4.0 * s;
    let quartic = four_s * four_s * four_s * four_s;
    Ok((1.0 / (s * s) - 1.0) * 1.0f64.max(quartic))
}

/// All closed-form quantities for one problem configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsReport {
    pub nbar_rho: f64,
    /// Optimal fixed-rate block `⌈e·n̄_ρ⌉`.
    pub n_star: u64,
    /// Fixed-rate restart-count bound at the evaluated block.
    pub m_bar: f64,
    /// Fixed-rate total-iteration bound at the optimal block.
    pub nf_star: u64,
    /// Adaptive total-iteration bound.
    pub na_bar: f64,
    /// Ceiled logarithmic round scale of the adaptive bound.
    pub round_scale: u64,
    /// Exact vanishing-accuracy ratio of the two total bounds.
    pub asymptotic_ratio: f64,
    /// Closed-form upper bound on that ratio.
    pub ratio_limit: f64,
    // Inputs echoed.
    pub a_f: f64,
    pub mu_rho: f64,
    pub gap0: f64,
    pub epsilon: f64,
    pub block: Option<u64>,
}

impl BoundsReport {
    pub fn compute(
        a_f: f64,
        mu_rho: f64,
        gap0: f64,
        epsilon: f64,
        block: Option<u64>,
    ) -> Result<Self, BoundsError> {
        let nbar = nbar_rho(a_f, mu_rho)?;
        let fixed = fixed_rate_bounds(nbar, gap0, epsilon, block)?;
        let adaptive = adaptive_bounds(nbar, gap0, epsilon)?;
        Ok(BoundsReport {
            nbar_rho: nbar,
            n_star: fixed.optimal_block,
            m_bar: fixed.restart_bound,
            nf_star: fixed.total_bound,
            na_bar: adaptive.total_bound,
            round_scale: adaptive.round_scale,
            asymptotic_ratio: asymptotic_ratio(nbar),
            ratio_limit: adaptive.ratio_limit,
            a_f,
            mu_rho,
            gap0,
            epsilon,
            block,
        })
    }

    /// Inner-count ceiling `⌈4 n̄_ρ⌉` for performance-exit runs.
    pub fn inner_count_ceiling(&self) -> u64 {
        math::ceil(4.0 * self.nbar_rho) as u64
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundCheck {
    pub name: &'static str,
    /// Nonnegative slack when the check holds; negative when violated.
    pub margin: f64,
    pub pass: bool,
    /// False when the trace is too short for the check to bind.
    pub applicable: bool,
}

#[derive(Debug, Clone)]
pub struct TraceVerdict {
    pub checks: Vec<BoundCheck>,
    pub pass: bool,
}

/// Confront a completed adaptive trace with the computed bounds: the
/// per-round inner-count ceiling, the total-iteration bound, and the
/// root-15 inner-count growth over a round-scale spacing.
pub fn check_trace_against_bounds(
    trace: &RestartTrace,
    report: &BoundsReport,
) -> Result<TraceVerdict, BoundsError> {
    if !trace.is_complete() {
        return Err(BoundsError::IncompleteTrace);
    }
    let mut checks = Vec::with_capacity(3);

    let ceiling = report.inner_count_ceiling();
    let largest = trace.largest_inner_count();
    checks.push(BoundCheck {
        name: "inner-count ceiling",
        margin: ceiling as f64 - largest as f64,
        pass: largest as u64 <= ceiling,
        applicable: true,
    });

    let total = trace.total_iterations() as f64;
    checks.push(BoundCheck {
        name: "total-iteration bound",
        margin: report.na_bar - total,
        pass: total <= report.na_bar,
        applicable: true,
    });

    // Inner counts must grow by at least sqrt(15) across every round-scale
    // spacing; traces shorter than the spacing satisfy this vacuously.
    let spacing = report.round_scale as usize;
    let counts = trace.inner_counts();
    let rounds = trace.rounds();
    let mut growth_margin = f64::INFINITY;
    let mut growth_pass = true;
    let mut applicable = false;
    if rounds >= 1 && rounds - 1 >= spacing {
        applicable = true;
        let sqrt15 = math::sqrt(15.0);
        for lead in 0..=(rounds - 1 - spacing) {
            let early = counts[lead + 1] as f64;
            let late = counts[lead + 1 + spacing] as f64;
            let margin = late / sqrt15 - early;
            growth_margin = growth_margin.min(margin);
            growth_pass &= early <= late / sqrt15;
        }
    }
    checks.push(BoundCheck {
        name: "inner-count growth over round scale",
        margin: growth_margin,
        pass: growth_pass,
        applicable,
    });

    let pass = checks.iter().all(|c| c.pass);
    Ok(TraceVerdict { checks, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::restart::SchemeKind;
    use alloc::vec;

    #[test]
    fn contraction_horizon_formula() {
        assert_eq!(nbar_rho(200.0, 1.0).unwrap(), 20.0);
        // max{1/2, sqrt(2·2/8)} = sqrt(1/2)
        assert_eq!(nbar_rho(2.0, 8.0).unwrap(), 0.5f64.sqrt());
        assert_eq!(nbar_rho(1.0, 1e6).unwrap(), 0.5);
        assert!(nbar_rho(-1.0, 1.0).is_err());
        assert!(nbar_rho(1.0, 0.0).is_err());
    }

    #[test]
    fn fixed_rate_bounds_reference_arithmetic() {
        let b = fixed_rate_bounds(20.0, 1.0, 1e-6, Some(55)).unwrap();
        assert!((b.restart_bound - 7.828538506870579).abs() < 1e-12);
        assert_eq!(b.total_bound, 440);
        assert_eq!(b.optimal_block, 55);
    }

    #[test]
    fn fixed_rate_bounds_floor_branch() {
        let b = fixed_rate_bounds(0.5, 1.0, 1.0, None).unwrap();
        assert_eq!(b.optimal_block, 2);
        assert_eq!(b.total_bound, 4);
        assert!((b.restart_bound - 1.25).abs() < 1e-12);
    }

    #[test]
    fn fixed_rate_block_at_horizon_is_rejected() {
        assert_eq!(
            fixed_rate_bounds(20.0, 1.0, 1e-6, Some(20)),
            Err(BoundsError::PreconditionViolated(
                "block length must exceed the contraction horizon"
            ))
        );
    }

    #[test]
    fn adaptive_bounds_reference_arithmetic() {
        let b = adaptive_bounds(20.0, 1.0, 1e-6).unwrap();
        assert_eq!(b.round_scale, 11);
        assert!((b.total_bound - 1196.0440045219798).abs() < 1e-9);
        assert!((b.ratio_limit - 1.51875).abs() < 1e-12);
    }

    #[test]
    fn adaptive_round_scale_at_unit_gap_ratio() {
        let b = adaptive_bounds(20.0, 1.0, 1.0).unwrap();
        assert_eq!(b.round_scale, 6);
    }

    #[test]
    fn ratio_limit_floor_branch() {
        let b = adaptive_bounds(0.5, 1.0, 1e-6).unwrap();
        assert!((b.ratio_limit - 2.25).abs() < 1e-12);
    }

    #[test]
    fn phi_reference_points() {
        assert_eq!(phi(0.25).unwrap(), 15.0);
        assert!((phi(math::sqrt(15.0) / 4.0).unwrap() - 15.0).abs() < 1e-9);
        assert_eq!(phi(0.5).unwrap(), 48.0);
        assert!(matches!(phi(0.0), Err(BoundsError::DomainError(_))));
    }

    #[test]
    fn phi_grid_minimum_is_fifteen() {
        let hi = math::sqrt(15.0) / 4.0;
        let lo = 1e-6;
        let n = 100_000usize;
        let mut min = f64::INFINITY;
        let mut near_min_points: Vec<f64> = Vec::new();
        for i in 0..n {
            let s = lo + (hi - lo) * ((i + 1) as f64) / (n as f64);
            let v = phi(s).unwrap();
            if v < min {
                min = v;
            }
            if (v - 15.0).abs() <= 1e-9 {
                near_min_points.push(s);
            }
        }
        assert!(min >= 15.0 - 1e-9, "grid minimum {min}");
        // Any grid point achieving the minimum sits next to one of the two
        // exact minimizers.
        for s in near_min_points {
            let near_quarter = (s - 0.25).abs() < 1e-4;
            let near_upper = (s - hi).abs() < 1e-4;
            assert!(near_quarter || near_upper, "unexpected minimizer at {s}");
        }
    }

    #[test]
    fn bounds_monotone_in_accuracy_and_gap() {
        let tight = fixed_rate_bounds(20.0, 1.0, 1e-8, None).unwrap();
        let loose = fixed_rate_bounds(20.0, 1.0, 1e-4, None).unwrap();
        assert!(tight.restart_bound >= loose.restart_bound);
        assert!(tight.total_bound >= loose.total_bound);
        let small_gap = fixed_rate_bounds(20.0, 0.1, 1e-6, None).unwrap();
        let large_gap = fixed_rate_bounds(20.0, 100.0, 1e-6, None).unwrap();
        assert!(large_gap.restart_bound >= small_gap.restart_bound);
        assert!(large_gap.total_bound >= small_gap.total_bound);
    }

    #[test]
    fn asymptotic_ratio_stays_below_its_limit() {
        for &nbar in &[1.0, 5.0, 20.0, 100.0] {
            let limit = adaptive_bounds(nbar, 1.0, 1e-6).unwrap().ratio_limit;
            let ratio = asymptotic_ratio(nbar);
            assert!(
                ratio <= limit + 0.01,
                "nbar {nbar}: ratio {ratio} vs limit {limit}"
            );
        }
    }

    #[test]
    fn finite_accuracy_ratio_converges_to_the_asymptote() {
        for &nbar in &[1.0, 5.0, 20.0, 100.0] {
            let target = asymptotic_ratio(nbar);
            let mut previous_excess = f64::INFINITY;
            for &eps in &[1e-12, 1e-50, 1e-100, 1e-200, 1e-300] {
                let adaptive = adaptive_bounds(nbar, 1.0, eps).unwrap().total_bound;
                let fixed = fixed_rate_bounds(nbar, 1.0, eps, None).unwrap().total_bound as f64;
                let ratio = adaptive / fixed;
                let excess = ratio - target;
                assert!(excess > -1e-12, "ratio below its limit at eps {eps}");
                assert!(excess <= previous_excess + 1e-12);
                previous_excess = excess;
            }
            // Deep in the vanishing-accuracy regime the ratio sits within a
            // few percent of the limit expression.
            assert!(
                previous_excess < 0.03,
                "nbar {nbar}: excess {previous_excess}"
            );
        }
    }

    fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let xm = xs.iter().sum::<f64>() / n;
        let ym = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
        let syy: f64 = ys.iter().map(|y| (y - ym) * (y - ym)).sum();
        sxy * sxy / (sxx * syy)
    }

    #[test]
    fn total_bound_grows_affinely_in_log_accuracy() {
        // The interior expression is affine in ln(1/eps) up to an O(eps)
        // remainder; the ceiled bound follows it as a staircase.
        let mut xs = Vec::new();
        let mut smooth = Vec::new();
        let mut ceiled = Vec::new();
        for k in 2..=10 {
            let eps = 10f64.powi(-k);
            xs.push(math::ln(1.0 / eps));
            smooth.push(adaptive_total_bound_smooth(20.0, 1.0, eps));
            ceiled.push(adaptive_bounds(20.0, 1.0, eps).unwrap().total_bound);
        }
        assert!(
            r_squared(&xs, &smooth) > 0.999,
            "{}",
            r_squared(&xs, &smooth)
        );
        assert!(
            r_squared(&xs, &ceiled) > 0.98,
            "{}",
            r_squared(&xs, &ceiled)
        );
    }

    #[test]
    fn fabricated_trace_fails_the_inner_count_ceiling() {
        let trace = crate::restart::RestartTrace::fabricate(
            SchemeKind::Adaptive,
            vec![10.0, 5.0, 1.0, 0.5],
            vec![1, 1, 100, 1],
            vec![1.0, 1.0, 1.0],
            vec![0.0, 0.0, 0.5],
        );
        let report = BoundsReport::compute(4.0, 2.0, 10.0, 1e-6, None).unwrap();
        assert_eq!(report.inner_count_ceiling(), 8);
        let verdict = check_trace_against_bounds(&trace, &report).unwrap();
        assert!(!verdict.pass);
        assert!(!verdict.checks[0].pass);
        assert!(verdict.checks[0].margin < 0.0);
    }

    #[test]
    fn short_trace_growth_check_is_vacuous() {
        let trace = crate::restart::RestartTrace::fabricate(
            SchemeKind::Adaptive,
            vec![1.0, 0.1],
            vec![1, 2],
            vec![1.0],
            vec![0.0],
        );
        let report = BoundsReport::compute(4.0, 2.0, 1.0, 1e-6, None).unwrap();
        let verdict = check_trace_against_bounds(&trace, &report).unwrap();
        assert!(verdict.pass);
        let growth = &verdict.checks[2];
        assert!(!growth.applicable && growth.pass);
    }
}
