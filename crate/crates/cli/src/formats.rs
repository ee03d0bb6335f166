//! Structured text documents: problem instances, generator configs and
//! bounds reports as JSON. Dense matrices are row-major arrays of arrays of
//! decimal literals; infinite box bounds are encoded as `null`.

use afom_restart_core::bounds::BoundsReport;
use afom_restart_core::linalg::Matrix;
use afom_restart_core::suite::{
    from_raw, GeneratedProblem, GeneratorSpec, MpcSpringsSpec, RawProblemData,
};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemDocument {
    Quadratic {
        hessian: Vec<Vec<f64>>,
        linear: Vec<f64>,
        smoothness_constant: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        growth_constant: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        optimal_value: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        optimal_point: Option<Vec<f64>>,
    },
    BoxQp {
        hessian: Vec<Vec<f64>>,
        linear: Vec<f64>,
        /// `null` entries are unbounded below.
        lower: Vec<Option<f64>>,
        /// `null` entries are unbounded above.
        upper: Vec<Option<f64>>,
        sigma: f64,
        #[serde(default)]
        jacobi_scaling: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        optimal_value: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        optimal_point: Option<Vec<f64>>,
    },
    Lasso {
        design: Vec<Vec<f64>>,
        rhs: Vec<f64>,
        weight: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        optimal_value: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        optimal_point: Option<Vec<f64>>,
    },
}

fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<Matrix> {
    Matrix::from_rows(rows).map_err(|e| anyhow::anyhow!("ragged matrix rows: {e}"))
}

impl ProblemDocument {
    pub fn from_problem(problem: &GeneratedProblem) -> Self {
        let decision = problem
            .decision_certificate
            .as_ref()
            .or(problem.certificate.as_ref());
        let (optimal_value, optimal_point) = match decision {
            Some(c) => (Some(c.optimal_value()), Some(c.optimal_point().to_vec())),
            None => (None, None),
        };
        match &problem.raw {
            RawProblemData::Quadratic {
                hessian,
                linear,
                smoothness,
                growth,
            } => ProblemDocument::Quadratic {
                hessian: matrix_to_rows(hessian),
                linear: linear.clone(),
                smoothness_constant: *smoothness,
                growth_constant: *growth,
                optimal_value,
                optimal_point,
            },
            RawProblemData::BoxQuadratic {
                hessian,
                linear,
                lower,
                upper,
                sigma,
                jacobi,
            } => ProblemDocument::BoxQp {
                hessian: matrix_to_rows(hessian),
                linear: linear.clone(),
                lower: lower.iter().map(|&v| v.is_finite().then_some(v)).collect(),
                upper: upper.iter().map(|&v| v.is_finite().then_some(v)).collect(),
                sigma: *sigma,
                jacobi_scaling: *jacobi,
                optimal_value,
                optimal_point,
            },
            RawProblemData::Lasso {
                design,
                rhs,
                weight,
            } => ProblemDocument::Lasso {
                design: matrix_to_rows(design),
                rhs: rhs.clone(),
                weight: *weight,
                optimal_value,
                optimal_point,
            },
        }
    }

    /// Rebuild the instance; certificates are recomputed from the data, the
    /// stored optimum fields are informational.
    pub fn into_problem(self) -> Result<GeneratedProblem> {
        let raw = match self {
            ProblemDocument::Quadratic {
                hessian,
                linear,
                smoothness_constant,
                growth_constant,
                ..
            } => RawProblemData::Quadratic {
                hessian: rows_to_matrix(&hessian)?,
                linear,
                smoothness: smoothness_constant,
                growth: growth_constant,
            },
            ProblemDocument::BoxQp {
                hessian,
                linear,
                lower,
                upper,
                sigma,
                jacobi_scaling,
                ..
            } => RawProblemData::BoxQuadratic {
                hessian: rows_to_matrix(&hessian)?,
                linear,
                lower: lower
                    .iter()
                    .map(|v| v.unwrap_or(f64::NEG_INFINITY))
                    .collect(),
                upper: upper.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect(),
                sigma,
                jacobi: jacobi_scaling,
            },
            ProblemDocument::Lasso {
                design,
                rhs,
                weight,
                ..
            } => RawProblemData::Lasso {
                design: rows_to_matrix(&design)?,
                rhs,
                weight,
            },
        };
        from_raw(raw).map_err(|e| anyhow::anyhow!("cannot rebuild problem: {e}"))
    }
}

pub fn save_problem(problem: &GeneratedProblem, path: &Path) -> Result<()> {
    let doc = ProblemDocument::from_problem(problem);
    let text = serde_json::to_string_pretty(&doc)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn load_problem(path: &Path) -> Result<GeneratedProblem> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: ProblemDocument =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    doc.into_problem()
}

/// Generator configuration document (used by `bench --config`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorDocument {
    Qp {
        dimension: usize,
        condition: f64,
        seed: u64,
    },
    BoxQp {
        dimension: usize,
        condition: f64,
        seed: u64,
    },
    Lasso {
        rows: usize,
        cols: usize,
        weight: f64,
        seed: u64,
    },
    MpcSprings {
        #[serde(default = "default_horizon")]
        horizon: usize,
        #[serde(default = "default_mass")]
        mass: f64,
        #[serde(default = "default_stiffness")]
        stiffness: f64,
        #[serde(default)]
        damping: f64,
        #[serde(default = "default_period")]
        period: f64,
        #[serde(default = "default_input_bound")]
        input_bound: f64,
        #[serde(default)]
        seed: u64,
    },
}

fn default_horizon() -> usize {
    10
}
fn default_mass() -> f64 {
    1.0
}
fn default_stiffness() -> f64 {
    2.0
}
fn default_period() -> f64 {
    0.2
}
fn default_input_bound() -> f64 {
    0.5
}

impl GeneratorDocument {
    pub fn to_spec(&self) -> GeneratorSpec {
        match self {
            GeneratorDocument::Qp {
                dimension,
                condition,
                seed,
            } => GeneratorSpec::Qp {
                dimension: *dimension,
                condition: *condition,
                seed: *seed,
            },
            GeneratorDocument::BoxQp {
                dimension,
                condition,
                seed,
            } => GeneratorSpec::BoxQp {
                dimension: *dimension,
                condition: *condition,
                seed: *seed,
            },
            GeneratorDocument::Lasso {
                rows,
                cols,
                weight,
                seed,
            } => GeneratorSpec::Lasso {
                rows: *rows,
                cols: *cols,
                weight: *weight,
                seed: *seed,
            },
            GeneratorDocument::MpcSprings {
                horizon,
                mass,
                stiffness,
                damping,
                period,
                input_bound,
                seed,
            } => GeneratorSpec::MpcSprings(MpcSpringsSpec {
                horizon: *horizon,
                mass: *mass,
                stiffness: *stiffness,
                damping: *damping,
                period: *period,
                input_bound: *input_bound,
                seed: *seed,
                ..MpcSpringsSpec::default()
            }),
        }
    }
}

/// Benchmark configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub generator: GeneratorDocument,
    pub count: usize,
    pub schemes: Vec<String>,
    #[serde(default = "default_initial_gap")]
    pub initial_gap: f64,
    #[serde(default)]
    pub stop_rule: Option<String>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub relative_tolerance: Option<f64>,
}

fn default_initial_gap() -> f64 {
    50.0
}

/// JSON mirror of a bounds report.
#[derive(Debug, Serialize, Deserialize)]
pub struct BoundsDocument {
    pub nbar_rho: f64,
    pub n_star: u64,
    pub m_bar: f64,
    pub nf_star: u64,
    pub na_bar: f64,
    pub round_scale: u64,
    pub asymptotic_ratio: f64,
    pub ratio_limit: f64,
    pub a_f: f64,
    pub mu_rho: f64,
    pub gap0: f64,
    pub epsilon: f64,
    pub block: Option<u64>,
}

impl From<&BoundsReport> for BoundsDocument {
    fn from(r: &BoundsReport) -> Self {
        BoundsDocument {
            nbar_rho: r.nbar_rho,
            n_star: r.n_star,
            m_bar: r.m_bar,
            nf_star: r.nf_star,
            na_bar: r.na_bar,
            round_scale: r.round_scale,
            asymptotic_ratio: r.asymptotic_ratio,
            ratio_limit: r.ratio_limit,
            a_f: r.a_f,
            mu_rho: r.mu_rho,
            gap0: r.gap0,
            epsilon: r.epsilon,
            block: r.block,
        }
    }
}

/// Sidecar metadata written next to trace files; consumed by `plot`.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunMeta {
    pub scheme: String,
    pub family: String,
    pub epsilon: f64,
    pub l_f: f64,
    pub a_f: f64,
    pub total_iterations: usize,
    pub converged: bool,
    /// Engine-space optimal value, when certified.
    pub optimal_value: Option<f64>,
    /// Whether the series file carries a relative-distance metric column.
    pub has_distance_metric: bool,
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}


/// Parse a comma-separated list of scheme names.
pub fn parse_schemes(arg: &str) -> Result<Vec<String>> {
    let out: Vec<String> = arg
        .split(',')
        .map(|s| s.trim().to_lowercase())
        .filter(|s| !s.is_empty())
        .collect();
    if out.is_empty() {
        bail!("empty scheme list");
    }
    for s in &out {
        if !matches!(
            s.as_str(),
            "adaptive" | "fixed" | "functional" | "gradient" | "none"
        ) {
            bail!("unknown scheme `{s}` (expected adaptive, fixed, functional, gradient or none)");
        }
    }
    Ok(out)
}
