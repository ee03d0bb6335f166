pub mod bench;
pub mod bounds;
pub mod plot;
pub mod solve;
pub mod verify;

use std::path::PathBuf;

use afom_restart_core::suite::{GeneratorSpec, MpcSpringsSpec};
use anyhow::{bail, Result};
use clap::Args;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_CAP: u8 = 2;
pub const EXIT_VERIFY: u8 = 3;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "AFOM_RESTART_OUT_DIR";

#[derive(Args, Clone, Debug)]
pub struct GeneratorArgs {
    /// Problem family to generate.
    #[arg(long, value_parser = ["qp", "boxqp", "lasso", "mpc-springs"])]
    pub family: Option<String>,

    /// Dimension (qp, boxqp).
    #[arg(long, default_value_t = 2)]
    pub n: usize,

    /// Condition number (qp, boxqp).
    #[arg(long, default_value_t = 100.0)]
    pub kappa: f64,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Measurement rows (lasso).
    #[arg(long, default_value_t = 20)]
    pub rows: usize,

    /// Variables (lasso).
    #[arg(long, default_value_t = 10)]
    pub cols: usize,

    /// Penalty weight (lasso).
    #[arg(long, default_value_t = 0.5)]
    pub weight: f64,

    /// Prediction horizon (mpc-springs).
    #[arg(long, default_value_t = 10)]
    pub horizon: usize,

    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,

    #[arg(long, default_value_t = 2.0)]
    pub stiffness: f64,

    #[arg(long, default_value_t = 0.0)]
    pub damping: f64,

    #[arg(long, default_value_t = 0.2)]
    pub period: f64,

    #[arg(long, default_value_t = 0.5)]
    pub input_bound: f64,
}

impl GeneratorArgs {
    pub fn to_spec(&self) -> Result<GeneratorSpec> {
        let family = self.family.as_deref().unwrap_or("qp");
        Ok(match family {
            "qp" => GeneratorSpec::Qp {
                dimension: self.n,
                condition: self.kappa,
                seed: self.seed,
            },
            "boxqp" => GeneratorSpec::BoxQp {
                dimension: self.n,
                condition: self.kappa,
                seed: self.seed,
            },
            "lasso" => GeneratorSpec::Lasso {
                rows: self.rows,
                cols: self.cols,
                weight: self.weight,
                seed: self.seed,
            },
            "mpc-springs" => GeneratorSpec::MpcSprings(MpcSpringsSpec {
                horizon: self.horizon,
                mass: self.mass,
                stiffness: self.stiffness,
                damping: self.damping,
                period: self.period,
                input_bound: self.input_bound,
                seed: self.seed,
                ..MpcSpringsSpec::default()
            }),
            other => bail!("unknown family {other}"),
        })
    }
}

/// Output directory: flag, then environment, then the working directory.
pub fn resolve_out_dir(flag: &Option<PathBuf>) -> Result<PathBuf> {
    let dir = match flag {
        Some(d) => d.clone(),
        None => match std::env::var_os(OUT_DIR_ENV) {
            Some(d) => PathBuf::from(d),
            None => PathBuf::from("."),
        },
    };
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Parse a comma-separated coordinate list.
pub fn parse_point(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| anyhow::anyhow!("bad coordinate `{t}`: {e}"))
        })
        .collect()
}
