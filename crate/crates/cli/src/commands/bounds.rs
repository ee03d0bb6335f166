//! `bounds`: print the closed-form bound report for given constants.

use afom_restart_core::bounds::BoundsReport;
use anyhow::{anyhow, Result};
use clap::Args;

use super::EXIT_OK;
use crate::formats::BoundsDocument;

#[derive(Args, Debug)]
pub struct BoundsArgs {
    /// Envelope constant of the engine.
    #[arg(long)]
    pub a_f: f64,

    /// Quadratic growth constant.
    #[arg(long)]
    pub mu: f64,

    /// Starting objective gap.
    #[arg(long)]
    pub gap0: f64,

    /// Accuracy parameter.
    #[arg(long)]
    pub eps: f64,

    /// Fixed-rate block length to evaluate the restart-count bound at.
    #[arg(long)]
    pub block: Option<u64>,

    /// Emit JSON instead of the table.
    #[arg(long)]
    pub json: bool,
}

pub fn run(args: &BoundsArgs) -> Result<u8> {
    let report = BoundsReport::compute(args.a_f, args.mu, args.gap0, args.eps, args.block)
        .map_err(|e| anyhow!("bounds: {e}"))?;
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&BoundsDocument::from(&report))?
        );
    } else {
        println!("{:<38} {}", "contraction horizon", report.nbar_rho);
        println!(
            "{:<38} {}",
            "inner-count ceiling",
            report.inner_count_ceiling()
        );
        println!("{:<38} {}", "optimal fixed-rate block", report.n_star);
        println!("{:<38} {}", "fixed-rate restart bound", report.m_bar);
        println!("{:<38} {}", "fixed-rate total bound", report.nf_star);
        println!("{:<38} {}", "adaptive total bound", report.na_bar);
        println!("{:<38} {}", "adaptive round scale", report.round_scale);
        println!(
            "{:<38} {}",
            "asymptotic total ratio", report.asymptotic_ratio
        );
        println!("{:<38} {}", "ratio limit", report.ratio_limit);
    }
    Ok(EXIT_OK)
}
