//! Accelerated first-order methods with restart schemes.
//!
//! The crate is organized around a small set of pieces:
//!
//! - [`problem`]: composite objectives `f = h + Ψ` with value/gradient/prox
//!   oracles, optimum certificates and quadratic-growth certificates.
//! - [`engine`]: solvers with an `O(1/k^2)` objective-gap envelope (FISTA on
//!   composite problems, and the same recursion applied to the dual of a
//!   linearly constrained strongly convex QP in [`dual`]).
//! - [`restart`]: restart schemes on top of any engine — the performance-based
//!   scheme with its inner exit rule, the fixed-rate scheme, and the classic
//!   functional/gradient heuristics — all producing uniform traces.
//! - [`bounds`]: closed-form iteration bounds (`n̄_ρ`, `M̄`, `N̄*_F`, `N̄_A`, …)
//!   and checkers that confront them with recorded traces.
//! - [`suite`]: reproducible problem generators with exact or high-accuracy
//!   optimum certificates (random QPs, box QPs, Lasso, a spring-mass MPC QP).
//!
//! The crate is `no_std`-compatible (`alloc` required): disable the default
//! `std` feature and enable `libm` instead.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("afom-restart-core requires either the `std` or the `libm` feature");

pub mod bounds;
pub mod dual;
pub mod engine;
pub mod linalg;
mod math;
pub mod problem;
pub mod restart;
pub mod rng;
pub mod suite;

pub use engine::{fista_engine, AfomEngine, AfomRun, FistaEngine};
pub use problem::{CompositeObjective, ExtReal, OptimumCertificate, QfgCertificate};
pub use restart::{
    afom_with_exit, restart_adaptive, restart_fixed_rate, restart_heuristic, run_non_restarted,
    ExitRule, HeuristicRule, InnerRun, RestartTrace, SchemeKind, SolveSettings,
};
