//! Worst-case contingency search for interdependent infrastructure networks.
//!
//! A leader disables up to `N_c` assets; a follower (the network operator)
//! keeps as much weighted service as possible while failures cascade through
//! `N_p` synchronized stages over dependency arcs whose weights are only known
//! to lie in a per-asset polytope. The solver pairs an exact follower
//! evaluation with a cut-based decomposition over the leader's choices, plus
//! brute-force oracles used to validate both.
//!
//! Module map:
//!
//! - [`model`]: asset classes, networks, synthetic network generation.
//! - [`lp`]: dense bounded-variable primal simplex with dual multipliers.
//! - [`uncertainty`]: dependency-weight polytopes and the worst-case service oracle.
//! - [`follower`]: multistage cascade evaluation and the enumeration validator.
//! - [`cuts`]: optimality cut coefficients and cut strengthening.
//! - [`master`]: branch-and-bound over accumulated cuts.
//! - [`benders`]: the decomposition driver and its iteration report.
//! - [`oracle`]: exhaustive enumeration of leader decisions.
//! - [`report`]: CSV and JSON output of runs and cascades.

// `!(a >= b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops mirror the LP row/column notation
#![allow(clippy::needless_range_loop)]

pub mod benders;
pub mod cuts;
mod error;
pub mod exec;
pub mod follower;
mod instance;
pub mod lp;
pub mod master;
pub mod model;
pub mod oracle;
pub mod report;
pub mod uncertainty;

pub use error::{Error, Result};
pub use exec::Execution;
pub use instance::Instance;
