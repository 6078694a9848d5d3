//! Solver for the two-agent river-sharing bargaining problem with a
//! pollution penalty.
//!
//! An upstream and a downstream agent share river water under quadratic
//! benefits and transferable utility. Each unit the upstream agent
//! consumes obliges it to release `c1w` extra units downstream as
//! compensation for pollution. The library computes each agent's best
//! response, the price band `[alpha_lower, alpha_upper]` on which both
//! accept trade, the market-clearing price, and whether an agreement
//! exists — and cross-validates every closed form against derivative-free
//! search and bisection in [`oracle`].
//!
//! ```
//! use river_bargain::{model::{AgentParams, Problem}, solver};
//!
//! let problem = Problem::new(
//!     AgentParams::new(10.0, 1.0, 0.0),
//!     AgentParams::new(10.0, 1.0, 0.0),
//!     12.0,
//!     2.0,
//!     0.25,
//! )
//! .unwrap();
//! let agreement = solver::solve(&problem);
//! assert!(agreement.feasible);
//! assert!((agreement.alpha_star - 2.4).abs() < 1e-12);
//! ```

// validation compares as `!(x > 0.0)` on purpose: the negation must also
// reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chart;
pub mod config;
pub mod fixtures;
pub mod model;
pub mod oracle;
pub mod sampling;
pub mod solver;
pub mod sweep;
pub mod verify;

pub use config::{parse_config, RunConfig};
pub use model::{AgentParams, Problem};
pub use oracle::OracleConfig;
pub use solver::{solve, Agreement, Regime, TuBounds};
pub use sweep::{run_sweep, SweepRow, SweepSpec};
