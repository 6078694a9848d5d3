//! Shared demo problems used by the verification report, the examples, and
//! the test suites.

use crate::model::{AgentParams, Problem};
use crate::sweep::{E2Grid, SweepBase, SweepSpec};

/// Symmetric agents with a mild penalty. All closed forms are interior and
/// come out in short decimals, which makes it the reference case for
/// hand-checked values: the price band is [0.32, 4.48], the clearing price
/// 2.4, and both agents gain 3.38.
pub fn symmetric() -> Problem {
    Problem::new(
        AgentParams::new(10.0, 1.0, 0.0),
        AgentParams::new(10.0, 1.0, 0.0),
        12.0,
        2.0,
        0.25,
    )
    .expect("fixture is valid")
}

/// Asymmetric agents under a heavy penalty (`c1w = 4`), at the given
/// endowments. With this parameter set the price band is empty whenever
/// `e1 = 30*e2`, which the verification report calls out.
pub fn skewed(e1: f64, e2: f64) -> Problem {
    Problem::new(skewed_base().upstream, skewed_base().downstream, e1, e2, skewed_base().c1w)
        .expect("fixture is valid")
}

/// The skewed parameter set without endowments, for sweeps.
pub fn skewed_base() -> SweepBase {
    SweepBase {
        upstream: AgentParams::new(4.0, 0.02, 0.02),
        downstream: AgentParams::new(2.0, 0.04, 0.2),
        c1w: 4.0,
    }
}

/// The default sweep over the skewed set: endowment ratios 0..=30 against
/// a downstream endowment grid of [0, 40] in steps of 1.
pub fn skewed_sweep() -> SweepSpec {
    SweepSpec {
        base: skewed_base(),
        delta_values: (0..=30).map(f64::from).collect(),
        e2_grid: E2Grid { start: 0.0, stop: 40.0, step: 1.0 },
        columns: None,
    }
}

/// The skewed set with the penalty softened to 0.4 instead of 4. Shipped
/// as a companion diagnostic: unlike the full-penalty set, its price band
/// opens up at large downstream endowments, so charts of it show the band
/// structure the full-penalty set lacks.
pub fn skewed_soft_penalty_base() -> SweepBase {
    SweepBase { c1w: 0.4, ..skewed_base() }
}
