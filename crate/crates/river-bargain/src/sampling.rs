//! Randomized problem generation for the cross-checking suites. Every
//! consumer passes an explicit seed so runs are reproducible and parallel
//! shards stay deterministic.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{AgentParams, Problem};
use crate::solver::{self, Regime};

/// Deterministic generator for the given seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One random valid problem. Ranges span the magnitudes of the shipped
/// fixtures without hitting degenerate divisions: `a` in [1, 20], `b` in
/// [0.01, 2], `beta` in [0, 1], `c1w` in [0, 2], endowments in [0, 30].
pub fn sample_problem<R: Rng>(rng: &mut R) -> Problem {
    let agent = |rng: &mut R| {
        AgentParams::new(
            rng.random_range(1.0..=20.0),
            rng.random_range(0.01..=2.0),
            rng.random_range(0.0..=1.0),
        )
    };
    let upstream = agent(rng);
    let downstream = agent(rng);
    let c1w = rng.random_range(0.0..=2.0);
    let e1 = rng.random_range(0.0..=30.0);
    let e2 = rng.random_range(0.0..=30.0);
    Problem::new(upstream, downstream, e1, e2, c1w).expect("sampled fields satisfy the invariants")
}

/// Rejection-samples until the solved outcome is interior, for properties
/// that only hold away from the clamps.
pub fn sample_interior_problem<R: Rng>(rng: &mut R) -> Problem {
    loop {
        let problem = sample_problem(rng);
        if solver::solve(&problem).regime == Regime::Interior {
            return problem;
        }
    }
}
