#![no_main]

use libfuzzer_sys::fuzz_target;
use river_bargain::model::{AgentParams, Problem};
use river_bargain::solver;

// Validation decides which parameter tuples are problems; for every tuple
// it accepts, solving must not panic and the money ledger must balance
// bit-for-bit.
fuzz_target!(|fields: [f64; 9]| {
    let [a1, b1, beta1, a2, b2, beta2, e1, e2, c1w] = fields;
    let Ok(problem) = Problem::new(
        AgentParams::new(a1, b1, beta1),
        AgentParams::new(a2, b2, beta2),
        e1,
        e2,
        c1w,
    ) else {
        return;
    };
    let agreement = solver::solve(&problem);
    assert_eq!(
        agreement.allocation.t2().to_bits(),
        (-agreement.allocation.t1).to_bits()
    );
    let _ = solver::tu_bounds(&problem);
    let _ = problem.disagreement();
});
