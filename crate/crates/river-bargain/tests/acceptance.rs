//! Acceptance suite: every release gate in one place, one pass line per
//! criterion. Run with `cargo test --test acceptance -- --nocapture` to
//! see the lines; a failing criterion panics with the diagnosis.

use std::time::Instant;

use river_bargain::config::RunConfig;
use river_bargain::fixtures;
use river_bargain::model::{AgentParams, Problem};
use river_bargain::oracle::{self, OracleConfig};
use river_bargain::sampling;
use river_bargain::solver::{self, Regime};
use river_bargain::sweep::{rows_to_csv, run_sweep};
use river_bargain::verify::{run_verify, CheckStatus};

const SEED: u64 = 0xACCE_97A6;

fn rel_within(actual: f64, expected: f64, tol: f64) -> bool {
    (actual - expected).abs() <= tol * (1.0 + expected.abs())
}

fn interior_population(count: usize) -> Vec<Problem> {
    let mut rng = sampling::rng_from_seed(SEED);
    (0..count).map(|_| sampling::sample_interior_problem(&mut rng)).collect()
}

#[test]
fn criterion_1_oracle_equivalence() {
    let started = Instant::now();
    let cfg = OracleConfig::default();
    let mut worst = 0.0f64;
    for problem in interior_population(1000) {
        let alpha = solver::alpha_star(&problem).expect("interior problems clear at alpha >= 0");
        let x1 = solver::best_response_upstream(&problem, alpha);
        let x2 = solver::best_response_downstream(&problem, alpha, x1);

        let up = oracle::best_response_upstream(&problem, alpha, &cfg).unwrap();
        let down = oracle::best_response_downstream(&problem, alpha, x1, &cfg).unwrap();
        let bisected = oracle::clearing_alpha(&problem, &cfg).unwrap();

        for (numeric, analytic) in [(up, x1), (down, x2), (bisected, alpha)] {
            let err = (numeric - analytic).abs() / (1.0 + analytic.abs());
            worst = worst.max(err);
            assert!(
                rel_within(numeric, analytic, 1e-6),
                "oracle {numeric} vs closed form {analytic} on {problem:?}"
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() <= 10.0, "population run took {elapsed:?}");
    println!(
        "acceptance criterion 1: PASS — 1000 interior problems, worst relative deviation {worst:.3e}, {elapsed:?}"
    );
}

#[test]
fn criterion_2_clearing_identity() {
    let mut worst_clear = 0.0f64;
    let mut worst_marginal = 0.0f64;
    for problem in interior_population(1000) {
        let alpha = solver::alpha_star(&problem).unwrap();
        let x1 = solver::best_response_upstream(&problem, alpha);
        let x2 = solver::best_response_downstream(&problem, alpha, x1);

        let clearing = (x1 + x2 - (problem.e1() + problem.e2())).abs();
        let scale = 1.0 + problem.e1() + problem.e2();
        worst_clear = worst_clear.max(clearing / scale);
        assert!(clearing <= 1e-9 * scale, "x1 + x2 off by {clearing} on {problem:?}");

        let c1w = problem.c1w();
        let up = problem.upstream();
        let down = problem.downstream();
        let m1 = up.a - up.b * x1 + up.beta * c1w;
        let m2 = down.a - down.b * x2 + down.beta * c1w;
        worst_marginal = worst_marginal.max((m1 - m2).abs());
        assert!(
            (m1 - m2).abs() <= 1e-9,
            "marginal values differ by {} on {problem:?}",
            (m1 - m2).abs()
        );
    }
    println!(
        "acceptance criterion 2: PASS — clearing residual <= {worst_clear:.3e} (scaled), marginal gap <= {worst_marginal:.3e}"
    );
}

#[test]
fn criterion_3_no_penalty_reduction() {
    let mut rng = sampling::rng_from_seed(SEED ^ 3);
    let mut checked = 0;
    while checked < 1000 {
        let sampled = sampling::sample_problem(&mut rng);
        let problem = Problem::new(
            AgentParams::new(sampled.upstream().a, sampled.upstream().b, 0.0),
            AgentParams::new(sampled.downstream().a, sampled.downstream().b, 0.0),
            sampled.e1(),
            sampled.e2(),
            0.0,
        )
        .unwrap();

        // endowment rule must be bit-exact without the penalty
        let up = problem.upstream();
        let down = problem.downstream();
        assert_eq!(solver::alpha_lower(&problem), up.a - up.b * problem.e1());
        assert_eq!(solver::alpha_upper(&problem), down.a - down.b * problem.e2());

        if solver::solve(&problem).regime != Regime::Interior {
            continue;
        }
        checked += 1;
        let alpha = solver::alpha_star(&problem).unwrap();
        let x1 = solver::best_response_upstream(&problem, alpha);
        let x2 = solver::best_response_downstream(&problem, alpha, x1);
        // equal marginal benefit across agents at the clearing point
        let gap = ((up.a - up.b * x1) - (down.a - down.b * x2)).abs();
        assert!(gap <= 1e-12, "marginal benefit gap {gap} on {problem:?}");
    }
    println!(
        "acceptance criterion 3: PASS — endowment-rule bounds exact and marginal benefits equal (1e-12) on 1000 interior no-penalty problems"
    );
}

#[test]
fn criterion_4_symmetric_fixture_values() {
    let agreement = solver::solve(&fixtures::symmetric());
    let checks = [
        (agreement.alpha_star, 2.4, "alpha_star"),
        (agreement.allocation.x1, 7.0, "x1"),
        (agreement.allocation.x2, 7.0, "x2"),
        (agreement.allocation.t1, 7.8, "t1"),
        (agreement.gains.0, 3.38, "gain1"),
        (agreement.gains.1, 3.38, "gain2"),
    ];
    for (actual, expected, name) in checks {
        assert!(
            (actual - expected).abs() <= 1e-9,
            "{name}: {actual} vs {expected}"
        );
    }
    assert!(agreement.feasible);
    assert_eq!(agreement.regime, Regime::Interior);
    println!(
        "acceptance criterion 4: PASS — symmetric fixture solves to alpha*=2.4, x=(7,7), t1=7.8, gains (3.38, 3.38) within 1e-9"
    );
}

#[test]
fn criterion_5_skewed_fixture_spot_values() {
    // closed bounds must be affine with the hand-derived coefficients
    for e1 in [0.0, 30.0, 100.0] {
        for e2 in [0.0, 1.0, 2.0, 5.0, 40.0] {
            let problem = fixtures::skewed(e1, e2);
            let lower = solver::alpha_lower(&problem);
            let upper = solver::alpha_upper(&problem);
            let expected_lower = 0.816 - 0.0008 * e1;
            let expected_upper = 0.56 - 0.008 * e2 - 0.0064 * e1;
            assert!(
                (lower - expected_lower).abs() <= 1e-12,
                "alpha_lower {lower} vs {expected_lower} at e1={e1}"
            );
            assert!(
                (upper - expected_upper).abs() <= 1e-12,
                "alpha_upper {upper} vs {expected_upper} at e1={e1}, e2={e2}"
            );
        }
    }

    // at ratio 30 the band is empty for every e2 >= 0: the bound gap is
    // 0.256 + 0.176*e2
    for e2 in (0..=400).map(|k| k as f64 / 10.0).chain([1e3, 1e6]) {
        let problem = fixtures::skewed(30.0 * e2, e2);
        let bounds = solver::tu_bounds(&problem);
        assert!(
            bounds.alpha_lower > bounds.alpha_upper,
            "band unexpectedly nonempty at e2={e2}"
        );
    }

    // the verification report flags it as WARN, never FAIL
    let config = RunConfig {
        problem: fixtures::skewed(30.0, 1.0),
        sweep: None,
        oracle: OracleConfig::default(),
        output: Default::default(),
    };
    let report = run_verify(&config).unwrap();
    assert!(!report.has_failures(), "{}", report.render());
    let demo = report
        .checks
        .iter()
        .find(|c| c.name == "high-penalty demo set")
        .expect("demo diagnostic present");
    assert_eq!(demo.status, CheckStatus::Warn);
    assert!(demo.detail.contains("empty"));
    println!(
        "acceptance criterion 5: PASS — affine bound identities hold to 1e-12 and the empty ratio-30 band is reported as WARN"
    );
}

#[test]
fn criterion_6_unweighted_price_diagnostic() {
    let problem = fixtures::symmetric();
    let unweighted = solver::alpha_star_unweighted(&problem);
    let clearing = solver::alpha_star(&problem).unwrap();
    let bounds = solver::tu_bounds(&problem);

    assert!((unweighted - 10.4).abs() <= 1e-12, "unweighted form {unweighted}");
    assert!((clearing - 2.4).abs() <= 1e-12);
    assert!(unweighted > bounds.alpha_upper, "unweighted form should fall outside the band");
    assert!(bounds.alpha_lower <= clearing && clearing <= bounds.alpha_upper);

    let config = RunConfig {
        problem,
        sweep: None,
        oracle: OracleConfig::default(),
        output: Default::default(),
    };
    let report = run_verify(&config).unwrap();
    let check = report
        .checks
        .iter()
        .find(|c| c.name == "weighted clearing price lies inside the acceptable band")
        .expect("band membership check present");
    assert_eq!(check.status, CheckStatus::Pass);
    assert!(check.detail.contains("does not fall"));
    println!(
        "acceptance criterion 6: PASS — unweighted simplification gives 10.4, outside [0.32, 4.48]; the clearing-consistent 2.4 lies inside"
    );
}

#[test]
fn criterion_7_band_scan_and_upstream_floor() {
    let problem = fixtures::symmetric();
    let (lo, hi) = oracle::ir_band(&problem, &OracleConfig::default()).unwrap();
    assert!((lo - 0.32).abs() <= 1e-6, "scanned lower endpoint {lo}");
    assert!((hi - 4.48).abs() <= 1e-6, "scanned upper endpoint {hi}");

    let top = oracle::alpha_bracket_max(&problem);
    for i in 0..=200 {
        let alpha = 1.5 * top * (i as f64) / 200.0;
        let margin = oracle::upstream_gain_over_default(&problem, alpha);
        assert!(margin >= -1e-9, "upstream below its no-trade payoff at alpha={alpha}");
    }
    println!(
        "acceptance criterion 7: PASS — scanned band [{lo:.8}, {hi:.8}] matches (0.32, 4.48) within 1e-6; upstream never below its no-trade payoff"
    );
}

#[test]
fn criterion_8_sweep_determinism_and_speed() {
    let spec = fixtures::skewed_sweep();
    let started = Instant::now();
    let first = rows_to_csv(&run_sweep(&spec).unwrap(), None);
    let elapsed = started.elapsed();
    let second = rows_to_csv(&run_sweep(&spec).unwrap(), None);
    assert_eq!(first, second, "identical specs must serialize identically");
    assert_eq!(first.lines().count(), 31 * 41 + 1);
    assert!(elapsed.as_secs_f64() <= 5.0, "sweep took {elapsed:?}");
    println!(
        "acceptance criterion 8: PASS — 31x41 sweep byte-identical across runs, one run in {elapsed:?}"
    );
}
