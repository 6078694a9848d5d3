//! Brute-force verification routines: derivative-free maximization of the
//! utility functions, bisection for the clearing price, and a price scan
//! for the range where both agents strictly gain from trading.
//!
//! Nothing here reuses the closed forms under test; results agree with
//! [`crate::solver`] only because the algebra is right.

use serde::Serialize;
use thiserror::Error;

use crate::model::{quad_benefit, Problem};
use crate::solver;

/// Tolerances and effort caps for the numeric routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleConfig {
    pub x_tolerance: f64,
    pub alpha_tolerance: f64,
    pub max_iterations: usize,
    pub grid_points: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            x_tolerance: 1e-9,
            alpha_tolerance: 1e-10,
            max_iterations: 200,
            grid_points: 1024,
        }
    }
}

impl OracleConfig {
    pub fn new(
        x_tolerance: f64,
        alpha_tolerance: f64,
        max_iterations: usize,
        grid_points: usize,
    ) -> Result<Self, OracleError> {
        let cfg = Self { x_tolerance, alpha_tolerance, max_iterations, grid_points };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), OracleError> {
        if !(self.x_tolerance > 0.0) || !self.x_tolerance.is_finite() {
            return Err(OracleError::InvalidConfig(format!(
                "x_tolerance must be a positive number, got {}",
                self.x_tolerance
            )));
        }
        if !(self.alpha_tolerance > 0.0) || !self.alpha_tolerance.is_finite() {
            return Err(OracleError::InvalidConfig(format!(
                "alpha_tolerance must be a positive number, got {}",
                self.alpha_tolerance
            )));
        }
        if !(2..=1_000_000).contains(&self.max_iterations) {
            return Err(OracleError::InvalidConfig(format!(
                "max_iterations must be between 2 and 1000000, got {}",
                self.max_iterations
            )));
        }
        if !(2..=1_000_000).contains(&self.grid_points) {
            return Err(OracleError::InvalidConfig(format!(
                "grid_points must be between 2 and 1000000, got {}",
                self.grid_points
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("invalid bracket: lo {lo} exceeds hi {hi}")]
    InvalidBracket { lo: f64, hi: f64 },
    #[error("excess supply is {excess_at_zero} at a zero price and never negative; no nonnegative price clears the market")]
    NoSignChange { excess_at_zero: f64 },
    #[error("no price gives both agents a strict gain over their no-trade payoffs")]
    EmptyBand,
    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(String),
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes `objective` on `[lo, hi]`: a coarse grid locates the best
/// segment, golden-section refines it, and one parabolic vertex fit over
/// a wide stencil recenters the result, since value comparisons alone
/// cannot resolve an optimum below the rounding plateau of the objective.
/// The fit is exact for quadratic objectives, including optima pinned at
/// the bracket ends.
pub fn maximize_scalar<F: Fn(f64) -> f64>(
    objective: F,
    lo: f64,
    hi: f64,
    cfg: &OracleConfig,
) -> Result<(f64, f64), OracleError> {
    if !(lo <= hi) {
        return Err(OracleError::InvalidBracket { lo, hi });
    }
    if lo == hi {
        return Ok((lo, objective(lo)));
    }

    let n = cfg.grid_points.max(2);
    let span = hi - lo;
    let mut best_idx = 0;
    let mut best_x = lo;
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..n {
        let x = lo + span * (i as f64) / ((n - 1) as f64);
        let value = objective(x);
        if value > best_val {
            best_idx = i;
            best_x = x;
            best_val = value;
        }
    }

    let mut a = lo + span * (best_idx.saturating_sub(1) as f64) / ((n - 1) as f64);
    let mut b = lo + span * (((best_idx + 1).min(n - 1)) as f64) / ((n - 1) as f64);

    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    let mut iterations = 0;
    while (b - a) > cfg.x_tolerance && iterations < cfg.max_iterations {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = objective(x2);
        }
        iterations += 1;
    }

    let (mut arg, mut val) = if f1 > f2 { (x1, f1) } else { (x2, f2) };

    // Value comparisons alone cannot place an interior optimum closer than
    // the rounding plateau of the objective (about sqrt(eps) of the x
    // scale). One parabolic vertex fit over a stencil wide enough to rise
    // above that noise recenters the result; it is exact for the quadratic
    // objectives this oracle exists to check.
    // rounding can rank plateau points above the true optimum by an ulp,
    // so value guards here must tolerate that much noise
    let noise = 8.0 * f64::EPSILON * val.abs().max(1.0);
    let h = (2e-3 * (1.0 + arg.abs())).min(0.4 * span);
    let mid = arg.clamp(lo + h, hi - h);
    let f_left = objective(mid - h);
    let f_mid = objective(mid);
    let f_right = objective(mid + h);
    let curvature = f_left - 2.0 * f_mid + f_right;
    if curvature < 0.0 {
        let candidate = (mid + 0.5 * h * (f_left - f_right) / curvature).clamp(lo, hi);
        let f_candidate = objective(candidate);
        if f_candidate >= val - noise {
            arg = candidate;
            val = f_candidate;
        }
    }

    if best_val > val + noise {
        arg = best_x;
        val = best_val;
    }
    Ok((arg, val))
}

/// Upstream best response found by searching the utility directly over
/// `[0, e1/(1+c1w)]`.
pub fn best_response_upstream(
    problem: &Problem,
    alpha: f64,
    cfg: &OracleConfig,
) -> Result<f64, OracleError> {
    debug_assert!(alpha >= 0.0);
    let (arg, _) = maximize_scalar(
        |x1| problem.z1_raw(x1, alpha),
        0.0,
        problem.ats_consumption(),
        cfg,
    )?;
    Ok(arg)
}

/// Downstream best response found by searching its utility over what is
/// physically available: at least the default inflow `e2 + c1w*x1`, at
/// most that plus whatever surplus upstream can deliver. Upstream's share
/// of the total is eliminated inside the objective (`x1 = e1 + e2 - x2`).
pub fn best_response_downstream(
    problem: &Problem,
    alpha: f64,
    x1: f64,
    cfg: &OracleConfig,
) -> Result<f64, OracleError> {
    debug_assert!(alpha >= 0.0);
    debug_assert!(x1 >= 0.0);
    let floor = problem.e2() + problem.c1w() * x1;
    let deliverable = (problem.e1() - x1 * problem.drain()).max(0.0);
    let total = problem.e1() + problem.e2();
    let (arg, _) = maximize_scalar(
        |x2| problem.z2_raw(total - x2, x2, alpha),
        floor,
        floor + deliverable,
        cfg,
    )?;
    Ok(arg)
}

/// Offered surplus minus net demand at price `alpha`, evaluated on the
/// clamped analytic best responses. Nondecreasing in `alpha`; strictly
/// increasing with slope `(1+c1w)*(1/b1+1/b2)` where both responses are
/// interior.
pub fn excess_supply(problem: &Problem, alpha: f64) -> f64 {
    let x1 = solver::best_response_upstream(problem, alpha);
    let x2 = solver::best_response_downstream(problem, alpha, x1);
    let supply = problem.e1() - x1 * problem.drain();
    let demand = x2 - problem.e2() - problem.c1w() * x1;
    supply - demand
}

/// Price beyond which both first-order consumptions sit at their floors,
/// so excess supply is constant; the bisection bracket is `[0, this]`.
pub fn alpha_bracket_max(problem: &Problem) -> f64 {
    let up = problem.upstream();
    let down = problem.downstream();
    let c1w = problem.c1w();
    ((up.a + up.beta * c1w) / problem.drain()).max((down.a + down.beta * c1w) / problem.drain())
}

/// Finds the smallest nonnegative price with nonnegative excess supply by
/// bisection. Where the closed form is valid the two agree; unlike the
/// closed form, this stays correct when a consumption clamp binds.
pub fn clearing_alpha(problem: &Problem, cfg: &OracleConfig) -> Result<f64, OracleError> {
    let scale = 1.0 + problem.e1() + problem.e2();
    let at_zero = excess_supply(problem, 0.0);
    // the negation also rejects NaN, which overflowed parameter
    // magnitudes can produce
    if !(at_zero <= 1e-12 * scale) {
        return Err(OracleError::NoSignChange { excess_at_zero: at_zero });
    }
    if at_zero >= 0.0 {
        return Ok(0.0);
    }

    let mut lo = 0.0;
    let mut hi = alpha_bracket_max(problem);
    if !(excess_supply(problem, hi) >= 0.0) {
        return Err(OracleError::NoSignChange { excess_at_zero: at_zero });
    }
    let mut iterations = 0;
    while hi - lo > cfg.alpha_tolerance && iterations < cfg.max_iterations {
        let mid = 0.5 * (lo + hi);
        if excess_supply(problem, mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    Ok(hi)
}

/// How much upstream's best response beats staying at the sovereignty
/// consumption, at price `alpha`. Never negative: the sovereignty point is
/// inside the feasible set of the maximization, and its value is exactly
/// the disagreement payoff at any price.
pub fn upstream_gain_over_default(problem: &Problem, alpha: f64) -> f64 {
    let x1 = solver::best_response_upstream(problem, alpha);
    problem.z1_raw(x1, alpha) - problem.z1_raw(problem.ats_consumption(), alpha)
}

/// Downstream's counterpart, with its consumption measured against the
/// default inflow under the same total-split convention the best response
/// uses (`x1 = e1 + e2 - x2`).
pub fn downstream_gain_over_default(problem: &Problem, alpha: f64) -> f64 {
    let floor = problem.disagreement().x2_ats;
    let x2 = solver::downstream_foc(problem, alpha).max(floor);
    substituted_z2(problem, x2, floor, alpha) - substituted_z2(problem, floor, floor, alpha)
}

/// Downstream utility with upstream's consumption eliminated via the
/// total split; written so the traded volume is measured from `floor`,
/// which makes the gain at the floor exactly zero in floating point.
fn substituted_z2(problem: &Problem, x2: f64, floor: f64, alpha: f64) -> f64 {
    let down = problem.downstream();
    let x1_implied = problem.e1() + problem.e2() - x2;
    quad_benefit(down, x2) - alpha * problem.drain() * (x2 - floor)
        - down.beta * problem.c1w() * x1_implied
}

/// Scans prices for the largest interval on which both agents strictly
/// gain over their no-trade payoffs, then sharpens both endpoints by
/// bisection. Errs with [`OracleError::EmptyBand`] when no price
/// qualifies.
pub fn ir_band(problem: &Problem, cfg: &OracleConfig) -> Result<(f64, f64), OracleError> {
    let both_gain = |alpha: f64| {
        upstream_gain_over_default(problem, alpha) > 0.0
            && downstream_gain_over_default(problem, alpha) > 0.0
    };

    let hi = alpha_bracket_max(problem);
    let n = cfg.grid_points.max(2);
    let grid_x = |i: usize| hi * (i as f64) / ((n - 1) as f64);

    // longest run of qualifying grid points
    let mut best_run: Option<(usize, usize)> = None;
    let mut run_start: Option<usize> = None;
    for i in 0..n {
        if both_gain(grid_x(i)) {
            run_start.get_or_insert(i);
        } else if let Some(start) = run_start.take() {
            if best_run.is_none_or(|(s, e)| i - 1 - s > e - s) {
                best_run = Some((start, i - 1));
            }
        }
    }
    if let Some(start) = run_start {
        if best_run.is_none_or(|(s, e)| n - 1 - start > e - s) {
            best_run = Some((start, n - 1));
        }
    }
    let Some((first, last)) = best_run else {
        return Err(OracleError::EmptyBand);
    };

    let refine = |mut outside: f64, mut inside: f64| {
        let mut iterations = 0;
        while (outside - inside).abs() > cfg.alpha_tolerance && iterations < cfg.max_iterations {
            let mid = 0.5 * (outside + inside);
            if both_gain(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
            iterations += 1;
        }
        0.5 * (outside + inside)
    };

    let lower = if first == 0 { 0.0 } else { refine(grid_x(first - 1), grid_x(first)) };
    let upper = if last == n - 1 { hi } else { refine(grid_x(last + 1), grid_x(last)) };
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::AgentParams;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn cfg() -> OracleConfig {
        OracleConfig::default()
    }

    #[test]
    fn maximize_concave_quadratics() {
        // peak beyond the bracket: maximum at the right edge
        let (arg, _) = maximize_scalar(|x| 10.0 * x - 0.5 * x * x, 0.0, 9.6, &cfg()).unwrap();
        assert!(close(arg, 9.6, 1e-9));

        let (arg, val) = maximize_scalar(|x| 10.0 * x - 0.5 * x * x, 0.0, 20.0, &cfg()).unwrap();
        assert!(close(arg, 10.0, 1e-6));
        assert!(close(val, 50.0, 1e-9));
    }

    #[test]
    fn maximize_degenerate_cases() {
        let (arg, val) = maximize_scalar(|_| 3.25, 2.0, 5.0, &cfg()).unwrap();
        assert_eq!(val, 3.25);
        assert!((2.0..=5.0).contains(&arg));

        let (arg, val) = maximize_scalar(|x| x * x, 4.0, 4.0, &cfg()).unwrap();
        assert_eq!((arg, val), (4.0, 16.0));

        assert!(matches!(
            maximize_scalar(|x| x, 5.0, 4.0, &cfg()),
            Err(OracleError::InvalidBracket { .. })
        ));
    }

    #[test]
    fn config_invariants() {
        assert!(OracleConfig::new(1e-9, 1e-10, 200, 1024).is_ok());
        assert!(OracleConfig::new(0.0, 1e-10, 200, 1024).is_err());
        assert!(OracleConfig::new(1e-9, -1.0, 200, 1024).is_err());
        assert!(OracleConfig::new(1e-9, 1e-10, 1, 1024).is_err());
        assert!(OracleConfig::new(1e-9, 1e-10, 200, 0).is_err());
        // effort knobs are capped so configs cannot request unbounded work
        assert!(OracleConfig::new(1e-9, 1e-10, usize::MAX, 1024).is_err());
        assert!(OracleConfig::new(1e-9, 1e-10, 200, 100_000_000).is_err());
    }

    #[test]
    fn upstream_search_matches_closed_form() {
        let p = fixtures::symmetric();
        assert!(close(best_response_upstream(&p, 2.4, &cfg()).unwrap(), 7.0, 1e-9));
        assert!(close(best_response_upstream(&p, 0.0, &cfg()).unwrap(), 9.6, 1e-9));

        let empty = crate::model::Problem::new(
            *p.upstream(),
            *p.downstream(),
            0.0,
            2.0,
            0.25,
        )
        .unwrap();
        assert_eq!(best_response_upstream(&empty, 3.0, &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn downstream_search_matches_closed_form() {
        let p = fixtures::symmetric();
        // interior optimum coincides with the top of the deliverable range
        assert!(close(best_response_downstream(&p, 2.4, 7.0, &cfg()).unwrap(), 7.0, 1e-9));
        // floor binds: the bracket collapses to a point
        assert!(close(best_response_downstream(&p, 8.0, 9.6, &cfg()).unwrap(), 4.4, 1e-9));

        let dry = crate::model::Problem::new(
            *p.upstream(),
            *p.downstream(),
            0.0,
            2.0,
            0.0,
        )
        .unwrap();
        assert_eq!(best_response_downstream(&dry, 1.0, 0.0, &cfg()).unwrap(), 2.0);
    }

    #[test]
    fn excess_supply_signs() {
        let p = fixtures::symmetric();
        assert!(excess_supply(&p, 2.4).abs() <= 1e-9);
        // zero-surplus price: nothing offered, demand still positive
        let at_lower = excess_supply(&p, 0.32);
        assert!(at_lower <= 0.0);
        let x1 = crate::solver::best_response_upstream(&p, 0.32);
        assert!((p.e1() - p.drain() * x1).abs() <= 1e-12);
        assert!(excess_supply(&p, 4.48) >= 0.0);
    }

    #[test]
    fn clearing_by_bisection() {
        let p = fixtures::symmetric();
        assert!(close(clearing_alpha(&p, &cfg()).unwrap(), 2.4, 1e-8));

        let plain = crate::model::Problem::new(
            AgentParams::new(10.0, 1.0, 0.0),
            AgentParams::new(10.0, 1.0, 0.0),
            8.0,
            2.0,
            0.0,
        )
        .unwrap();
        assert!(close(clearing_alpha(&plain, &cfg()).unwrap(), 5.0, 1e-8));

        // nothing to allocate: the market "clears" at the choke price
        let empty = crate::model::Problem::new(
            AgentParams::new(10.0, 1.0, 0.0),
            AgentParams::new(10.0, 1.0, 0.0),
            0.0,
            0.0,
            0.0,
        )
        .unwrap();
        assert!(close(clearing_alpha(&empty, &cfg()).unwrap(), 10.0, 1e-8));
    }

    #[test]
    fn clearing_reports_flooded_market() {
        let p = crate::model::Problem::new(
            AgentParams::new(1.0, 1.0, 0.0),
            AgentParams::new(1.0, 1.0, 0.0),
            20.0,
            10.0,
            0.0,
        )
        .unwrap();
        assert!(matches!(
            clearing_alpha(&p, &cfg()),
            Err(OracleError::NoSignChange { .. })
        ));
    }

    #[test]
    fn band_scan_recovers_price_bounds() {
        let p = fixtures::symmetric();
        let (lo, hi) = ir_band(&p, &cfg()).unwrap();
        assert!(close(lo, 0.32, 1e-6));
        assert!(close(hi, 4.48, 1e-6));
    }

    #[test]
    fn band_scan_no_penalty_degenerate() {
        let p = crate::model::Problem::new(
            AgentParams::new(10.0, 1.0, 0.0),
            AgentParams::new(10.0, 1.0, 0.0),
            12.0,
            2.0,
            0.0,
        )
        .unwrap();
        // lower bound would be negative; the scan starts at zero
        let (lo, hi) = ir_band(&p, &cfg()).unwrap();
        assert_eq!(lo, 0.0);
        assert!(close(hi, 8.0, 1e-6));
    }

    #[test]
    fn band_scan_empty_on_skewed_fixture() {
        let p = fixtures::skewed(30.0, 1.0);
        assert!(matches!(ir_band(&p, &cfg()), Err(OracleError::EmptyBand)));
    }

    #[test]
    fn upstream_gain_never_negative() {
        let p = fixtures::symmetric();
        for i in 0..50 {
            let alpha = 10.0 * (i as f64) / 49.0;
            assert!(upstream_gain_over_default(&p, alpha) >= 0.0);
        }
    }
}
