//! Endowment-grid experiments: solve the problem over a grid of endowment
//! ratios `delta` and downstream endowments `e2` (with `e1 = delta*e2`),
//! tabulate the price band, clearing price, feasibility and welfare, and
//! locate where the acceptable-price band opens or closes.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::model::{AgentParams, Problem, ValidationErrors};
use crate::solver::{self, Regime};

/// Agent parameters and penalty shared by every grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepBase {
    pub upstream: AgentParams,
    pub downstream: AgentParams,
    pub c1w: f64,
}

impl SweepBase {
    /// The problem at one grid point, `e1 = delta * e2`.
    pub fn problem_at(&self, delta: f64, e2: f64) -> Result<Problem, ValidationErrors> {
        Problem::new(self.upstream, self.downstream, delta * e2, e2, self.c1w)
    }
}

/// Inclusive arithmetic grid for the downstream endowment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct E2Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl E2Grid {
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + self.step * i as f64).collect()
    }
}

/// A full sweep request.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub base: SweepBase,
    pub delta_values: Vec<f64>,
    pub e2_grid: E2Grid,
    /// Column subset for the emitted table; `None` keeps all columns in
    /// their canonical order.
    pub columns: Option<Vec<Column>>,
}

/// Caps the total number of grid points a sweep may request, so a typo in
/// a step size fails fast instead of exhausting memory.
pub const MAX_GRID_POINTS: usize = 1_000_000;

impl SweepSpec {
    pub fn check(&self) -> Result<(), SweepError> {
        if !self.e2_grid.start.is_finite() || !self.e2_grid.stop.is_finite() {
            return Err(SweepError::InvalidSpec(format!(
                "e2 grid endpoints must be finite, got [{}, {}]",
                self.e2_grid.start, self.e2_grid.stop
            )));
        }
        if !(self.e2_grid.step > 0.0) || !self.e2_grid.step.is_finite() {
            return Err(SweepError::InvalidSpec(format!(
                "e2 grid step must be positive, got {}",
                self.e2_grid.step
            )));
        }
        if !(self.e2_grid.stop >= self.e2_grid.start) {
            return Err(SweepError::InvalidSpec(format!(
                "e2 grid stop ({}) must not be below start ({})",
                self.e2_grid.stop, self.e2_grid.start
            )));
        }
        if self.delta_values.is_empty() {
            return Err(SweepError::InvalidSpec("delta list must not be empty".into()));
        }
        if let Some(bad) = self.delta_values.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
            return Err(SweepError::InvalidSpec(format!(
                "delta values must be nonnegative, got {bad}"
            )));
        }
        let e2_count =
            ((self.e2_grid.stop - self.e2_grid.start) / self.e2_grid.step + 1e-9).floor() + 1.0;
        let total = e2_count * self.delta_values.len() as f64;
        if !(total <= MAX_GRID_POINTS as f64) {
            return Err(SweepError::InvalidSpec(format!(
                "sweep grid has {total:.0} points, which exceeds the limit of {MAX_GRID_POINTS}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("invalid sweep specification: {0}")]
    InvalidSpec(String),
    #[error("invalid problem at grid point delta={delta}, e2={e2}: {source}")]
    InvalidGridPoint {
        delta: f64,
        e2: f64,
        source: ValidationErrors,
    },
}

/// One solved grid point, flattened for tabulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub delta: f64,
    pub e2: f64,
    pub e1: f64,
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    pub alpha_star: f64,
    pub feasible: bool,
    pub x1: f64,
    pub x2: f64,
    pub transfer: f64,
    pub z1: f64,
    pub z2: f64,
    pub d1: f64,
    pub d2: f64,
    pub gain1: f64,
    pub gain2: f64,
    pub regime: Regime,
}

impl SweepRow {
    pub fn from_solution(delta: f64, e2: f64, problem: &Problem) -> Self {
        let agreement = solver::solve(problem);
        SweepRow {
            delta,
            e2,
            e1: problem.e1(),
            alpha_lower: agreement.bounds.alpha_lower,
            alpha_upper: agreement.bounds.alpha_upper,
            alpha_star: agreement.alpha_star,
            feasible: agreement.feasible,
            x1: agreement.allocation.x1,
            x2: agreement.allocation.x2,
            transfer: agreement.allocation.t1,
            z1: agreement.utilities.0,
            z2: agreement.utilities.1,
            d1: agreement.disagreement.d1,
            d2: agreement.disagreement.d2,
            gain1: agreement.gains.0,
            gain2: agreement.gains.1,
            regime: agreement.regime,
        }
    }

    /// Whether the acceptable-price band is nonempty at this grid point.
    /// This is the region the charts shade; unlike `feasible` it does not
    /// additionally require the clearing price to be nonnegative.
    pub fn band_nonempty(&self) -> bool {
        self.alpha_lower <= self.alpha_upper
    }
}

/// Table columns in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    Delta,
    E2,
    E1,
    AlphaLower,
    AlphaUpper,
    AlphaStar,
    Feasible,
    X1,
    X2,
    Transfer,
    Z1,
    Z2,
    D1,
    D2,
    Gain1,
    Gain2,
    Regime,
}

pub const ALL_COLUMNS: [Column; 17] = [
    Column::Delta,
    Column::E2,
    Column::E1,
    Column::AlphaLower,
    Column::AlphaUpper,
    Column::AlphaStar,
    Column::Feasible,
    Column::X1,
    Column::X2,
    Column::Transfer,
    Column::Z1,
    Column::Z2,
    Column::D1,
    Column::D2,
    Column::Gain1,
    Column::Gain2,
    Column::Regime,
];

impl Column {
    pub fn name(&self) -> &'static str {
        match self {
            Column::Delta => "delta",
            Column::E2 => "e2",
            Column::E1 => "e1",
            Column::AlphaLower => "alpha_lower",
            Column::AlphaUpper => "alpha_upper",
            Column::AlphaStar => "alpha_star",
            Column::Feasible => "feasible",
            Column::X1 => "x1",
            Column::X2 => "x2",
            Column::Transfer => "transfer",
            Column::Z1 => "z1",
            Column::Z2 => "z2",
            Column::D1 => "d1",
            Column::D2 => "d2",
            Column::Gain1 => "gain1",
            Column::Gain2 => "gain2",
            Column::Regime => "regime",
        }
    }

    fn render(&self, row: &SweepRow, out: &mut String) {
        match self {
            Column::Delta => write!(out, "{}", row.delta),
            Column::E2 => write!(out, "{}", row.e2),
            Column::E1 => write!(out, "{}", row.e1),
            Column::AlphaLower => write!(out, "{}", row.alpha_lower),
            Column::AlphaUpper => write!(out, "{}", row.alpha_upper),
            Column::AlphaStar => write!(out, "{}", row.alpha_star),
            Column::Feasible => write!(out, "{}", row.feasible),
            Column::X1 => write!(out, "{}", row.x1),
            Column::X2 => write!(out, "{}", row.x2),
            Column::Transfer => write!(out, "{}", row.transfer),
            Column::Z1 => write!(out, "{}", row.z1),
            Column::Z2 => write!(out, "{}", row.z2),
            Column::D1 => write!(out, "{}", row.d1),
            Column::D2 => write!(out, "{}", row.d2),
            Column::Gain1 => write!(out, "{}", row.gain1),
            Column::Gain2 => write!(out, "{}", row.gain2),
            Column::Regime => write!(out, "{}", row.regime),
        }
        .expect("writing to a String cannot fail");
    }
}

impl std::str::FromStr for Column {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_COLUMNS
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown column name: {s}"))
    }
}

/// Runs the sweep in grid order, `delta` outer and `e2` inner. Output is
/// deterministic: the same spec always yields the same rows.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SweepError> {
    spec.check()?;
    let e2_values = spec.e2_grid.values();
    let mut rows = Vec::with_capacity(spec.delta_values.len() * e2_values.len());
    for &delta in &spec.delta_values {
        for &e2 in &e2_values {
            let problem = spec.base.problem_at(delta, e2).map_err(|source| {
                SweepError::InvalidGridPoint { delta, e2, source }
            })?;
            rows.push(SweepRow::from_solution(delta, e2, &problem));
        }
    }
    Ok(rows)
}

/// Renders rows as CSV. Numbers use the shortest decimal form that parses
/// back to the same value; `feasible` renders as `true`/`false` and
/// `regime` as the variant name.
pub fn rows_to_csv(rows: &[SweepRow], columns: Option<&[Column]>) -> String {
    let columns = columns.unwrap_or(&ALL_COLUMNS);
    let mut out = String::new();
    for (i, column) in columns.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(column.name());
    }
    out.push('\n');
    for row in rows {
        for (i, column) in columns.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            column.render(row, &mut out);
        }
        out.push('\n');
    }
    out
}

/// Renders rows as a JSON array of objects with the same field names as
/// the CSV columns.
pub fn rows_to_json(rows: &[SweepRow]) -> String {
    serde_json::to_string_pretty(rows).expect("sweep rows serialize to JSON")
}

/// Where the agreement region starts or stops along `e2` for a fixed
/// `delta`.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdOutcome {
    /// Exactly one boundary on the range (or the range start, when the
    /// band is nonempty from the very first point).
    Threshold(f64),
    /// The band opens and closes more than once; all crossings, refined.
    SignChanges(Vec<f64>),
    /// The band is empty over the whole range.
    NoneFeasible,
}

/// Locates the `e2` boundary of the region where the acceptable-price
/// band `[alpha_lower, alpha_upper]` is nonempty, for fixed `delta`, by a
/// scan plus bisection to a resolution of 1e-6.
pub fn find_feasibility_threshold(
    base: &SweepBase,
    delta: f64,
    e2_range: (f64, f64),
) -> ThresholdOutcome {
    const RESOLUTION: f64 = 1e-6;
    const SCAN_POINTS: usize = 512;

    let band_open = |e2: f64| -> bool {
        match base.problem_at(delta, e2) {
            Ok(problem) => {
                let bounds = solver::tu_bounds(&problem);
                bounds.alpha_lower <= bounds.alpha_upper
            }
            Err(_) => false,
        }
    };

    let (lo, hi) = e2_range;
    let sample = |i: usize| lo + (hi - lo) * (i as f64) / ((SCAN_POINTS - 1) as f64);

    let mut crossings = Vec::new();
    let mut prev = band_open(sample(0));
    let first_open = prev;
    for i in 1..SCAN_POINTS {
        let here = band_open(sample(i));
        if here != prev {
            // refine the crossing between the two samples
            let (mut a, mut b) = (sample(i - 1), sample(i));
            while b - a > RESOLUTION {
                let mid = 0.5 * (a + b);
                if band_open(mid) == prev {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            crossings.push(0.5 * (a + b));
            prev = here;
        }
    }

    match crossings.len() {
        0 if first_open => ThresholdOutcome::Threshold(lo),
        0 => ThresholdOutcome::NoneFeasible,
        1 => ThresholdOutcome::Threshold(crossings[0]),
        _ => ThresholdOutcome::SignChanges(crossings),
    }
}
