//! Run configuration: a flat `key = value` tree with dotted keys, plus an
//! equivalent JSON object form. Documents starting with `{` are read as
//! JSON; anything else is read as the key tree.
//!
//! The grammar is line-based: `#` starts a comment, blank lines are
//! ignored, every other line must be `key = value`. Unknown and duplicate
//! keys are errors, and all numerics are parsed at full precision.

use std::collections::BTreeMap;

use serde::Deserialize;
use thiserror::Error;

use crate::model::{AgentParams, Problem, ValidationErrors};
use crate::oracle::OracleConfig;
use crate::sweep::{Column, E2Grid, SweepBase, SweepSpec, MAX_GRID_POINTS};

/// Everything a subcommand needs: the problem, an optional sweep request,
/// oracle settings, and default output paths.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: Problem,
    pub sweep: Option<SweepSpec>,
    pub oracle: OracleConfig,
    pub output: OutputPaths,
}

/// Output destinations; command-line flags take precedence over these.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputPaths {
    pub csv: Option<String>,
    pub json: Option<String>,
    pub svg: Option<String>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: cannot parse `{text}`: expected `key = value`")]
    MalformedLine { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key `{key}`")]
    MissingKey { key: &'static str },
    #[error("line {line}: invalid value for `{key}`: {message}")]
    InvalidValue { line: usize, key: String, message: String },
    #[error("invalid JSON config: {0}")]
    Json(String),
    #[error(transparent)]
    Validation(#[from] ValidationErrors),
    #[error("invalid sweep block: {0}")]
    Sweep(String),
    #[error("invalid oracle block: {0}")]
    Oracle(String),
}

/// Parses a configuration document (key tree or JSON) and validates every
/// block. Returns the first offending field on failure.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    if text.trim_start().starts_with('{') {
        let raw: RawConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
        return assemble(raw);
    }
    assemble(parse_key_tree(text)?)
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    upstream: Option<RawAgent>,
    downstream: Option<RawAgent>,
    endowments: Option<RawEndowments>,
    c1w: Option<f64>,
    sweep: Option<RawSweep>,
    oracle: Option<RawOracle>,
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawAgent {
    a: Option<f64>,
    b: Option<f64>,
    beta: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawEndowments {
    e1: Option<f64>,
    e2: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    delta: Option<Vec<f64>>,
    e2: Option<RawGrid>,
    columns: Option<Vec<String>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    x_tolerance: Option<f64>,
    alpha_tolerance: Option<f64>,
    max_iterations: Option<usize>,
    grid_points: Option<usize>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    csv: Option<String>,
    json: Option<String>,
    svg: Option<String>,
    delta: Option<f64>,
}

fn assemble(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let up = raw.upstream.unwrap_or_default();
    let down = raw.downstream.unwrap_or_default();
    let endowments = raw.endowments.unwrap_or_default();

    let require = |v: Option<f64>, key: &'static str| v.ok_or(ConfigError::MissingKey { key });
    let upstream = AgentParams::new(
        require(up.a, "upstream.a")?,
        require(up.b, "upstream.b")?,
        require(up.beta, "upstream.beta")?,
    );
    let downstream = AgentParams::new(
        require(down.a, "downstream.a")?,
        require(down.b, "downstream.b")?,
        require(down.beta, "downstream.beta")?,
    );
    let e1 = require(endowments.e1, "endowments.e1")?;
    let e2 = require(endowments.e2, "endowments.e2")?;
    let c1w = require(raw.c1w, "c1w")?;
    let problem = Problem::new(upstream, downstream, e1, e2, c1w)?;

    let sweep = match raw.sweep {
        None => None,
        Some(s) => {
            let grid = s.e2.unwrap_or_default();
            let spec = SweepSpec {
                base: SweepBase { upstream, downstream, c1w },
                delta_values: s.delta.ok_or(ConfigError::MissingKey { key: "sweep.delta" })?,
                e2_grid: E2Grid {
                    start: require(grid.start, "sweep.e2.start")?,
                    stop: require(grid.stop, "sweep.e2.stop")?,
                    step: require(grid.step, "sweep.e2.step")?,
                },
                columns: match s.columns {
                    None => None,
                    Some(names) => Some(
                        names
                            .iter()
                            .map(|n| n.parse::<Column>())
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(ConfigError::Sweep)?,
                    ),
                },
            };
            spec.check().map_err(|e| ConfigError::Sweep(e.to_string()))?;
            Some(spec)
        }
    };

    let oracle = match raw.oracle {
        None => OracleConfig::default(),
        Some(o) => {
            let d = OracleConfig::default();
            OracleConfig::new(
                o.x_tolerance.unwrap_or(d.x_tolerance),
                o.alpha_tolerance.unwrap_or(d.alpha_tolerance),
                o.max_iterations.unwrap_or(d.max_iterations),
                o.grid_points.unwrap_or(d.grid_points),
            )
            .map_err(|e| ConfigError::Oracle(e.to_string()))?
        }
    };

    let output = match raw.output {
        None => OutputPaths::default(),
        Some(o) => {
            if let Some(delta) = o.delta {
                if !delta.is_finite() {
                    return Err(ConfigError::Sweep(format!(
                        "output.delta must be finite, got {delta}"
                    )));
                }
            }
            OutputPaths { csv: o.csv, json: o.json, svg: o.svg, delta: o.delta }
        }
    };

    Ok(RunConfig { problem, sweep, oracle, output })
}

fn parse_key_tree(text: &str) -> Result<RawConfig, ConfigError> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::MalformedLine { line: line_no, text: line.to_string() });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError::MalformedLine { line: line_no, text: line.to_string() });
        }
        if entries.contains_key(&key) {
            return Err(ConfigError::DuplicateKey { line: line_no, key });
        }
        entries.insert(key, (line_no, value));
    }

    let mut tree = Entries { entries };
    let raw = RawConfig {
        upstream: Some(RawAgent {
            a: tree.take_f64("upstream.a")?,
            b: tree.take_f64("upstream.b")?,
            beta: tree.take_f64("upstream.beta")?,
        }),
        downstream: Some(RawAgent {
            a: tree.take_f64("downstream.a")?,
            b: tree.take_f64("downstream.b")?,
            beta: tree.take_f64("downstream.beta")?,
        }),
        endowments: Some(RawEndowments {
            e1: tree.take_f64("endowments.e1")?,
            e2: tree.take_f64("endowments.e2")?,
        }),
        c1w: tree.take_f64("c1w")?,
        sweep: {
            let delta = tree.take_with("sweep.delta", parse_delta_list)?;
            let start = tree.take_f64("sweep.e2.start")?;
            let stop = tree.take_f64("sweep.e2.stop")?;
            let step = tree.take_f64("sweep.e2.step")?;
            let columns = tree.take_with("sweep.columns", |v| {
                Ok(v.split(',').map(|c| c.trim().to_string()).collect::<Vec<_>>())
            })?;
            if delta.is_none() && start.is_none() && stop.is_none() && step.is_none()
                && columns.is_none()
            {
                None
            } else {
                Some(RawSweep {
                    delta,
                    e2: Some(RawGrid { start, stop, step }),
                    columns,
                })
            }
        },
        oracle: {
            let x_tolerance = tree.take_f64("oracle.x_tolerance")?;
            let alpha_tolerance = tree.take_f64("oracle.alpha_tolerance")?;
            let max_iterations = tree.take_usize("oracle.max_iterations")?;
            let grid_points = tree.take_usize("oracle.grid_points")?;
            if x_tolerance.is_none() && alpha_tolerance.is_none() && max_iterations.is_none()
                && grid_points.is_none()
            {
                None
            } else {
                Some(RawOracle { x_tolerance, alpha_tolerance, max_iterations, grid_points })
            }
        },
        output: {
            let csv = tree.take_string("output.csv");
            let json = tree.take_string("output.json");
            let svg = tree.take_string("output.svg");
            let delta = tree.take_f64("output.delta")?;
            if csv.is_none() && json.is_none() && svg.is_none() && delta.is_none() {
                None
            } else {
                Some(RawOutput { csv, json, svg, delta })
            }
        },
    };

    if let Some((key, (line, _))) = tree.entries.iter().next() {
        return Err(ConfigError::UnknownKey { line: *line, key: key.clone() });
    }
    Ok(raw)
}

struct Entries {
    entries: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn take_string(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(_, value)| value)
    }

    fn take_with<T>(
        &mut self,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>, ConfigError> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, value)) => parse(&value).map(Some).map_err(|message| {
                ConfigError::InvalidValue { line, key: key.to_string(), message }
            }),
        }
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.take_with(key, |v| {
            v.parse::<f64>().map_err(|_| format!("`{v}` is not a number"))
        })
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.take_with(key, |v| {
            v.parse::<usize>().map_err(|_| format!("`{v}` is not a nonnegative integer"))
        })
    }
}

/// `lo..hi` (inclusive, unit steps) or a comma-separated list of values.
fn parse_delta_list(value: &str) -> Result<Vec<f64>, String> {
    if let Some((lo, hi)) = value.split_once("..") {
        let lo: f64 = lo.trim().parse().map_err(|_| format!("`{lo}` is not a number"))?;
        let hi: f64 = hi.trim().parse().map_err(|_| format!("`{hi}` is not a number"))?;
        if !lo.is_finite() || !hi.is_finite() {
            return Err("range endpoints must be finite".into());
        }
        if hi < lo {
            return Err(format!("range `{lo}..{hi}` is empty"));
        }
        if hi - lo >= MAX_GRID_POINTS as f64 {
            return Err(format!("range `{lo}..{hi}` has too many values"));
        }
        let count = (hi - lo + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| lo + i as f64).collect())
    } else {
        value
            .split(',')
            .map(|part| {
                let part = part.trim();
                part.parse::<f64>().map_err(|_| format!("`{part}` is not a number"))
            })
            .collect()
    }
}

/// A commented template covering every key; `parse_config` accepts it
/// verbatim.
pub fn example_config() -> &'static str {
    r#"# river-bargain run configuration
#
# Problem block (required).
#   a     benefit intercept, marginal value of the first unit (> 0)
#   b     benefit curvature, how fast marginal value falls (> 0)
#   beta  valuation of penalty water (>= 0)

upstream.a = 10
upstream.b = 1
upstream.beta = 0

downstream.a = 10
downstream.b = 1
downstream.beta = 0

endowments.e1 = 12
endowments.e2 = 2

# Penalty: extra discharge owed downstream per unit consumed upstream.
# Upstream can then consume at most e1 / (1 + c1w).
c1w = 0.25

# Sweep block (required by the `sweep` subcommand): solves on a grid of
# endowment ratios delta (setting e1 = delta * e2) by downstream
# endowments e2. `delta` accepts an inclusive range `lo..hi` in unit
# steps, or a comma-separated list.
sweep.delta = 0..30
sweep.e2.start = 0
sweep.e2.stop = 40
sweep.e2.step = 1

# Restrict the emitted table columns (default: all):
# sweep.columns = delta,e2,alpha_lower,alpha_upper,alpha_star,feasible

# Numeric verification settings (defaults shown):
# oracle.x_tolerance = 1e-9
# oracle.alpha_tolerance = 1e-10
# oracle.max_iterations = 200
# oracle.grid_points = 1024

# Default output destinations; command-line flags override these:
# output.csv = sweep.csv
# output.json = sweep.json
# output.svg = band.svg
# output.delta = 30
"#
}
