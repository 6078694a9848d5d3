//! Domain model: agents, endowments, the pollution penalty, and the
//! utility functions the bargaining problem is built from.
//!
//! Water volumes and money are abstract units. The upstream agent pays a
//! penalty of `c1w` units of extra discharge ("negative water") per unit
//! consumed, which caps its own consumption at `e1 / (1 + c1w)` and is
//! delivered downstream as compensation.

use serde::Serialize;
use thiserror::Error;

/// Which agent a validation message refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Role {
    Upstream,
    Downstream,
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Role::Upstream => write!(f, "upstream"),
            Role::Downstream => write!(f, "downstream"),
        }
    }
}

/// One agent's quadratic benefit parameters and externality valuation.
///
/// The benefit from consuming `x` units is `a*x - (b/2)*x^2`, which peaks
/// at the satiation point `a/b`. `beta` is the per-unit value the agent
/// attaches to penalty water (avoided clean-up upstream, incurred
/// extraction cost downstream).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgentParams {
    pub a: f64,
    pub b: f64,
    pub beta: f64,
}

impl AgentParams {
    pub fn new(a: f64, b: f64, beta: f64) -> Self {
        Self { a, b, beta }
    }

    /// Consumption level where the benefit peaks.
    pub fn satiation(&self) -> f64 {
        self.a / self.b
    }

    /// Quadratic benefit of consuming `x` units; zero at zero consumption.
    pub fn benefit(&self, x: f64) -> Result<f64, DomainError> {
        if x < 0.0 {
            return Err(DomainError::NegativeConsumption { value: x });
        }
        Ok(quad_benefit(self, x))
    }

    fn violations(&self, role: Role, out: &mut Vec<Violation>) {
        if !self.a.is_finite() || !self.b.is_finite() || !self.beta.is_finite() {
            out.push(Violation::NonFiniteParameter { agent: role });
        }
        if !(self.a > 0.0) {
            out.push(Violation::NonPositiveIntercept { agent: role, value: self.a });
        }
        if !(self.b > 0.0) {
            out.push(Violation::NonPositiveCurvature { agent: role, value: self.b });
        }
        if !(self.beta >= 0.0) {
            out.push(Violation::NegativeExternalityWeight { agent: role, value: self.beta });
        }
    }
}

/// Benefit term shared by the checked wrappers; callers guarantee `x >= 0`.
pub(crate) fn quad_benefit(params: &AgentParams, x: f64) -> f64 {
    params.a * x - 0.5 * params.b * x * x
}

/// A single invariant violation found while validating problem data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("{agent} benefit curvature b must be positive, got {value} (the benefit function must be strictly concave)")]
    NonPositiveCurvature { agent: Role, value: f64 },
    #[error("{agent} benefit intercept a must be positive, got {value}")]
    NonPositiveIntercept { agent: Role, value: f64 },
    #[error("{agent} externality coefficient beta must be nonnegative, got {value}")]
    NegativeExternalityWeight { agent: Role, value: f64 },
    #[error("endowment {name} must be nonnegative, got {value}")]
    NegativeEndowment { name: &'static str, value: f64 },
    #[error("penalty coefficient c1w must be nonnegative, got {value}")]
    NegativePenalty { value: f64 },
    #[error("{agent} parameters must be finite")]
    NonFiniteParameter { agent: Role },
    #[error("{name} must be finite, got {value}")]
    NonFiniteField { name: &'static str, value: f64 },
}

/// All violations found in one candidate problem.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid problem: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ValidationErrors(pub Vec<Violation>);

/// Precondition failures of the evaluation functions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("consumption must be nonnegative, got {value}")]
    NegativeConsumption { value: f64 },
    #[error("price must be nonnegative, got {value}")]
    NegativePrice { value: f64 },
}

/// A validated two-agent bargaining problem: both agents' parameters, the
/// endowments, and the penalty coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Problem {
    upstream: AgentParams,
    downstream: AgentParams,
    e1: f64,
    e2: f64,
    c1w: f64,
}

impl Problem {
    /// Validates the candidate fields and returns either a `Problem`
    /// satisfying every invariant or the full list of violations.
    pub fn new(
        upstream: AgentParams,
        downstream: AgentParams,
        e1: f64,
        e2: f64,
        c1w: f64,
    ) -> Result<Self, ValidationErrors> {
        let mut violations = Vec::new();
        upstream.violations(Role::Upstream, &mut violations);
        downstream.violations(Role::Downstream, &mut violations);
        if !e1.is_finite() {
            violations.push(Violation::NonFiniteField { name: "e1", value: e1 });
        } else if e1 < 0.0 {
            violations.push(Violation::NegativeEndowment { name: "e1", value: e1 });
        }
        if !e2.is_finite() {
            violations.push(Violation::NonFiniteField { name: "e2", value: e2 });
        } else if e2 < 0.0 {
            violations.push(Violation::NegativeEndowment { name: "e2", value: e2 });
        }
        if !c1w.is_finite() {
            violations.push(Violation::NonFiniteField { name: "c1w", value: c1w });
        } else if c1w < 0.0 {
            violations.push(Violation::NegativePenalty { value: c1w });
        }
        if violations.is_empty() {
            Ok(Self { upstream, downstream, e1, e2, c1w })
        } else {
            Err(ValidationErrors(violations))
        }
    }

    pub fn upstream(&self) -> &AgentParams {
        &self.upstream
    }

    pub fn downstream(&self) -> &AgentParams {
        &self.downstream
    }

    pub fn e1(&self) -> f64 {
        self.e1
    }

    pub fn e2(&self) -> f64 {
        self.e2
    }

    pub fn c1w(&self) -> f64 {
        self.c1w
    }

    /// `1 + c1w`, the factor by which consumption drains the endowment.
    pub fn drain(&self) -> f64 {
        1.0 + self.c1w
    }

    /// Upstream consumption under full sovereignty: the most it can consume
    /// once each unit also owes `c1w` units downstream, `e1 / (1 + c1w)`.
    pub fn ats_consumption(&self) -> f64 {
        self.e1 / self.drain()
    }

    /// Penalty water owed downstream when upstream consumes `x1`.
    pub fn penalty_water(&self, x1: f64) -> Result<f64, DomainError> {
        if x1 < 0.0 {
            return Err(DomainError::NegativeConsumption { value: x1 });
        }
        Ok(self.c1w * x1)
    }

    /// Upstream utility at consumption `x1` and price `alpha`: benefit,
    /// plus revenue on the surplus `e1 - x1*(1+c1w)`, plus the avoided
    /// clean-up cost `beta1*x1*c1w`.
    pub fn utility_upstream(&self, x1: f64, alpha: f64) -> Result<f64, DomainError> {
        if x1 < 0.0 {
            return Err(DomainError::NegativeConsumption { value: x1 });
        }
        if alpha < 0.0 {
            return Err(DomainError::NegativePrice { value: alpha });
        }
        Ok(self.z1_raw(x1, alpha))
    }

    /// Downstream utility at consumption `x2` and price `alpha`, given the
    /// upstream consumption `x1`: benefit, minus payment for the net
    /// purchase `x2 - e2 - c1w*x1`, minus the extraction cost
    /// `beta2*x1*c1w`. Payment and cost are expenses, hence negative.
    pub fn utility_downstream(&self, x1: f64, x2: f64, alpha: f64) -> Result<f64, DomainError> {
        if x1 < 0.0 {
            return Err(DomainError::NegativeConsumption { value: x1 });
        }
        if x2 < 0.0 {
            return Err(DomainError::NegativeConsumption { value: x2 });
        }
        if alpha < 0.0 {
            return Err(DomainError::NegativePrice { value: alpha });
        }
        Ok(self.z2_raw(x1, x2, alpha))
    }

    pub(crate) fn z1_raw(&self, x1: f64, alpha: f64) -> f64 {
        quad_benefit(&self.upstream, x1)
            + alpha * (self.e1 - x1 * self.drain())
            + self.upstream.beta * x1 * self.c1w
    }

    pub(crate) fn z2_raw(&self, x1: f64, x2: f64, alpha: f64) -> f64 {
        quad_benefit(&self.downstream, x2)
            - alpha * (x2 - self.e2 - x1 * self.c1w)
            - self.downstream.beta * x1 * self.c1w
    }

    /// The no-agreement outcome: upstream consumes its sovereignty level,
    /// downstream gets its endowment plus the penalty water, and each side
    /// keeps the resulting utility (price-independent, since no water
    /// changes hands).
    pub fn disagreement(&self) -> DisagreementPoint {
        let x1_ats = self.ats_consumption();
        let x2_ats = self.e2 + self.c1w * x1_ats;
        let d1 = quad_benefit(&self.upstream, x1_ats) + self.upstream.beta * self.c1w * x1_ats;
        let d2 = quad_benefit(&self.downstream, x2_ats) - self.downstream.beta * self.c1w * x1_ats;
        DisagreementPoint { x1_ats, x2_ats, d1, d2 }
    }
}

/// A water-and-money allocation: consumptions and the payment from
/// downstream to upstream. The downstream side of the ledger is `-t1` by
/// construction, so money is conserved exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Allocation {
    pub x1: f64,
    pub x2: f64,
    pub t1: f64,
}

impl Allocation {
    /// Money flow on the downstream side.
    pub fn t2(&self) -> f64 {
        -self.t1
    }
}

/// Consumptions and payoffs when bargaining fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisagreementPoint {
    pub x1_ats: f64,
    pub x2_ats: f64,
    pub d1: f64,
    pub d2: f64,
}
