use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series orders differ ({0} vs {1})")]
    OrderMismatch(usize, usize),
    #[error("grid of {grid} samples is too small for order {order} (need a power of two >= {need})")]
    GridTooSmall { grid: usize, order: usize, need: usize },
    #[error("incompatible valuation: {0}")]
    IncompatibleValuation(String),
    #[error("leading coefficient {0:e} is numerically zero")]
    SingularLeadingCoefficient(f64),
    #[error("series is not a unit: {0}")]
    NonUnitInput(String),
    #[error("Grunsky symmetry violated at ({m}, {n}): discrepancy {discrepancy:e}")]
    SymmetryViolation { m: i64, n: i64, discrepancy: f64 },
    #[error("invalid pair: {0}")]
    InvalidPair(String),
    #[error("map is not an orientation-preserving circle homeomorphism: {0}")]
    NotAHomeomorphism(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("truncation undersized: residual energy {energy:e} above retained modes")]
    TruncationUndersized { energy: f64 },
    #[error("Newton stalled at grid node {node}")]
    NewtonStall { node: usize },
    #[error("f vanishes on the unit circle (min |f| = {0:e})")]
    FVanishesOnCircle(f64),
    #[error("curve check failed: {0}")]
    CurveNotClosedToTolerance(String),
    #[error("chart Jacobian is degenerate (condition {0:e})")]
    ChartDegenerate(f64),
    #[error("series evaluation off its domain: {0}")]
    EvaluationOffDomain(String),
    #[error("Orlov tail does not decay: {0:e}")]
    TailDivergence(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable variant name for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OrderMismatch(..) => "order_mismatch",
            Error::GridTooSmall { .. } => "grid_too_small",
            Error::IncompatibleValuation(_) => "incompatible_valuation",
            Error::SingularLeadingCoefficient(_) => "singular_leading_coefficient",
            Error::NonUnitInput(_) => "non_unit_input",
            Error::SymmetryViolation { .. } => "symmetry_violation",
            Error::InvalidPair(_) => "invalid_pair",
            Error::NotAHomeomorphism(_) => "not_a_homeomorphism",
            Error::NoConvergence { .. } => "no_convergence",
            Error::TruncationUndersized { .. } => "truncation_undersized",
            Error::NewtonStall { .. } => "newton_stall",
            Error::FVanishesOnCircle(_) => "f_vanishes_on_circle",
            Error::CurveNotClosedToTolerance(_) => "curve_not_closed_to_tolerance",
            Error::ChartDegenerate(_) => "chart_degenerate",
            Error::EvaluationOffDomain(_) => "evaluation_off_domain",
            Error::TailDivergence(_) => "tail_divergence",
            Error::InvalidInput(_) => "invalid_input",
        }
    }
}
