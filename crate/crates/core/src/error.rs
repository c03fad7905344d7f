use std::fmt;

use thiserror::Error;

/// A single broken invariant found while validating a source description.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationError {
    EmptySpec,
    EmptySpectrum { component: usize },
    NonFinite { component: usize, index: usize, value: f64 },
    NegativeProbability { component: usize, index: usize, value: f64 },
    /// `component` is `None` when the mixture weights themselves do not sum to one.
    NotNormalized { component: Option<usize>, sum: f64 },
    NonPositiveWeight { component: usize, weight: f64 },
    DimensionMismatch { component: usize, expected: usize, found: usize },
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptySpec => write!(f, "source has no components"),
            Self::EmptySpectrum { component } => {
                write!(f, "component {component}: empty eigenvalue list")
            }
            Self::NonFinite { component, index, value } => {
                write!(f, "component {component}: entry {index} is not finite ({value})")
            }
            Self::NegativeProbability { component, index, value } => {
                write!(f, "component {component}: entry {index} is negative ({value})")
            }
            Self::NotNormalized { component: Some(c), sum } => {
                write!(f, "component {c}: eigenvalues sum to {sum}, expected 1")
            }
            Self::NotNormalized { component: None, sum } => {
                write!(f, "mixture weights sum to {sum}, expected 1")
            }
            Self::NonPositiveWeight { component, weight } => {
                write!(f, "component {component}: weight {weight} is not positive")
            }
            Self::DimensionMismatch { component, expected, found } => write!(
                f,
                "component {component}: dimension {found} differs from dimension {expected} of component 0"
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid source: {}", join(.0))]
    Invalid(Vec<ValidationError>),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("component {component} sits at the queried entropy but has zero varentropy")]
    DegenerateSigma { component: usize },

    #[error("rate equation is indeterminate: constant left-hand side {lhs} equals the target {target}")]
    Infeasible { lhs: f64, target: f64 },

    #[error("no finite second-order rate at a = {a} (b = {b})")]
    NoFiniteRate { a: f64, b: f64 },

    #[error("mixing weight t = {t} coincides with eps = {eps}; the two-source rate is undefined there")]
    BoundaryTEqualsEps { t: f64, eps: f64 },

    #[error("first source must have strictly larger entropy ({s1} <= {s2})")]
    EntropyOrder { s1: f64, s2: f64 },

    #[error("enumeration needs {required} types, above the cap of {cap}")]
    CapExceeded { required: u128, cap: u64 },

    #[error("root bracketing failed for target {target}")]
    Bracketing { target: f64 },
}

fn join(errors: &[ValidationError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
