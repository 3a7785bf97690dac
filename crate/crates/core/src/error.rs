use std::fmt;

use thiserror::Error;

/// A single semantic problem found while validating a community or hazard
/// description. Validation collects every issue before failing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigIssue {
    DuplicateId(String),
    DanglingReference {
        owner: String,
        target: String,
    },
    SelfReference(String),
    DependencyCycle(String),
    WrongKind {
        owner: String,
        target: String,
        expected: &'static str,
    },
    Unfed(String),
    MissingRetailerRecord(String),
    NotARetailer(String),
    InvalidValue {
        owner: String,
        reason: String,
    },
    MissingBinding {
        kind: String,
        table: &'static str,
    },
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigIssue::DuplicateId(id) => write!(f, "duplicate component id `{id}`"),
            ConfigIssue::DanglingReference { owner, target } => {
                write!(f, "`{owner}` references unknown component `{target}`")
            }
            ConfigIssue::SelfReference(id) => write!(f, "`{id}` requires itself"),
            ConfigIssue::DependencyCycle(id) => {
                write!(f, "dependency cycle through component `{id}`")
            }
            ConfigIssue::WrongKind {
                owner,
                target,
                expected,
            } => {
                write!(f, "`{owner}` expects `{target}` to be {expected}")
            }
            ConfigIssue::Unfed(id) => write!(
                f,
                "`{id}` has no upstream component in its own network and can never be served"
            ),
            ConfigIssue::MissingRetailerRecord(id) => {
                write!(f, "retailer component `{id}` has no [[community.retailers]] entry")
            }
            ConfigIssue::NotARetailer(id) => {
                write!(f, "retailer entry `{id}` does not name a retailer component")
            }
            ConfigIssue::InvalidValue { owner, reason } => write!(f, "`{owner}`: {reason}"),
            ConfigIssue::MissingBinding { kind, table } => {
                write!(f, "no {table} entry for component kind `{kind}`")
            }
        }
    }
}

/// Every issue found by one validation pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssues(pub Vec<ConfigIssue>);

impl fmt::Display for ConfigIssues {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} configuration error(s):", self.0.len())?;
        for issue in &self.0 {
            write!(f, "\n  - {issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Invalid(ConfigIssues),

    #[error("failed to parse {path}: {message}")]
    Parse { path: String, message: String },

    #[error("empty retailer list")]
    NoRetailers,

    #[error("terminal state: no damaged components remain")]
    Terminal,

    #[error("component `{0}` is not damaged in the current state")]
    NotDamaged(String),

    #[error("invalid repair action: {0}")]
    InvalidAction(String),

    #[error("temperature must be positive and finite, got {0}")]
    NonPositiveTemperature(f64),

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("trajectory has zero total duration")]
    ZeroDuration,

    #[error("exhaustive search exceeded the cap of {cap} expanded nodes")]
    OracleCapExceeded { cap: u64 },

    #[error("experiment needs at least one replicate and one policy")]
    EmptyExperiment,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(issues: Vec<ConfigIssue>) -> Self {
        Error::Invalid(ConfigIssues(issues))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
