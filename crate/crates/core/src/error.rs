use thiserror::Error;

/// Errors produced across the crate.
///
/// Scalars inside variants are carried as `f64` so the type stays
/// independent of the precision the caller computes in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// `k >= q`: enough robots to send `f + 1` along every ray.
    #[error("trivial regime (k >= m(f+1)): competitive ratio {ratio}")]
    Trivial { ratio: f64 },

    /// `k <= f`: every robot may be faulty.
    #[error("infeasible regime (k <= f): the target can never be confirmed")]
    Infeasible,

    #[error("domain error: {0}")]
    Domain(String),

    /// The requested ratio is at or above the tight bound, so no finite
    /// horizon forces a contradiction.
    #[error("no finite horizon: lambda {lambda} is not below the tight bound {bound}")]
    NoFiniteHorizon { lambda: f64, bound: f64 },

    #[error("target on ray {ray} at distance {x} is reached by {found} robot(s), {required} required")]
    Undetected {
        ray: usize,
        x: f64,
        found: usize,
        required: usize,
    },

    #[error("coverage deficient just above {point}: multiplicity {found} < {required}")]
    Deficient {
        point: f64,
        found: usize,
        required: usize,
    },

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("potential undefined: robot {robot} has zero load")]
    UndefinedPotential { robot: usize },

    #[error("robot {robot} has no assigned interval")]
    MissingRobot { robot: usize },

    #[error("robot {robot} has no further assigned interval")]
    EndOfAssignment { robot: usize },

    #[error("audit failed at step {step}: {reason}")]
    AuditViolation { step: usize, reason: String },

    #[error("no denominator up to {cap} satisfies the brackets; tightest weight index {index}")]
    CapExceeded { cap: u64, index: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
