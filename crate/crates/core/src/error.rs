use thiserror::Error;

/// Errors shared across the crate.
///
/// Numerical routines prefer returning an error over silently degrading:
/// quadrature that cannot reach its target accuracy, groups that fail to
/// close, or solver steps that lose positivity all surface here.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor argument violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An evaluation argument is outside the operation's domain (e.g. t <= 0).
    #[error("domain error: {0}")]
    Domain(String),

    /// Group closure exceeded the element cap; the generators do not span a
    /// finite reflection group (or the cap is too small).
    #[error("group closure exceeded {cap} elements without stabilizing")]
    NonFiniteGroup { cap: usize },

    /// Exhaustive enumeration would exceed the configured work cap.
    #[error("enumeration needs ~{required} items, above the cap of {cap}")]
    EnumerationTooLarge { required: u128, cap: u128 },

    /// Exact volume integration is only supported in low dimension.
    #[error("unsupported dimension {dim} (max {max})")]
    UnsupportedDimension { dim: usize, max: usize },

    /// Adaptive quadrature hit its escalation ceiling without converging.
    #[error("quadrature failed to converge: {0}")]
    Precision(String),

    /// The requested operation only applies to a different root-system family.
    #[error("operation not applicable: {0}")]
    NotApplicable(String),

    /// Finite differencing too close to a reflection hyperplane.
    #[error("point within {dist:.3e} of a reflection wall (needs >= {min:.3e})")]
    WallProximity { dist: f64, min: f64 },

    /// Time step rejected by the stability/positivity guard.
    #[error("time step {dt:.3e} rejected; suggested dt <= {suggested:.3e}")]
    StepRejected { dt: f64, suggested: f64 },

    /// The solver's self-estimated error band is too wide to trust the field.
    #[error("insufficient resolution: error band {band:.3} exceeds {max:.3}")]
    Resolution { band: f64, max: f64 },

    /// A sweep configuration is internally inconsistent.
    #[error("bad configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
