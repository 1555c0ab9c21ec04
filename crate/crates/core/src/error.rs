use alloc::string::String;

/// Failures raised by the core routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("need at least {min} hinges, got {n}")]
    TooFewHinges { n: usize, min: usize },

    #[error("hinges {0} and {1} are parallel; the configuration is degenerate")]
    ParallelHinges(usize, usize),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("unknown initialisation strategy `{0}`")]
    UnknownStrategy(String),

    #[error("no feasible twist parameter found for this mode and hinge count")]
    NoFeasibleAnchor,

    #[error("the feasible range reaches the trivial value c = {0}; there is no interior boundary")]
    NoInteriorBoundary(f64),

    #[error("continuation stalled at arclength {arclength:.6}; step fell to {step:e}")]
    Stall { arclength: f64, step: f64 },

    #[error("ambiguous branch at state {index}: tangent space has dimension {nullity} and the previous direction is nearly orthogonal to it")]
    BranchAmbiguity { index: usize, nullity: usize },

    #[error("hinge centres {0} and {1} coincide")]
    CoincidentCenters(usize, usize),

    #[error("the dipole energy needs an oriented state")]
    ModeError,

    #[error("segment {0} has zero length")]
    DegenerateSegment(usize),

    #[error("segments {0} and {1} nearly intersect; writhe is ill-conditioned")]
    NumericalIllConditioning(usize, usize),

    #[error("2(Tw + Wr) = {value} is not close to an integer (defect {defect:e})")]
    IntegralityViolation { value: f64, defect: f64 },

    #[error("consecutive tangents {0} and {1} are antipodal")]
    AntipodalTangents(usize, usize),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
