//! Shared error type for the whole laboratory.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("radius out of range: need 0 < rho < 1, got {0}")]
    RadiusOutOfRange(f64),

    #[error("evaluation failure at node {index}: non-finite value")]
    EvaluationFailure { index: usize },

    #[error("weight out of range: alpha must exceed -1, got {0}")]
    WeightOutOfRange(f64),

    #[error("singular integrand; tighten radial_clip")]
    SingularIntegrand,

    #[error("invalid quadrature rule: {0}")]
    InvalidRule(String),

    #[error("shift point outside disk")]
    ShiftOutsideDisk,

    #[error("boundary singularity at {0}; use the radial limit instead")]
    BoundarySingularity(String),

    #[error("exp-reciprocal hypothesis violated: Re f < 1 on the sampled grid (min {min})")]
    ExpReciprocalHypothesis { min: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("outer symbol not evaluable")]
    OuterNotEvaluable,

    #[error("symbol lacks evaluation and models")]
    NoBackend,

    #[error("sampling radius too large for this symbol (sup |phi| = {sup} on the circle)")]
    SamplingRadiusTooLarge { sup: f64 },

    #[error("symbol does not fix the origin")]
    OriginNotFixed,

    #[error("invalid arc set: {0}")]
    InvalidArcSet(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("atomic measure has infinite energy")]
    AtomicMeasure,

    #[error("kernel singularity; perturb evaluation point")]
    KernelSingularity,

    #[error("solver stalled: KKT residual {residual} after {iterations} iterations")]
    SolverStalled { residual: f64, iterations: usize },

    #[error("capacity of K too large for requested J (energy ceiling {target} unreachable in the epsilon range)")]
    EnergyCeilingUnreachable { target: f64 },

    #[error("peaking hypothesis failed: Re f = {min} < 1 on the check grid")]
    PeakingHypothesisFailed { min: f64 },

    #[error("point not in the delta_j collar (dist {dist} > delta {delta})")]
    OutsideCollar { dist: f64, delta: f64 },

    #[error("peaking lower bound violated: bound {bound} < target {target}")]
    PeakingBoundViolated { bound: f64, target: f64 },

    #[error("certificate inconclusive: estimates not stabilizing ({detail})")]
    CertificateInconclusive { detail: String },

    #[error("HS integral appears divergent")]
    HsIntegralDivergent,

    #[error("Schwarz window comparison failed at generation {generation}, sector {sector}")]
    SchwarzComparisonFailed { generation: u32, sector: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
