use core::fmt;

/// Side of the cutoff a fit or error belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => f.write_str("left"),
            Side::Right => f.write_str("right"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("sample is empty")]
    EmptySample,
    #[error("invalid record {index}: {reason}")]
    InvalidRecord { index: usize, reason: &'static str },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("truncation point {omega} equals the minimum observed time; every record would be truncated")]
    AllTruncated { omega: f64 },
    #[error("step function evaluated at negative time {0}")]
    NegativeTime(f64),
    #[error("malformed step function: {0}")]
    MalformedStep(&'static str),

    #[error("sample contains no observed failures")]
    NoEvents,
    #[error("too few records ({0}) to fit the failure-time model")]
    TooFewRecords(usize),
    #[error("forcing variable is constant")]
    ConstantCovariate,
    #[error("likelihood maximization did not converge after {iterations} iterations (gradient norm {gradient_norm:e}): {detail}")]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
        detail: &'static str,
    },
    #[error("Cox partial likelihood is monotone; coefficient reached the cap {cap}")]
    MonotoneLikelihood { cap: f64 },
    #[error("conditional expectation requested at negative time {0}")]
    NegativeU(f64),
    #[error("quadrature failed to reach tolerance (estimated error {estimated_error:e})")]
    QuadratureFailure { estimated_error: f64 },

    #[error("censoring survival is zero just before t = {time}")]
    ZeroDenominator { time: f64 },
    #[error("record {index}: {source}")]
    AtRecord {
        index: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },

    #[error("{side} side: fewer than two distinct forcing values carry positive kernel weight")]
    InsufficientSupport { side: Side },
    #[error("{side} side: weighted design is singular (condition number {condition:e})")]
    SingularDesign { side: Side, condition: f64 },

    #[error("no records fall inside the cross-validation window")]
    DegenerateWindow,
    #[error("every candidate bandwidth scored +inf")]
    AllInfinite,

    #[error("treatment discontinuity {tau_z:e} is below the floor; no identifiable jump")]
    WeakDiscontinuity { tau_z: f64 },
    #[error("fuzzy design requires treatment indicators that vary near the cutoff")]
    MissingTreatment,

    #[error("{side} side: sandwich bread matrix is singular")]
    SingularGamma { side: Side },
    #[error("{side} side has {available} records; nearest-neighbor variance needs more than {neighbors}")]
    TooFewNeighbors {
        side: Side,
        available: usize,
        neighbors: usize,
    },
    #[error("{failed} of {total} bootstrap replicates failed, most often with {most_common}")]
    TooManyFailedReplicates {
        failed: usize,
        total: usize,
        most_common: &'static str,
    },
    #[error("{failed} of {total} simulation replicates failed, most often with {most_common}")]
    TooManyFailedSimulations {
        failed: usize,
        total: usize,
        most_common: &'static str,
    },
}

impl Error {
    pub(crate) fn at_record(index: usize, source: Error) -> Self {
        Error::AtRecord {
            index,
            source: alloc::boxed::Box::new(source),
        }
    }

    /// Short stable identifier, used in reports and failure census tables.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptySample => "EmptySample",
            Error::InvalidRecord { .. } => "InvalidRecord",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::AllTruncated { .. } => "AllTruncated",
            Error::NegativeTime(_) => "NegativeTime",
            Error::MalformedStep(_) => "MalformedStep",
            Error::NoEvents => "NoEvents",
            Error::TooFewRecords(_) => "TooFewRecords",
            Error::ConstantCovariate => "ConstantCovariate",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::MonotoneLikelihood { .. } => "MonotoneLikelihood",
            Error::NegativeU(_) => "NegativeU",
            Error::QuadratureFailure { .. } => "QuadratureFailure",
            Error::ZeroDenominator { .. } => "ZeroDenominator",
            Error::AtRecord { source, .. } => source.kind(),
            Error::InsufficientSupport { .. } => "InsufficientSupport",
            Error::SingularDesign { .. } => "SingularDesign",
            Error::DegenerateWindow => "DegenerateWindow",
            Error::AllInfinite => "AllInfinite",
            Error::WeakDiscontinuity { .. } => "WeakDiscontinuity",
            Error::MissingTreatment => "MissingTreatment",
            Error::SingularGamma { .. } => "SingularGamma",
            Error::TooFewNeighbors { .. } => "TooFewNeighbors",
            Error::TooManyFailedReplicates { .. } => "TooManyFailedReplicates",
            Error::TooManyFailedSimulations { .. } => "TooManyFailedSimulations",
        }
    }

    /// Pipeline stage that raised the error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::EmptySample
            | Error::InvalidRecord { .. }
            | Error::InvalidArgument(_)
            | Error::AllTruncated { .. }
            | Error::NegativeTime(_)
            | Error::MalformedStep(_) => "survival_core",
            Error::NoEvents
            | Error::TooFewRecords(_)
            | Error::ConstantCovariate
            | Error::NonConvergence { .. }
            | Error::MonotoneLikelihood { .. }
            | Error::NegativeU(_)
            | Error::QuadratureFailure { .. } => "cond_expectation",
            Error::ZeroDenominator { .. } => "transforms",
            Error::AtRecord { source, .. } => source.module(),
            Error::InsufficientSupport { .. } | Error::SingularDesign { .. } => "local_linear",
            Error::DegenerateWindow | Error::AllInfinite => "bandwidth",
            Error::WeakDiscontinuity { .. } | Error::MissingTreatment => "rd_estimation",
            Error::SingularGamma { .. } | Error::TooFewNeighbors { .. } | Error::TooManyFailedReplicates { .. } => {
                "inference"
            }
            Error::TooManyFailedSimulations { .. } => "simulation",
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
