use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A mean or observation outside the family's valid range.
    Domain(&'static str),
    /// A malformed argument (derivative order, tolerance, threshold, ...).
    Argument(&'static str),
    /// Coefficients outside the closed parameter space.
    ConstraintViolation { min_value: f64 },
    /// An operation that requires an interior point was given a boundary or
    /// infeasible one.
    NotInterior { min_value: f64 },
    /// Observation `index` has zero density under every component.
    DegenerateObservation { index: usize, value: f64 },
    /// The fit cannot continue, e.g. pruning removed every component.
    FitFailure(&'static str),
    /// A non-finite log-likelihood where a finite one is required.
    NonFinite(&'static str),
    /// The requested grid would be unreasonably large.
    Resource { points: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Argument(m) => write!(f, "invalid argument: {m}"),
            Error::ConstraintViolation { min_value } => write!(
                f,
                "lambda violates the positivity constraint (minimum {min_value:e})"
            ),
            Error::NotInterior { min_value } => write!(
                f,
                "starting point is not interior to the parameter space (minimum {min_value:e})"
            ),
            Error::DegenerateObservation { index, value } => write!(
                f,
                "observation {index} (value {value}) has zero density under every component"
            ),
            Error::FitFailure(m) => write!(f, "fit failed: {m}"),
            Error::NonFinite(m) => write!(f, "non-finite log-likelihood: {m}"),
            Error::Resource { points } => write!(
                f,
                "grid would need {points:.0} support points; raise delta"
            ),
        }
    }
}

impl core::error::Error for Error {}
