use std::fmt;

use prerand_core::distance::DistanceError;
use prerand_core::geodesic::GeodesicError;
use prerand_core::horizon::HorizonError;
use prerand_core::magnetic::MagneticError;

/// Validation errors exit with 2, numeric failures with 3.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

pub fn invalid(m: impl fmt::Display) -> CliError {
    CliError::Validation(m.to_string())
}

pub fn numeric(m: impl fmt::Display) -> CliError {
    CliError::Numeric(m.to_string())
}

impl From<DistanceError> for CliError {
    fn from(e: DistanceError) -> Self {
        match e {
            DistanceError::GridTooSmall { .. } | DistanceError::Metric(_) | DistanceError::NodeOutOfRange(_) => invalid(e),
            _ => numeric(e),
        }
    }
}

impl From<GeodesicError> for CliError {
    fn from(e: GeodesicError) -> Self {
        match e {
            GeodesicError::InvalidProblem(_) | GeodesicError::ZeroWinding | GeodesicError::NotPeriodic { .. } => invalid(e),
            _ => numeric(e),
        }
    }
}

impl From<HorizonError> for CliError {
    fn from(e: HorizonError) -> Self {
        match e {
            HorizonError::EmptyTarget | HorizonError::TargetOutside { .. } => invalid(e),
            HorizonError::Distance(d) => d.into(),
            _ => numeric(e),
        }
    }
}

impl From<MagneticError> for CliError {
    fn from(e: MagneticError) -> Self {
        match e {
            MagneticError::Energy(_) | MagneticError::NonzeroFlux { .. } | MagneticError::PotentialMismatch { .. } | MagneticError::Metric(_) => {
                invalid(e)
            }
            MagneticError::Geodesic(g) => g.into(),
            MagneticError::Distance(d) => d.into(),
            MagneticError::Hypothesis(_) => numeric(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        invalid(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        invalid(e)
    }
}
