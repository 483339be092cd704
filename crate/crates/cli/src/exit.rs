//! Process exit codes and the error type commands return.

use std::fmt;

use laxrank_core::compare::CompareError;
use laxrank_core::npi::NpiError;
use laxrank_core::power_rating::RatingError;
use laxrank_core::powerwise::PwrError;
use laxrank_core::schedule::ScheduleError;
use laxrank_core::simulate::SimError;

pub const OK: i32 = 0;
pub const IO: i32 = 1;
pub const USAGE: i32 = 2;
pub const PARSE: i32 = 3;
pub const VALIDATION: i32 = 4;
pub const SOLVER: i32 = 5;
pub const NON_CONVERGENCE: i32 = 6;
pub const DISAGREE: i32 = 7;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ScheduleError> for Failure {
    fn from(e: ScheduleError) -> Self {
        let code = if e.is_parse_error() { PARSE } else { VALIDATION };
        Failure::new(code, e.to_string())
    }
}

impl From<RatingError> for Failure {
    fn from(e: RatingError) -> Self {
        Failure::new(SOLVER, e.to_string())
    }
}

impl From<PwrError> for Failure {
    fn from(e: PwrError) -> Self {
        Failure::new(SOLVER, e.to_string())
    }
}

impl From<NpiError> for Failure {
    fn from(e: NpiError) -> Self {
        Failure::new(VALIDATION, e.to_string())
    }
}

impl From<CompareError> for Failure {
    fn from(e: CompareError) -> Self {
        match e {
            CompareError::BadDocument(_) => Failure::new(PARSE, e.to_string()),
            CompareError::InvalidHypothetical(inner) => {
                let mut f = Failure::from(inner);
                f.message = format!("invalid hypothetical game: {}", f.message);
                f
            }
            CompareError::Rating(inner) => inner.into(),
            CompareError::Pwr(inner) => inner.into(),
            CompareError::Npi(inner) => inner.into(),
            other => Failure::new(VALIDATION, other.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Rating(inner) => inner.into(),
            SimError::Pwr(inner) => inner.into(),
            SimError::Npi(inner) => inner.into(),
            other => Failure::new(VALIDATION, other.to_string()),
        }
    }
}
