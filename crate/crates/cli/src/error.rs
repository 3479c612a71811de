//! Error classification onto the stable exit-code contract:
//! 2 = validation failure, 3 = estimation/integration failure.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Validation,
    Estimation,
}

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Estimation(String),
}

impl AppError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            AppError::Validation(_) => ExitCode::Validation,
            AppError::Estimation(_) => ExitCode::Estimation,
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        AppError::Validation(message.into())
    }

    pub fn estimation(message: impl Into<String>) -> Self {
        AppError::Estimation(message.into())
    }
}

impl From<epiwave_core::CoreError> for AppError {
    fn from(err: epiwave_core::CoreError) -> Self {
        // Core errors are input problems: missing columns, bad cells, gaps.
        AppError::Validation(err.to_string())
    }
}

impl From<epiwave_changepoint::ChangePointError> for AppError {
    fn from(err: epiwave_changepoint::ChangePointError) -> Self {
        use epiwave_changepoint::ChangePointError as E;
        match err {
            E::SeriesTooShort { .. } | E::InvalidArgument(_) | E::InvalidLocations(_) => {
                AppError::Validation(err.to_string())
            }
            E::NonFiniteContrast { .. } | E::DegenerateFinalSegment(_) => {
                AppError::Estimation(err.to_string())
            }
        }
    }
}

impl From<epiwave_countts::CountTsError> for AppError {
    fn from(err: epiwave_countts::CountTsError) -> Self {
        use epiwave_countts::CountTsError as E;
        match err {
            E::InvalidArgument(_) | E::SeriesTooShort { .. } => {
                AppError::Validation(err.to_string())
            }
            E::NonConvergence { .. } | E::Estimation(_) => AppError::Estimation(err.to_string()),
        }
    }
}

impl From<epiwave_compartmental::CompartmentalError> for AppError {
    fn from(err: epiwave_compartmental::CompartmentalError) -> Self {
        use epiwave_compartmental::CompartmentalError as E;
        match err {
            E::InvalidArgument(_) | E::Core(_) => AppError::Validation(err.to_string()),
            E::Integration(_) | E::MobilityDenominator { .. } | E::Estimation(_) => {
                AppError::Estimation(err.to_string())
            }
        }
    }
}

impl From<epiwave_rt::RtError> for AppError {
    fn from(err: epiwave_rt::RtError) -> Self {
        use epiwave_rt::RtError as E;
        match err {
            E::InvalidArgument(_) | E::Partition(_) | E::Core(_) => {
                AppError::Validation(err.to_string())
            }
            E::Estimation(_) => AppError::Estimation(err.to_string()),
            E::Compartmental(inner) => AppError::from(inner),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(err: std::io::Error) -> Self {
        AppError::Validation(format!("io error: {err}"))
    }
}
