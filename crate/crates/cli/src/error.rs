use std::fmt;

use entclass_core::acquisition::AcquisitionError;
use entclass_core::classify::ClassifyError;
use entclass_core::corpus::CorpusError;
use entclass_core::eval::EvalError;
use entclass_core::taxonomy::TaxonomyError;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NETWORK: u8 = 3;
pub const EXIT_DATA: u8 = 4;

/// An error plus the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn config(error: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_CONFIG, error: error.into() }
    }

    pub fn data(error: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_DATA, error: error.into() }
    }

    pub fn context(mut self, msg: impl fmt::Display + Send + Sync + 'static) -> Self {
        self.error = self.error.context(msg);
        self
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

fn acquisition_code(e: &AcquisitionError) -> u8 {
    match e {
        AcquisitionError::MissingCredential(_)
        | AcquisitionError::ClientUnavailable(_)
        | AcquisitionError::InvalidInput(_) => EXIT_CONFIG,
        e if e.is_network() => EXIT_NETWORK,
        _ => EXIT_DATA,
    }
}

fn classify_code(e: &ClassifyError) -> u8 {
    match e {
        ClassifyError::InvalidConfig(_) => EXIT_CONFIG,
        ClassifyError::JobFailed { .. } => EXIT_NETWORK,
        ClassifyError::Provider(inner) => acquisition_code(inner),
        _ => EXIT_DATA,
    }
}

impl From<AcquisitionError> for Failure {
    fn from(e: AcquisitionError) -> Self {
        Self { code: acquisition_code(&e), error: e.into() }
    }
}

impl From<ClassifyError> for Failure {
    fn from(e: ClassifyError) -> Self {
        Self { code: classify_code(&e), error: e.into() }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        let code = match &e {
            EvalError::Classify(inner) => classify_code(inner),
            EvalError::Acquisition(inner) => acquisition_code(inner),
            EvalError::InvalidThreshold(_) | EvalError::InvalidKs(_) => EXIT_CONFIG,
            _ => EXIT_DATA,
        };
        Self { code, error: e.into() }
    }
}

impl From<TaxonomyError> for Failure {
    fn from(e: TaxonomyError) -> Self {
        let code = match e {
            TaxonomyError::UnknownTask(_) | TaxonomyError::BadRatios(_) => EXIT_CONFIG,
            _ => EXIT_DATA,
        };
        Self { code, error: e.into() }
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        Self::data(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::data(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::data(e)
    }
}
