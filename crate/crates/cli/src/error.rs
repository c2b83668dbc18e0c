use std::fmt;
use std::path::Path;

use serde::Serialize;
use tbr_core::baseline::BaselineError;
use tbr_core::estimator::EstimateError;
use tbr_core::ingest::IngestError;
use tbr_core::roster::RosterError;
use tbr_core::standardize::StandardizeError;
use tbr_core::synthetic::SyntheticError;

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Error reported on stderr as JSON; `code` becomes the exit status.
#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    #[serde(rename = "exit_code")]
    pub code: i32,
}

impl CliError {
    pub fn usage(kind: &'static str, message: impl fmt::Display) -> Self {
        CliError { kind, message: message.to_string(), code: EXIT_USAGE }
    }

    pub fn runtime(kind: &'static str, message: impl fmt::Display) -> Self {
        CliError { kind, message: message.to_string(), code: EXIT_RUNTIME }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        CliError::runtime("io", format!("{}: {err}", path.display()))
    }

    /// Prefixes the message with the file it concerns.
    pub fn in_file(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }

    pub fn in_season(mut self, season: i32) -> Self {
        self.message = format!("season {season}: {}", self.message);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Schema { .. } => CliError::usage("schema", e),
            IngestError::UnknownEvent { .. } => CliError::runtime("data", e),
            IngestError::Csv(_) => CliError::runtime("data", e),
            IngestError::Io(_) => CliError::runtime("io", e),
        }
    }
}

impl From<RosterError> for CliError {
    fn from(e: RosterError) -> Self {
        CliError::usage("roster", e)
    }
}

impl From<BaselineError> for CliError {
    fn from(e: BaselineError) -> Self {
        match e {
            BaselineError::InvalidSpec(_) => CliError::usage("grid-spec", e),
            BaselineError::Format(_) => CliError::usage("schema", e),
            BaselineError::Io(_) => CliError::runtime("io", e),
            _ => CliError::runtime("baseline", e),
        }
    }
}

impl From<EstimateError> for CliError {
    fn from(e: EstimateError) -> Self {
        CliError::runtime("estimate", e)
    }
}

impl From<StandardizeError> for CliError {
    fn from(e: StandardizeError) -> Self {
        CliError::runtime("standardize", e)
    }
}

impl From<SyntheticError> for CliError {
    fn from(e: SyntheticError) -> Self {
        match e {
            SyntheticError::Invalid(_) => CliError::usage("config", e),
            SyntheticError::Schedule(_) => CliError::runtime("schedule", e),
        }
    }
}
