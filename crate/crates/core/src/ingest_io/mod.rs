//! File formats: oscilloscope captures, session manifests and reports.

mod capture;
mod manifest;
mod report;

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use capture::{
    parse_capture, parse_capture_str, write_capture, write_capture_to, CaptureFile, CaptureWarning, FormatOptions,
    UNIFORMITY_TOLERANCE,
};
pub use manifest::{load_session, Session, SessionManifest, SoundingParams, MAX_DEGREE, MIN_DEGREE};
pub use report::{
    estimate_from_report, estimate_report, parse_response_csv, pdp_csv, response_csv, stationarity_from_report,
    stationarity_report, Report, ESTIMATE_FORMAT, RESPONSE_HEADER, STATIONARITY_FORMAT,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{}{}: {reason}", path.display(), line_suffix(*line))]
    Unparseable { path: PathBuf, line: usize, reason: String },
    #[error("{}: no numeric data rows", path.display())]
    NoNumericData { path: PathBuf },
    #[error("{}: both ',' and ';' delimit numeric rows; set the delimiter explicitly", path.display())]
    AmbiguousDelimiter { path: PathBuf },
    #[error("MissingCapture: {}", path.display())]
    MissingCapture { path: PathBuf },
    #[error("RateMismatch: expected {expected} Hz; offenders: {}", list_offenders(offenders))]
    RateMismatch { expected: f64, offenders: Vec<(PathBuf, f64)> },
    #[error("SchemaViolation: {}", .0.join("; "))]
    SchemaViolation(Vec<String>),
    #[error("{}", Multi(.0))]
    Multiple(Vec<IngestError>),
}

fn line_suffix(line: usize) -> String {
    if line > 0 {
        format!(":{line}")
    } else {
        String::new()
    }
}

fn list_offenders(o: &[(PathBuf, f64)]) -> String {
    o.iter().map(|(p, r)| format!("{} ({r} Hz)", p.display())).collect::<Vec<_>>().join(", ")
}

struct Multi<'a>(&'a [IngestError]);

impl fmt::Display for Multi<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} problems:", self.0.len())?;
        for e in self.0 {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

impl IngestError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), message: e.to_string() }
    }

    pub(crate) fn with_path(self, p: &Path) -> Self {
        let p = p.to_path_buf();
        match self {
            Self::Unparseable { line, reason, .. } => Self::Unparseable { path: p, line, reason },
            Self::NoNumericData { .. } => Self::NoNumericData { path: p },
            Self::AmbiguousDelimiter { .. } => Self::AmbiguousDelimiter { path: p },
            other => other,
        }
    }

    /// The individual problems, flattening [`IngestError::Multiple`].
    pub fn problems(&self) -> Vec<&IngestError> {
        match self {
            Self::Multiple(v) => v.iter().collect(),
            e => vec![e],
        }
    }
}
