use std::fmt;
use std::path::PathBuf;

use sarheight_core::Error as CoreError;

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_MISSING_INPUT: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;
pub const EXIT_IO: u8 = 5;

/// Failures raised by the runner itself rather than the core library.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    MissingInput(PathBuf),
    /// An input was written under a different configuration.
    Stale {
        path: PathBuf,
        expected: String,
        found: Option<String>,
    },
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::MissingInput(p) => write!(f, "missing input: {}", p.display()),
            Failure::Stale {
                path,
                expected,
                found,
            } => write!(
                f,
                "stale artifact {}: written with config {}, current config is {expected}",
                path.display(),
                found.as_deref().unwrap_or("<none>")
            ),
        }
    }
}

impl std::error::Error for Failure {}

/// Classifies an error chain into an exit code and a short kind label.
pub fn classify(err: &anyhow::Error) -> (u8, &'static str) {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return match f {
                Failure::Config(_) => (EXIT_CONFIG, "config"),
                Failure::MissingInput(_) => (EXIT_MISSING_INPUT, "missing-input"),
                Failure::Stale { .. } => (EXIT_CONFIG, "stale-artifact"),
            };
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::Numeric { .. } | CoreError::Divergence { .. } => (EXIT_NUMERIC, "numeric"),
                CoreError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                    (EXIT_MISSING_INPUT, "missing-input")
                }
                CoreError::Io { .. } => (EXIT_IO, "io"),
                CoreError::Format { .. } => (EXIT_IO, "format"),
                _ => (EXIT_CONFIG, "config"),
            };
        }
        if let Some(e) = cause.downcast_ref::<std::io::Error>() {
            return if e.kind() == std::io::ErrorKind::NotFound {
                (EXIT_MISSING_INPUT, "missing-input")
            } else {
                (EXIT_IO, "io")
            };
        }
        if cause.downcast_ref::<csv::Error>().is_some() {
            return (EXIT_IO, "format");
        }
    }
    (EXIT_IO, "internal")
}

/// One-line JSON description of a failure for stderr.
pub fn error_line(err: &anyhow::Error) -> String {
    let (code, kind) = classify(err);
    serde_json::json!({
        "error": {
            "code": code,
            "kind": kind,
            "message": format!("{err:#}"),
        }
    })
    .to_string()
}
