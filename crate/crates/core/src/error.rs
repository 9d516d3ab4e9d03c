use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("latitude {latitude_deg}° is not reached by an orbit inclined at {inclination_deg}°")]
    GeometryInfeasible {
        inclination_deg: f64,
        latitude_deg: f64,
    },

    #[error("rectangle axes differ: {first_deg}° vs {second_deg}°")]
    AxisMismatch { first_deg: f64, second_deg: f64 },

    #[error("placed only {achieved} of {requested} buildings within the retry budget")]
    Capacity { achieved: usize, requested: usize },

    #[error("buildings outside the raster extent: {}", ids.join(", "))]
    OutOfExtent { ids: Vec<String> },

    #[error("format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("unknown city `{0}`")]
    UnknownCity(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("shape mismatch in layer `{layer}`: {detail}")]
    Shape { layer: String, detail: String },

    #[error("non-finite value in layer `{layer}`")]
    Numeric { layer: String },

    #[error("training diverged at step {step} (loss {loss})")]
    Divergence { step: u64, loss: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: &std::path::Path, err: csv::Error) -> Self {
        let offset = err.position().map_or(0, |p| p.byte());
        match err.into_kind() {
            csv::ErrorKind::Io(source) => Error::io(path, source),
            kind => Error::Format {
                offset,
                reason: format!("{}: {kind:?}", path.display()),
            },
        }
    }
}
