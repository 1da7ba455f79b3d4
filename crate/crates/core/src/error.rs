use alloc::{boxed::Box, string::String};

/// Failures raised by the model, the path engine and the analysis layer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    /// A deep parameter is outside its admissible range.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    /// A formula was evaluated outside its domain.
    #[error("domain error in {op}: {reason}")]
    Domain { op: &'static str, reason: String },
    /// The state of a path became non-finite.
    #[error("non-finite state at t = {t}")]
    Numeric { t: f64 },
    /// A failure inside one path of an ensemble.
    #[error("path {path_index}: {source}")]
    Path {
        path_index: u64,
        #[source]
        source: Box<ModelError>,
    },
    /// A caller asked for something that was never computed or configured.
    #[error("{0}")]
    Usage(String),
}

impl ModelError {
    pub(crate) fn domain(op: &'static str, reason: impl Into<String>) -> Self {
        ModelError::Domain {
            op,
            reason: reason.into(),
        }
    }
}
