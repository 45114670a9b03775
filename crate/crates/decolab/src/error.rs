//! Crate error type.

use thiserror::Error;

/// Everything that can go wrong across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is out of its physical domain (negative mass, nonfinite
    /// input, ...).
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Configuration failed validation; `field` names the offending entry.
    #[error("invalid configuration: {field}: {reason}")]
    Validation { field: String, reason: String },

    /// Unknown preset name.
    #[error("unknown preset `{name}`; available presets: {available}")]
    UnknownPreset { name: String, available: String },

    /// Config file could not be parsed. Line numbers are 1-based.
    #[error("config parse error at line {line}: {reason}")]
    ConfigParse { line: usize, reason: String },

    /// Missing required config key.
    #[error("config is missing required key `{key}`")]
    MissingKey { key: &'static str },

    /// I/O failure while reading or writing an external file.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Coherence is undefined for a single slit (the 1/(n-1) normalization).
    #[error("coherence is undefined for n = 1")]
    UndefinedCoherence,

    /// Measured coherence is at or above its decoherence-free ceiling, so no
    /// decoherence time can be extracted.
    #[error("no decoherence detected: coherence {coherence} >= ceiling {ceiling}")]
    NoDecoherenceDetected { coherence: f64, ceiling: f64 },

    /// Measured coherence is zero or negative: full decoherence, the
    /// inversion diverges.
    #[error("fully decohered: coherence {coherence} <= 0")]
    FullyDecohered { coherence: f64 },

    /// The parallel-mode intensity does not exceed the orthogonal-mode one.
    #[error("no interference excess: I_par = {i_par} <= I_perp = {i_perp}")]
    NoInterference { i_par: f64, i_perp: f64 },

    /// The two-mode measurement protocol does not apply (e.g. arbitrary slit
    /// phases admit no common primary maximum).
    #[error("measurement protocol inapplicable: {reason}")]
    ProtocolInapplicable { reason: String },

    /// A profile has no usable fringe structure at all.
    #[error("flat intensity profile: no interior extrema")]
    FlatProfile,

    /// Numerical failure (nonfinite intermediate, divergence, ...).
    #[error("numerical failure: {reason}")]
    Numerical { reason: String },

    /// The solver grid cannot resolve or contain a required physical scale.
    #[error("grid cannot resolve {scale}: required {required:.3e}, got {actual:.3e}")]
    Resolution {
        scale: &'static str,
        required: f64,
        actual: f64,
    },

    /// Two grids that must match do not.
    #[error("grid mismatch: {reason}")]
    GridMismatch { reason: String },

    /// Master-equation evolution produced a nonfinite value.
    #[error("oracle evolution diverged at step {step}")]
    Divergence { step: usize },

    /// Malformed checkpoint data.
    #[error("bad checkpoint: {reason}")]
    Checkpoint { reason: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn numerical(reason: impl Into<String>) -> Self {
        Error::Numerical {
            reason: reason.into(),
        }
    }
}
