//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the measurement pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Snell's law has no real solution: n1·sin θ1 / n2 > 1.
    #[error("total internal reflection: n1·sinθ1/n2 = {ratio} > 1")]
    TotalInternalReflection { ratio: f64 },

    /// The back-projected pixel ray never reaches the port plane.
    #[error("pixel ray is parallel to the refractive port plane")]
    RayParallelToPort,

    /// The forward-projection solver did not reach its residual tolerance.
    #[error("forward projection did not converge after {iterations} iterations (residual {residual} mm)")]
    NoConvergence { iterations: usize, residual: f64 },

    /// Forward projection requested for a point on the air side of the port.
    #[error("point lies behind the outer glass plane (normal depth {depth_mm} mm)")]
    PointBehindPort { depth_mm: f64 },

    /// A detection or calibration file failed structural parsing.
    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    /// A parsed value violates a documented invariant.
    #[error("validation error for {subject}: {message}")]
    Validation { subject: String, message: String },

    /// NCC is undefined when both patches are constant.
    #[error("zero variance in both patches; correlation undefined")]
    ZeroVariance,

    /// The template window around the left keypoint exceeds the image.
    #[error("template window around ({u}, {v}) exceeds the {width}x{height} image")]
    TemplateOutOfBounds { u: f64, v: f64, width: u32, height: u32 },

    /// Triangulation rays are too close to parallel for a midpoint.
    #[error("viewing rays are near-parallel (cross norm {cross_norm})")]
    NearParallelRays { cross_norm: f64 },

    /// Mouth and caudal-fin points coincide; no body axis exists.
    #[error("degenerate body: mouth and caudal fin separated by {separation_mm} mm")]
    DegenerateBody { separation_mm: f64 },

    /// Evaluation was requested but nothing could be associated.
    #[error("empty evaluation: no measurement could be associated with ground truth")]
    EmptyEvaluation,

    /// A synthetic fish could not be placed inside both sensors.
    #[error("projection failure: fish could not be placed after {retries} retries")]
    ProjectionFailure { retries: usize },

    /// Pipeline configuration is unusable (missing files, bad ranges).
    #[error("config error: {0}")]
    Config(String),

    #[error("image error: {0}")]
    Image(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    pub(crate) fn validation(subject: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            subject: subject.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
