//! Simulation laboratory for the two-user symmetric Gaussian broadcast channel
//! with feedback (GBCF).
//!
//! The crate is split along the lines of an experiment:
//!
//! - [`model`]: channel configuration, PAM mapping, bit maps and the
//!   counter-based random streams every trial draws from.
//! - [`analytical`]: the Ozarow linear feedback code (OL), its enhanced
//!   two-output variant (EOL), the noisy-feedback renormalization and a
//!   single-user time-division baseline, all driven by exact second-moment
//!   tracking.
//! - [`neural`]: weight-file format and deterministic forward pass of the
//!   learned feature-extractor/MLP codec.
//! - [`harness`]: parallel, seed-reproducible block-error-rate estimation,
//!   sweeps and CSV/JSON emission.
//!
//! The numerical core is generic over the scalar type ([`Scalar`]); the
//! aliases below name the precisions the harness actually runs with.

pub mod analytical;
pub mod error;
pub mod harness;
pub mod model;
pub mod neural;
mod scalar;

pub use error::{Error, Result, WeightsError};
pub use scalar::Scalar;

/// Analytical codecs run in double precision.
pub type AnalyticalCodec64 = analytical::AnalyticalCodec<f64>;
pub type OlState64 = analytical::OlState<f64>;
pub type OlParams64 = analytical::OlParams<f64>;
pub type MomentSet64 = analytical::MomentSet<f64>;
pub type PamConstellation64 = model::PamConstellation<f64>;
pub type TrialTranscript64 = model::TrialTranscript<f64>;

/// Learned codecs run in single precision, matching the weight file.
pub type CodecWeights32 = neural::CodecWeights<f32>;
pub type NeuralCodec32 = neural::NeuralCodec<f32>;
