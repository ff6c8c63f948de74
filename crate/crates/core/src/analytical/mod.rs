//! Ozarow-type linear feedback codes for the two-user broadcast channel.
//!
//! [`ol`] holds the closed-form per-round encoder, moment and decoder
//! expressions of the OL scheme. [`MomentTracker`] represents every
//! transmitted, received and estimated quantity as an exact linear form over
//! the independent sources (messages, forward and feedback noises), which
//! yields exact second moments for the EOL estimator, the time-division
//! baseline and the noisy-feedback renormalization. [`AnalyticalCodec`]
//! freezes the resulting per-round coefficients into a plan that trials
//! execute with plain scalar arithmetic.

mod codec;
mod ol;
mod tracker;

pub use codec::{
    run_analytical_trial, AnalyticalCodec, AnalyticalScheme, RoundPlan, RoundStats, Transmit,
    TrialRecord, Update,
};
pub use ol::{
    noisy_feedback_encode, ol_decode_update, ol_encode, ol_init_estimate, ol_moments, sgn,
    MomentSet, OlParams, OlState,
};
pub use tracker::MomentTracker;
