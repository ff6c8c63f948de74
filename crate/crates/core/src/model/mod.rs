//! Channel model, modulation and randomness shared by every scheme.

mod bits;
mod channel;
mod config;
mod pam;
mod rng;

pub use bits::{bits_to_index, index_to_bits};
pub use channel::{ChannelNoise, TrialTranscript};
pub use config::{snr_db_to_variance, ChannelConfig, Feedback, User, MAX_BITS, USERS};
pub use pam::PamConstellation;
pub use rng::{StreamKey, StreamRole, TrialRng};
