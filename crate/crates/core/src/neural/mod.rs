//! Inference runtime for the learned feedback codec.
//!
//! The transmitter and both receivers share one architecture: a feature
//! extractor (two affine layers, a residual-style combination and layer
//! normalization) followed by an MLP head. The encoder head emits one raw
//! scalar per refinement round, which is standardized with frozen per-round
//! statistics and scaled by the learned power `β_i`; each decoder head emits
//! `2^K` logits over PAM indices.

mod codec;
mod format;
mod interpret;
mod layers;
mod weights;

pub use codec::{DecodeOutput, EncoderHistory, NeuralCodec};
pub use format::{from_bytes, load_weights, save_weights, to_bytes, FORMAT_VERSION, MAGIC};
pub use interpret::{interpret_sweep, InterpretRow, InterpretTable, LinearFit};
pub use layers::{softmax, Activation, Dense, EncoderHead, FeWiring, FeatureExtractor};
pub use weights::{CodecWeights, PsStat};
