//! Text featurization and the trainable encoder.
//!
//! Text is hashed into a sparse bag of lowercased word n-grams, then passed
//! through a one-hidden-layer MLP with two heads: a unit-norm embedding used
//! by the contrastive losses and a logits head used by cross-entropy.

mod features;
mod mlp;

pub use features::{tokenize, vectorize, FeatureVector, VectorizerConfig, PAIR_SEPARATOR};
pub use mlp::{Architecture, Encoder, EncoderOutput, ForwardCache, ForwardMode};
