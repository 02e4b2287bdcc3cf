//! Listing popularity analysis and keyword-biased listing text generation.
//!
//! The pipeline: parse and stratify listings ([`corpus`]), train word
//! vectors on their descriptions ([`glove`]), classify popularity with an
//! LSTM ([`classifier`]) and train a feed-forward text GAN whose generator
//! loss rewards alignment with user keywords ([`gan`]). All network math
//! runs on the small reverse-mode engine in [`autodiff`] and [`nn`].

pub mod autodiff;
pub mod classifier;
pub mod corpus;
pub mod error;
pub mod gan;
pub mod glove;
pub mod nn;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;
