//! Word vectors fit to corpus co-occurrence statistics, plus the lookup,
//! decoding and scaling used by the downstream models.

pub mod cooccurrence;
pub mod scaling;
pub mod table;
pub mod train;

pub use cooccurrence::CooccurrenceMatrix;
pub use scaling::{fit_minmax, ScalingParams};
pub use table::{nearest_word, Decoder, EmbeddingTable, Metric};
pub use train::{fit, glove_weight, train_glove, GloveConfig, GloveParams, GloveTraining};
