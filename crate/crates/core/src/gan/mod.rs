//! Feed-forward text GAN over min-max scaled word vectors.
//!
//! The generator maps uniform noise to `T` contiguous word slots of `d`
//! values each; the discriminator scores such a flattened sequence as real
//! or generated. The generator loss subtracts `γ·δ(g, k)`, the summed dot
//! product of every slot with every keyword vector, from its cross-entropy
//! term, so larger `γ` pulls the output toward the keywords.

mod config;
mod dmk;
mod model;
mod sweep;
mod train;

pub use config::{DeltaSpace, GanConfig, KeywordSet};
pub use dmk::{delta_attention, dmk_loss, KeywordTarget};
pub use model::{Discriminator, Generator};
pub use sweep::{
    decode_sequence, gamma_sweep, generate_samples, keyword_count, SweepEntry, SweepReport, SWEEP_SAMPLES,
};
pub use train::{
    discriminator_accuracy, step_log_to_csv, train_gan, train_gan_with_scaling, GanRun, GanTrainer, Phase, RealSampler,
    StepRecord, STEP_LOG_HEADER,
};
