//! Activations, losses, layers and optimisation on top of [`crate::autodiff`].

pub mod activation;
pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod linear;
pub mod loss;
pub mod lstm;
pub mod param;

pub use activation::Activation;
pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use linear::Linear;
pub use lstm::{lstm_cell, LstmWeights};
pub use param::{Init, ParamSet, Parameter};
