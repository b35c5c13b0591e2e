//! WGAN-GP training: Adam, the critic and generator losses, and the
//! alternating optimization loop.

mod adam;
mod loss;
mod trainer;

pub use adam::{AdamConfig, AdamState};
pub use loss::{d_loss, g_loss, gradient_penalty, Critic, CriticLoss};
pub use trainer::{read_log, train, RunOutputs, StepLog, TrainConfig, Trainer, LOG_HEADER};
