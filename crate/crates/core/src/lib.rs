//! Style-based generative adversarial network for voxel volumes, with the
//! statistical tooling used to validate its output: moment-invariant shape
//! statistics, discriminator-feature classification and nearest-neighbor
//! memorization checks.

pub mod error;
pub mod features;
pub mod gan;
pub mod moments;
pub mod rng;
pub mod synth;
pub mod tensor;
pub mod train;
pub mod voxel;

pub use error::{Error, Result};
pub use tensor::{grad, no_grad, Scalar, Tensor};
pub use voxel::{LabeledVolume, VoxelGrid};
