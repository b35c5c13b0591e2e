//! Style-based voxel generator and packed convolutional critic.

mod checkpoint;
mod config;
mod discriminator;
mod generator;
pub mod params;

pub use checkpoint::Checkpoint;
pub use config::ModelConfig;
pub use discriminator::{BoundDiscriminator, CriticTrace, Discriminator};
pub use generator::{BoundGenerator, Generator, SynthesisTrace};
pub use params::Param;

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{no_grad, Scalar, Tensor};
use crate::voxel::VoxelGrid;

/// Stacks cubic grids of edge `size` into `[n, 1, size, size, size]`.
pub fn grids_to_tensor<T: Scalar>(grids: &[&VoxelGrid], size: usize) -> Result<Tensor<T>> {
    if grids.is_empty() {
        return Err(Error::invalid("no grids to stack"));
    }
    let mut data = Vec::with_capacity(grids.len() * size.pow(3));
    for g in grids {
        if g.dims() != [size; 3] {
            return Err(Error::dim(
                "grids_to_tensor",
                format!("grid dims {:?}, expected {:?}", g.dims(), [size; 3]),
            ));
        }
        data.extend(g.data().iter().map(|&v| T::lit(f64::from(v))));
    }
    Tensor::new(data, &[grids.len(), 1, size, size, size])
}

/// Splits `[n, 1, S, S, S]` into grids. Values are clamped to the open
/// interval (0, 1) so that saturated sigmoid outputs stay fractional.
pub fn tensor_to_grids<T: Scalar>(t: &Tensor<T>) -> Result<Vec<VoxelGrid>> {
    let s = t.shape();
    if s.len() != 5 || s[1] != 1 || s[2] != s[3] || s[3] != s[4] {
        return Err(Error::dim("tensor_to_grids", format!("expected [n, 1, S, S, S], got {s:?}")));
    }
    let lo = f32::MIN_POSITIVE;
    let hi = 1.0 - f32::EPSILON / 2.0;
    let vol = s[2].pow(3);
    t.data()
        .chunks_exact(vol)
        .map(|c| {
            let data = c.iter().map(|v| v.to_f32().unwrap_or(f32::NAN).clamp(lo, hi)).collect();
            VoxelGrid::new([s[2]; 3], data, 1.0)
        })
        .collect()
}

/// Draws `count` volumes from `generator` with latents `z ~ N(0, variance·I)`.
///
/// Latents are drawn in order from `rng`, so the result depends only on the
/// stream state and not on the internal batching.
pub fn sample_grids(generator: &Generator, count: usize, variance: f32, rng: &mut Rng) -> Result<Vec<VoxelGrid>> {
    let dist = Normal::new(0.0f32, variance.sqrt())
        .map_err(|e| Error::invalid(format!("latent variance {variance}: {e}")))?;
    let latent = generator.config().latent_dim;
    let g = generator.bind::<f32>(false);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n = (count - out.len()).min(16);
        let z = Tensor::new((0..n * latent).map(|_| dist.sample(rng)).collect(), &[n, latent])?;
        out.extend(tensor_to_grids(&no_grad(|| g.forward(&z))?)?);
    }
    Ok(out)
}
