use crate::error::{Error, Result};
use crate::gan::{Discriminator, ModelConfig};
use crate::tensor::{no_grad, Tensor};
use crate::voxel::VoxelGrid;

/// Discriminator layers (1-based) whose activations form the features.
pub const FEATURE_LAYERS: [usize; 3] = [2, 3, 4];

/// Max-pooling window applied to one feature layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pooling {
    pub layer: usize,
    pub kernel: usize,
    pub stride: usize,
}

/// Kernels 8, 4, 2 with strides 4, 2, 1 for layers 2, 3, 4 at 64³, scaled
/// by `output_size / 64` and clamped to at least 1.
pub fn pooling_schedule(config: &ModelConfig) -> [Pooling; 3] {
    let scale = |v: usize| (v * config.output_size / 64).max(1);
    let base = [(8, 4), (4, 2), (2, 1)];
    let mut out = [Pooling {
        layer: 0,
        kernel: 0,
        stride: 0,
    }; 3];
    for (i, (k, s)) in base.into_iter().enumerate() {
        out[i] = Pooling {
            layer: FEATURE_LAYERS[i],
            kernel: scale(k),
            stride: scale(s),
        };
    }
    out
}

/// Spatial edge of the activation after discriminator layer `layer`.
fn layer_size(config: &ModelConfig, layer: usize) -> usize {
    config.output_size >> layer
}

/// Length of one feature vector.
pub fn feature_length(config: &ModelConfig) -> usize {
    let channels = config.disc_channels();
    pooling_schedule(config)
        .iter()
        .map(|p| {
            let n = layer_size(config, p.layer);
            let pooled = (n.saturating_sub(p.kernel)) / p.stride + 1;
            channels[p.layer - 1] * pooled.pow(3)
        })
        .sum()
}

const CHUNK: usize = 32;

/// Pooled activations of layers 2 to 4 for each grid, concatenated in layer
/// order. Each grid is copied into every pack channel.
pub fn extract_features(d: &Discriminator, grids: &[&VoxelGrid]) -> Result<Vec<Vec<f32>>> {
    let config = *d.config();
    let s = config.output_size;
    if let Some(g) = grids.iter().find(|g| g.dims() != [s; 3]) {
        return Err(Error::dim(
            "extract_features",
            format!("grid dims {:?} do not match discriminator input {s}^3", g.dims()),
        ));
    }
    let schedule = pooling_schedule(&config);
    let bound = d.bind::<f32>(false);
    let vol = s * s * s;
    let mut out = Vec::with_capacity(grids.len());
    for chunk in grids.chunks(CHUNK) {
        let mut data = Vec::with_capacity(chunk.len() * config.pack_size * vol);
        for g in chunk {
            for _ in 0..config.pack_size {
                data.extend_from_slice(g.data());
            }
        }
        let x = Tensor::new(data, &[chunk.len(), config.pack_size, s, s, s])?;
        let trace = no_grad(|| bound.trace(&x))?;
        let mut rows = vec![Vec::with_capacity(feature_length(&config)); chunk.len()];
        for p in &schedule {
            let pooled = trace.hidden[p.layer - 1].maxpool3d(p.kernel, p.stride)?;
            let per = pooled.numel() / chunk.len();
            for (row, values) in rows.iter_mut().zip(pooled.data().chunks_exact(per)) {
                row.extend_from_slice(values);
            }
        }
        out.extend(rows);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scale_length() {
        let c = ModelConfig::full_scale();
        assert_eq!(feature_length(&c), (128 + 256 + 512) * 27);
        let p = pooling_schedule(&c);
        assert_eq!((p[0].kernel, p[0].stride), (8, 4));
        assert_eq!((p[2].kernel, p[2].stride), (2, 1));
    }

    #[test]
    fn desk_length() {
        // Layer sizes 4, 2, 1; pooled 3, 2, 1.
        assert_eq!(feature_length(&ModelConfig::desk(16)), 32 * 27 + 64 * 8 + 128);
    }
}
