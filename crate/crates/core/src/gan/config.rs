use crate::error::{Error, Result};

/// Architecture hyperparameters shared by the generator and discriminator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub latent_dim: usize,
    pub mapping_layers: usize,
    /// Edge length of the generated cube: 16, 32 or 64.
    pub output_size: usize,
    /// Channels of the generator's learned constant; each later block
    /// halves it, and the last block emits one channel.
    pub gen_base_channels: usize,
    /// Channels of the first discriminator layer; each later layer doubles it.
    pub disc_base_channels: usize,
    pub pack_size: usize,
    pub leaky_slope: f32,
}

impl ModelConfig {
    /// The full-resolution 64³ architecture.
    pub fn full_scale() -> Self {
        Self {
            latent_dim: 512,
            mapping_layers: 8,
            output_size: 64,
            gen_base_channels: 512,
            disc_base_channels: 64,
            pack_size: 2,
            leaky_slope: 0.2,
        }
    }

    /// Reduced-width architecture for CPU runs at 16³ or 32³.
    pub fn desk(output_size: usize) -> Self {
        Self {
            output_size,
            gen_base_channels: 128,
            disc_base_channels: 16,
            ..Self::full_scale()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ![16, 32, 64].contains(&self.output_size) {
            return Err(Error::invalid(format!(
                "output_size must be 16, 32 or 64, got {}",
                self.output_size
            )));
        }
        if self.latent_dim == 0 || self.pack_size == 0 || self.disc_base_channels == 0 {
            return Err(Error::invalid("latent_dim, pack_size and disc_base_channels must be positive"));
        }
        if self.gen_base_channels >> (self.deconv_blocks() - 1) == 0 {
            return Err(Error::invalid(format!(
                "gen_base_channels {} is too small for {} deconvolution blocks",
                self.gen_base_channels,
                self.deconv_blocks()
            )));
        }
        if !(self.leaky_slope.is_finite() && self.leaky_slope >= 0.0) {
            return Err(Error::invalid("leaky_slope must be finite and non-negative"));
        }
        Ok(())
    }

    /// Number of doubling blocks after the 4³ constant block.
    pub fn deconv_blocks(&self) -> usize {
        (self.output_size / 4).trailing_zeros() as usize
    }

    /// Output channels of each generator block, constant block first.
    pub fn gen_channels(&self) -> Vec<usize> {
        let n = self.deconv_blocks();
        let mut c = vec![self.gen_base_channels];
        c.extend((1..n).map(|j| self.gen_base_channels >> j));
        c.push(1);
        c
    }

    /// Spatial edge length after each generator block.
    pub fn gen_sizes(&self) -> Vec<usize> {
        (0..=self.deconv_blocks()).map(|b| 4 << b).collect()
    }

    /// Output channels of the five discriminator layers.
    pub fn disc_channels(&self) -> [usize; 5] {
        let b = self.disc_base_channels;
        [b, 2 * b, 4 * b, 8 * b, 1]
    }

    /// Kernel of the final discriminator layer, equal to its input size.
    pub fn disc_final_kernel(&self) -> usize {
        self.output_size / 16
    }

    /// Voxels per sample.
    pub fn voxels(&self) -> usize {
        self.output_size.pow(3)
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::desk(16)
    }
}
