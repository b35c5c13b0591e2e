use super::config::ModelConfig;
use super::generator::INIT_STD;
use super::params::{self, Param};
use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::{Scalar, Tensor};

/// Five-layer 3-D convolutional critic over packed samples.
///
/// Input channels equal the pack size: the samples of one pack are stacked
/// along the channel axis. Layers 1 to 4 are kernel 4, stride 2, padding 1
/// convolutions followed by LeakyReLU; layer 5 covers the remaining volume
/// and emits one unbounded score.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    config: ModelConfig,
    params: Vec<Param>,
}

impl Discriminator {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::stream(seed, "init/discriminator");
        let ch = config.disc_channels();
        let mut ps = Vec::with_capacity(10);
        let mut cin = config.pack_size;
        for (l, &cout) in ch.iter().enumerate() {
            let k = if l == 4 { config.disc_final_kernel() } else { 4 };
            ps.push(Param::normal(format!("conv.{}.weight", l + 1), vec![cout, cin, k, k, k], INIT_STD, &mut rng));
            ps.push(Param::filled(format!("conv.{}.bias", l + 1), vec![cout], 0.0));
            cin = cout;
        }
        Ok(Self { config, params: ps })
    }

    pub fn zeroed(config: ModelConfig) -> Result<Self> {
        let mut d = Self::new(config, 0)?;
        for p in &mut d.params {
            p.data.fill(0.0);
        }
        Ok(d)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        params::count(&self.params)
    }

    pub fn bind<T: Scalar>(&self, requires_grad: bool) -> BoundDiscriminator<T> {
        BoundDiscriminator {
            config: self.config,
            params: self.params.iter().map(|p| p.bind(requires_grad)).collect(),
        }
    }
}

/// Discriminator weights bound as tensors of a chosen precision.
pub struct BoundDiscriminator<T: Scalar> {
    config: ModelConfig,
    params: Vec<Tensor<T>>,
}

/// Post-activation outputs of layers 1 to 4 and the final scores.
pub struct CriticTrace<T: Scalar> {
    pub hidden: Vec<Tensor<T>>,
    pub scores: Tensor<T>,
}

impl<T: Scalar> BoundDiscriminator<T> {
    pub fn params(&self) -> &[Tensor<T>] {
        &self.params
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// `pack: [m, pack_size, S, S, S]` to scores `[m]`.
    pub fn discriminate(&self, pack: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.trace(pack)?.scores)
    }

    pub fn trace(&self, pack: &Tensor<T>) -> Result<CriticTrace<T>> {
        let c = &self.config;
        let s = c.output_size;
        let expected = [c.pack_size, s, s, s];
        if pack.ndim() != 5 || pack.shape()[1..] != expected {
            return Err(Error::dim(
                "discriminate",
                format!("pack shape {:?}, expected [_, {}, {s}, {s}, {s}]", pack.shape(), c.pack_size),
            ));
        }
        let m = pack.shape()[0];
        let slope = T::lit(f64::from(c.leaky_slope));
        let mut x = pack.clone();
        let mut hidden = Vec::with_capacity(4);
        for l in 0..5 {
            let (stride, pad) = if l == 4 { (1, 0) } else { (2, 1) };
            let y = x.conv3d(&self.params[2 * l], stride, pad)?;
            x = crate::tensor::add_channel_bias(&y, &self.params[2 * l + 1])?;
            if l < 4 {
                x = x.leaky_relu(slope);
                hidden.push(x.clone());
            }
        }
        Ok(CriticTrace {
            hidden,
            scores: x.reshape(&[m])?,
        })
    }
}
