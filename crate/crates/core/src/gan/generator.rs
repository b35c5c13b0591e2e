use std::rc::Rc;

use super::config::ModelConfig;
use super::params::{self, Param};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::tensor::{adain, linear, Scalar, Tensor};

pub(crate) const INIT_STD: f32 = 0.02;
pub(crate) const ADAIN_EPS: f64 = 1e-8;

/// Mapping network plus style-modulated synthesis network.
///
/// Parameters are stored as plain `f32` arrays in declaration order:
/// mapping weights and biases, the learned constant, the per-block style
/// affines, then the deconvolution kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    config: ModelConfig,
    params: Vec<Param>,
}

impl Generator {
    /// Gaussian-initialized weights (std 0.02), zero biases.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::stream(seed, "init/generator");
        Ok(Self {
            config,
            params: Self::layout(&config, &mut rng),
        })
    }

    /// All parameters zero.
    pub fn zeroed(config: ModelConfig) -> Result<Self> {
        let mut g = Self::new(config, 0)?;
        for p in &mut g.params {
            p.data.fill(0.0);
        }
        Ok(g)
    }

    fn layout(c: &ModelConfig, rng: &mut Rng) -> Vec<Param> {
        let l = c.latent_dim;
        let slope = f64::from(c.leaky_slope);
        let mapping_std = ((2.0 / (1.0 + slope * slope)) / l as f64).sqrt() as f32;
        let style_std = (1.0 / l as f64).sqrt() as f32;
        let mut ps = Vec::new();
        for i in 0..c.mapping_layers {
            ps.push(Param::normal(format!("mapping.{i}.weight"), vec![l, l], mapping_std, rng));
            ps.push(Param::filled(format!("mapping.{i}.bias"), vec![l], 0.0));
        }
        let channels = c.gen_channels();
        ps.push(Param::normal("const".into(), vec![1, channels[0], 4, 4, 4], INIT_STD, rng));
        for (b, &ch) in channels.iter().enumerate() {
            ps.push(Param::normal(format!("style.{b}.weight"), vec![2 * ch, l], style_std, rng));
            let mut bias = Param::filled(format!("style.{b}.bias"), vec![2 * ch], 0.0);
            bias.data[..ch].fill(1.0);
            ps.push(bias);
        }
        for b in 1..channels.len() {
            ps.push(Param::normal(
                format!("deconv.{b}.weight"),
                vec![channels[b - 1], channels[b], 4, 4, 4],
                INIT_STD,
                rng,
            ));
        }
        ps
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

    /// Index of the style affine weight of block `b` (bias follows it).
    pub fn style_param_index(&self, block: usize) -> usize {
        2 * self.config.mapping_layers + 1 + 2 * block
    }

    /// Tensor view of the weights for one forward/backward evaluation.
    pub fn bind<T: Scalar>(&self, requires_grad: bool) -> BoundGenerator<T> {
        BoundGenerator {
            config: self.config,
            params: self.params.iter().map(|p| p.bind(requires_grad)).collect(),
        }
    }
}

/// Generator weights bound as tensors of a chosen precision.
pub struct BoundGenerator<T: Scalar> {
    config: ModelConfig,
    params: Vec<Tensor<T>>,
}

/// Synthesis output together with the activations entering each AdaIN.
pub struct SynthesisTrace<T: Scalar> {
    pub output: Tensor<T>,
    pub pre_adain: Vec<Tensor<T>>,
}

/// Splits `[B, 2C]` styles into scale `[B, C]` and bias `[B, C]`.
fn split_styles<T: Scalar>(s: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
    let (b, two_c) = (s.shape()[0], s.shape()[1]);
    let c = two_c / 2;
    let half = |offset: usize| -> Rc<[usize]> {
        (0..b).flat_map(|i| (0..c).map(move |j| i * two_c + offset + j)).collect()
    };
    Ok((s.gather(half(0), &[b, c])?, s.gather(half(c), &[b, c])?))
}

impl<T: Scalar> BoundGenerator<T> {
    pub fn params(&self) -> &[Tensor<T>] {
        &self.params
    }

    /// `z: [B, latent]` to intermediate latent `w: [B, latent]` through the
    /// fully connected layers, each followed by LeakyReLU.
    pub fn map_latent(&self, z: &Tensor<T>) -> Result<Tensor<T>> {
        let l = self.config.latent_dim;
        if z.ndim() != 2 || z.shape()[1] != l {
            return Err(Error::dim(
                "map_latent",
                format!("latent batch shape {:?}, expected [_, {l}]", z.shape()),
            ));
        }
        let slope = T::lit(f64::from(self.config.leaky_slope));
        let mut w = z.clone();
        for i in 0..self.config.mapping_layers {
            w = linear(&w, &self.params[2 * i], &self.params[2 * i + 1])?.leaky_relu(slope);
        }
        Ok(w)
    }

    /// `w: [B, latent]` to `[B, 1, S, S, S]` occupancies in (0, 1).
    pub fn synthesize(&self, w: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.synthesize_traced(w)?.output)
    }

    pub fn synthesize_traced(&self, w: &Tensor<T>) -> Result<SynthesisTrace<T>> {
        let c = &self.config;
        if w.ndim() != 2 || w.shape()[1] != c.latent_dim {
            return Err(Error::dim(
                "synthesize",
                format!("w shape {:?}, expected [_, {}]", w.shape(), c.latent_dim),
            ));
        }
        let batch = w.shape()[0];
        let channels = c.gen_channels();
        let base = 2 * c.mapping_layers;
        let constant = &self.params[base];
        let style = |b: usize| -> Result<(Tensor<T>, Tensor<T>)> {
            let i = base + 1 + 2 * b;
            split_styles(&linear(w, &self.params[i], &self.params[i + 1])?)
        };
        let kernel_base = base + 1 + 2 * channels.len();
        let eps = T::lit(ADAIN_EPS);

        let mut x = constant
            .reshape(&[constant.numel()])?
            .expand_outer(batch)?
            .reshape(&[batch, channels[0], 4, 4, 4])?;
        let mut pre_adain = Vec::with_capacity(channels.len());
        for b in 0..channels.len() {
            if b > 0 {
                x = x.conv_transpose3d(&self.params[kernel_base + b - 1], 2, 1)?;
            }
            pre_adain.push(x.clone());
            let (ys, yb) = style(b)?;
            let y = adain(&x, &ys, &yb, eps)?;
            x = if b + 1 == channels.len() { y.sigmoid() } else { y.relu() };
        }
        Ok(SynthesisTrace { output: x, pre_adain })
    }

    /// `map_latent` followed by `synthesize`.
    pub fn forward(&self, z: &Tensor<T>) -> Result<Tensor<T>> {
        self.synthesize(&self.map_latent(z)?)
    }
}
