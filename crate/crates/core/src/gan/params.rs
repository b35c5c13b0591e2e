use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{Scalar, Tensor};

/// A named, shaped block of model weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Param {
    pub(crate) fn normal(name: String, shape: Vec<usize>, std: f32, rng: &mut Rng) -> Self {
        let n = shape.iter().product();
        let dist = Normal::new(0.0f32, std).expect("positive std");
        let data = (0..n).map(|_| dist.sample(rng)).collect();
        Self { name, shape, data }
    }

    pub(crate) fn filled(name: String, shape: Vec<usize>, value: f32) -> Self {
        let n = shape.iter().product();
        Self {
            name,
            shape,
            data: vec![value; n],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub(crate) fn bind<T: Scalar>(&self, requires_grad: bool) -> Tensor<T> {
        let data = self.data.iter().map(|&v| T::lit(f64::from(v))).collect();
        let t = if requires_grad {
            Tensor::param(data, &self.shape)
        } else {
            Tensor::new(data, &self.shape)
        };
        t.expect("parameter shapes are validated at construction")
    }
}

/// Total scalar count of a parameter list.
pub fn count(params: &[Param]) -> usize {
    params.iter().map(Param::len).sum()
}

/// One line per parameter tensor plus a total.
pub fn summary(params: &[Param]) -> String {
    let mut out = String::new();
    for p in params {
        out.push_str(&format!("{:<24} {:<22} {}\n", p.name, format!("{:?}", p.shape), p.len()));
    }
    out.push_str(&format!("{:<24} {:<22} {}\n", "total", "", count(params)));
    out
}

/// Converts tensor gradients back to the f32 storage layout of `params`.
pub fn gradients_to_f32<T: Scalar>(params: &[Param], grads: &[Tensor<T>]) -> Result<Vec<Vec<f32>>> {
    if params.len() != grads.len() {
        return Err(Error::dim(
            "gradients_to_f32",
            format!("{} gradients for {} parameters", grads.len(), params.len()),
        ));
    }
    params
        .iter()
        .zip(grads)
        .map(|(p, g)| {
            if g.shape() != p.shape.as_slice() {
                return Err(Error::dim(
                    "gradients_to_f32",
                    format!("gradient {:?} for parameter {} {:?}", g.shape(), p.name, p.shape),
                ));
            }
            Ok(g.data().iter().map(|v| v.to_f32().unwrap_or(f32::NAN)).collect())
        })
        .collect()
}

/// Overwrites parameter values in place from a flat slice.
pub(crate) fn load_flat(params: &mut [Param], flat: &[f32]) -> Result<()> {
    if flat.len() != count(params) {
        return Err(Error::dim(
            "load_flat",
            format!("{} values for {} parameters", flat.len(), count(params)),
        ));
    }
    let mut at = 0;
    for p in params {
        let n = p.len();
        p.data.copy_from_slice(&flat[at..at + n]);
        at += n;
    }
    Ok(())
}
