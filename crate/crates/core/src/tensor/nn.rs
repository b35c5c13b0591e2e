//! Composite layers built from primitive ops; their gradients follow from
//! the primitives.

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// `x · wᵀ + b` for `x: [n, in]`, `w: [out, in]`, `b: [out]`.
pub fn linear<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let y = x.matmul_t(w, false, true)?;
    if b.shape() != [y.shape()[1]] {
        return Err(Error::dim(
            "linear",
            format!("bias shape {:?} does not match output width {}", b.shape(), y.shape()[1]),
        ));
    }
    y.add(&b.expand_outer(y.shape()[0])?)
}

fn batch_channels(op: &'static str, x: &Tensor<impl Scalar>) -> Result<(usize, usize, usize)> {
    if x.ndim() < 3 {
        return Err(Error::dim(op, format!("expected [batch, channel, spatial...], got {:?}", x.shape())));
    }
    let (b, c) = (x.shape()[0], x.shape()[1]);
    Ok((b, c, x.numel() / (b * c)))
}

/// Adds a per-channel bias `[C]` to `[B, C, spatial...]`.
pub(crate) fn add_channel_bias<T: Scalar>(x: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    let (b, c, n) = batch_channels("add_channel_bias", x)?;
    if bias.shape() != [c] {
        return Err(Error::dim(
            "add_channel_bias",
            format!("bias shape {:?} does not match channel axis {c}", bias.shape()),
        ));
    }
    let full = bias.expand_inner(n)?.expand_outer(b)?.reshape(x.shape())?;
    x.add(&full)
}

/// Per-channel mean and standard deviation over spatial axes, each `[B, C]`.
/// The deviation is `sqrt(var + eps)` with the population variance.
pub fn channel_stats<T: Scalar>(x: &Tensor<T>, eps: T) -> Result<(Tensor<T>, Tensor<T>)> {
    let (b, c, n) = batch_channels("channel_stats", x)?;
    let inv_n = T::one() / T::lit(n as f64);
    let rows = x.reshape(&[b * c, n])?;
    let mean = rows.sum_inner(n)?.scale(inv_n);
    let centered = rows.sub(&mean.expand_inner(n)?)?;
    let var = centered.square().sum_inner(n)?.scale(inv_n);
    let std = var.add_scalar(eps).sqrt();
    Ok((mean.reshape(&[b, c])?, std.reshape(&[b, c])?))
}

/// `x · y_s + y_b` with `[B, C]` styles broadcast over spatial axes.
pub fn affine_modulate<T: Scalar>(x: &Tensor<T>, ys: &Tensor<T>, yb: &Tensor<T>) -> Result<Tensor<T>> {
    let (b, c, n) = batch_channels("affine_modulate", x)?;
    for (name, s) in [("y_s", ys), ("y_b", yb)] {
        if s.shape() != [b, c] {
            return Err(Error::dim(
                "affine_modulate",
                format!("{name} shape {:?} != [{b}, {c}]", s.shape()),
            ));
        }
    }
    let rows = x.reshape(&[b * c, n])?;
    let scaled = rows.mul(&ys.reshape(&[b * c])?.expand_inner(n)?)?;
    scaled.add(&yb.reshape(&[b * c])?.expand_inner(n)?)?.reshape(x.shape())
}

/// Adaptive instance normalization: each channel of each sample is
/// standardized over its spatial extent, then scaled by `y_s` and shifted
/// by `y_b`.
pub fn adain<T: Scalar>(x: &Tensor<T>, ys: &Tensor<T>, yb: &Tensor<T>, eps: T) -> Result<Tensor<T>> {
    let (b, c, n) = batch_channels("adain", x)?;
    for (name, s) in [("y_s", ys), ("y_b", yb)] {
        if s.shape() != [b, c] {
            return Err(Error::dim("adain", format!("{name} shape {:?} != [{b}, {c}]", s.shape())));
        }
    }
    let (mean, std) = channel_stats(x, eps)?;
    let rows = x.reshape(&[b * c, n])?;
    let centered = rows.sub(&mean.reshape(&[b * c])?.expand_inner(n)?)?;
    let normalized = centered.mul(&std.reshape(&[b * c])?.recip().expand_inner(n)?)?;
    affine_modulate(&normalized.reshape(x.shape())?, ys, yb)
}

/// Euclidean norm of each batch item over all remaining axes, `[B]`.
pub fn l2_norm_over_nonbatch_dims<T: Scalar>(x: &Tensor<T>) -> Result<Tensor<T>> {
    if x.ndim() < 1 {
        return Err(Error::dim("l2_norm", "input has no batch axis"));
    }
    let b = x.shape()[0];
    let n = x.numel() / b;
    Ok(x.reshape(&[b, n])?.square().sum_inner(n)?.sqrt())
}
