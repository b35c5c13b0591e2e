use crate::error::Result;
use crate::gan::BoundDiscriminator;
use crate::tensor::{grad, l2_norm_over_nonbatch_dims, Scalar, Tensor};

/// Anything that scores a batch `[m, ...]` with one value per item.
pub trait Critic<T: Scalar> {
    fn score(&self, x: &Tensor<T>) -> Result<Tensor<T>>;
}

impl<T: Scalar> Critic<T> for BoundDiscriminator<T> {
    fn score(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.discriminate(x)
    }
}

/// `mean((‖∇ D(x̂)‖₂ − 1)²)` over interpolates `x̂ = ε·real + (1 − ε)·fake`
/// with one `ε` per batch item. Differentiable with respect to the critic's
/// parameters.
pub fn gradient_penalty<T: Scalar, C: Critic<T>>(
    critic: &C,
    real: &Tensor<T>,
    fake: &Tensor<T>,
    eps: &[T],
) -> Result<Tensor<T>> {
    let m = real.shape()[0];
    if fake.shape() != real.shape() || eps.len() != m {
        return Err(crate::error::Error::dim(
            "gradient_penalty",
            format!(
                "real {:?}, fake {:?}, {} interpolation weights",
                real.shape(),
                fake.shape(),
                eps.len()
            ),
        ));
    }
    let per_item = real.numel() / m;
    let mixed: Vec<T> = real
        .data()
        .iter()
        .zip(fake.data())
        .enumerate()
        .map(|(i, (&r, &f))| {
            let e = eps[i / per_item];
            e * r + (T::one() - e) * f
        })
        .collect();
    let x_hat = Tensor::param(mixed, real.shape())?;
    let total = critic.score(&x_hat)?.sum_all();
    let g = grad(&total, &[&x_hat], true)?.remove(0);
    let norms = l2_norm_over_nonbatch_dims(&g)?;
    Ok(norms.add_scalar(-T::one()).square().mean_all())
}

/// Critic loss terms for one batch.
pub struct CriticLoss<T: Scalar> {
    /// `mean D(fake) − mean D(real) + λ·penalty`.
    pub total: Tensor<T>,
    /// `mean D(real) − mean D(fake)`.
    pub wasserstein: T,
    pub penalty: T,
}

pub fn d_loss<T: Scalar, C: Critic<T>>(
    critic: &C,
    real: &Tensor<T>,
    fake: &Tensor<T>,
    lambda: T,
    eps: &[T],
) -> Result<CriticLoss<T>> {
    let real_mean = critic.score(real)?.mean_all();
    let fake_mean = critic.score(fake)?.mean_all();
    let w = fake_mean.sub(&real_mean)?;
    let wasserstein = -w.item();
    if lambda == T::zero() {
        return Ok(CriticLoss {
            total: w,
            wasserstein,
            penalty: T::zero(),
        });
    }
    let penalty = gradient_penalty(critic, real, fake, eps)?;
    Ok(CriticLoss {
        total: w.add(&penalty.scale(lambda))?,
        wasserstein,
        penalty: penalty.item(),
    })
}

/// `−mean D(fake)`.
pub fn g_loss<T: Scalar, C: Critic<T>>(critic: &C, fake: &Tensor<T>) -> Result<Tensor<T>> {
    Ok(critic.score(fake)?.mean_all().neg())
}
