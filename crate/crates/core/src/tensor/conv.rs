//! im2col-based kernels for 3-D convolution, its transpose, and its
//! kernel gradient.
//!
//! All three are faces of one trilinear form
//! `Σ y[b,o,p]·w[o,i,k]·x[b,i,p·s - pad + k]`: differentiating any of them
//! yields another, which is what makes convolutions twice differentiable.

use super::{gemm, Scalar, Tensor};
use crate::error::{Error, Result};

/// Geometry of a convolution from an `x` volume to a `y` volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    /// Spatial size of the convolution input (the larger side).
    pub x_spatial: [usize; 3],
    /// Spatial size of the convolution output.
    pub y_spatial: [usize; 3],
}

/// `floor((n + 2p - k) / s) + 1`, or `None` when the kernel does not fit.
pub fn conv_output_size(n: usize, kernel: usize, stride: usize, pad: usize) -> Option<usize> {
    (n + 2 * pad).checked_sub(kernel).map(|r| r / stride + 1)
}

/// `(n - 1)·s - 2p + k`, or `None` when it is not positive.
pub fn deconv_output_size(n: usize, kernel: usize, stride: usize, pad: usize) -> Option<usize> {
    ((n - 1) * stride + kernel).checked_sub(2 * pad).filter(|&v| v > 0)
}

fn cubic_kernel(op: &'static str, w: &[usize]) -> Result<usize> {
    if w.len() != 5 || w[2] != w[3] || w[3] != w[4] {
        return Err(Error::dim(op, format!("kernel shape {w:?} is not [_, _, k, k, k]")));
    }
    Ok(w[2])
}

impl ConvGeom {
    pub(crate) fn for_conv(x: &[usize], w: &[usize], stride: usize, pad: usize) -> Result<Self> {
        const OP: &str = "conv3d";
        if x.len() != 5 {
            return Err(Error::dim(OP, format!("input shape {x:?} is not 5-D")));
        }
        let k = cubic_kernel(OP, w)?;
        if stride == 0 {
            return Err(Error::dim(OP, "stride must be ≥ 1"));
        }
        if x[1] != w[1] {
            return Err(Error::dim(
                OP,
                format!("input channel axis 1 has {} but kernel axis 1 has {}", x[1], w[1]),
            ));
        }
        let mut y_spatial = [0; 3];
        for a in 0..3 {
            y_spatial[a] = conv_output_size(x[2 + a], k, stride, pad).ok_or_else(|| {
                Error::dim(OP, format!("axis {} of size {} is smaller than kernel {k}", a + 2, x[2 + a]))
            })?;
        }
        Ok(Self {
            kernel: k,
            stride,
            pad,
            x_spatial: [x[2], x[3], x[4]],
            y_spatial,
        })
    }

    pub(crate) fn for_transpose(y: &[usize], w: &[usize], stride: usize, pad: usize) -> Result<Self> {
        const OP: &str = "conv_transpose3d";
        if y.len() != 5 {
            return Err(Error::dim(OP, format!("input shape {y:?} is not 5-D")));
        }
        let k = cubic_kernel(OP, w)?;
        if stride == 0 {
            return Err(Error::dim(OP, "stride must be ≥ 1"));
        }
        if y[1] != w[0] {
            return Err(Error::dim(
                OP,
                format!("input channel axis 1 has {} but kernel axis 0 has {}", y[1], w[0]),
            ));
        }
        let mut x_spatial = [0; 3];
        for a in 0..3 {
            x_spatial[a] = deconv_output_size(y[2 + a], k, stride, pad)
                .ok_or_else(|| Error::dim(OP, format!("axis {} yields an empty output", a + 2)))?;
        }
        Ok(Self {
            kernel: k,
            stride,
            pad,
            x_spatial,
            y_spatial: [y[2], y[3], y[4]],
        })
    }

    fn x_volume(&self) -> usize {
        self.x_spatial.iter().product()
    }

    fn y_volume(&self) -> usize {
        self.y_spatial.iter().product()
    }

    fn k3(&self) -> usize {
        self.kernel * self.kernel * self.kernel
    }

    /// Input coordinate for output position `o` and kernel offset `k`.
    #[inline]
    fn src(&self, o: usize, k: usize, axis: usize) -> Option<usize> {
        let p = (o * self.stride + k).checked_sub(self.pad)?;
        (p < self.x_spatial[axis]).then_some(p)
    }
}

/// Unfolds one sample `x_b` (`[cin, X]`) into `col` (`[cin·k³, Y]`).
fn im2col<T: Scalar>(x_b: &[T], cin: usize, g: &ConvGeom, col: &mut [T]) {
    let k = g.kernel;
    let [yd, yh, yw] = g.y_spatial;
    let [_, xh, xw] = g.x_spatial;
    let ny = g.y_volume();
    let xv = g.x_volume();
    let mut row = 0;
    for ci in 0..cin {
        let plane = &x_b[ci * xv..(ci + 1) * xv];
        for kd in 0..k {
            for kh in 0..k {
                for kw in 0..k {
                    let dst = &mut col[row * ny..(row + 1) * ny];
                    let mut p = 0;
                    for od in 0..yd {
                        let id = g.src(od, kd, 0);
                        for oh in 0..yh {
                            let ih = g.src(oh, kh, 1);
                            match (id, ih) {
                                (Some(id), Some(ih)) => {
                                    let base = (id * xh + ih) * xw;
                                    for ow in 0..yw {
                                        dst[p] = match g.src(ow, kw, 2) {
                                            Some(iw) => plane[base + iw],
                                            None => T::zero(),
                                        };
                                        p += 1;
                                    }
                                }
                                _ => {
                                    dst[p..p + yw].fill(T::zero());
                                    p += yw;
                                }
                            }
                        }
                    }
                    row += 1;
                }
            }
        }
    }
}

/// Folds `col` (`[cin·k³, Y]`) back onto `x_b` (`[cin, X]`), accumulating.
fn col2im<T: Scalar>(col: &[T], cin: usize, g: &ConvGeom, x_b: &mut [T]) {
    let k = g.kernel;
    let [yd, yh, yw] = g.y_spatial;
    let [_, xh, xw] = g.x_spatial;
    let ny = g.y_volume();
    let xv = g.x_volume();
    let mut row = 0;
    for ci in 0..cin {
        let plane = &mut x_b[ci * xv..(ci + 1) * xv];
        for kd in 0..k {
            for kh in 0..k {
                for kw in 0..k {
                    let src = &col[row * ny..(row + 1) * ny];
                    let mut p = 0;
                    for od in 0..yd {
                        let id = g.src(od, kd, 0);
                        for oh in 0..yh {
                            let ih = g.src(oh, kh, 1);
                            if let (Some(id), Some(ih)) = (id, ih) {
                                let base = (id * xh + ih) * xw;
                                for ow in 0..yw {
                                    if let Some(iw) = g.src(ow, kw, 2) {
                                        plane[base + iw] = plane[base + iw] + src[p];
                                    }
                                    p += 1;
                                }
                            } else {
                                p += yw;
                            }
                        }
                    }
                    row += 1;
                }
            }
        }
    }
}

fn check(op: &'static str, t: &[usize], expect: [usize; 5], axes: &str) -> Result<()> {
    if t != expect {
        return Err(Error::dim(op, format!("{axes} shape {t:?} != expected {expect:?}")));
    }
    Ok(())
}

fn spatial(batch: usize, ch: usize, s: [usize; 3]) -> [usize; 5] {
    [batch, ch, s[0], s[1], s[2]]
}

/// `y = conv(x, w)`.
pub(super) fn forward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, g: &ConvGeom) -> Result<(Vec<T>, Vec<usize>)> {
    let (cout, cin) = (w.shape()[0], w.shape()[1]);
    let batch = x.shape().first().copied().unwrap_or(0);
    check("conv3d", x.shape(), spatial(batch, cin, g.x_spatial), "input")?;
    check("conv3d", w.shape(), [cout, cin, g.kernel, g.kernel, g.kernel], "kernel")?;
    let (xv, ny, rows) = (g.x_volume(), g.y_volume(), cin * g.k3());
    let mut col = vec![T::zero(); rows * ny];
    let mut out = vec![T::zero(); batch * cout * ny];
    for b in 0..batch {
        im2col(&x.data()[b * cin * xv..(b + 1) * cin * xv], cin, g, &mut col);
        gemm(cout, rows, ny, w.data(), false, &col, false, &mut out[b * cout * ny..(b + 1) * cout * ny], false);
    }
    Ok((out, spatial(batch, cout, g.y_spatial).to_vec()))
}

/// `x = convᵀ(y, w)`.
pub(super) fn transpose<T: Scalar>(y: &Tensor<T>, w: &Tensor<T>, g: &ConvGeom) -> Result<(Vec<T>, Vec<usize>)> {
    let (cout, cin) = (w.shape()[0], w.shape()[1]);
    let batch = y.shape().first().copied().unwrap_or(0);
    check("conv_transpose3d", y.shape(), spatial(batch, cout, g.y_spatial), "input")?;
    check("conv_transpose3d", w.shape(), [cout, cin, g.kernel, g.kernel, g.kernel], "kernel")?;
    let (xv, ny, rows) = (g.x_volume(), g.y_volume(), cin * g.k3());
    let mut col = vec![T::zero(); rows * ny];
    let mut out = vec![T::zero(); batch * cin * xv];
    for b in 0..batch {
        gemm(rows, cout, ny, w.data(), true, &y.data()[b * cout * ny..(b + 1) * cout * ny], false, &mut col, false);
        col2im(&col, cin, g, &mut out[b * cin * xv..(b + 1) * cin * xv]);
    }
    Ok((out, spatial(batch, cin, g.x_spatial).to_vec()))
}

/// `w = Σ_b y_b · im2col(x_b)ᵀ`.
pub(super) fn weight<T: Scalar>(x: &Tensor<T>, y: &Tensor<T>, g: &ConvGeom) -> Result<(Vec<T>, Vec<usize>)> {
    if x.ndim() != 5 || y.ndim() != 5 {
        return Err(Error::dim("conv3d_weight", "operands must be 5-D"));
    }
    let (batch, cin, cout) = (x.shape()[0], x.shape()[1], y.shape()[1]);
    check("conv3d_weight", x.shape(), spatial(batch, cin, g.x_spatial), "input")?;
    check("conv3d_weight", y.shape(), spatial(batch, cout, g.y_spatial), "output")?;
    let (xv, ny, rows) = (g.x_volume(), g.y_volume(), cin * g.k3());
    let mut col = vec![T::zero(); rows * ny];
    let mut out = vec![T::zero(); cout * rows];
    for b in 0..batch {
        im2col(&x.data()[b * cin * xv..(b + 1) * cin * xv], cin, g, &mut col);
        gemm(cout, ny, rows, &y.data()[b * cout * ny..(b + 1) * cout * ny], false, &col, true, &mut out, b > 0);
    }
    Ok((out, vec![cout, cin, g.kernel, g.kernel, g.kernel]))
}
