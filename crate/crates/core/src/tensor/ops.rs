//! Primitive operations and their backward rules.

use std::rc::Rc;

use super::conv::{self, ConvGeom};
use super::{gemm, numel, Scalar, Tensor};
use crate::error::{Error, Result};

pub(crate) enum Op<T: Scalar> {
    Add(Tensor<T>, Tensor<T>),
    Sub(Tensor<T>, Tensor<T>),
    Mul(Tensor<T>, Tensor<T>),
    Neg(Tensor<T>),
    Scale(Tensor<T>, T),
    AddScalar(Tensor<T>),
    Square(Tensor<T>),
    Sqrt(Tensor<T>),
    Recip(Tensor<T>),
    Sigmoid(Tensor<T>),
    Relu(Tensor<T>),
    LeakyRelu(Tensor<T>, T),
    Reshape(Tensor<T>),
    SumAll(Tensor<T>),
    ExpandAll(Tensor<T>),
    SumInner(Tensor<T>, usize),
    ExpandInner(Tensor<T>, usize),
    SumOuter(Tensor<T>, usize),
    ExpandOuter(Tensor<T>, usize),
    MatMul {
        a: Tensor<T>,
        b: Tensor<T>,
        ta: bool,
        tb: bool,
    },
    Conv {
        x: Tensor<T>,
        w: Tensor<T>,
        geom: ConvGeom,
    },
    ConvTranspose {
        y: Tensor<T>,
        w: Tensor<T>,
        geom: ConvGeom,
    },
    ConvWeight {
        x: Tensor<T>,
        y: Tensor<T>,
        geom: ConvGeom,
    },
    Gather(Tensor<T>, Rc<[usize]>),
    ScatterAdd(Tensor<T>, Rc<[usize]>),
}

impl<T: Scalar> Op<T> {
    pub(crate) fn parents(&self) -> Vec<&Tensor<T>> {
        use Op::*;
        match self {
            Add(a, b) | Sub(a, b) | Mul(a, b) => vec![a, b],
            MatMul { a, b, .. } => vec![a, b],
            Conv { x, w, .. } => vec![x, w],
            ConvTranspose { y, w, .. } => vec![y, w],
            ConvWeight { x, y, .. } => vec![x, y],
            Neg(a) | Scale(a, _) | AddScalar(a) | Square(a) | Sqrt(a) | Recip(a) | Sigmoid(a)
            | Relu(a) | LeakyRelu(a, _) | Reshape(a) | SumAll(a) | ExpandAll(a)
            | SumInner(a, _) | ExpandInner(a, _) | SumOuter(a, _) | ExpandOuter(a, _)
            | Gather(a, _) | ScatterAdd(a, _) => vec![a],
        }
    }

    /// Gradients for each parent given the upstream gradient `g` of `out`.
    pub(crate) fn backward(&self, out: &Tensor<T>, g: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        use Op::*;
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        Ok(match self {
            Add(_, _) => vec![g.clone(), g.clone()],
            Sub(_, _) => vec![g.clone(), g.neg()],
            Mul(a, b) => vec![g.mul(b)?, g.mul(a)?],
            Neg(_) => vec![g.neg()],
            Scale(_, c) => vec![g.scale(*c)],
            AddScalar(_) => vec![g.clone()],
            Square(a) => vec![g.mul(&a.scale(two))?],
            Sqrt(_) => vec![g.mul(&out.recip().scale(half))?],
            Recip(_) => vec![g.mul(&out.square())?.neg()],
            Sigmoid(_) => vec![g.mul(&out.sub(&out.square())?)?],
            Relu(a) => {
                let mask = a.map_const(|v| if v > T::zero() { T::one() } else { T::zero() });
                vec![g.mul(&mask)?]
            }
            LeakyRelu(a, slope) => {
                let s = *slope;
                let mask = a.map_const(|v| if v > T::zero() { T::one() } else { s });
                vec![g.mul(&mask)?]
            }
            Reshape(a) => vec![g.reshape(a.shape())?],
            SumAll(a) => vec![g.expand_all(a.shape())?],
            ExpandAll(a) => vec![g.sum_all().reshape(a.shape())?],
            SumInner(a, inner) => vec![g.expand_inner(*inner)?.reshape(a.shape())?],
            ExpandInner(a, inner) => vec![g.sum_inner(*inner)?.reshape(a.shape())?],
            SumOuter(a, outer) => vec![g.expand_outer(*outer)?.reshape(a.shape())?],
            ExpandOuter(a, outer) => vec![g.sum_outer(*outer)?.reshape(a.shape())?],
            MatMul { a, b, ta, tb } => {
                let ga = if *ta {
                    b.matmul_t(g, *tb, true)?
                } else {
                    g.matmul_t(b, false, !*tb)?
                };
                let gb = if *tb {
                    g.matmul_t(a, true, *ta)?
                } else {
                    a.matmul_t(g, !*ta, false)?
                };
                vec![ga, gb]
            }
            Conv { x, w, geom } => vec![
                Tensor::conv_transpose_geom(g, w, *geom)?,
                Tensor::conv_weight_geom(x, g, *geom)?,
            ],
            ConvTranspose { y, w, geom } => vec![
                Tensor::conv_geom(g, w, *geom)?,
                Tensor::conv_weight_geom(g, y, *geom)?,
            ],
            ConvWeight { x, y, geom } => vec![
                Tensor::conv_transpose_geom(y, g, *geom)?,
                Tensor::conv_geom(x, g, *geom)?,
            ],
            Gather(a, idx) => vec![g.scatter_add(Rc::clone(idx), a.shape())?],
            ScatterAdd(a, idx) => vec![g.gather(Rc::clone(idx), a.shape())?],
        })
    }
}

fn same_shape<T: Scalar>(op: &'static str, a: &Tensor<T>, b: &Tensor<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dim(
            op,
            format!("shapes {:?} and {:?} differ", a.shape(), b.shape()),
        ));
    }
    Ok(())
}

impl<T: Scalar> Tensor<T> {
    fn map(&self, op: Op<T>, f: impl Fn(T) -> T) -> Tensor<T> {
        let data = self.data().iter().map(|&v| f(v)).collect();
        Tensor::from_op(data, self.shape().to_vec(), op)
    }

    /// Elementwise function as a constant (no graph).
    pub(crate) fn map_const(&self, f: impl Fn(T) -> T) -> Tensor<T> {
        Tensor::make(
            self.data().iter().map(|&v| f(v)).collect(),
            self.shape().to_vec(),
            false,
            None,
        )
    }

    fn zip(&self, other: &Tensor<T>, name: &'static str, op: Op<T>, f: impl Fn(T, T) -> T) -> Result<Tensor<T>> {
        same_shape(name, self, other)?;
        let data = self
            .data()
            .iter()
            .zip(other.data())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Tensor::from_op(data, self.shape().to_vec(), op))
    }

    pub fn add(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        self.zip(other, "add", Op::Add(self.clone(), other.clone()), |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        self.zip(other, "sub", Op::Sub(self.clone(), other.clone()), |a, b| a - b)
    }

    /// Elementwise product.
    pub fn mul(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        self.zip(other, "mul", Op::Mul(self.clone(), other.clone()), |a, b| a * b)
    }

    pub fn neg(&self) -> Tensor<T> {
        self.map(Op::Neg(self.clone()), |v| -v)
    }

    pub fn scale(&self, c: T) -> Tensor<T> {
        self.map(Op::Scale(self.clone(), c), |v| v * c)
    }

    pub fn add_scalar(&self, c: T) -> Tensor<T> {
        self.map(Op::AddScalar(self.clone()), |v| v + c)
    }

    pub fn square(&self) -> Tensor<T> {
        self.map(Op::Square(self.clone()), |v| v * v)
    }

    /// Square root; its derivative at 0 is taken as 0.
    pub fn sqrt(&self) -> Tensor<T> {
        self.map(Op::Sqrt(self.clone()), |v| v.sqrt())
    }

    /// `1/x`, with `1/0` defined as 0.
    pub fn recip(&self) -> Tensor<T> {
        self.map(Op::Recip(self.clone()), |v| {
            if v == T::zero() {
                T::zero()
            } else {
                v.recip()
            }
        })
    }

    pub fn sigmoid(&self) -> Tensor<T> {
        self.map(Op::Sigmoid(self.clone()), |v| {
            if v >= T::zero() {
                T::one() / (T::one() + (-v).exp())
            } else {
                let e = v.exp();
                e / (T::one() + e)
            }
        })
    }

    pub fn relu(&self) -> Tensor<T> {
        self.map(Op::Relu(self.clone()), |v| if v > T::zero() { v } else { T::zero() })
    }

    pub fn leaky_relu(&self, slope: T) -> Tensor<T> {
        self.map(Op::LeakyRelu(self.clone(), slope), |v| {
            if v > T::zero() {
                v
            } else {
                v * slope
            }
        })
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor<T>> {
        if numel(shape) != self.numel() {
            return Err(Error::dim(
                "reshape",
                format!("cannot reshape {:?} into {shape:?}", self.shape()),
            ));
        }
        if shape == self.shape() {
            return Ok(self.clone());
        }
        Ok(Tensor::from_op(
            self.data().to_vec(),
            shape.to_vec(),
            Op::Reshape(self.clone()),
        ))
    }

    /// Sum of all elements, shape `[]`.
    pub fn sum_all(&self) -> Tensor<T> {
        let s = self.data().iter().copied().sum();
        Tensor::from_op(vec![s], Vec::new(), Op::SumAll(self.clone()))
    }

    pub fn mean_all(&self) -> Tensor<T> {
        self.sum_all().scale(T::one() / T::lit(self.numel() as f64))
    }

    /// Broadcasts a one-element tensor to `shape`.
    pub fn expand_all(&self, shape: &[usize]) -> Result<Tensor<T>> {
        if self.numel() != 1 {
            return Err(Error::dim("expand_all", format!("source shape {:?} is not scalar", self.shape())));
        }
        Ok(Tensor::from_op(
            vec![self.data()[0]; numel(shape)],
            shape.to_vec(),
            Op::ExpandAll(self.clone()),
        ))
    }

    /// Views the tensor as `[outer, inner]` and sums each row.
    pub fn sum_inner(&self, inner: usize) -> Result<Tensor<T>> {
        if inner == 0 || !self.numel().is_multiple_of(inner) {
            return Err(Error::dim("sum_inner", format!("{} elements not divisible by {inner}", self.numel())));
        }
        let data = self.data().chunks_exact(inner).map(|c| c.iter().copied().sum()).collect();
        Ok(Tensor::from_op(data, vec![self.numel() / inner], Op::SumInner(self.clone(), inner)))
    }

    /// Repeats every element `inner` times: `[n] -> [n, inner]`.
    pub fn expand_inner(&self, inner: usize) -> Result<Tensor<T>> {
        if inner == 0 {
            return Err(Error::dim("expand_inner", "repeat count is zero"));
        }
        let mut data = Vec::with_capacity(self.numel() * inner);
        for &v in self.data() {
            data.extend(std::iter::repeat_n(v, inner));
        }
        Ok(Tensor::from_op(data, vec![self.numel(), inner], Op::ExpandInner(self.clone(), inner)))
    }

    /// Views the tensor as `[outer, rest]` and sums over `outer`.
    pub fn sum_outer(&self, outer: usize) -> Result<Tensor<T>> {
        if outer == 0 || !self.numel().is_multiple_of(outer) {
            return Err(Error::dim("sum_outer", format!("{} elements not divisible by {outer}", self.numel())));
        }
        let rest = self.numel() / outer;
        let mut data = vec![T::zero(); rest];
        for row in self.data().chunks_exact(rest) {
            for (d, &v) in data.iter_mut().zip(row) {
                *d = *d + v;
            }
        }
        Ok(Tensor::from_op(data, vec![rest], Op::SumOuter(self.clone(), outer)))
    }

    /// Stacks `outer` copies: `shape -> [outer, shape...]`.
    pub fn expand_outer(&self, outer: usize) -> Result<Tensor<T>> {
        if outer == 0 {
            return Err(Error::dim("expand_outer", "repeat count is zero"));
        }
        let mut data = Vec::with_capacity(self.numel() * outer);
        for _ in 0..outer {
            data.extend_from_slice(self.data());
        }
        let mut shape = vec![outer];
        shape.extend_from_slice(self.shape());
        Ok(Tensor::from_op(data, shape, Op::ExpandOuter(self.clone(), outer)))
    }

    pub fn matmul(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        self.matmul_t(other, false, false)
    }

    /// `op(self) · op(other)` for 2-D tensors; `ta`/`tb` transpose the
    /// respective operand.
    pub fn matmul_t(&self, other: &Tensor<T>, ta: bool, tb: bool) -> Result<Tensor<T>> {
        if self.ndim() != 2 || other.ndim() != 2 {
            return Err(Error::dim(
                "matmul",
                format!("operands must be 2-D, got {:?} and {:?}", self.shape(), other.shape()),
            ));
        }
        let (m, k) = if ta {
            (self.shape()[1], self.shape()[0])
        } else {
            (self.shape()[0], self.shape()[1])
        };
        let (k2, n) = if tb {
            (other.shape()[1], other.shape()[0])
        } else {
            (other.shape()[0], other.shape()[1])
        };
        if k != k2 {
            return Err(Error::dim(
                "matmul",
                format!("inner axes differ: {k} vs {k2} (shapes {:?}, {:?})", self.shape(), other.shape()),
            ));
        }
        let mut out = vec![T::zero(); m * n];
        gemm(m, k, n, self.data(), ta, other.data(), tb, &mut out, false);
        Ok(Tensor::from_op(
            out,
            vec![m, n],
            Op::MatMul {
                a: self.clone(),
                b: other.clone(),
                ta,
                tb,
            },
        ))
    }

    /// 3-D convolution. `self`: `[B, Cin, D, H, W]`, `w`: `[Cout, Cin, k, k, k]`.
    pub fn conv3d(&self, w: &Tensor<T>, stride: usize, pad: usize) -> Result<Tensor<T>> {
        let geom = ConvGeom::for_conv(self.shape(), w.shape(), stride, pad)?;
        Tensor::conv_geom(self, w, geom)
    }

    /// Transposed 3-D convolution (the adjoint of [`Tensor::conv3d`]).
    /// `self`: `[B, Cin, n, n, n]`, `w`: `[Cin, Cout, k, k, k]`; output spatial
    /// size is `(n - 1)·stride - 2·pad + k`.
    pub fn conv_transpose3d(&self, w: &Tensor<T>, stride: usize, pad: usize) -> Result<Tensor<T>> {
        let geom = ConvGeom::for_transpose(self.shape(), w.shape(), stride, pad)?;
        Tensor::conv_transpose_geom(self, w, geom)
    }

    pub(crate) fn conv_geom(x: &Tensor<T>, w: &Tensor<T>, geom: ConvGeom) -> Result<Tensor<T>> {
        let (data, shape) = conv::forward(x, w, &geom)?;
        Ok(Tensor::from_op(data, shape, Op::Conv { x: x.clone(), w: w.clone(), geom }))
    }

    pub(crate) fn conv_transpose_geom(y: &Tensor<T>, w: &Tensor<T>, geom: ConvGeom) -> Result<Tensor<T>> {
        let (data, shape) = conv::transpose(y, w, &geom)?;
        Ok(Tensor::from_op(data, shape, Op::ConvTranspose { y: y.clone(), w: w.clone(), geom }))
    }

    /// Gradient of a convolution with respect to its kernel, as a
    /// differentiable op: `x` is the convolution input, `y` an output-shaped
    /// tensor.
    pub(crate) fn conv_weight_geom(x: &Tensor<T>, y: &Tensor<T>, geom: ConvGeom) -> Result<Tensor<T>> {
        let (data, shape) = conv::weight(x, y, &geom)?;
        Ok(Tensor::from_op(data, shape, Op::ConvWeight { x: x.clone(), y: y.clone(), geom }))
    }

    /// `out[j] = self[index[j]]`, reshaped to `shape`.
    pub fn gather(&self, index: Rc<[usize]>, shape: &[usize]) -> Result<Tensor<T>> {
        if numel(shape) != index.len() {
            return Err(Error::dim("gather", format!("{} indices for shape {shape:?}", index.len())));
        }
        if let Some(&bad) = index.iter().find(|&&i| i >= self.numel()) {
            return Err(Error::dim("gather", format!("index {bad} out of range {}", self.numel())));
        }
        let src = self.data();
        let data = index.iter().map(|&i| src[i]).collect();
        Ok(Tensor::from_op(data, shape.to_vec(), Op::Gather(self.clone(), index)))
    }

    /// `out[index[j]] += self[j]` into a zero tensor of `shape`.
    pub fn scatter_add(&self, index: Rc<[usize]>, shape: &[usize]) -> Result<Tensor<T>> {
        if index.len() != self.numel() {
            return Err(Error::dim("scatter_add", format!("{} indices for {} values", index.len(), self.numel())));
        }
        let n = numel(shape);
        if let Some(&bad) = index.iter().find(|&&i| i >= n) {
            return Err(Error::dim("scatter_add", format!("index {bad} out of range {n}")));
        }
        let mut data = vec![T::zero(); n];
        for (&i, &v) in index.iter().zip(self.data()) {
            data[i] = data[i] + v;
        }
        Ok(Tensor::from_op(data, shape.to_vec(), Op::ScatterAdd(self.clone(), index)))
    }

    /// Max pooling over cubic windows of `[B, C, D, H, W]`; ties pick the
    /// first maximum in scan order.
    pub fn maxpool3d(&self, kernel: usize, stride: usize) -> Result<Tensor<T>> {
        if self.ndim() != 5 {
            return Err(Error::dim("maxpool3d", format!("expected 5-D input, got {:?}", self.shape())));
        }
        if kernel == 0 || stride == 0 {
            return Err(Error::dim("maxpool3d", "kernel and stride must be positive"));
        }
        let s = self.shape();
        let (bc, sp) = (s[0] * s[1], [s[2], s[3], s[4]]);
        let mut out_sp = [0usize; 3];
        for a in 0..3 {
            if sp[a] < kernel {
                return Err(Error::dim(
                    "maxpool3d",
                    format!("axis {} has size {} < kernel {kernel}", a + 2, sp[a]),
                ));
            }
            out_sp[a] = (sp[a] - kernel) / stride + 1;
        }
        let vol = sp[0] * sp[1] * sp[2];
        let src = self.data();
        let mut index = Vec::with_capacity(bc * out_sp.iter().product::<usize>());
        for plane in 0..bc {
            let base = plane * vol;
            for od in 0..out_sp[0] {
                for oh in 0..out_sp[1] {
                    for ow in 0..out_sp[2] {
                        let mut best = usize::MAX;
                        for kd in 0..kernel {
                            for kh in 0..kernel {
                                for kw in 0..kernel {
                                    let i = base
                                        + ((od * stride + kd) * sp[1] + oh * stride + kh) * sp[2]
                                        + ow * stride
                                        + kw;
                                    if best == usize::MAX || src[i] > src[best] {
                                        best = i;
                                    }
                                }
                            }
                        }
                        index.push(best);
                    }
                }
            }
        }
        self.gather(index.into(), &[s[0], s[1], out_sp[0], out_sp[1], out_sp[2]])
    }
}
