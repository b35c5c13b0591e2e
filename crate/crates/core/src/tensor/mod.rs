//! Minimal reverse-mode automatic differentiation over dense arrays.
//!
//! A [`Tensor`] is an immutable, reference-counted node in a dynamically
//! built graph. Operations record their inputs only while gradient
//! recording is enabled and at least one input requires a gradient.
//!
//! Every backward rule is itself written with differentiable tensor
//! operations, so calling [`grad`] with `create_graph = true` produces
//! gradients that can be differentiated again. The gradient penalty of the
//! critic loss relies on this.

mod autograd;
mod conv;
mod nn;
mod ops;

pub use autograd::{grad, is_grad_enabled, no_grad};
pub use conv::{conv_output_size, deconv_output_size, ConvGeom};
pub(crate) use nn::add_channel_bias;
pub use nn::{adain, affine_modulate, channel_stats, l2_norm_over_nonbatch_dims, linear};

use std::cell::Cell;
use std::fmt;
use std::iter::Sum;
use std::rc::Rc;

use num_traits::{Float, FromPrimitive};

use crate::error::{Error, Result};
use ops::Op;

/// Floating-point element type of a tensor.
pub trait Scalar:
    Float + FromPrimitive + Default + fmt::Debug + fmt::Display + Send + Sync + Sum + 'static
{
    /// Row-major `C = op(A)·op(B) (+ C)` on raw strides.
    ///
    /// # Safety
    /// Pointers and strides must describe valid `m×k`, `k×n` and `m×n`
    /// matrices.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("representable literal")
    }
}

impl Scalar for f32 {
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, 1.0, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Scalar for f64 {
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, 1.0, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

/// Row-major GEMM: `C[m×n] (+)= op(A)[m×k] · op(B)[k×n]`.
///
/// `ta` means `a` is stored as `k×m`; `tb` means `b` is stored as `n×k`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm<T: Scalar>(
    m: usize,
    k: usize,
    n: usize,
    a: &[T],
    ta: bool,
    b: &[T],
    tb: bool,
    c: &mut [T],
    accumulate: bool,
) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if ta { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if tb { (1, k as isize) } else { (n as isize, 1) };
    let beta = if accumulate { T::one() } else { T::zero() };
    if k == 0 {
        if !accumulate {
            c[..m * n].fill(T::zero());
        }
        return;
    }
    // SAFETY: lengths checked above; strides describe the stated layouts.
    unsafe {
        T::gemm_raw(
            m,
            k,
            n,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        )
    }
}

thread_local! {
    static NEXT_ID: Cell<usize> = const { Cell::new(0) };
}

fn next_id() -> usize {
    NEXT_ID.with(|c| {
        let id = c.get();
        c.set(id + 1);
        id
    })
}

struct Node<T: Scalar> {
    id: usize,
    shape: Vec<usize>,
    data: Vec<T>,
    requires_grad: bool,
    op: Option<Op<T>>,
}

/// N-dimensional array participating in reverse-mode differentiation.
///
/// Cloning is cheap (reference count). Scalars have shape `[]`.
pub struct Tensor<T: Scalar>(Rc<Node<T>>);

impl<T: Scalar> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Tensor(Rc::clone(&self.0))
    }
}

impl<T: Scalar> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.0.shape)
            .field("requires_grad", &self.0.requires_grad)
            .finish_non_exhaustive()
    }
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl<T: Scalar> Tensor<T> {
    fn make(data: Vec<T>, shape: Vec<usize>, requires_grad: bool, op: Option<Op<T>>) -> Self {
        debug_assert_eq!(data.len(), numel(&shape));
        Tensor(Rc::new(Node {
            id: next_id(),
            shape,
            data,
            requires_grad,
            op,
        }))
    }

    /// Records `op` if recording is on and any input needs a gradient.
    fn from_op(data: Vec<T>, shape: Vec<usize>, op: Op<T>) -> Self {
        let record = is_grad_enabled() && op.parents().iter().any(|p| p.requires_grad());
        if record {
            Self::make(data, shape, true, Some(op))
        } else {
            Self::make(data, shape, false, None)
        }
    }

    /// A constant tensor.
    pub fn new(data: Vec<T>, shape: &[usize]) -> Result<Self> {
        if data.len() != numel(shape) {
            return Err(Error::dim(
                "Tensor::new",
                format!("{} values for shape {shape:?}", data.len()),
            ));
        }
        if shape.contains(&0) {
            return Err(Error::dim("Tensor::new", format!("shape {shape:?} has a zero axis")));
        }
        Ok(Self::make(data, shape.to_vec(), false, None))
    }

    /// A leaf tensor that gradients are taken with respect to.
    pub fn param(data: Vec<T>, shape: &[usize]) -> Result<Self> {
        let t = Self::new(data, shape)?;
        let node = Rc::try_unwrap(t.0).unwrap_or_else(|_| unreachable!("fresh tensor is unshared"));
        Ok(Self::make(node.data, node.shape, true, None))
    }

    pub fn scalar(v: T) -> Self {
        Self::make(vec![v], Vec::new(), false, None)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::make(vec![T::zero(); numel(shape)], shape.to_vec(), false, None)
    }

    pub fn full(shape: &[usize], v: T) -> Self {
        Self::make(vec![v; numel(shape)], shape.to_vec(), false, None)
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn ndim(&self) -> usize {
        self.0.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.0.data.len()
    }

    pub fn data(&self) -> &[T] {
        &self.0.data
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.0.data.clone()
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> T {
        assert_eq!(self.numel(), 1, "item() on tensor of shape {:?}", self.shape());
        self.0.data[0]
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad
    }

    pub fn id(&self) -> usize {
        self.0.id
    }

    /// Same values, cut from the graph.
    pub fn detach(&self) -> Self {
        Self::make(self.0.data.clone(), self.0.shape.clone(), false, None)
    }

    pub(crate) fn op(&self) -> Option<&Op<T>> {
        self.0.op.as_ref()
    }
}
