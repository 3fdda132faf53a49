//! Elementwise arithmetic with same-rank broadcasting, reductions and
//! activations.

use crate::error::{Result, TensorError};
use crate::graph::{Activation, Graph, Op, Var};
use crate::scalar::Scalar;
use crate::tensor::{contiguous_strides, numel, Tensor};

fn broadcast_shape(op: &'static str, a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    if a.len() != b.len() {
        return Err(TensorError::shape(
            op,
            format!("rank mismatch {a:?} vs {b:?}"),
        ));
    }
    a.iter()
        .zip(b)
        .map(|(&x, &y)| match (x, y) {
            _ if x == y => Ok(x),
            (1, y) => Ok(y),
            (x, 1) => Ok(x),
            _ => Err(TensorError::shape(
                op,
                format!("cannot broadcast {a:?} with {b:?}"),
            )),
        })
        .collect()
}

fn broadcast_strides(shape: &[usize], out: &[usize]) -> Vec<usize> {
    contiguous_strides(shape)
        .into_iter()
        .zip(shape.iter().zip(out))
        .map(|(st, (&d, &o))| if d == 1 && o != 1 { 0 } else { st })
        .collect()
}

/// Visits `(out_offset, a_offset, b_offset)` for every output element in
/// row-major order.
fn for_each_broadcast(
    out: &[usize],
    sa: &[usize],
    sb: &[usize],
    mut f: impl FnMut(usize, usize, usize),
) {
    let rank = out.len();
    let n = numel(out);
    let inner = out[rank - 1];
    let (ia, ib) = (sa[rank - 1], sb[rank - 1]);
    let mut idx = vec![0usize; rank];
    let (mut o, mut oa, mut ob) = (0usize, 0usize, 0usize);
    while o < n {
        for j in 0..inner {
            f(o + j, oa + j * ia, ob + j * ib);
        }
        o += inner;
        let mut d = rank - 1;
        while d > 0 {
            d -= 1;
            idx[d] += 1;
            oa += sa[d];
            ob += sb[d];
            if idx[d] < out[d] {
                break;
            }
            oa -= sa[d] * out[d];
            ob -= sb[d] * out[d];
            idx[d] = 0;
        }
    }
}

fn binary<T: Scalar>(
    op: &'static str,
    a: &Tensor<T>,
    b: &Tensor<T>,
    f: impl Fn(T, T) -> T,
) -> Result<Tensor<T>> {
    if a.shape() == b.shape() {
        let data = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        return Tensor::new(a.shape().to_vec(), data);
    }
    let out_shape = broadcast_shape(op, a.shape(), b.shape())?;
    let sa = broadcast_strides(a.shape(), &out_shape);
    let sb = broadcast_strides(b.shape(), &out_shape);
    let mut out = vec![T::zero(); numel(&out_shape)];
    let (ad, bd) = (a.data(), b.data());
    for_each_broadcast(&out_shape, &sa, &sb, |o, ia, ib| out[o] = f(ad[ia], bd[ib]));
    Tensor::new(out_shape, out)
}

/// Sums `g` (output-shaped) down to `shape`.
fn reduce_to<T: Scalar>(g: &Tensor<T>, shape: &[usize]) -> Tensor<T> {
    if g.shape() == shape {
        return g.clone();
    }
    let mut out = Tensor::zeros(shape.to_vec());
    let sa = broadcast_strides(shape, g.shape());
    let sb = contiguous_strides(g.shape());
    let gd = g.data();
    let od = out.data_mut();
    for_each_broadcast(g.shape(), &sa, &sb, |o, ia, _| od[ia] += gd[o]);
    out
}

pub(crate) fn broadcast_add_backward<T: Scalar>(
    g: &Tensor<T>,
    a_shape: &[usize],
    b_shape: &[usize],
    need_a: bool,
    need_b: bool,
) -> (Option<Tensor<T>>, Option<Tensor<T>>) {
    (
        need_a.then(|| reduce_to(g, a_shape)),
        need_b.then(|| reduce_to(g, b_shape)),
    )
}

pub(crate) fn broadcast_mul_backward<T: Scalar>(
    g: &Tensor<T>,
    a: &Tensor<T>,
    b: &Tensor<T>,
    need_a: bool,
    need_b: bool,
) -> (Option<Tensor<T>>, Option<Tensor<T>>) {
    let out_shape = g.shape().to_vec();
    let grad_of = |own: &Tensor<T>, other: &Tensor<T>| {
        let mut acc = Tensor::zeros(own.shape().to_vec());
        let so = broadcast_strides(own.shape(), &out_shape);
        let st = broadcast_strides(other.shape(), &out_shape);
        let (gd, td) = (g.data(), other.data());
        let ad = acc.data_mut();
        for_each_broadcast(&out_shape, &so, &st, |o, io, it| ad[io] += gd[o] * td[it]);
        acc
    };
    (need_a.then(|| grad_of(a, b)), need_b.then(|| grad_of(b, a)))
}

pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub(crate) fn activate<T: Scalar>(kind: Activation, x: T) -> T {
    match kind {
        Activation::Relu => x.max(T::zero()),
        Activation::Sigmoid => sigmoid(x),
        Activation::Silu => x * sigmoid(x),
    }
}

pub(crate) fn activation_backward<T: Scalar>(
    kind: Activation,
    x: &Tensor<T>,
    y: &Tensor<T>,
    g: &Tensor<T>,
) -> Tensor<T> {
    let data = x
        .data()
        .iter()
        .zip(y.data())
        .zip(g.data())
        .map(|((&x, &y), &g)| match kind {
            Activation::Relu => {
                if x > T::zero() {
                    g
                } else {
                    T::zero()
                }
            }
            Activation::Sigmoid => g * y * (T::one() - y),
            Activation::Silu => {
                let s = sigmoid(x);
                g * (s + x * s * (T::one() - s))
            }
        })
        .collect();
    Tensor::new(x.shape().to_vec(), data).expect("same shape")
}

impl<T: Scalar> Graph<T> {
    /// Elementwise sum; operands of equal rank broadcast along size-1 axes.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = binary("add", self.value(a), self.value(b), |x, y| x + y)?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    /// Elementwise product with the same broadcasting rule as [`Graph::add`].
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = binary("mul", self.value(a), self.value(b), |x, y| x * y)?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, Op::Mul(a, b), rg))
    }

    pub fn scale(&mut self, x: Var, factor: T) -> Var {
        let value = self.value(x).map(|v| v * factor);
        let rg = self.any_grad(&[x]);
        self.push(value, Op::Scale(x, factor), rg)
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let value = Tensor::scalar(self.value(x).sum());
        let rg = self.any_grad(&[x]);
        self.push(value, Op::Sum(x), rg)
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let n = T::from_usize(t.len()).expect("element count");
        let value = Tensor::scalar(t.sum() / n);
        let rg = self.any_grad(&[x]);
        self.push(value, Op::Mean(x), rg)
    }

    pub fn activation(&mut self, x: Var, kind: Activation) -> Var {
        let value = self.value(x).map(|v| activate(kind, v));
        let rg = self.any_grad(&[x]);
        self.push(value, Op::Act(x, kind), rg)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.activation(x, Activation::Relu)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.activation(x, Activation::Sigmoid)
    }

    pub fn silu(&mut self, x: Var) -> Var {
        self.activation(x, Activation::Silu)
    }
}
