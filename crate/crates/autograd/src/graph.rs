//! Tape-based reverse-mode differentiation.
//!
//! Every operator appends a node to the [`Graph`]; nodes are therefore stored
//! in topological order and [`Graph::backward`] walks them in reverse.

use crate::error::{Result, TensorError};
use crate::ops::{activation, conv, linear, norm, pool, shape, softmax};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Elementwise nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Sigmoid,
    Silu,
}

pub(crate) enum Op<T> {
    Leaf,
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Sum(Var),
    Mean(Var),
    Act(Var, Activation),
    Reshape(Var),
    Permute(Var, Vec<usize>),
    Conv3d {
        x: Var,
        w: Var,
        b: Option<Var>,
        stride: usize,
        pad: usize,
    },
    BatchNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        mean: Vec<T>,
        invstd: Vec<T>,
        training: bool,
    },
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        mean: Vec<T>,
        invstd: Vec<T>,
    },
    GlobalMaxPool {
        x: Var,
        argmax: Vec<usize>,
    },
    Linear {
        x: Var,
        w: Var,
        b: Option<Var>,
    },
    BatchMatMul {
        a: Var,
        b: Var,
        trans_a: bool,
        trans_b: bool,
    },
    Softmax(Var),
    CrossEntropy {
        logits: Var,
        labels: Vec<usize>,
        probs: Vec<T>,
    },
}

pub(crate) struct Node<T> {
    pub(crate) value: Tensor<T>,
    pub(crate) op: Op<T>,
    pub(crate) requires_grad: bool,
}

/// Recorded computation. Build it with the operator methods, then call
/// [`Graph::backward`] on a scalar node.
pub struct Graph<T> {
    pub(crate) nodes: Vec<Node<T>>,
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub(crate) fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Leaf that receives a gradient.
    pub fn leaf(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub(crate) fn any_grad(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Reverse-mode accumulation from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let loss_shape = self.shape(loss);
        if loss_shape.iter().product::<usize>() != 1 {
            return Err(TensorError::NonScalarLoss(loss_shape.to_vec()));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::full(loss_shape.to_vec(), T::one()));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.propagate(idx, &g, &mut grads)?;
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        debug_assert_eq!(g.shape(), self.shape(v));
        match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    fn propagate(&self, idx: usize, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) -> Result<()> {
        let node = &self.nodes[idx];
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                let (ga, gb) = activation::broadcast_add_backward(
                    g,
                    self.shape(*a),
                    self.shape(*b),
                    self.requires_grad(*a),
                    self.requires_grad(*b),
                );
                if let Some(ga) = ga {
                    self.accumulate(grads, *a, ga);
                }
                if let Some(gb) = gb {
                    self.accumulate(grads, *b, gb);
                }
            }
            Op::Mul(a, b) => {
                let (ga, gb) = activation::broadcast_mul_backward(
                    g,
                    self.value(*a),
                    self.value(*b),
                    self.requires_grad(*a),
                    self.requires_grad(*b),
                );
                if let Some(ga) = ga {
                    self.accumulate(grads, *a, ga);
                }
                if let Some(gb) = gb {
                    self.accumulate(grads, *b, gb);
                }
            }
            Op::Scale(x, s) => {
                let s = *s;
                self.accumulate(grads, *x, g.map(|v| v * s));
            }
            Op::Sum(x) => {
                let gv = g.data()[0];
                self.accumulate(grads, *x, Tensor::full(self.shape(*x).to_vec(), gv));
            }
            Op::Mean(x) => {
                let n = T::from_usize(self.value(*x).len()).expect("element count");
                let gv = g.data()[0] / n;
                self.accumulate(grads, *x, Tensor::full(self.shape(*x).to_vec(), gv));
            }
            Op::Act(x, kind) => {
                let gx = activation::activation_backward(*kind, self.value(*x), &node.value, g);
                self.accumulate(grads, *x, gx);
            }
            Op::Reshape(x) => {
                let gx = g.clone().reshape(self.shape(*x).to_vec())?;
                self.accumulate(grads, *x, gx);
            }
            Op::Permute(x, axes) => {
                self.accumulate(grads, *x, shape::permute_backward(g, axes));
            }
            Op::Conv3d {
                x,
                w,
                b,
                stride,
                pad,
            } => {
                let out = conv::conv3d_backward(
                    self.value(*x),
                    self.value(*w),
                    g,
                    *stride,
                    *pad,
                    self.requires_grad(*x),
                    self.requires_grad(*w),
                    b.map(|b| self.requires_grad(b)).unwrap_or(false),
                );
                if let Some(gx) = out.x {
                    self.accumulate(grads, *x, gx);
                }
                if let Some(gw) = out.w {
                    self.accumulate(grads, *w, gw);
                }
                if let (Some(b), Some(gb)) = (b, out.b) {
                    self.accumulate(grads, *b, gb);
                }
            }
            Op::BatchNorm {
                x,
                gamma,
                beta,
                mean,
                invstd,
                training,
            } => {
                let out = norm::batch_norm_backward(
                    self.value(*x),
                    self.value(*gamma),
                    mean,
                    invstd,
                    g,
                    *training,
                );
                self.accumulate(grads, *x, out.x);
                self.accumulate(grads, *gamma, out.gamma);
                self.accumulate(grads, *beta, out.beta);
            }
            Op::LayerNorm {
                x,
                gamma,
                beta,
                mean,
                invstd,
            } => {
                let out =
                    norm::layer_norm_backward(self.value(*x), self.value(*gamma), mean, invstd, g);
                self.accumulate(grads, *x, out.x);
                self.accumulate(grads, *gamma, out.gamma);
                self.accumulate(grads, *beta, out.beta);
            }
            Op::GlobalMaxPool { x, argmax } => {
                self.accumulate(
                    grads,
                    *x,
                    pool::global_max_pool_backward(self.shape(*x), argmax, g),
                );
            }
            Op::Linear { x, w, b } => {
                let out = linear::linear_backward(
                    self.value(*x),
                    self.value(*w),
                    g,
                    self.requires_grad(*x),
                    self.requires_grad(*w),
                    b.map(|b| self.requires_grad(b)).unwrap_or(false),
                );
                if let Some(gx) = out.x {
                    self.accumulate(grads, *x, gx);
                }
                if let Some(gw) = out.w {
                    self.accumulate(grads, *w, gw);
                }
                if let (Some(b), Some(gb)) = (b, out.b) {
                    self.accumulate(grads, *b, gb);
                }
            }
            Op::BatchMatMul {
                a,
                b,
                trans_a,
                trans_b,
            } => {
                let (ga, gb) = linear::bmm_backward(
                    self.value(*a),
                    self.value(*b),
                    g,
                    *trans_a,
                    *trans_b,
                    self.requires_grad(*a),
                    self.requires_grad(*b),
                );
                if let Some(ga) = ga {
                    self.accumulate(grads, *a, ga);
                }
                if let Some(gb) = gb {
                    self.accumulate(grads, *b, gb);
                }
            }
            Op::Softmax(x) => {
                self.accumulate(grads, *x, softmax::softmax_backward(&node.value, g));
            }
            Op::CrossEntropy {
                logits,
                labels,
                probs,
            } => {
                let gl = softmax::cross_entropy_backward(self.shape(*logits), labels, probs, g);
                self.accumulate(grads, *logits, gl);
            }
        }
        Ok(())
    }
}

/// Gradients produced by [`Graph::backward`]. Intermediate buffers are
/// released during the sweep; leaves keep theirs.
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<T>> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}
