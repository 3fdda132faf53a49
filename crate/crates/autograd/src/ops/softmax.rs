use crate::error::{Result, TensorError};
use crate::graph::{Graph, Op, Var};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

fn softmax_rows<T: Scalar>(data: &[T], width: usize) -> Vec<T> {
    let mut out = data.to_vec();
    for row in out.chunks_mut(width) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

/// Row-wise softmax over the last axis of a plain tensor.
pub fn softmax_last_axis<T: Scalar>(t: &Tensor<T>) -> Tensor<T> {
    let width = *t.shape().last().expect("rank >= 1");
    Tensor::new(t.shape().to_vec(), softmax_rows(t.data(), width)).expect("shape")
}

pub(crate) fn softmax_backward<T: Scalar>(y: &Tensor<T>, g: &Tensor<T>) -> Tensor<T> {
    let width = *y.shape().last().expect("rank");
    let mut dx = vec![T::zero(); y.len()];
    for ((yr, gr), dr) in y
        .data()
        .chunks(width)
        .zip(g.data().chunks(width))
        .zip(dx.chunks_mut(width))
    {
        let dot: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
        for ((d, &yv), &gv) in dr.iter_mut().zip(yr).zip(gr) {
            *d = yv * (gv - dot);
        }
    }
    Tensor::new(y.shape().to_vec(), dx).expect("shape")
}

pub(crate) fn cross_entropy_backward<T: Scalar>(
    shape: &[usize],
    labels: &[usize],
    probs: &[T],
    g: &Tensor<T>,
) -> Tensor<T> {
    let (b, k) = (shape[0], shape[1]);
    let scale = g.data()[0] / T::from_usize(b).expect("batch");
    let mut d: Vec<T> = probs.iter().map(|&p| p * scale).collect();
    for (i, &l) in labels.iter().enumerate() {
        d[i * k + l] -= scale;
    }
    Tensor::new(shape.to_vec(), d).expect("shape")
}

impl<T: Scalar> Graph<T> {
    /// Numerically stable softmax over the last axis.
    pub fn softmax(&mut self, x: Var) -> Var {
        let value = softmax_last_axis(self.value(x));
        let rg = self.any_grad(&[x]);
        self.push(value, Op::Softmax(x), rg)
    }

    /// Mean over the batch of `-log softmax(logits)[label]` for `logits: [B, K]`.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let shape = self.shape(logits).to_vec();
        if shape.len() != 2 || shape[0] != labels.len() {
            return Err(TensorError::shape(
                "cross_entropy",
                format!("logits {shape:?} with {} labels", labels.len()),
            ));
        }
        let k = shape[1];
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(TensorError::LabelOutOfRange {
                op: "cross_entropy",
                label: bad,
                classes: k,
            });
        }
        let data = self.value(logits).data();
        let mut loss = T::zero();
        for (row, &l) in data.chunks(k).zip(labels) {
            let max = row.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = row.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max;
            loss += lse - row[l];
        }
        loss /= T::from_usize(labels.len()).expect("batch");
        let probs = softmax_rows(data, k);
        let rg = self.any_grad(&[logits]);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                labels: labels.to_vec(),
                probs,
            },
            rg,
        ))
    }
}
