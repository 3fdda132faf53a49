//! Batch and layer normalization.
//!
//! Both use biased variance. Affine parameters are per channel (axis 1) for
//! both operators.

use crate::error::{Result, TensorError};
use crate::graph::{Graph, Op, Var};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Batch statistics produced by a training-mode batch norm, used by callers
/// to update running estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats<T> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

fn channel_layout(op: &'static str, shape: &[usize]) -> Result<(usize, usize, usize)> {
    if shape.len() < 2 {
        return Err(TensorError::shape(
            op,
            format!("need [B, C, ...], got {shape:?}"),
        ));
    }
    Ok((shape[0], shape[1], shape[2..].iter().product()))
}

fn check_affine<T: Scalar>(
    op: &'static str,
    c: usize,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
) -> Result<()> {
    if gamma.shape() != [c] || beta.shape() != [c] {
        return Err(TensorError::shape(
            op,
            format!(
                "affine shapes {:?}/{:?}, expected [{c}]",
                gamma.shape(),
                beta.shape()
            ),
        ));
    }
    Ok(())
}

pub(crate) struct NormGrads<T> {
    pub x: Tensor<T>,
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
}

pub(crate) fn batch_norm_backward<T: Scalar>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    mean: &[T],
    invstd: &[T],
    g: &Tensor<T>,
    training: bool,
) -> NormGrads<T> {
    let (b, c, s) = channel_layout("batch_norm", x.shape()).expect("validated");
    let n = T::from_usize(b * s).expect("count");
    let (xd, gd) = (x.data(), g.data());
    let mut dgamma = vec![T::zero(); c];
    let mut dbeta = vec![T::zero(); c];
    for bi in 0..b {
        for ci in 0..c {
            let off = (bi * c + ci) * s;
            for j in off..off + s {
                let xhat = (xd[j] - mean[ci]) * invstd[ci];
                dgamma[ci] += gd[j] * xhat;
                dbeta[ci] += gd[j];
            }
        }
    }
    let mut dx = vec![T::zero(); x.len()];
    for bi in 0..b {
        for ci in 0..c {
            let off = (bi * c + ci) * s;
            let scale = gamma.data()[ci] * invstd[ci];
            for j in off..off + s {
                dx[j] = if training {
                    let xhat = (xd[j] - mean[ci]) * invstd[ci];
                    scale * (gd[j] - dbeta[ci] / n - xhat * dgamma[ci] / n)
                } else {
                    scale * gd[j]
                };
            }
        }
    }
    NormGrads {
        x: Tensor::new(x.shape().to_vec(), dx).expect("shape"),
        gamma: Tensor::new(vec![c], dgamma).expect("shape"),
        beta: Tensor::new(vec![c], dbeta).expect("shape"),
    }
}

pub(crate) fn layer_norm_backward<T: Scalar>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    mean: &[T],
    invstd: &[T],
    g: &Tensor<T>,
) -> NormGrads<T> {
    let (b, c, s) = channel_layout("layer_norm", x.shape()).expect("validated");
    let m = c * s;
    let mf = T::from_usize(m).expect("count");
    let (xd, gd, gam) = (x.data(), g.data(), gamma.data());
    let mut dx = vec![T::zero(); x.len()];
    let mut dgamma = vec![T::zero(); c];
    let mut dbeta = vec![T::zero(); c];
    for bi in 0..b {
        let base = bi * m;
        let (mu, is) = (mean[bi], invstd[bi]);
        let mut sum_g = T::zero();
        let mut sum_gx = T::zero();
        for ci in 0..c {
            for j in base + ci * s..base + (ci + 1) * s {
                let xhat = (xd[j] - mu) * is;
                let gh = gd[j] * gam[ci];
                sum_g += gh;
                sum_gx += gh * xhat;
                dgamma[ci] += gd[j] * xhat;
                dbeta[ci] += gd[j];
            }
        }
        for ci in 0..c {
            for j in base + ci * s..base + (ci + 1) * s {
                let xhat = (xd[j] - mu) * is;
                let gh = gd[j] * gam[ci];
                dx[j] = is * (gh - sum_g / mf - xhat * sum_gx / mf);
            }
        }
    }
    NormGrads {
        x: Tensor::new(x.shape().to_vec(), dx).expect("shape"),
        gamma: Tensor::new(vec![c], dgamma).expect("shape"),
        beta: Tensor::new(vec![c], dbeta).expect("shape"),
    }
}

impl<T: Scalar> Graph<T> {
    /// Training-mode batch norm over the (batch, spatial) axes of each channel.
    /// Returns the output and the batch statistics.
    pub fn batch_norm_train(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        eps: T,
    ) -> Result<(Var, BatchStats<T>)> {
        let xt = self.value(x);
        let (b, c, s) = channel_layout("batch_norm", xt.shape())?;
        if b == 0 {
            return Err(TensorError::EmptyBatch { op: "batch_norm" });
        }
        check_affine("batch_norm", c, self.value(gamma), self.value(beta))?;
        let n = T::from_usize(b * s).expect("count");
        let xd = xt.data();
        let mut mean = vec![T::zero(); c];
        for bi in 0..b {
            for (ci, m) in mean.iter_mut().enumerate() {
                let off = (bi * c + ci) * s;
                *m += xd[off..off + s].iter().copied().sum::<T>();
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![T::zero(); c];
        for bi in 0..b {
            for (ci, v) in var.iter_mut().enumerate() {
                let off = (bi * c + ci) * s;
                *v += xd[off..off + s]
                    .iter()
                    .map(|&e| (e - mean[ci]) * (e - mean[ci]))
                    .sum::<T>();
            }
        }
        var.iter_mut().for_each(|v| *v /= n);
        let y = self.apply_batch_norm(x, gamma, beta, mean.clone(), &var, eps, true);
        Ok((y, BatchStats { mean, var }))
    }

    /// Inference-mode batch norm using fixed statistics.
    pub fn batch_norm_eval(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        running_mean: &[T],
        running_var: &[T],
        eps: T,
    ) -> Result<Var> {
        let (b, c, _) = channel_layout("batch_norm", self.shape(x))?;
        if b == 0 {
            return Err(TensorError::EmptyBatch { op: "batch_norm" });
        }
        check_affine("batch_norm", c, self.value(gamma), self.value(beta))?;
        if running_mean.len() != c || running_var.len() != c {
            return Err(TensorError::shape(
                "batch_norm",
                "running statistics length",
            ));
        }
        Ok(self.apply_batch_norm(
            x,
            gamma,
            beta,
            running_mean.to_vec(),
            running_var,
            eps,
            false,
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn apply_batch_norm(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        mean: Vec<T>,
        var: &[T],
        eps: T,
        training: bool,
    ) -> Var {
        let xt = self.value(x);
        let (b, c, s) = channel_layout("batch_norm", xt.shape()).expect("checked");
        let invstd: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let (gd, bd) = (self.value(gamma).data(), self.value(beta).data());
        let mut out = xt.data().to_vec();
        for bi in 0..b {
            for ci in 0..c {
                let off = (bi * c + ci) * s;
                let scale = gd[ci] * invstd[ci];
                for v in &mut out[off..off + s] {
                    *v = (*v - mean[ci]) * scale + bd[ci];
                }
            }
        }
        let value = Tensor::new(xt.shape().to_vec(), out).expect("shape");
        let rg = self.any_grad(&[x, gamma, beta]);
        self.push(
            value,
            Op::BatchNorm {
                x,
                gamma,
                beta,
                mean,
                invstd,
                training,
            },
            rg,
        )
    }

    /// Normalizes each sample over all of its non-batch axes, then applies a
    /// per-channel affine transform.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: T) -> Result<Var> {
        let xt = self.value(x);
        let (b, c, s) = channel_layout("layer_norm", xt.shape())?;
        let m = c * s;
        if m < 2 {
            return Err(TensorError::shape(
                "layer_norm",
                format!("need at least 2 elements per sample, got {m}"),
            ));
        }
        check_affine("layer_norm", c, self.value(gamma), self.value(beta))?;
        let mf = T::from_usize(m).expect("count");
        let (gd, bd) = (self.value(gamma).data(), self.value(beta).data());
        let mut out = xt.data().to_vec();
        let mut mean = Vec::with_capacity(b);
        let mut invstd = Vec::with_capacity(b);
        for sample in out.chunks_mut(m) {
            let mu = sample.iter().copied().sum::<T>() / mf;
            let var = sample.iter().map(|&v| (v - mu) * (v - mu)).sum::<T>() / mf;
            let is = T::one() / (var + eps).sqrt();
            for (ci, chunk) in sample.chunks_mut(s).enumerate() {
                for v in chunk {
                    *v = (*v - mu) * is * gd[ci] + bd[ci];
                }
            }
            mean.push(mu);
            invstd.push(is);
        }
        let value = Tensor::new(xt.shape().to_vec(), out).expect("shape");
        let rg = self.any_grad(&[x, gamma, beta]);
        Ok(self.push(
            value,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                mean,
                invstd,
            },
            rg,
        ))
    }
}
