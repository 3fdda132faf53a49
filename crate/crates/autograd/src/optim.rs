//! Adam with decoupled weight decay.

use crate::error::{Result, TensorError};
use crate::params::ParamStore;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-3,
        }
    }
}

/// First/second moment buffers for one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments<T> {
    pub m: Tensor<T>,
    pub v: Tensor<T>,
}

/// One update of a single tensor at step `t` (1-based):
/// `p <- p - lr*wd*p`, then the bias-corrected Adam step.
pub fn adam_update<T: Scalar>(
    param: &mut Tensor<T>,
    grad: &Tensor<T>,
    moments: &mut Moments<T>,
    t: u64,
    cfg: &AdamConfig,
) -> Result<()> {
    if param.shape() != grad.shape()
        || param.shape() != moments.m.shape()
        || param.shape() != moments.v.shape()
    {
        return Err(TensorError::shape(
            "adam",
            format!("param {:?} vs grad {:?}", param.shape(), grad.shape()),
        ));
    }
    let lr = cfg.lr;
    let decay = T::from_f64_lossy(1.0 - lr * cfg.weight_decay);
    let (b1, b2) = (T::from_f64_lossy(cfg.beta1), T::from_f64_lossy(cfg.beta2));
    let (one_b1, one_b2) = (
        T::from_f64_lossy(1.0 - cfg.beta1),
        T::from_f64_lossy(1.0 - cfg.beta2),
    );
    let bc1 = T::from_f64_lossy(1.0 - cfg.beta1.powi(t as i32));
    let bc2 = T::from_f64_lossy(1.0 - cfg.beta2.powi(t as i32));
    let (lr, eps) = (T::from_f64_lossy(lr), T::from_f64_lossy(cfg.eps));
    let m = moments.m.data_mut();
    let v = moments.v.data_mut();
    for (((p, &g), m), v) in param.data_mut().iter_mut().zip(grad.data()).zip(m).zip(v) {
        if cfg.weight_decay != 0.0 {
            *p *= decay;
        }
        *m = b1 * *m + one_b1 * g;
        *v = b2 * *v + one_b2 * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub step: u64,
    pub moments: Vec<Option<Moments<T>>>,
}

#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub config: AdamConfig,
    pub state: AdamState<T>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            state: AdamState {
                step: 0,
                moments: Vec::new(),
            },
        }
    }

    /// Applies one update to every trainable parameter that holds a gradient.
    pub fn step(&mut self, store: &mut ParamStore<T>) -> Result<()> {
        self.state.step += 1;
        let t = self.state.step;
        if self.state.moments.len() < store.len() {
            self.state.moments.resize(store.len(), None);
        }
        for (slot, p) in self.state.moments.iter_mut().zip(store.iter_mut()) {
            if !p.requires_grad {
                continue;
            }
            let Some(grad) = p.grad.as_ref() else {
                continue;
            };
            let moments = slot.get_or_insert_with(|| Moments {
                m: Tensor::zeros(p.value.shape().to_vec()),
                v: Tensor::zeros(p.value.shape().to_vec()),
            });
            adam_update(&mut p.value, grad, moments, t, &self.config)?;
        }
        Ok(())
    }
}
