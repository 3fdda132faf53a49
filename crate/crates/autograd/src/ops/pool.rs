use crate::error::{Result, TensorError};
use crate::graph::{Graph, Op, Var};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub(crate) fn global_max_pool_backward<T: Scalar>(
    x_shape: &[usize],
    argmax: &[usize],
    g: &Tensor<T>,
) -> Tensor<T> {
    let mut dx = Tensor::zeros(x_shape.to_vec());
    let d = dx.data_mut();
    for (&i, &gv) in argmax.iter().zip(g.data()) {
        d[i] += gv;
    }
    dx
}

impl<T: Scalar> Graph<T> {
    /// Per-channel maximum over all spatial axes: `[B, C, ...] -> [B, C, 1, ...]`.
    /// Gradient flows to the first (lowest-index) maximum.
    pub fn global_max_pool(&mut self, x: Var) -> Result<Var> {
        let xt = self.value(x);
        let shape = xt.shape();
        if shape.len() < 3 {
            return Err(TensorError::shape(
                "global_max_pool",
                format!("need [B, C, spatial...], got {shape:?}"),
            ));
        }
        let s: usize = shape[2..].iter().product();
        let mut out = Vec::with_capacity(shape[0] * shape[1]);
        let mut argmax = Vec::with_capacity(shape[0] * shape[1]);
        for (slot, chunk) in xt.data().chunks(s).enumerate() {
            let mut best = 0;
            for (j, &v) in chunk.iter().enumerate() {
                if v > chunk[best] {
                    best = j;
                }
            }
            out.push(chunk[best]);
            argmax.push(slot * s + best);
        }
        let mut out_shape = vec![shape[0], shape[1]];
        out_shape.extend(std::iter::repeat_n(1, shape.len() - 2));
        let value = Tensor::new(out_shape, out)?;
        let rg = self.any_grad(&[x]);
        Ok(self.push(value, Op::GlobalMaxPool { x, argmax }, rg))
    }
}
