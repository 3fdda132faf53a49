use crate::error::{Result, TensorError};
use crate::graph::{Graph, Op, Var};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub(crate) struct LinearGrads<T> {
    pub x: Option<Tensor<T>>,
    pub w: Option<Tensor<T>>,
    pub b: Option<Tensor<T>>,
}

pub(crate) fn linear_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    g: &Tensor<T>,
    need_x: bool,
    need_w: bool,
    need_b: bool,
) -> LinearGrads<T> {
    let (b, n) = (x.shape()[0], x.shape()[1]);
    let m = w.shape()[0];
    let gx = need_x.then(|| {
        let mut d = vec![T::zero(); b * n];
        T::gemm(
            b,
            m,
            n,
            T::one(),
            g.data(),
            false,
            w.data(),
            false,
            T::zero(),
            &mut d,
        );
        Tensor::new(vec![b, n], d).expect("shape")
    });
    let gw = need_w.then(|| {
        let mut d = vec![T::zero(); m * n];
        T::gemm(
            m,
            b,
            n,
            T::one(),
            g.data(),
            true,
            x.data(),
            false,
            T::zero(),
            &mut d,
        );
        Tensor::new(vec![m, n], d).expect("shape")
    });
    let gb = need_b.then(|| {
        let mut d = vec![T::zero(); m];
        for row in g.data().chunks(m) {
            for (acc, &v) in d.iter_mut().zip(row) {
                *acc += v;
            }
        }
        Tensor::new(vec![m], d).expect("shape")
    });
    LinearGrads {
        x: gx,
        w: gw,
        b: gb,
    }
}

fn bmm_dims(
    a: &[usize],
    b: &[usize],
    trans_a: bool,
    trans_b: bool,
) -> Result<(usize, usize, usize, usize)> {
    if a.len() != 3 || b.len() != 3 || a[0] != b[0] {
        return Err(TensorError::shape(
            "bmm",
            format!("expected [N, ., .] operands with equal N, got {a:?} and {b:?}"),
        ));
    }
    let (m, k) = if trans_a { (a[2], a[1]) } else { (a[1], a[2]) };
    let (k2, n) = if trans_b { (b[2], b[1]) } else { (b[1], b[2]) };
    if k != k2 {
        return Err(TensorError::shape(
            "bmm",
            format!("inner dimensions {k} and {k2} differ"),
        ));
    }
    Ok((a[0], m, k, n))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn bmm_backward<T: Scalar>(
    a: &Tensor<T>,
    b: &Tensor<T>,
    g: &Tensor<T>,
    trans_a: bool,
    trans_b: bool,
    need_a: bool,
    need_b: bool,
) -> (Option<Tensor<T>>, Option<Tensor<T>>) {
    let (batch, m, k, n) = bmm_dims(a.shape(), b.shape(), trans_a, trans_b).expect("validated");
    let (sa, sb, sg) = (m * k, k * n, m * n);
    let ga = need_a.then(|| {
        let mut d = vec![T::zero(); a.len()];
        for i in 0..batch {
            let (bi, gi) = (&b.data()[i * sb..][..sb], &g.data()[i * sg..][..sg]);
            let out = &mut d[i * sa..][..sa];
            if trans_a {
                // stored [k, m] = op(B) G^T
                T::gemm(k, n, m, T::one(), bi, trans_b, gi, true, T::zero(), out);
            } else {
                // [m, k] = G op(B)^T
                T::gemm(m, n, k, T::one(), gi, false, bi, !trans_b, T::zero(), out);
            }
        }
        Tensor::new(a.shape().to_vec(), d).expect("shape")
    });
    let gb = need_b.then(|| {
        let mut d = vec![T::zero(); b.len()];
        for i in 0..batch {
            let (ai, gi) = (&a.data()[i * sa..][..sa], &g.data()[i * sg..][..sg]);
            let out = &mut d[i * sb..][..sb];
            if trans_b {
                // stored [n, k] = G^T op(A)
                T::gemm(n, m, k, T::one(), gi, true, ai, trans_a, T::zero(), out);
            } else {
                // [k, n] = op(A)^T G
                T::gemm(k, m, n, T::one(), ai, !trans_a, gi, false, T::zero(), out);
            }
        }
        Tensor::new(b.shape().to_vec(), d).expect("shape")
    });
    (ga, gb)
}

impl<T: Scalar> Graph<T> {
    /// Affine map `x W^T + b` for `x: [B, n]`, `w: [m, n]`, `b: [m]`.
    pub fn linear(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
        let (xs, ws) = (self.shape(x), self.shape(w));
        if xs.len() != 2 || ws.len() != 2 || xs[1] != ws[1] {
            return Err(TensorError::shape(
                "linear",
                format!("input {xs:?} incompatible with weight {ws:?}"),
            ));
        }
        let (bsz, n, m) = (xs[0], xs[1], ws[0]);
        if let Some(b) = b {
            if self.shape(b) != [m] {
                return Err(TensorError::shape(
                    "linear",
                    format!("bias {:?}, expected [{m}]", self.shape(b)),
                ));
            }
        }
        let mut out = vec![T::zero(); bsz * m];
        let beta = if let Some(b) = b {
            let bd = self.value(b).data();
            for row in out.chunks_mut(m) {
                row.copy_from_slice(bd);
            }
            T::one()
        } else {
            T::zero()
        };
        T::gemm(
            bsz,
            n,
            m,
            T::one(),
            self.value(x).data(),
            false,
            self.value(w).data(),
            true,
            beta,
            &mut out,
        );
        let value = Tensor::new(vec![bsz, m], out)?;
        let mut deps = vec![x, w];
        deps.extend(b);
        let rg = self.any_grad(&deps);
        Ok(self.push(value, Op::Linear { x, w, b }, rg))
    }

    /// Batched matrix product `op(a) op(b)` over a leading batch axis, where
    /// `op` optionally transposes the last two axes.
    pub fn bmm(&mut self, a: Var, b: Var, trans_a: bool, trans_b: bool) -> Result<Var> {
        let (batch, m, k, n) = bmm_dims(self.shape(a), self.shape(b), trans_a, trans_b)?;
        let (ad, bd) = (self.value(a).data(), self.value(b).data());
        let mut out = vec![T::zero(); batch * m * n];
        for i in 0..batch {
            T::gemm(
                m,
                k,
                n,
                T::one(),
                &ad[i * m * k..][..m * k],
                trans_a,
                &bd[i * k * n..][..k * n],
                trans_b,
                T::zero(),
                &mut out[i * m * n..][..m * n],
            );
        }
        let value = Tensor::new(vec![batch, m, n], out)?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(
            value,
            Op::BatchMatMul {
                a,
                b,
                trans_a,
                trans_b,
            },
            rg,
        ))
    }
}
