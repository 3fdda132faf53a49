//! 3D cross-correlation lowered to GEMM through an im2col buffer.
//!
//! Output extent per axis is `(n + 2 * pad - k) / stride + 1`.

use crate::error::{Result, TensorError};
use crate::graph::{Graph, Op, Var};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy)]
struct Geom {
    batch: usize,
    cin: usize,
    dims: [usize; 3],
    cout: usize,
    k: usize,
    stride: usize,
    pad: usize,
    out: [usize; 3],
}

impl Geom {
    fn new(x: &[usize], w: &[usize], stride: usize, pad: usize) -> Result<Self> {
        if x.len() != 5 || w.len() != 5 {
            return Err(TensorError::shape(
                "conv3d",
                format!("expected rank-5 input and weight, got {x:?} and {w:?}"),
            ));
        }
        if w[1] != x[1] {
            return Err(TensorError::shape(
                "conv3d",
                format!("weight expects {} input channels, input has {}", w[1], x[1]),
            ));
        }
        let k = w[2];
        if w[3] != k || w[4] != k {
            return Err(TensorError::shape(
                "conv3d",
                format!("non-cubic kernel {w:?}"),
            ));
        }
        if stride == 0 {
            return Err(TensorError::Unsupported {
                op: "conv3d",
                detail: "stride 0".into(),
            });
        }
        let mut out = [0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            let n = x[2 + i] + 2 * pad;
            if n < k {
                return Err(TensorError::shape(
                    "conv3d",
                    format!("kernel {k} larger than padded extent {n}"),
                ));
            }
            *o = (n - k) / stride + 1;
        }
        Ok(Geom {
            batch: x[0],
            cin: x[1],
            dims: [x[2], x[3], x[4]],
            cout: w[0],
            k,
            stride,
            pad,
            out,
        })
    }

    fn in_len(&self) -> usize {
        self.cin * self.dims.iter().product::<usize>()
    }

    fn out_spatial(&self) -> usize {
        self.out.iter().product()
    }

    fn col_rows(&self) -> usize {
        self.cin * self.k * self.k * self.k
    }

    fn is_pointwise(&self) -> bool {
        self.k == 1 && self.stride == 1 && self.pad == 0
    }
}

/// Output positions `x` along `axis` whose tap `t` lands inside the input,
/// as a half-open range.
fn valid_range(g: &Geom, t: usize, axis: usize) -> (usize, usize) {
    let (n, s, p) = (g.dims[axis] as isize, g.stride as isize, g.pad as isize);
    let out = g.out[axis] as isize;
    let t = t as isize;
    // need 0 <= x*s + t - p < n
    let lo = (p - t).max(0);
    let lo = (lo + s - 1) / s;
    let hi = ((n - 1 + p - t).div_euclid(s) + 1).clamp(0, out);
    let lo = lo.min(hi);
    (lo as usize, hi as usize)
}

/// Visits every row segment of the lowering for one sample as
/// `(col offset, input offset, length)`; consecutive columns of a segment
/// read inputs `stride` apart.
fn for_each_run(g: &Geom, mut f: impl FnMut(usize, usize, usize)) {
    let [d, h, w] = g.dims;
    let [_, oh, ow] = g.out;
    let l = g.out_spatial();
    let k = g.k;
    for ci in 0..g.cin {
        for kd in 0..k {
            let (z0, z1) = valid_range(g, kd, 0);
            for kh in 0..k {
                let (y0, y1) = valid_range(g, kh, 1);
                for kw in 0..k {
                    let (x0, x1) = valid_range(g, kw, 2);
                    if x0 == x1 {
                        continue;
                    }
                    let row = ((ci * k + kd) * k + kh) * k + kw;
                    let row_base = row * l;
                    for z in z0..z1 {
                        let iz = z * g.stride + kd - g.pad;
                        for y in y0..y1 {
                            let iy = y * g.stride + kh - g.pad;
                            let in_base = ((ci * d + iz) * h + iy) * w;
                            let col_base = row_base + (z * oh + y) * ow;
                            f(col_base + x0, in_base + x0 * g.stride + kw - g.pad, x1 - x0);
                        }
                    }
                }
            }
        }
    }
}

fn im2col<T: Scalar>(g: &Geom, x: &[T], col: &mut [T]) {
    col.iter_mut().for_each(|v| *v = T::zero());
    let s = g.stride;
    for_each_run(g, |c, i, n| {
        if s == 1 {
            col[c..c + n].copy_from_slice(&x[i..i + n]);
        } else {
            for (dst, src) in col[c..c + n].iter_mut().zip(x[i..].iter().step_by(s)) {
                *dst = *src;
            }
        }
    });
}

fn col2im<T: Scalar>(g: &Geom, col: &[T], dx: &mut [T]) {
    let s = g.stride;
    for_each_run(g, |c, i, n| {
        if s == 1 {
            for (dst, src) in dx[i..i + n].iter_mut().zip(&col[c..c + n]) {
                *dst += *src;
            }
        } else {
            for (dst, src) in dx[i..].iter_mut().step_by(s).zip(&col[c..c + n]) {
                *dst += *src;
            }
        }
    });
}

pub(crate) fn conv3d_forward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: Option<&Tensor<T>>,
    stride: usize,
    pad: usize,
) -> Result<Tensor<T>> {
    let g = Geom::new(x.shape(), w.shape(), stride, pad)?;
    if let Some(b) = b {
        if b.shape() != [g.cout] {
            return Err(TensorError::shape(
                "conv3d",
                format!("bias shape {:?}, expected [{}]", b.shape(), g.cout),
            ));
        }
    }
    let l = g.out_spatial();
    let rows = g.col_rows();
    let mut out = vec![T::zero(); g.batch * g.cout * l];
    let mut col = if g.is_pointwise() {
        Vec::new()
    } else {
        vec![T::zero(); rows * l]
    };
    for s in 0..g.batch {
        let xs = &x.data()[s * g.in_len()..(s + 1) * g.in_len()];
        let os = &mut out[s * g.cout * l..(s + 1) * g.cout * l];
        if let Some(b) = b {
            for (co, chunk) in os.chunks_mut(l).enumerate() {
                chunk.iter_mut().for_each(|v| *v = b.data()[co]);
            }
        }
        let beta = if b.is_some() { T::one() } else { T::zero() };
        let cols: &[T] = if g.is_pointwise() {
            xs
        } else {
            im2col(&g, xs, &mut col);
            &col
        };
        T::gemm(
            g.cout,
            rows,
            l,
            T::one(),
            w.data(),
            false,
            cols,
            false,
            beta,
            os,
        );
    }
    Tensor::new(vec![g.batch, g.cout, g.out[0], g.out[1], g.out[2]], out)
}

pub(crate) struct ConvGrads<T> {
    pub x: Option<Tensor<T>>,
    pub w: Option<Tensor<T>>,
    pub b: Option<Tensor<T>>,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn conv3d_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    gout: &Tensor<T>,
    stride: usize,
    pad: usize,
    need_x: bool,
    need_w: bool,
    need_b: bool,
) -> ConvGrads<T> {
    let g = Geom::new(x.shape(), w.shape(), stride, pad).expect("validated in forward");
    let l = g.out_spatial();
    let rows = g.col_rows();
    let mut dx = need_x.then(|| vec![T::zero(); x.len()]);
    let mut dw = need_w.then(|| vec![T::zero(); w.len()]);
    let mut db = need_b.then(|| vec![T::zero(); g.cout]);
    let mut col = vec![T::zero(); if g.is_pointwise() { 0 } else { rows * l }];
    let mut dcol = vec![
        T::zero();
        if need_x && !g.is_pointwise() {
            rows * l
        } else {
            0
        }
    ];

    for s in 0..g.batch {
        let xs = &x.data()[s * g.in_len()..(s + 1) * g.in_len()];
        let gs = &gout.data()[s * g.cout * l..(s + 1) * g.cout * l];
        if let Some(db) = db.as_mut() {
            for (co, chunk) in gs.chunks(l).enumerate() {
                db[co] += chunk.iter().copied().sum::<T>();
            }
        }
        if let Some(dw) = dw.as_mut() {
            let cols: &[T] = if g.is_pointwise() {
                xs
            } else {
                im2col(&g, xs, &mut col);
                &col
            };
            // dW[cout x rows] += G[cout x l] * cols^T
            T::gemm(
                g.cout,
                l,
                rows,
                T::one(),
                gs,
                false,
                cols,
                true,
                T::one(),
                dw,
            );
        }
        if let Some(dx) = dx.as_mut() {
            let dxs = &mut dx[s * g.in_len()..(s + 1) * g.in_len()];
            if g.is_pointwise() {
                T::gemm(
                    rows,
                    g.cout,
                    l,
                    T::one(),
                    w.data(),
                    true,
                    gs,
                    false,
                    T::one(),
                    dxs,
                );
            } else {
                T::gemm(
                    rows,
                    g.cout,
                    l,
                    T::one(),
                    w.data(),
                    true,
                    gs,
                    false,
                    T::zero(),
                    &mut dcol,
                );
                col2im(&g, &dcol, dxs);
            }
        }
    }
    ConvGrads {
        x: dx.map(|d| Tensor::new(x.shape().to_vec(), d).expect("shape")),
        w: dw.map(|d| Tensor::new(w.shape().to_vec(), d).expect("shape")),
        b: db.map(|d| Tensor::new(vec![g.cout], d).expect("shape")),
    }
}

impl<T: Scalar> Graph<T> {
    /// 3D cross-correlation of `x: [B, Cin, D, H, W]` with `w: [Cout, Cin, k, k, k]`.
    pub fn conv3d(
        &mut self,
        x: Var,
        w: Var,
        b: Option<Var>,
        stride: usize,
        pad: usize,
    ) -> Result<Var> {
        let value = conv3d_forward(
            self.value(x),
            self.value(w),
            b.map(|b| self.value(b)),
            stride,
            pad,
        )?;
        let mut deps = vec![x, w];
        deps.extend(b);
        let rg = self.any_grad(&deps);
        Ok(self.push(
            value,
            Op::Conv3d {
                x,
                w,
                b,
                stride,
                pad,
            },
            rg,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_pointwise_kernel() {
        let x = Tensor::<f64>::from_fn([1, 3, 2, 2, 2], |i| i as f64 * 0.25 - 1.0);
        let w = Tensor::from_fn([3, 3, 1, 1, 1], |i| if i / 3 == i % 3 { 1.0 } else { 0.0 });
        let y = conv3d_forward(&x, &w, Some(&Tensor::zeros([3])), 1, 0).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn constant_field_interior() {
        let cin = 2;
        let c = 0.5;
        let x = Tensor::<f64>::full([1, cin, 5, 5, 5], c);
        let w = Tensor::ones([1, cin, 3, 3, 3]);
        let y = conv3d_forward(&x, &w, None, 1, 1).unwrap();
        assert_eq!(y.shape(), &[1, 1, 5, 5, 5]);
        let centre = (2 * 5 + 2) * 5 + 2;
        assert_eq!(y.data()[centre], 27.0 * c * cin as f64);
        // a corner sees only 8 of the 27 taps
        assert_eq!(y.data()[0], 8.0 * c * cin as f64);
    }

    #[test]
    fn stride_two_pointwise_halves_extent() {
        for (n, want) in [(20, 10), (10, 5), (5, 3)] {
            let g = Geom::new(&[1, 1, n, n, n], &[1, 1, 1, 1, 1], 2, 0).unwrap();
            assert_eq!(g.out, [want; 3]);
        }
    }

    #[test]
    fn channel_mismatch_is_shape_error() {
        let x = Tensor::<f64>::zeros([1, 2, 3, 3, 3]);
        let w = Tensor::<f64>::zeros([1, 3, 1, 1, 1]);
        assert!(matches!(
            conv3d_forward(&x, &w, None, 1, 0),
            Err(TensorError::Shape { .. })
        ));
    }
}
