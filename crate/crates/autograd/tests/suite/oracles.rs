//! Forward kernels against naive loop implementations on random inputs.
//! Each check returns the number of instances tried and the largest
//! absolute deviation seen; shape disagreements panic.

use emocpd_autograd::{softmax_last_axis, Graph, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub name: &'static str,
    pub instances: usize,
    pub max_err: f64,
}

impl OracleOutcome {
    fn new(name: &'static str) -> Self {
        OracleOutcome {
            name,
            instances: 0,
            max_err: 0.0,
        }
    }

    fn compare(&mut self, got: &[f64], want: &[f64]) {
        assert_eq!(got.len(), want.len(), "{}: output length", self.name);
        for (g, w) in got.iter().zip(want) {
            self.max_err = self.max_err.max((g - w).abs());
        }
    }
}

fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    Tensor::from_fn(shape.to_vec(), |_| rng.random_range(-2.0..2.0))
}

fn naive_conv3d(
    x: &Tensor<f64>,
    w: &Tensor<f64>,
    b: Option<&Tensor<f64>>,
    stride: usize,
    pad: usize,
) -> (Vec<usize>, Vec<f64>) {
    let [bs, cin, d, h, wd] = x.shape().try_into().unwrap();
    let [cout, _, k, _, _] = w.shape().try_into().unwrap();
    let o = |n: usize| (n + 2 * pad - k) / stride + 1;
    let (od, oh, ow) = (o(d), o(h), o(wd));
    let xi = |s: usize, c: usize, z: isize, y: isize, xx: isize| -> f64 {
        if z < 0 || y < 0 || xx < 0 || z >= d as isize || y >= h as isize || xx >= wd as isize {
            return 0.0;
        }
        x.data()[(((s * cin + c) * d + z as usize) * h + y as usize) * wd + xx as usize]
    };
    let mut out = Vec::new();
    for s in 0..bs {
        for co in 0..cout {
            for z in 0..od {
                for y in 0..oh {
                    for xx in 0..ow {
                        let mut acc = b.map(|b| b.data()[co]).unwrap_or(0.0);
                        for ci in 0..cin {
                            for a in 0..k {
                                for bb in 0..k {
                                    for cc in 0..k {
                                        let iz = (z * stride + a) as isize - pad as isize;
                                        let iy = (y * stride + bb) as isize - pad as isize;
                                        let ix = (xx * stride + cc) as isize - pad as isize;
                                        let wv =
                                            w.data()[(((co * cin + ci) * k + a) * k + bb) * k + cc];
                                        acc += wv * xi(s, ci, iz, iy, ix);
                                    }
                                }
                            }
                        }
                        out.push(acc);
                    }
                }
            }
        }
    }
    (vec![bs, cout, od, oh, ow], out)
}

pub fn conv3d() -> OracleOutcome {
    let mut out = OracleOutcome::new("conv3d");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    while out.instances < 120 {
        let k = if rng.random_bool(0.5) { 1 } else { 3 };
        let stride = rng.random_range(1..=2);
        let pad = rng.random_range(0..=1);
        let dims: Vec<usize> = (0..3).map(|_| rng.random_range(1..=5)).collect();
        if dims.iter().any(|&n| n + 2 * pad < k) {
            continue;
        }
        let (bs, cin, cout) = (
            rng.random_range(1..=2),
            rng.random_range(1..=3),
            rng.random_range(1..=3),
        );
        let x = random(&mut rng, &[bs, cin, dims[0], dims[1], dims[2]]);
        let w = random(&mut rng, &[cout, cin, k, k, k]);
        let b = rng.random_bool(0.5).then(|| random(&mut rng, &[cout]));
        let mut g = Graph::new();
        let (xv, wv) = (g.constant(x.clone()), g.constant(w.clone()));
        let bv = b.clone().map(|b| g.constant(b));
        let y = g.conv3d(xv, wv, bv, stride, pad).unwrap();
        let (shape, want) = naive_conv3d(&x, &w, b.as_ref(), stride, pad);
        assert_eq!(g.shape(y), shape.as_slice());
        out.compare(g.value(y).data(), &want);
        out.instances += 1;
    }
    out
}

pub fn linear() -> OracleOutcome {
    let mut out = OracleOutcome::new("linear");
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let (b, n, m) = (
            rng.random_range(1..=4),
            rng.random_range(1..=6),
            rng.random_range(1..=6),
        );
        let x = random(&mut rng, &[b, n]);
        let w = random(&mut rng, &[m, n]);
        let bias = random(&mut rng, &[m]);
        let mut g = Graph::new();
        let (xv, wv, bv) = (
            g.constant(x.clone()),
            g.constant(w.clone()),
            g.constant(bias.clone()),
        );
        let y = g.linear(xv, wv, Some(bv)).unwrap();
        let mut want = Vec::new();
        for i in 0..b {
            for j in 0..m {
                want.push(
                    bias.data()[j]
                        + (0..n)
                            .map(|t| x.data()[i * n + t] * w.data()[j * n + t])
                            .sum::<f64>(),
                );
            }
        }
        assert_eq!(g.shape(y), &[b, m]);
        out.compare(g.value(y).data(), &want);
        out.instances += 1;
    }
    out
}

pub fn bmm() -> OracleOutcome {
    let mut out = OracleOutcome::new("bmm");
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..100 {
        let (ta, tb) = (rng.random_bool(0.5), rng.random_bool(0.5));
        let b = rng.random_range(1..=3);
        let (p, q, r) = (
            rng.random_range(1..=4),
            rng.random_range(1..=4),
            rng.random_range(1..=4),
        );
        let a_shape = if ta { [b, q, p] } else { [b, p, q] };
        let b_shape = if tb { [b, r, q] } else { [b, q, r] };
        let a = random(&mut rng, &a_shape);
        let bb = random(&mut rng, &b_shape);
        let mut g = Graph::new();
        let (av, bv) = (g.constant(a.clone()), g.constant(bb.clone()));
        let y = g.bmm(av, bv, ta, tb).unwrap();
        let at = |s: usize, i: usize, j: usize| {
            if ta {
                a.data()[(s * q + j) * p + i]
            } else {
                a.data()[(s * p + i) * q + j]
            }
        };
        let bt = |s: usize, i: usize, j: usize| {
            if tb {
                bb.data()[(s * r + j) * q + i]
            } else {
                bb.data()[(s * q + i) * r + j]
            }
        };
        let mut want = Vec::new();
        for s in 0..b {
            for i in 0..p {
                for j in 0..r {
                    want.push((0..q).map(|t| at(s, i, t) * bt(s, t, j)).sum());
                }
            }
        }
        assert_eq!(g.shape(y), &[b, p, r]);
        out.compare(g.value(y).data(), &want);
        out.instances += 1;
    }
    out
}

pub fn global_max_pool() -> OracleOutcome {
    let mut out = OracleOutcome::new("global_max_pool");
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let shape = [
            rng.random_range(1..=3),
            rng.random_range(1..=4),
            rng.random_range(1..=4),
            rng.random_range(1..=4),
            rng.random_range(1..=4),
        ];
        let x = random(&mut rng, &shape);
        let mut g = Graph::new();
        let xv = g.constant(x.clone());
        let y = g.global_max_pool(xv).unwrap();
        assert_eq!(g.shape(y), &[shape[0], shape[1], 1, 1, 1]);
        let s: usize = shape[2..].iter().product();
        let want: Vec<f64> = x
            .data()
            .chunks(s)
            .map(|c| c.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        out.compare(g.value(y).data(), &want);
        out.instances += 1;
    }
    out
}

/// Softmax and the mean cross-entropy share one set of random logits.
pub fn softmax_and_cross_entropy() -> [OracleOutcome; 2] {
    let mut sm = OracleOutcome::new("softmax");
    let mut ce = OracleOutcome::new("cross_entropy");
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..100 {
        let (b, k) = (rng.random_range(1..=5), rng.random_range(2..=20));
        let z = Tensor::from_fn([b, k], |_| rng.random_range(-30.0..30.0));
        let labels: Vec<usize> = (0..b).map(|_| rng.random_range(0..k)).collect();
        let mut want_p = Vec::new();
        let mut want_loss = 0.0;
        for (i, row) in z.data().chunks(k).enumerate() {
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let denom: f64 = row.iter().map(|v| (v - m).exp()).sum();
            want_p.extend(row.iter().map(|v| (v - m).exp() / denom));
            want_loss += denom.ln() + m - row[labels[i]];
        }
        sm.compare(softmax_last_axis(&z).data(), &want_p);
        let mut g = Graph::new();
        let zv = g.constant(z);
        // the graph op must agree with the standalone kernel too
        let pv = g.softmax(zv);
        sm.compare(g.value(pv).data(), &want_p);
        let l = g.cross_entropy(zv, &labels).unwrap();
        ce.compare(g.value(l).data(), &[want_loss / b as f64]);
        sm.instances += 1;
        ce.instances += 1;
    }
    [sm, ce]
}

/// Batch and layer normalisation against two-pass moments.
pub fn norms() -> [OracleOutcome; 2] {
    let mut bn = OracleOutcome::new("batch_norm");
    let mut ln = OracleOutcome::new("layer_norm");
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..100 {
        let (b, c, s) = (
            rng.random_range(1..=3),
            rng.random_range(1..=4),
            rng.random_range(2..=8),
        );
        let x = random(&mut rng, &[b, c, s]);
        let gamma = random(&mut rng, &[c]);
        let beta = random(&mut rng, &[c]);
        let eps = 1e-5;
        let at = |bi: usize, ci: usize, j: usize| x.data()[(bi * c + ci) * s + j];

        let mut g = Graph::new();
        let (xv, gv, bv) = (
            g.constant(x.clone()),
            g.constant(gamma.clone()),
            g.constant(beta.clone()),
        );
        let (y, stats) = g.batch_norm_train(xv, gv, bv, eps).unwrap();
        let mut want = vec![0.0; x.len()];
        for ci in 0..c {
            let vals: Vec<f64> = (0..b)
                .flat_map(|bi| (0..s).map(move |j| (bi, j)))
                .map(|(bi, j)| at(bi, ci, j))
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            bn.compare(&[stats.mean[ci], stats.var[ci]], &[mean, var]);
            for bi in 0..b {
                for j in 0..s {
                    want[(bi * c + ci) * s + j] = (at(bi, ci, j) - mean) / (var + eps).sqrt()
                        * gamma.data()[ci]
                        + beta.data()[ci];
                }
            }
        }
        bn.compare(g.value(y).data(), &want);

        let y = g.layer_norm(xv, gv, bv, eps).unwrap();
        for bi in 0..b {
            let vals = &x.data()[bi * c * s..(bi + 1) * c * s];
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            for ci in 0..c {
                for j in 0..s {
                    want[(bi * c + ci) * s + j] = (at(bi, ci, j) - mean) / (var + eps).sqrt()
                        * gamma.data()[ci]
                        + beta.data()[ci];
                }
            }
        }
        ln.compare(g.value(y).data(), &want);
        bn.instances += 1;
        ln.instances += 1;
    }
    [bn, ln]
}

pub fn all() -> Vec<OracleOutcome> {
    let mut v = vec![conv3d(), linear(), bmm(), global_max_pool()];
    v.extend(softmax_and_cross_entropy());
    v.extend(norms());
    v
}
