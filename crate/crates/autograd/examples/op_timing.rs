//! Wall-clock cost of each operator at the sizes one full-width training
//! batch produces (64 samples, 20-cell grids). Handy for spotting which
//! kernel dominates after a change. Build with `--release`.

use emocpd_autograd::{Graph, Tensor};
use std::time::Instant;

macro_rules! timed {
    ($name:expr, $body:expr) => {{
        let t0 = Instant::now();
        let r = $body;
        println!("{:<14} {:?}", $name, t0.elapsed());
        r
    }};
}

fn main() {
    let shape = [64usize, 4, 20, 20, 20];
    let x = Tensor::<f32>::from_fn(shape, |i| ((i * 7919) % 1000) as f32 / 1000.0 - 0.5);
    let mut g = Graph::<f32>::new();
    let xv = g.leaf(x.clone());
    let w3 = g.leaf(Tensor::full([4, 4, 3, 3, 3], 0.01));
    let w1 = g.leaf(Tensor::full([4, 4, 1, 1, 1], 0.01));
    let w7 = g.leaf(Tensor::full([4, 7, 3, 3, 3], 0.01));
    let x7 = g.constant(Tensor::full([64, 7, 20, 20, 20], 0.1));
    let gam = g.leaf(Tensor::ones([4]));
    let bet = g.leaf(Tensor::zeros([4]));
    let s = timed!("stem conv", g.conv3d(x7, w7, None, 1, 1).unwrap());
    let c3 = timed!("conv3", g.conv3d(xv, w3, None, 1, 1).unwrap());
    let c1 = timed!("conv1", g.conv3d(c3, w1, None, 1, 0).unwrap());
    let (bn, _) = timed!("bn", g.batch_norm_train(c1, gam, bet, 1e-5).unwrap());
    let a = timed!("silu", g.silu(bn));
    let p = timed!("gmp", g.global_max_pool(a).unwrap());
    let sg = timed!("sigmoid", g.sigmoid(p));
    let m = timed!("bcast mul", g.mul(a, sg).unwrap());
    let ad = timed!("add", g.add(m, a).unwrap());
    let ad2 = timed!("add stem", g.add(ad, s).unwrap());
    let l = timed!("mean", g.mean(ad2));
    let _ = timed!("backward", g.backward(l).unwrap());
}
