//! Reverse-mode gradients against central differences for every operator.
//! Each family returns one named report per configuration; callers decide
//! the tolerance.

use emocpd_autograd::gradcheck::{check_gradients, GradCheckConfig, GradCheckReport};
use emocpd_autograd::{Graph, Result, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Named = (String, GradCheckReport);

fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    Tensor::from_fn(shape.to_vec(), |_| rng.random_range(-1.5..1.5))
}

/// Reduces an output to a scalar through fixed random weights so that every
/// output element contributes a distinct sensitivity.
fn weighted(g: &mut Graph<f64>, y: Var, seed: u64) -> Result<Var> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random(&mut rng, g.shape(y));
    let wv = g.constant(w);
    let p = g.mul(y, wv)?;
    Ok(g.sum(p))
}

fn check<F>(name: impl Into<String>, inputs: Vec<Tensor<f64>>, max_coords: usize, f: F) -> Named
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let cfg = GradCheckConfig {
        max_coords,
        ..GradCheckConfig::default()
    };
    let report = check_gradients(&inputs, cfg, f).expect("gradient check runs");
    assert!(report.coords_checked > 0);
    (name.into(), report)
}

pub fn conv3d() -> Vec<Named> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    [(1, 1, 0), (3, 1, 1), (1, 2, 0), (3, 2, 1), (3, 1, 0)]
        .into_iter()
        .map(|(k, stride, pad)| {
            let x = random(&mut rng, &[2, 2, 4, 3, 5]);
            let w = random(&mut rng, &[3, 2, k, k, k]);
            let b = random(&mut rng, &[3]);
            check(
                format!("conv3d k{k} s{stride} p{pad}"),
                vec![x, w, b],
                usize::MAX,
                move |g, v| {
                    let y = g.conv3d(v[0], v[1], Some(v[2]), stride, pad)?;
                    weighted(g, y, 7)
                },
            )
        })
        .collect()
}

pub fn norms() -> Vec<Named> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random(&mut rng, &[3, 2, 2, 2, 2]);
    let gamma = random(&mut rng, &[2]);
    let beta = random(&mut rng, &[2]);
    let mut out = vec![
        check(
            "batch_norm train",
            vec![x.clone(), gamma.clone(), beta.clone()],
            usize::MAX,
            |g, v| {
                let (y, _) = g.batch_norm_train(v[0], v[1], v[2], 1e-5)?;
                weighted(g, y, 8)
            },
        ),
        check(
            "batch_norm eval",
            vec![x, gamma, beta],
            usize::MAX,
            |g, v| {
                let y = g.batch_norm_eval(v[0], v[1], v[2], &[0.1, -0.3], &[0.7, 1.9], 1e-5)?;
                weighted(g, y, 9)
            },
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random(&mut rng, &[2, 3, 2, 2, 1]);
    let gamma = random(&mut rng, &[3]);
    let beta = random(&mut rng, &[3]);
    out.push(check(
        "layer_norm",
        vec![x, gamma, beta],
        usize::MAX,
        |g, v| {
            let y = g.layer_norm(v[0], v[1], v[2], 1e-5)?;
            weighted(g, y, 10)
        },
    ));
    out
}

pub fn activations() -> Vec<Named> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    // keep relu inputs clear of zero so the difference quotient is smooth
    let x = Tensor::from_fn([4, 5], |_| {
        let v: f64 = rng.random_range(0.1..1.5);
        if rng.random_bool(0.5) {
            v
        } else {
            -v
        }
    });
    [("relu", 0), ("sigmoid", 1), ("silu", 2)]
        .into_iter()
        .map(|(name, which)| {
            check(name, vec![x.clone()], usize::MAX, move |g, v| {
                let y = match which {
                    0 => g.relu(v[0]),
                    1 => g.sigmoid(v[0]),
                    _ => g.silu(v[0]),
                };
                weighted(g, y, 11)
            })
        })
        .collect()
}

pub fn pooling() -> Vec<Named> {
    let x = Tensor::from_fn([2, 3, 2, 2, 2], |i| ((i * 37) % 48) as f64 * 0.1);
    vec![check("global_max_pool", vec![x], usize::MAX, |g, v| {
        let y = g.global_max_pool(v[0])?;
        weighted(g, y, 12)
    })]
}

pub fn dense_and_losses() -> Vec<Named> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random(&mut rng, &[3, 6]);
    let w = random(&mut rng, &[4, 6]);
    let b = random(&mut rng, &[4]);
    let mut out = vec![
        check(
            "linear",
            vec![x.clone(), w.clone(), b.clone()],
            usize::MAX,
            |g, v| {
                let y = g.linear(v[0], v[1], Some(v[2]))?;
                weighted(g, y, 13)
            },
        ),
        check(
            "softmax",
            vec![random(&mut rng, &[3, 5])],
            usize::MAX,
            |g, v| {
                let y = g.softmax(v[0]);
                weighted(g, y, 14)
            },
        ),
        check("cross_entropy", vec![x, w, b], usize::MAX, |g, v| {
            let y = g.linear(v[0], v[1], Some(v[2]))?;
            g.cross_entropy(y, &[0, 3, 1])
        }),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (ta, tb) in [(false, false), (true, false), (false, true), (true, true)] {
        let a = random(&mut rng, if ta { &[2, 4, 3] } else { &[2, 3, 4] });
        let bm = random(&mut rng, if tb { &[2, 5, 4] } else { &[2, 4, 5] });
        out.push(check(
            format!("bmm ta={ta} tb={tb}"),
            vec![a, bm],
            usize::MAX,
            move |g, v| {
                let y = g.bmm(v[0], v[1], ta, tb)?;
                weighted(g, y, 15)
            },
        ));
    }
    out
}

pub fn shape_and_broadcast() -> Vec<Named> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = random(&mut rng, &[2, 3, 2, 2, 2]);
    let gate = random(&mut rng, &[2, 3, 1, 1, 1]);
    vec![check(
        "broadcast/permute/reshape/scale/mean",
        vec![x, gate],
        usize::MAX,
        |g, v| {
            let m = g.mul(v[0], v[1])?;
            let a = g.add(m, v[1])?;
            let p = g.permute(a, &[0, 2, 1, 3, 4])?;
            let r = g.reshape(p, &[2, 24])?;
            let s = g.scale(r, 0.5);
            let w = weighted(g, s, 16)?;
            let mean = g.mean(v[0]);
            g.add(w, mean)
        },
    )]
}

pub fn attention_pattern() -> Vec<Named> {
    // projections, a scaled score matrix, softmax and a value mix, all in
    // channel-major layout
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = random(&mut rng, &[1, 4, 2, 2, 1]);
    let wq = random(&mut rng, &[4, 4, 1, 1, 1]);
    let wk = random(&mut rng, &[4, 4, 1, 1, 1]);
    vec![check("attention composite", vec![x, wq, wk], 40, |g, v| {
        let q = g.conv3d(v[0], v[1], None, 1, 0)?;
        let k = g.conv3d(v[0], v[2], None, 1, 0)?;
        let q = g.reshape(q, &[1, 4, 4])?;
        let k = g.reshape(k, &[1, 4, 4])?;
        let s = g.bmm(q, k, true, false)?;
        let s = g.scale(s, 0.5);
        let a = g.softmax(s);
        let xv = g.reshape(v[0], &[1, 4, 4])?;
        let o = g.bmm(xv, a, false, true)?;
        weighted(g, o, 17)
    })]
}

pub fn all() -> Vec<Named> {
    [
        conv3d(),
        norms(),
        activations(),
        pooling(),
        dense_and_losses(),
        shape_and_broadcast(),
        attention_pattern(),
    ]
    .into_iter()
    .flatten()
    .collect()
}
