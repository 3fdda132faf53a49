//! Finite-difference gradient checks of every network module, including the
//! assembled model. Each returns a named report; callers pick the bound.

use emocpd::net::blocks::{DownSample, Irmb, MhsaIrmb, MlpHead, Stem};
use emocpd::net::layers::{Builder, Cna, CnaConfig, NormKind, SqueezeExcite};
use emocpd::net::{Model, ModelConfig, StemConfig};
use emocpd_autograd::gradcheck::GradCheckReport;
use emocpd_autograd::{Activation, ParamStore};
use rand_chacha::ChaCha8Rng;

use super::{module_gradcheck, random_tensor, randomize_trainables, rng};

pub type Named = (String, GradCheckReport);

/// Builds a module into a fresh store and replaces its trainables with
/// uniform noise so no layer starts at a degenerate point.
pub fn build<M>(seed: u64, f: impl FnOnce(&mut Builder<f64, ChaCha8Rng>) -> M) -> (ParamStore<f64>, M) {
    let mut store = ParamStore::new();
    let mut r = rng(seed);
    let m = f(&mut Builder::new(&mut store, &mut r));
    randomize_trainables(&mut store, seed + 1000, 0.8);
    (store, m)
}

/// A model small enough to difference every parameter block on a 6³ grid.
pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        grid: 6,
        mlp_hidden: 8,
        stem: StemConfig { f1: 4, f2: 4 },
        ..ModelConfig::uniform(4, 8)
    }
}

pub fn cna() -> Vec<Named> {
    [NormKind::Batch, NormKind::Layer, NormKind::None]
        .into_iter()
        .enumerate()
        .map(|(i, norm)| {
            let (store, cna) = build(i as u64, |b| Cna::new(b, 3, CnaConfig::new(4, 3, norm, Some(Activation::Silu))));
            let x = random_tensor(&mut rng(50 + i as u64), &[2, 3, 4, 4, 4], 1.0);
            (format!("cna {norm:?}"), module_gradcheck(&store, x, 60, |f, x| cna.forward(f, x)))
        })
        .collect()
}

pub fn squeeze_excite() -> Vec<Named> {
    let (store, se) = build(3, |b| SqueezeExcite::new(b, 4));
    let x = random_tensor(&mut rng(4), &[2, 4, 3, 3, 3], 1.0);
    vec![("squeeze-excite".into(), module_gradcheck(&store, x, 60, |f, x| se.forward(f, x)))]
}

pub fn stem() -> Vec<Named> {
    let (store, stem) = build(5, |b| Stem::new(b, 7, 4, 4));
    let x = random_tensor(&mut rng(6), &[2, 7, 6, 6, 6], 1.0);
    vec![("stem".into(), module_gradcheck(&store, x, 40, |f, x| stem.forward(f, x)))]
}

pub fn irmb() -> Vec<Named> {
    let (store, irmb) = build(7, |b| Irmb::new(b, 4, 4));
    let x = random_tensor(&mut rng(8), &[2, 4, 4, 4, 4], 1.0);
    vec![("irmb".into(), module_gradcheck(&store, x, 40, |f, x| irmb.forward(f, x)))]
}

pub fn downsample() -> Vec<Named> {
    let (store, down) = build(9, |b| DownSample::new(b, 4, 4, 3));
    let x = random_tensor(&mut rng(10), &[2, 4, 5, 5, 5], 1.0);
    vec![("downsample".into(), module_gradcheck(&store, x, 40, |f, x| down.forward(f, x)))]
}

/// With and without the projection on the skip path.
pub fn mhsa_irmb() -> Vec<Named> {
    [(11, 4), (13, 3)]
        .into_iter()
        .map(|(seed, f2)| {
            let (store, blk) = build(seed, |b| MhsaIrmb::new(b, 4, 4, f2, 2, 2));
            let x = random_tensor(&mut rng(seed + 1), &[2, 4, 3, 3, 3], 1.0);
            (format!("mhsa-irmb f2={f2}"), module_gradcheck(&store, x, 40, |f, x| blk.forward(f, x)))
        })
        .collect()
}

pub fn mlp_head() -> Vec<Named> {
    let (store, head) = build(15, |b| MlpHead::new(b, 4, 6, 20));
    let x = random_tensor(&mut rng(16), &[3, 4, 2, 2, 2], 1.0);
    vec![("mlp head".into(), module_gradcheck(&store, x, 60, |f, x| head.forward(f, x)))]
}

pub fn full_model() -> Vec<Named> {
    let mut model = Model::<f64>::new(&tiny_config(), 17).unwrap();
    randomize_trainables(&mut model.store, 18, 0.8);
    // With 432 pre-activations per relu channel, a bias nudge of 1e-4 can
    // push one across zero; this input keeps every stencil on one side.
    let x = random_tensor(&mut rng(21), &[2, 7, 6, 6, 6], 1.0);
    let store = model.store.clone();
    vec![("tiny model".into(), module_gradcheck(&store, x, 12, |f, x| model.forward(f, x)))]
}

pub fn all() -> Vec<Named> {
    [cna(), squeeze_excite(), stem(), irmb(), downsample(), mhsa_irmb(), mlp_head(), full_model()]
        .into_iter()
        .flatten()
        .collect()
}
