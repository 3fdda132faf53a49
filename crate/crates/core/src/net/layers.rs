//! Parameterised building blocks: convolution, normalisation, the
//! conv→norm→activation unit, squeeze-excitation and linear layers.

use emocpd_autograd::init::truncated_normal;
use emocpd_autograd::{c, Activation, BatchStats, Binder, Graph, ParamId, ParamStore, Result, Scalar, Tensor, Var};
use rand::Rng;

pub const INIT_STD: f64 = 0.02;
pub const NORM_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Batch statistics awaiting folding into a batch norm's running buffers.
#[derive(Debug, Clone)]
pub struct StatUpdate<T> {
    pub mean: ParamId,
    pub var: ParamId,
    pub stats: BatchStats<T>,
}

/// State threaded through one forward pass.
pub struct Fwd<'a, T: Scalar> {
    pub graph: &'a mut Graph<T>,
    pub store: &'a ParamStore<T>,
    pub binder: Binder,
    pub mode: Mode,
    pub updates: Vec<StatUpdate<T>>,
}

impl<'a, T: Scalar> Fwd<'a, T> {
    pub fn new(graph: &'a mut Graph<T>, store: &'a ParamStore<T>, mode: Mode) -> Self {
        Fwd {
            graph,
            store,
            binder: Binder::new(),
            mode,
            updates: Vec::new(),
        }
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.binder.bind(self.graph, self.store, id)
    }
}

/// Folds batch statistics into running buffers:
/// `running <- (1 - momentum) * running + momentum * batch`.
pub fn apply_stat_updates<T: Scalar>(store: &mut ParamStore<T>, updates: &[StatUpdate<T>]) {
    let m: T = c(BN_MOMENTUM);
    let keep = T::one() - m;
    for u in updates {
        for (id, batch) in [(u.mean, &u.stats.mean), (u.var, &u.stats.var)] {
            let running = &mut store.get_mut(id).value;
            for (r, &b) in running.data_mut().iter_mut().zip(batch.iter()) {
                *r = keep * *r + m * b;
            }
        }
    }
}

/// Hands out uniquely named parameters under a prefix.
pub struct Builder<'a, T: Scalar, R: Rng> {
    pub store: &'a mut ParamStore<T>,
    pub rng: &'a mut R,
    prefix: String,
}

impl<'a, T: Scalar, R: Rng> Builder<'a, T, R> {
    pub fn new(store: &'a mut ParamStore<T>, rng: &'a mut R) -> Self {
        Builder {
            store,
            rng,
            prefix: String::new(),
        }
    }

    pub fn scoped<O>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> O) -> O {
        let saved = self.prefix.clone();
        self.prefix = format!("{saved}{name}.");
        let out = f(self);
        self.prefix = saved;
        out
    }

    fn add(&mut self, name: &str, value: Tensor<T>, trainable: bool) -> ParamId {
        self.store.add(format!("{}{name}", self.prefix), value, trainable)
    }

    pub fn weight(&mut self, name: &str, shape: &[usize]) -> ParamId {
        let t = truncated_normal(shape, INIT_STD, self.rng);
        self.add(name, t, true)
    }

    pub fn zeros(&mut self, name: &str, shape: &[usize], trainable: bool) -> ParamId {
        self.add(name, Tensor::zeros(shape.to_vec()), trainable)
    }

    pub fn ones(&mut self, name: &str, shape: &[usize], trainable: bool) -> ParamId {
        self.add(name, Tensor::ones(shape.to_vec()), trainable)
    }
}

/// 3D convolution with "same" padding for stride 1.
#[derive(Debug, Clone)]
pub struct Conv {
    pub w: ParamId,
    pub b: Option<ParamId>,
    pub stride: usize,
    pub pad: usize,
}

impl Conv {
    pub fn new<T: Scalar, R: Rng>(
        bld: &mut Builder<T, R>,
        cin: usize,
        cout: usize,
        k: usize,
        stride: usize,
        bias: bool,
    ) -> Self {
        Conv {
            w: bld.weight("w", &[cout, cin, k, k, k]),
            b: bias.then(|| bld.zeros("b", &[cout], true)),
            stride,
            pad: if stride == 1 { k / 2 } else { 0 },
        }
    }

    pub fn forward<T: Scalar>(&self, f: &mut Fwd<T>, x: Var) -> Result<Var> {
        let w = f.param(self.w);
        let b = self.b.map(|b| f.param(b));
        f.graph.conv3d(x, w, b, self.stride, self.pad)
    }
}

#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub running_mean: ParamId,
    pub running_var: ParamId,
}

impl BatchNorm {
    pub fn new<T: Scalar, R: Rng>(bld: &mut Builder<T, R>, channels: usize) -> Self {
        BatchNorm {
            gamma: bld.ones("gamma", &[channels], true),
            beta: bld.zeros("beta", &[channels], true),
            running_mean: bld.zeros("running_mean", &[channels], false),
            running_var: bld.ones("running_var", &[channels], false),
        }
    }

    pub fn forward<T: Scalar>(&self, f: &mut Fwd<T>, x: Var) -> Result<Var> {
        let (gamma, beta) = (f.param(self.gamma), f.param(self.beta));
        match f.mode {
            Mode::Train => {
                let (y, stats) = f.graph.batch_norm_train(x, gamma, beta, c(NORM_EPS))?;
                f.updates.push(StatUpdate {
                    mean: self.running_mean,
                    var: self.running_var,
                    stats,
                });
                Ok(y)
            }
            Mode::Eval => {
                let mean = f.store.value(self.running_mean).data();
                let var = f.store.value(self.running_var).data();
                f.graph.batch_norm_eval(x, gamma, beta, mean, var, c(NORM_EPS))
            }
        }
    }
}

/// Normalises each sample over all of its elements, then applies a
/// per-channel affine map.
#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
}

impl LayerNorm {
    pub fn new<T: Scalar, R: Rng>(bld: &mut Builder<T, R>, channels: usize) -> Self {
        LayerNorm {
            gamma: bld.ones("gamma", &[channels], true),
            beta: bld.zeros("beta", &[channels], true),
        }
    }

    pub fn forward<T: Scalar>(&self, f: &mut Fwd<T>, x: Var) -> Result<Var> {
        let (gamma, beta) = (f.param(self.gamma), f.param(self.beta));
        f.graph.layer_norm(x, gamma, beta, c(NORM_EPS))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    Batch,
    Layer,
    None,
}

#[derive(Debug, Clone)]
pub enum Norm {
    Batch(BatchNorm),
    Layer(LayerNorm),
    None,
}

/// Settings for a [`Cna`] unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnaConfig {
    pub filters: usize,
    pub kernel: usize,
    pub norm: NormKind,
    pub activation: Option<Activation>,
    pub stride: usize,
}

impl CnaConfig {
    pub fn new(filters: usize, kernel: usize, norm: NormKind, activation: Option<Activation>) -> Self {
        CnaConfig {
            filters,
            kernel,
            norm,
            activation,
            stride: 1,
        }
    }
}

/// Convolution, then optional normalisation, then optional activation.
/// The convolution carries a bias only when no normalisation follows.
#[derive(Debug, Clone)]
pub struct Cna {
    pub conv: Conv,
    pub norm: Norm,
    pub activation: Option<Activation>,
}

impl Cna {
    pub fn new<T: Scalar, R: Rng>(bld: &mut Builder<T, R>, cin: usize, cfg: CnaConfig) -> Self {
        let conv = bld.scoped("conv", |b| {
            Conv::new(b, cin, cfg.filters, cfg.kernel, cfg.stride, cfg.norm == NormKind::None)
        });
        let norm = match cfg.norm {
            NormKind::Batch => Norm::Batch(bld.scoped("bn", |b| BatchNorm::new(b, cfg.filters))),
            NormKind::Layer => Norm::Layer(bld.scoped("ln", |b| LayerNorm::new(b, cfg.filters))),
            NormKind::None => Norm::None,
        };
        Cna {
            conv,
            norm,
            activation: cfg.activation,
        }
    }

    pub fn forward<T: Scalar>(&self, f: &mut Fwd<T>, x: Var) -> Result<Var> {
        let y = self.conv.forward(f, x)?;
        let y = match &self.norm {
            Norm::Batch(bn) => bn.forward(f, y)?,
            Norm::Layer(ln) => ln.forward(f, y)?,
            Norm::None => y,
        };
        Ok(match self.activation {
            Some(a) => f.graph.activation(y, a),
            None => y,
        })
    }
}

/// Channel gate: global max pool, then a relu and a sigmoid pointwise unit.
/// Output is `[B, C, 1, 1, 1]` with entries in (0, 1).
#[derive(Debug, Clone)]
pub struct SqueezeExcite {
    pub reduce: Cna,
    pub expand: Cna,
}

impl SqueezeExcite {
    pub fn new<T: Scalar, R: Rng>(bld: &mut Builder<T, R>, channels: usize) -> Self {
        SqueezeExcite {
            reduce: bld.scoped("reduce", |b| {
                Cna::new(b, channels, CnaConfig::new(channels, 1, NormKind::None, Some(Activation::Relu)))
            }),
            expand: bld.scoped("expand", |b| {
                Cna::new(b, channels, CnaConfig::new(channels, 1, NormKind::None, Some(Activation::Sigmoid)))
            }),
        }
    }

    pub fn forward<T: Scalar>(&self, f: &mut Fwd<T>, x: Var) -> Result<Var> {
        let p = f.graph.global_max_pool(x)?;
        let h = self.reduce.forward(f, p)?;
        self.expand.forward(f, h)
    }
}

#[derive(Debug, Clone)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
}

impl Linear {
    pub fn new<T: Scalar, R: Rng>(bld: &mut Builder<T, R>, n_in: usize, n_out: usize) -> Self {
        Linear {
            w: bld.weight("w", &[n_out, n_in]),
            b: bld.zeros("b", &[n_out], true),
        }
    }

    pub fn forward<T: Scalar>(&self, f: &mut Fwd<T>, x: Var) -> Result<Var> {
        let (w, b) = (f.param(self.w), f.param(self.b));
        f.graph.linear(x, w, Some(b))
    }
}
