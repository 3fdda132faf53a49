//! Stem, inverted residual, downsampling, attention and classifier blocks.

use emocpd_autograd::{Activation, Result, Scalar, Var};
use rand::Rng;

use super::layers::{BatchNorm, Builder, Cna, CnaConfig, Conv, Fwd, LayerNorm, Linear, NormKind, SqueezeExcite};

use Activation::{Relu, Silu};

/// `skip(x) + conv1(B + SE(B) * B)` with `B = CNA(bn(x))`; the skip is a
/// pointwise projection when the channel count changes.
#[derive(Debug, Clone)]
pub struct Stem {
    pub bn_in: BatchNorm,
    pub cna: Cna,
    pub se: SqueezeExcite,
    pub proj: Conv,
    pub skip: Option<Conv>,
}

impl Stem {
    pub fn new<T: Scalar, R: Rng>(bld: &mut Builder<T, R>, cin: usize, f1: usize, f2: usize) -> Self {
        Stem {
            bn_in: bld.scoped("bn_in", |b| BatchNorm::new(b, cin)),
            cna: bld.scoped("cna", |b| Cna::new(b, cin, CnaConfig::new(f1, 3, NormKind::Batch, Some(Silu)))),
            se: bld.scoped("se", |b| SqueezeExcite::new(b, f1)),
            proj: bld.scoped("proj", |b| Conv::new(b, f1, f2, 1, 1, true)),
            skip: (cin != f2).then(|| bld.scoped("skip", |b| Conv::new(b, cin, f2, 1, 1, false))),
        }
    }

    pub fn forward<T: Scalar>(&self, f: &mut Fwd<T>, x: Var) -> Result<Var> {
        let n = self.bn_in.forward(f, x)?;
        let b = self.cna.forward(f, n)?;
        let gate = self.se.forward(f, b)?;
        let gated = f.graph.mul(gate, b)?;
        let inner = f.graph.add(b, gated)?;
        let branch = self.proj.forward(f, inner)?;
        let skip = match &self.skip {
            Some(s) => s.forward(f, x)?,
            None => x,
        };
        f.graph.add(skip, branch)
    }
}

/// `x + conv1(CNA3(B) + B)` with `B = CNA1(bn(x))`.
#[derive(Debug, Clone)]
pub struct Irmb {
    pub bn: BatchNorm,
    pub expand: Cna,
    pub mix: Cna,
    pub proj: Conv,
}

impl Irmb {
    pub fn new<T: Scalar, R: Rng>(bld: &mut Builder<T, R>, channels: usize, f: usize) -> Self {
        Irmb {
            bn: bld.scoped("bn", |b| BatchNorm::new(b, channels)),
            expand: bld.scoped("expand", |b| Cna::new(b, channels, CnaConfig::new(f, 1, NormKind::None, Some(Relu)))),
            mix: bld.scoped("mix", |b| Cna::new(b, f, CnaConfig::new(f, 3, NormKind::Batch, Some(Silu)))),
            proj: bld.scoped("proj", |b| Conv::new(b, f, channels, 1, 1, true)),
        }
    }

    pub fn forward<T: Scalar>(&self, f: &mut Fwd<T>, x: Var) -> Result<Var> {
        let n = self.bn.forward(f, x)?;
        let b = self.expand.forward(f, n)?;
        let m = self.mix.forward(f, b)?;
        let inner = f.graph.add(m, b)?;
        let y = self.proj.forward(f, inner)?;
        f.graph.add(x, y)
    }
}

/// bn → CNA1(relu) → CNA3(bn, silu) → stride-2 pointwise conv. Each spatial
/// extent `n` becomes `ceil(n / 2)`.
#[derive(Debug, Clone)]
pub struct DownSample {
    pub bn: BatchNorm,
    pub expand: Cna,
    pub mix: Cna,
    pub reduce: Conv,
}

impl DownSample {
    pub fn new<T: Scalar, R: Rng>(bld: &mut Builder<T, R>, cin: usize, f1: usize, f2: usize) -> Self {
        DownSample {
            bn: bld.scoped("bn", |b| BatchNorm::new(b, cin)),
            expand: bld.scoped("expand", |b| Cna::new(b, cin, CnaConfig::new(f1, 1, NormKind::None, Some(Relu)))),
            mix: bld.scoped("mix", |b| Cna::new(b, f1, CnaConfig::new(f1, 3, NormKind::Batch, Some(Silu)))),
            reduce: bld.scoped("reduce", |b| Conv::new(b, f1, f2, 1, 2, true)),
        }
    }

    pub fn forward<T: Scalar>(&self, f: &mut Fwd<T>, x: Var) -> Result<Var> {
        let n = self.bn.forward(f, x)?;
        let a = self.expand.forward(f, n)?;
        let m = self.mix.forward(f, a)?;
        self.reduce.forward(f, m)
    }
}

/// Multi-head self-attention over spatial tokens followed by an inverted
/// residual mix. With `L = ln(x)`:
///
/// ```text
/// head_i = V_i · softmax(Q_iᵀ K_i / sqrt(d_k))ᵀ      (channel-major tokens)
/// Att    = W_o(concat(head_1..head_h))
/// y      = skip(L) + conv1(CNA3(Att) + Att)
/// ```
///
/// The residual is taken from the normalised input.
#[derive(Debug, Clone)]
pub struct MhsaIrmb {
    pub ln: LayerNorm,
    pub q: Conv,
    pub k: Conv,
    pub v: Cna,
    pub wo: Conv,
    pub mix: Cna,
    pub proj: Conv,
    pub skip: Option<Conv>,
    pub heads: usize,
    pub d_k: usize,
}

/// Intermediate values of one attention block, exposed for inspection.
pub struct AttentionTrace {
    /// Per (sample, head) row-stochastic weights, `[B*h, N, N]`.
    pub weights: Var,
    /// Concatenated heads before the output projection, `[B, f1, D, H, W]`.
    pub heads: Var,
    pub output: Var,
}

impl MhsaIrmb {
    pub fn new<T: Scalar, R: Rng>(
        bld: &mut Builder<T, R>,
        cin: usize,
        f1: usize,
        f2: usize,
        heads: usize,
        d_k: usize,
    ) -> Self {
        MhsaIrmb {
            ln: bld.scoped("ln", |b| LayerNorm::new(b, cin)),
            q: bld.scoped("q", |b| Conv::new(b, cin, f1, 1, 1, true)),
            k: bld.scoped("k", |b| Conv::new(b, cin, f1, 1, 1, true)),
            v: bld.scoped("v", |b| Cna::new(b, cin, CnaConfig::new(f1, 1, NormKind::None, Some(Relu)))),
            wo: bld.scoped("wo", |b| Conv::new(b, f1, f1, 1, 1, true)),
            mix: bld.scoped("mix", |b| Cna::new(b, f1, CnaConfig::new(f1, 3, NormKind::Batch, Some(Silu)))),
            proj: bld.scoped("proj", |b| Conv::new(b, f1, f2, 1, 1, true)),
            skip: (cin != f2).then(|| bld.scoped("skip", |b| Conv::new(b, cin, f2, 1, 1, false))),
            heads,
            d_k,
        }
    }

    pub fn forward<T: Scalar>(&self, f: &mut Fwd<T>, x: Var) -> Result<Var> {
        Ok(self.forward_traced(f, x)?.output)
    }

    pub fn forward_traced<T: Scalar>(&self, f: &mut Fwd<T>, x: Var) -> Result<AttentionTrace> {
        let shape = f.graph.shape(x).to_vec();
        let (b, tokens) = (shape[0], shape[2..].iter().product::<usize>());
        let f1 = self.heads * self.d_k;
        let split = [b * self.heads, self.d_k, tokens];

        let l = self.ln.forward(f, x)?;
        let q = self.q.forward(f, l)?;
        let k = self.k.forward(f, l)?;
        let v = self.v.forward(f, l)?;
        let (q, k, v) = (
            f.graph.reshape(q, &split)?,
            f.graph.reshape(k, &split)?,
            f.graph.reshape(v, &split)?,
        );
        let scores = f.graph.bmm(q, k, true, false)?;
        let inv = T::one() / T::from_usize(self.d_k).expect("d_k").sqrt();
        let scores = f.graph.scale(scores, inv);
        let weights = f.graph.softmax(scores);
        let mixed = f.graph.bmm(v, weights, false, true)?;
        let mut out_shape = shape.clone();
        out_shape[1] = f1;
        let heads = f.graph.reshape(mixed, &out_shape)?;

        let att = self.wo.forward(f, heads)?;
        let m = self.mix.forward(f, att)?;
        let inner = f.graph.add(m, att)?;
        let y = self.proj.forward(f, inner)?;
        let skip = match &self.skip {
            Some(s) => s.forward(f, l)?,
            None => l,
        };
        let output = f.graph.add(skip, y)?;
        Ok(AttentionTrace { weights, heads, output })
    }
}

/// Global max pool, flatten, linear → relu → linear.
#[derive(Debug, Clone)]
pub struct MlpHead {
    pub hidden: Linear,
    pub out: Linear,
}

impl MlpHead {
    pub fn new<T: Scalar, R: Rng>(bld: &mut Builder<T, R>, cin: usize, hidden: usize, classes: usize) -> Self {
        MlpHead {
            hidden: bld.scoped("hidden", |b| Linear::new(b, cin, hidden)),
            out: bld.scoped("out", |b| Linear::new(b, hidden, classes)),
        }
    }

    pub fn forward<T: Scalar>(&self, f: &mut Fwd<T>, x: Var) -> Result<Var> {
        let p = f.graph.global_max_pool(x)?;
        let flat = f.graph.flatten(p)?;
        let h = self.hidden.forward(f, flat)?;
        let h = f.graph.relu(h);
        self.out.forward(f, h)
    }
}
