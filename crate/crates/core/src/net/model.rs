use emocpd_autograd::{Graph, ParamStore, Result, Scalar, Tensor, TensorError, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::blocks::{DownSample, Irmb, MhsaIrmb, MlpHead, Stem};
use super::config::{ConfigError, LayerSpec, ModelConfig};
use super::layers::{apply_stat_updates, Builder, Fwd, Mode, StatUpdate};

#[derive(Debug, Clone)]
pub enum Block {
    Irmb(Irmb),
    Down(DownSample),
    MhsaIrmb(MhsaIrmb),
}

impl Block {
    pub fn forward<T: Scalar>(&self, f: &mut Fwd<T>, x: Var) -> Result<Var> {
        match self {
            Block::Irmb(b) => b.forward(f, x),
            Block::Down(b) => b.forward(f, x),
            Block::MhsaIrmb(b) => b.forward(f, x),
        }
    }
}

/// The full classifier: stem, body blocks and MLP head, with all weights
/// and running statistics in one [`ParamStore`].
#[derive(Debug, Clone)]
pub struct Model<T: Scalar> {
    pub config: ModelConfig,
    pub store: ParamStore<T>,
    pub stem: Stem,
    pub blocks: Vec<Block>,
    pub head: MlpHead,
}

impl<T: Scalar> Model<T> {
    /// Builds and initialises a model; weights are drawn from a ChaCha
    /// stream seeded with `seed`.
    pub fn new(config: &ModelConfig, seed: u64) -> std::result::Result<Self, ConfigError> {
        config.validate()?;
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bld = Builder::new(&mut store, &mut rng);
        let s = config.stem;
        let stem = bld.scoped("stem", |b| Stem::new(b, config.in_channels, s.f1, s.f2));
        let mut c = s.f2;
        let mut blocks = Vec::with_capacity(config.layers.len());
        for (i, spec) in config.layers.iter().enumerate() {
            let block = bld.scoped(&format!("layers.{i}"), |b| match *spec {
                LayerSpec::Irmb { f } => Block::Irmb(Irmb::new(b, c, f)),
                LayerSpec::Down { f1, f2 } => Block::Down(DownSample::new(b, c, f1, f2)),
                LayerSpec::MhsaIrmb { f1, f2, heads, d_k } => Block::MhsaIrmb(MhsaIrmb::new(b, c, f1, f2, heads, d_k)),
            });
            c = match *spec {
                LayerSpec::Irmb { .. } => c,
                LayerSpec::Down { f2, .. } | LayerSpec::MhsaIrmb { f2, .. } => f2,
            };
            blocks.push(block);
        }
        let head = bld.scoped("head", |b| MlpHead::new(b, c, config.mlp_hidden, config.classes));
        Ok(Model {
            config: config.clone(),
            store,
            stem,
            blocks,
            head,
        })
    }

    fn check_input(&self, shape: &[usize]) -> Result<()> {
        let g = self.config.grid;
        if shape.len() != 5 || shape[1] != self.config.in_channels || shape[2..] != [g, g, g] || shape[0] == 0 {
            return Err(TensorError::Shape {
                op: "model",
                detail: format!("expected [B, {}, {g}, {g}, {g}], got {shape:?}", self.config.in_channels),
            });
        }
        Ok(())
    }

    /// Logits `[B, classes]` for `x: [B, C, G, G, G]`.
    pub fn forward(&self, f: &mut Fwd<T>, x: Var) -> Result<Var> {
        Ok(*self.forward_stages(f, x)?.last().expect("head output"))
    }

    /// Output of the stem, of every block and of the head, in order.
    pub fn forward_stages(&self, f: &mut Fwd<T>, x: Var) -> Result<Vec<Var>> {
        self.check_input(f.graph.shape(x))?;
        let mut outs = Vec::with_capacity(self.blocks.len() + 2);
        let mut h = self.stem.forward(f, x)?;
        outs.push(h);
        for b in &self.blocks {
            h = b.forward(f, h)?;
            outs.push(h);
        }
        outs.push(self.head.forward(f, h)?);
        Ok(outs)
    }

    /// Eval-mode logits; model state is not touched.
    pub fn logits(&self, x: Tensor<T>) -> Result<Tensor<T>> {
        let mut graph = Graph::new();
        let xv = graph.constant(x);
        let mut f = Fwd::new(&mut graph, &self.store, Mode::Eval);
        let y = self.forward(&mut f, xv)?;
        Ok(graph.value(y).clone())
    }

    pub fn apply_stat_updates(&mut self, updates: &[StatUpdate<T>]) {
        apply_stat_updates(&mut self.store, updates);
    }

    pub fn trainable_count(&self) -> usize {
        self.store.trainable_count()
    }

    /// SHA-256 over every tensor name, shape and value.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        let mut buf = Vec::new();
        for (_, p) in self.store.iter() {
            h.update(p.name.as_bytes());
            for d in p.value.shape() {
                h.update((*d as u64).to_le_bytes());
            }
            buf.clear();
            for v in p.value.data() {
                v.write_le(&mut buf);
            }
            h.update(&buf);
        }
        hex::encode(h.finalize())
    }
}
