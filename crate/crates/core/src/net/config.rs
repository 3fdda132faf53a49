//! Model layout, validation and the closed-form parameter count.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amino::NUM_CLASSES;
use crate::features::FEATURE_DIM;
use crate::voxel::GRID_SIZE;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid model config: {0}")]
    Invalid(String),
    #[error("config parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StemConfig {
    pub f1: usize,
    pub f2: usize,
}

/// One body block. Blocks run in order after the stem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerSpec {
    /// Channel-preserving inverted residual block with `f` inner filters.
    Irmb { f: usize },
    /// Stride-2 reduction to `f2` channels through `f1` inner filters.
    Down { f1: usize, f2: usize },
    /// Attention block; `heads * d_k` must equal `f1`.
    MhsaIrmb { f1: usize, f2: usize, heads: usize, d_k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub in_channels: usize,
    pub grid: usize,
    pub classes: usize,
    pub mlp_hidden: usize,
    pub stem: StemConfig,
    pub layers: Vec<LayerSpec>,
}

impl Default for ModelConfig {
    /// Stem 16/16, two iRMB at 16, down to 32, two iRMB, down to 64, two
    /// attention blocks (4 heads of 16), down to 64, two attention blocks.
    fn default() -> Self {
        use LayerSpec::*;
        let mhsa = MhsaIrmb {
            f1: 64,
            f2: 64,
            heads: 4,
            d_k: 16,
        };
        ModelConfig {
            in_channels: FEATURE_DIM,
            grid: GRID_SIZE,
            classes: NUM_CLASSES,
            mlp_hidden: 720,
            stem: StemConfig { f1: 16, f2: 16 },
            layers: vec![
                Irmb { f: 16 },
                Irmb { f: 16 },
                Down { f1: 32, f2: 32 },
                Irmb { f: 32 },
                Irmb { f: 32 },
                Down { f1: 64, f2: 64 },
                mhsa,
                mhsa,
                Down { f1: 64, f2: 64 },
                mhsa,
                mhsa,
            ],
        }
    }
}

/// Channels and spatial extent after one stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageShape {
    pub name: String,
    pub channels: usize,
    pub spatial: usize,
}

fn conv(cin: usize, cout: usize, k: usize, bias: bool) -> usize {
    cout * cin * k * k * k + if bias { cout } else { 0 }
}

impl ModelConfig {
    /// Same block layout with every width set to `w` (attention uses two
    /// heads of `w / 2`) and the given hidden width.
    pub fn uniform(w: usize, mlp_hidden: usize) -> Self {
        let mut cfg = ModelConfig {
            mlp_hidden,
            stem: StemConfig { f1: w, f2: w },
            ..Self::default()
        };
        for l in &mut cfg.layers {
            *l = match *l {
                LayerSpec::Irmb { .. } => LayerSpec::Irmb { f: w },
                LayerSpec::Down { .. } => LayerSpec::Down { f1: w, f2: w },
                LayerSpec::MhsaIrmb { .. } => LayerSpec::MhsaIrmb {
                    f1: w,
                    f2: w,
                    heads: 2,
                    d_k: w / 2,
                },
            };
        }
        cfg
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ModelConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Checks widths and head splits and returns the stage-by-stage shape walk.
    pub fn validate(&self) -> Result<Vec<StageShape>, ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.classes != NUM_CLASSES {
            return bad(format!("classes must be {NUM_CLASSES}, got {}", self.classes));
        }
        if self.in_channels == 0 || self.grid == 0 || self.mlp_hidden == 0 || self.stem.f1 == 0 || self.stem.f2 == 0 {
            return bad("widths and grid must be positive".into());
        }
        let mut trace = vec![StageShape {
            name: "stem".into(),
            channels: self.stem.f2,
            spatial: self.grid,
        }];
        let (mut c, mut s) = (self.stem.f2, self.grid);
        for (i, l) in self.layers.iter().enumerate() {
            let name = match *l {
                LayerSpec::Irmb { f } => {
                    if f == 0 {
                        return bad(format!("layer {i}: zero width"));
                    }
                    "irmb"
                }
                LayerSpec::Down { f1, f2 } => {
                    if f1 == 0 || f2 == 0 {
                        return bad(format!("layer {i}: zero width"));
                    }
                    if s < 2 {
                        return bad(format!("layer {i}: cannot downsample spatial extent {s}"));
                    }
                    c = f2;
                    s = s.div_ceil(2);
                    "down"
                }
                LayerSpec::MhsaIrmb { f1, f2, heads, d_k } => {
                    if f1 == 0 || f2 == 0 || heads == 0 || d_k == 0 {
                        return bad(format!("layer {i}: zero width"));
                    }
                    if heads * d_k != f1 {
                        return bad(format!("layer {i}: heads*d_k = {} but attention width f1 = {f1}", heads * d_k));
                    }
                    if c * s * s * s < 2 {
                        return bad(format!("layer {i}: layer norm needs at least 2 elements"));
                    }
                    c = f2;
                    "mhsa_irmb"
                }
            };
            trace.push(StageShape {
                name: format!("{name}.{i}"),
                channels: c,
                spatial: s,
            });
        }
        Ok(trace)
    }

    /// Trainable parameter count from the layer arithmetic alone. A
    /// convolution contributes `cout*cin*k^3` (+`cout` bias when no norm
    /// follows), each norm `2C`, each linear `out*in + out`.
    pub fn parameter_count(&self) -> usize {
        let cin = self.in_channels;
        let (f1, f2) = (self.stem.f1, self.stem.f2);
        let mut n = 2 * cin // input batch norm
            + conv(cin, f1, 3, false) + 2 * f1
            + 2 * conv(f1, f1, 1, true) // squeeze-excitation pair
            + conv(f1, f2, 1, true)
            + if f2 != cin { conv(cin, f2, 1, false) } else { 0 };
        let mut c = f2;
        for l in &self.layers {
            n += match *l {
                LayerSpec::Irmb { f } => 2 * c + conv(c, f, 1, true) + conv(f, f, 3, false) + 2 * f + conv(f, c, 1, true),
                LayerSpec::Down { f1, f2 } => {
                    let p = 2 * c + conv(c, f1, 1, true) + conv(f1, f1, 3, false) + 2 * f1 + conv(f1, f2, 1, true);
                    c = f2;
                    p
                }
                LayerSpec::MhsaIrmb { f1, f2, .. } => {
                    let p = 2 * c // layer norm
                        + 3 * conv(c, f1, 1, true) // Q, K, V
                        + conv(f1, f1, 1, true) // output projection
                        + conv(f1, f1, 3, false) + 2 * f1
                        + conv(f1, f2, 1, true)
                        + if f2 != c { conv(c, f2, 1, false) } else { 0 };
                    c = f2;
                    p
                }
            };
        }
        n + c * self.mlp_hidden + self.mlp_hidden + self.mlp_hidden * self.classes + self.classes
    }
}
