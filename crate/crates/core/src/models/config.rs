// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use crate::autodiff::Activation;
use crate::error::{Error, Result};

/// Architecture family of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Attention-rate transformer.
    Transformer,
    /// `L2(ReLU(L1(x1 + x2)))`.
    LinearAlpha,
    /// As `LinearAlpha` with separate embedding tables for the two operands.
    LinearAlphaPrime,
    /// `L3(ReLU(L2(ReLU(L1(x1 + x2)))))`.
    LinearBeta,
    /// `L3(ReLU(L2(ReLU(L1(x1) + L1(x2)))))`.
    LinearGamma,
    /// `L2(ReLU(L1([x1; x2])))`.
    LinearDelta,
}

impl Family {
    pub fn is_linear(self) -> bool {
        self != Self::Transformer
    }

    /// Number of linear layers after the embedding.
    pub fn linear_depth(self) -> usize {
        match self {
            Self::Transformer => 0,
            Self::LinearAlpha | Self::LinearAlphaPrime | Self::LinearDelta => 2,
            Self::LinearBeta | Self::LinearGamma => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Transformer => "transformer",
            Self::LinearAlpha => "linear-alpha",
            Self::LinearAlphaPrime => "linear-alpha-prime",
            Self::LinearBeta => "linear-beta",
            Self::LinearGamma => "linear-gamma",
            Self::LinearDelta => "linear-delta",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "transformer" => Self::Transformer,
            "linear-alpha" | "alpha" => Self::LinearAlpha,
            "linear-alpha-prime" | "alpha-prime" => Self::LinearAlphaPrime,
            "linear-beta" | "beta" => Self::LinearBeta,
            "linear-gamma" | "gamma" => Self::LinearGamma,
            "linear-delta" | "delta" => Self::LinearDelta,
            other => return Err(Error::Config(format!("unknown family `{other}`"))),
        })
    }
}

/// How the two operands are tokenized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingVariant {
    /// `[a, b]` over a vocabulary of `p`.
    Shared,
    /// `[a, b + p]` over a vocabulary of `2p`.
    Separate,
    /// `[a, b, =]` over a vocabulary of `p + 1`.
    EqualSign,
}

/// The fixed matrix the post-softmax attention is interpolated towards.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttentionBase {
    /// Every query attends to every position with weight one, which makes the
    /// zero-rate model `x_i + Σ_h W_O W_V Σ_k x_k`.
    AllOnes,
    /// Literal identity; the zero-rate model then never mixes positions.
    Identity,
}

impl AttentionBase {
    /// The `len × len` base matrix.
    pub fn matrix(self, len: usize) -> crate::numerics::Matrix {
        match self {
            Self::AllOnes => crate::numerics::Matrix::filled(len, len, 1.0),
            Self::Identity => crate::numerics::Matrix::identity(len),
        }
    }
}

/// Full description of one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub family: Family,
    pub p: usize,
    pub width: usize,
    pub layers: usize,
    pub attention_rate: f64,
    pub heads: usize,
    pub activation: Activation,
    pub embedding: EmbeddingVariant,
    pub attention_base: AttentionBase,
    pub seed: u64,
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub train_fraction: f64,
    pub checkpoint_every: usize,
    /// Stop once validation accuracy has stayed at 1 and the train loss has
    /// stopped moving (see `training::EarlyStop`).
    pub early_stop: bool,
    /// Compute metric snapshots at every checkpoint.
    pub checkpoint_metrics: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            family: Family::Transformer,
            p: 59,
            width: 128,
            layers: 1,
            attention_rate: 1.0,
            heads: 4,
            activation: Activation::Relu,
            embedding: EmbeddingVariant::Shared,
            attention_base: AttentionBase::AllOnes,
            seed: 0,
            lr: 1e-3,
            weight_decay: 2.0,
            epochs: 20_000,
            train_fraction: 0.8,
            checkpoint_every: 500,
            early_stop: false,
            checkpoint_metrics: false,
        }
    }
}

impl RunConfig {
    pub fn transformer(attention_rate: f64, width: usize, seed: u64) -> Self {
        Self {
            attention_rate,
            width,
            seed,
            ..Self::default()
        }
    }

    pub fn linear(family: Family, width: usize, seed: u64) -> Self {
        Self {
            family,
            width,
            seed,
            embedding: if family == Family::LinearAlphaPrime {
                EmbeddingVariant::Separate
            } else {
                EmbeddingVariant::Shared
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.p < 2 {
            return fail(format!("modulus {} must be at least 2", self.p));
        }
        if !(0.0..=1.0).contains(&self.attention_rate) {
            return fail(format!("attention rate {} outside [0, 1]", self.attention_rate));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail(format!("train fraction {} outside (0, 1)", self.train_fraction));
        }
        if self.width == 0 {
            return fail("width must be positive".into());
        }
        if !(self.lr >= 0.0 && self.weight_decay >= 0.0) {
            return fail("learning rate and weight decay must be non-negative".into());
        }
        match self.family {
            Family::Transformer => {
                if self.heads == 0 || self.width < self.heads {
                    return fail(format!(
                        "width {} cannot host {} heads",
                        self.width, self.heads
                    ));
                }
                if self.layers == 0 {
                    return fail("a transformer needs at least one layer".into());
                }
            }
            Family::LinearAlphaPrime => {
                if self.embedding != EmbeddingVariant::Separate {
                    return fail("linear-alpha-prime requires separate embeddings".into());
                }
            }
            _ => {
                if self.embedding != EmbeddingVariant::Shared {
                    return fail(format!(
                        "{} supports shared embeddings only",
                        self.family.name()
                    ));
                }
            }
        }
        Ok(())
    }

    /// Derived tensor dimensions.
    pub fn architecture(&self) -> Result<Architecture> {
        self.validate()?;
        let vocab = match self.embedding {
            EmbeddingVariant::Shared => self.p,
            EmbeddingVariant::Separate => 2 * self.p,
            EmbeddingVariant::EqualSign => self.p + 1,
        };
        let seq_len = if self.embedding == EmbeddingVariant::EqualSign {
            3
        } else {
            2
        };
        let transformer = self.family == Family::Transformer;
        Ok(Architecture {
            family: self.family,
            p: self.p,
            width: self.width,
            layers: if transformer { self.layers } else { 0 },
            heads: if transformer { self.heads } else { 0 },
            head_dim: if transformer { self.width / self.heads } else { 0 },
            hidden: if transformer { 4 * self.width } else { self.width },
            vocab,
            seq_len,
            activation: self.activation,
            embedding: self.embedding,
            attention_rate: self.attention_rate,
            attention_base: self.attention_base,
        })
    }
}

/// Tensor dimensions of a model instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub family: Family,
    pub p: usize,
    pub width: usize,
    pub layers: usize,
    pub heads: usize,
    pub head_dim: usize,
    /// MLP hidden units (`4d`) for transformers, hidden width for linear families.
    pub hidden: usize,
    pub vocab: usize,
    pub seq_len: usize,
    pub activation: Activation,
    pub embedding: EmbeddingVariant,
    pub attention_rate: f64,
    pub attention_base: AttentionBase,
}

impl Architecture {
    /// Total attention width `heads · head_dim` (may be below `width`).
    pub fn attn_width(&self) -> usize {
        self.heads * self.head_dim
    }

    /// Token sequence for the operand pair `(a, b)`.
    pub fn tokens(&self, a: usize, b: usize) -> Vec<usize> {
        match self.embedding {
            EmbeddingVariant::Shared => vec![a, b],
            EmbeddingVariant::Separate => vec![a, b + self.p],
            EmbeddingVariant::EqualSign => vec![a, b, self.p],
        }
    }

    /// Embedding rows that represent operand values `0..p` in each slot.
    pub fn operand_rows(&self, slot: usize) -> std::ops::Range<usize> {
        match (self.embedding, slot) {
            (EmbeddingVariant::Separate, 1) => self.p..2 * self.p,
            _ => 0..self.p,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn head_dimension_is_a_quarter_of_width() {
        let arch = RunConfig::transformer(0.5, 128, 0).architecture().unwrap();
        assert_eq!((arch.heads, arch.head_dim, arch.hidden), (4, 32, 512));
        let odd = RunConfig::transformer(0.5, 130, 0).architecture().unwrap();
        assert_eq!(odd.head_dim, 32);
        assert_eq!(odd.attn_width(), 128);
    }

    #[test]
    fn vocabulary_follows_embedding_variant() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.architecture().unwrap().vocab, 59);
        cfg.embedding = EmbeddingVariant::Separate;
        let arch = cfg.architecture().unwrap();
        assert_eq!((arch.vocab, arch.tokens(3, 4)), (118, vec![3, 63]));
        cfg.embedding = EmbeddingVariant::EqualSign;
        let arch = cfg.architecture().unwrap();
        assert_eq!((arch.vocab, arch.seq_len, arch.tokens(3, 4)), (60, 3, vec![3, 4, 59]));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            RunConfig { attention_rate: 1.5, ..RunConfig::default() },
            RunConfig { width: 3, ..RunConfig::default() },
            RunConfig { train_fraction: 1.0, ..RunConfig::default() },
            RunConfig { layers: 0, ..RunConfig::default() },
            RunConfig {
                embedding: EmbeddingVariant::EqualSign,
                ..RunConfig::linear(Family::LinearBeta, 64, 0)
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn defaults_match_reference_recipe() {
        let c = RunConfig::default();
        assert_eq!((c.p, c.width, c.heads, c.epochs), (59, 128, 4, 20_000));
        assert_eq!((c.lr, c.weight_decay, c.train_fraction), (1e-3, 2.0, 0.8));
    }
}
