// SPDX-License-Identifier: MIT OR Apache-2.0

//! The model zoo: attention-rate transformers and the linear families.

mod config;
mod graph;
mod params;

pub use config::{Architecture, AttentionBase, EmbeddingVariant, Family, RunConfig};
pub use graph::{linear_logits, record_tokens, transformer_logits, Network, Recorded};
pub use params::{build, check_shapes, ModelParams, Tensor, INIT_STREAM};
