// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use super::config::{Architecture, Family, RunConfig};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, SeededRng};

/// RNG stream reserved for parameter initialization.
pub const INIT_STREAM: u64 = 0;

/// A named learnable tensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub value: Matrix,
}

/// All learnable tensors of a model, in a fixed order.
///
/// Transformer tensors: `W_E` (vocab×d), `W_pos` (context×d), then per layer
/// `l` the tensors `l{l}.W_Q`, `W_K`, `W_V` (d×H·dh, head `h` owns columns
/// `h·dh..(h+1)·dh`), `W_O` (H·dh×d), `W_in` (d×4d), `b_in`, `W_out` (4d×d),
/// `b_out`, and finally `W_U` (d×p). Linear families hold `W_E`, `L1.W`,
/// `L1.b`, …, with the last layer bias-free.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub arch: Architecture,
    pub tensors: Vec<Tensor>,
}

impl ModelParams {
    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.tensors.iter().find(|t| t.name == name).map(|t| &t.value)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Matrix> {
        self.tensors
            .iter_mut()
            .find(|t| t.name == name)
            .map(|t| &mut t.value)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.tensors.iter().position(|t| t.name == name)
    }

    /// Looks up a tensor that the architecture guarantees to exist.
    pub(crate) fn expect(&self, name: &str) -> &Matrix {
        self.get(name)
            .unwrap_or_else(|| panic!("model is missing tensor `{name}`"))
    }

    pub fn embedding(&self) -> &Matrix {
        self.expect("W_E")
    }

    /// Output (unembedding) matrix, `d × p`.
    pub fn unembedding(&self) -> &Matrix {
        match self.arch.family {
            Family::Transformer => self.expect("W_U"),
            f => self.expect(&format!("L{}.W", f.linear_depth())),
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(|t| t.value.as_slice().len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.value.is_finite())
    }
}

/// Shapes and initialization fan-ins, in tensor order.
fn layout(arch: &Architecture) -> Vec<(String, usize, usize, Init)> {
    let d = arch.width;
    let mut out = vec![("W_E".to_string(), arch.vocab, d, Init::Uniform(arch.vocab))];
    match arch.family {
        Family::Transformer => {
            out.push(("W_pos".into(), arch.seq_len, d, Init::Zero));
            let aw = arch.attn_width();
            for l in 0..arch.layers {
                let n = |s: &str| format!("l{l}.{s}");
                out.push((n("W_Q"), d, aw, Init::Uniform(d)));
                out.push((n("W_K"), d, aw, Init::Uniform(d)));
                out.push((n("W_V"), d, aw, Init::Uniform(d)));
                out.push((n("W_O"), aw, d, Init::Uniform(aw)));
                out.push((n("W_in"), d, arch.hidden, Init::Uniform(d)));
                out.push((n("b_in"), 1, arch.hidden, Init::Zero));
                out.push((n("W_out"), arch.hidden, d, Init::Uniform(arch.hidden)));
                out.push((n("b_out"), 1, d, Init::Zero));
            }
            out.push(("W_U".into(), d, arch.p, Init::Uniform(d)));
        }
        family => {
            let depth = family.linear_depth();
            let h = arch.hidden;
            let first_in = if family == Family::LinearDelta { 2 * d } else { d };
            for layer in 1..=depth {
                let fan_in = if layer == 1 { first_in } else { h };
                let fan_out = if layer == depth { arch.p } else { h };
                out.push((format!("L{layer}.W"), fan_in, fan_out, Init::Uniform(fan_in)));
                if layer < depth {
                    out.push((format!("L{layer}.b"), 1, fan_out, Init::Zero));
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy)]
enum Init {
    Zero,
    /// Uniform in `±√(1/fan_in)`.
    Uniform(usize),
}

/// Initializes a model for `config` from its seed.
pub fn build(config: &RunConfig) -> Result<ModelParams> {
    let arch = config.architecture()?;
    let mut rng = SeededRng::stream(config.seed, INIT_STREAM);
    let tensors = layout(&arch)
        .into_iter()
        .map(|(name, rows, cols, init)| {
            let value = match init {
                Init::Zero => Matrix::zeros(rows, cols),
                Init::Uniform(fan_in) => {
                    let bound = (1.0 / fan_in as f64).sqrt();
                    Matrix::from_fn(rows, cols, |_, _| rng.uniform_in(-bound, bound))
                }
            };
            Tensor { name, value }
        })
        .collect();
    Ok(ModelParams { arch, tensors })
}

/// Checks that imported tensors match the shapes implied by the architecture.
pub fn check_shapes(params: &ModelParams) -> Result<()> {
    let want = layout(&params.arch);
    if want.len() != params.tensors.len() {
        return Err(Error::Dimension(format!(
            "expected {} tensors, found {}",
            want.len(),
            params.tensors.len()
        )));
    }
    for ((name, rows, cols, _), t) in want.iter().zip(&params.tensors) {
        if *name != t.name || (*rows, *cols) != t.value.shape() {
            return Err(Error::Dimension(format!(
                "tensor `{}` {:?} does not match expected `{name}` {rows}x{cols}",
                t.name,
                t.value.shape()
            )));
        }
    }
    Ok(())
}
