// SPDX-License-Identifier: MIT OR Apache-2.0

//! Records model forward passes onto an autodiff tape.

use super::config::{Architecture, Family};
use super::params::ModelParams;
use crate::autodiff::{AttnShape, Tape, Var};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Handles into a recorded forward pass.
#[derive(Clone, Debug)]
pub struct Recorded {
    /// `batch × p` output logits.
    pub logits: Var,
    /// `(batch · seq) × d` gathered token embeddings, example-major. The
    /// operands `a` and `b` sit at positions 0 and 1 of every group.
    pub embeds: Var,
    pub seq: usize,
    /// Parameter leaves aligned with the model's tensor list; `None` for
    /// tensors the pass does not touch.
    pub params: Vec<Option<Var>>,
}

/// Anything that maps operand pairs to logits over `p` classes and can be
/// differentiated with respect to its operand embeddings.
pub trait Network: Send + Sync {
    fn modulus(&self) -> usize;

    /// Records logits for every pair in `pairs`.
    fn record(&self, tape: &mut Tape, pairs: &[(usize, usize)]) -> Result<Recorded>;

    /// `p × d` embedding rows of the operand values, as seen by the first slot.
    fn operand_embeddings(&self) -> Matrix;

    /// `pairs.len() × p` logits.
    fn logits(&self, pairs: &[(usize, usize)]) -> Result<Matrix> {
        let mut tape = Tape::new();
        let rec = self.record(&mut tape, pairs)?;
        Ok(tape.value(rec.logits).clone())
    }
}

impl Network for ModelParams {
    fn modulus(&self) -> usize {
        self.arch.p
    }

    fn record(&self, tape: &mut Tape, pairs: &[(usize, usize)]) -> Result<Recorded> {
        let p = self.arch.p;
        if let Some(&(a, b)) = pairs.iter().find(|(a, b)| *a >= p || *b >= p) {
            return Err(Error::Tokens(format!("operand pair ({a}, {b}) outside Z_{p}")));
        }
        let tokens: Vec<Vec<usize>> = pairs.iter().map(|&(a, b)| self.arch.tokens(a, b)).collect();
        record_tokens(self, tape, &tokens, self.arch.attention_rate)
    }

    fn operand_embeddings(&self) -> Matrix {
        let rows: Vec<usize> = self.arch.operand_rows(0).collect();
        self.embedding().select_rows(&rows)
    }
}

fn check_tokens(arch: &Architecture, tokens: &[Vec<usize>]) -> Result<()> {
    if tokens.is_empty() {
        return Err(Error::Tokens("empty batch".into()));
    }
    for seq in tokens {
        if seq.len() != arch.seq_len {
            return Err(Error::Tokens(format!(
                "sequence of length {} for a context of {}",
                seq.len(),
                arch.seq_len
            )));
        }
        if let Some(t) = seq.iter().find(|&&t| t >= arch.vocab) {
            return Err(Error::Tokens(format!(
                "token {t} outside vocabulary of {}",
                arch.vocab
            )));
        }
    }
    Ok(())
}

/// Records a forward pass over explicit token sequences. `attention_rate`
/// overrides the architecture's rate (ignored by linear families).
pub fn record_tokens(
    model: &ModelParams,
    tape: &mut Tape,
    tokens: &[Vec<usize>],
    attention_rate: f64,
) -> Result<Recorded> {
    let arch = &model.arch;
    check_tokens(arch, tokens)?;
    if arch.family == Family::Transformer && !(0.0..=1.0).contains(&attention_rate) {
        return Err(Error::InvalidArgument(format!(
            "attention rate {attention_rate} outside [0, 1]"
        )));
    }
    let skip_qk = arch.family == Family::Transformer && attention_rate == 0.0;
    let params: Vec<Option<Var>> = model
        .tensors
        .iter()
        .map(|t| {
            let unused = skip_qk && (t.name.ends_with(".W_Q") || t.name.ends_with(".W_K"));
            (!unused).then(|| tape.leaf(t.value.clone()))
        })
        .collect();
    let var = |name: &str| -> Var {
        let i = model
            .index_of(name)
            .unwrap_or_else(|| panic!("model is missing tensor `{name}`"));
        params[i].expect("parameter leaf recorded")
    };
    let flat: Vec<usize> = tokens.iter().flatten().copied().collect();
    let embeds = tape.gather(var("W_E"), flat);
    let seq = arch.seq_len;
    let batch = tokens.len();

    let logits = match arch.family {
        Family::Transformer => {
            let mut h = tape.add_positional(embeds, var("W_pos"), seq);
            for l in 0..arch.layers {
                let last = l + 1 == arch.layers;
                let n = |s: &str| format!("l{l}.{s}");
                // Only the final position feeds the output, so the last layer
                // computes queries and the MLP for that position alone.
                let (hq, q_len) = if last {
                    (tape.select_position(h, seq, seq - 1), 1)
                } else {
                    (h, seq)
                };
                let shape = AttnShape {
                    heads: arch.heads,
                    head_dim: arch.head_dim,
                    q_len,
                    k_len: seq,
                };
                let full_base = arch.attention_base.matrix(seq);
                let base = if last {
                    full_base.select_rows(&[seq - 1])
                } else {
                    full_base
                };
                let probs = if attention_rate == 0.0 {
                    let rows = batch * arch.heads * q_len;
                    let m = Matrix::from_fn(rows, seq, |r, c| base[(r % q_len, c)]);
                    tape.leaf(m)
                } else {
                    let q = tape.matmul(hq, var(&n("W_Q")));
                    let k = tape.matmul(h, var(&n("W_K")));
                    let scale = 1.0 / (arch.head_dim as f64).sqrt();
                    let scores = tape.attn_scores(q, k, shape, scale);
                    let soft = tape.softmax_rows(scores);
                    if attention_rate == 1.0 {
                        soft
                    } else {
                        tape.mix_const(soft, attention_rate, base)
                    }
                };
                let v = tape.matmul(h, var(&n("W_V")));
                let mixed = tape.attn_apply(probs, v, shape);
                let out = tape.matmul(mixed, var(&n("W_O")));
                let w = tape.add(hq, out);
                let pre = tape.matmul(w, var(&n("W_in")));
                let pre = tape.add_row(pre, var(&n("b_in")));
                let act = tape.activation(pre, arch.activation);
                let post = tape.matmul(act, var(&n("W_out")));
                let post = tape.add_row(post, var(&n("b_out")));
                h = tape.add(w, post);
            }
            tape.matmul(h, var("W_U"))
        }
        family => {
            let x1 = tape.select_position(embeds, seq, 0);
            let x2 = tape.select_position(embeds, seq, 1);
            let act = arch.activation;
            let dense = |tape: &mut Tape, x: Var, layer: usize| -> Var {
                let y = tape.matmul(x, var(&format!("L{layer}.W")));
                tape.add_row(y, var(&format!("L{layer}.b")))
            };
            match family {
                Family::LinearAlpha | Family::LinearAlphaPrime => {
                    let s = tape.add(x1, x2);
                    let h1 = dense(tape, s, 1);
                    let h1 = tape.activation(h1, act);
                    tape.matmul(h1, var("L2.W"))
                }
                Family::LinearBeta => {
                    let s = tape.add(x1, x2);
                    let h1 = dense(tape, s, 1);
                    let h1 = tape.activation(h1, act);
                    let h2 = dense(tape, h1, 2);
                    let h2 = tape.activation(h2, act);
                    tape.matmul(h2, var("L3.W"))
                }
                Family::LinearGamma => {
                    let a1 = dense(tape, x1, 1);
                    let b1 = dense(tape, x2, 1);
                    let s = tape.add(a1, b1);
                    let h1 = tape.activation(s, act);
                    let h2 = dense(tape, h1, 2);
                    let h2 = tape.activation(h2, act);
                    tape.matmul(h2, var("L3.W"))
                }
                Family::LinearDelta => {
                    let cat = tape.concat(x1, x2);
                    let h1 = dense(tape, cat, 1);
                    let h1 = tape.activation(h1, act);
                    tape.matmul(h1, var("L2.W"))
                }
                Family::Transformer => unreachable!(),
            }
        }
    };
    Ok(Recorded {
        logits,
        embeds,
        seq,
        params,
    })
}

/// Transformer logits for token sequences at an explicit attention rate.
pub fn transformer_logits(
    model: &ModelParams,
    tokens: &[Vec<usize>],
    attention_rate: f64,
) -> Result<Matrix> {
    if model.arch.family != Family::Transformer {
        return Err(Error::InvalidArgument(format!(
            "{} is not a transformer",
            model.arch.family.name()
        )));
    }
    let mut tape = Tape::new();
    let rec = record_tokens(model, &mut tape, tokens, attention_rate)?;
    Ok(tape.value(rec.logits).clone())
}

/// Logits of a linear-family model on one operand pair.
pub fn linear_logits(model: &ModelParams, a: usize, b: usize) -> Result<Vec<f64>> {
    if !model.arch.family.is_linear() {
        return Err(Error::InvalidArgument("not a linear-family model".into()));
    }
    Ok(model.logits(&[(a, b)])?.row(0).to_vec())
}
