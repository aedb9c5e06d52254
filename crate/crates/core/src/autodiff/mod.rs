// SPDX-License-Identifier: MIT OR Apache-2.0

//! Reverse-mode differentiation over the model zoo's computation graphs.
//!
//! The [`Tape`] records batched matrix primitives. On top of it this module
//! exposes the three gradients the rest of the crate needs: parameter
//! gradients of the mean cross-entropy (training), gradients of a single
//! logit with respect to the two operand embeddings (gradient symmetricity),
//! and a central-difference oracle for both.

mod tape;

pub use tape::{Activation, Adjoints, AttnShape, Tape, Var, GELU_CUBIC, GELU_SCALE};

use crate::error::{Error, Result};
use crate::models::{record_tokens, ModelParams, Network};
use crate::numerics::{Matrix, SeededRng};

/// Logits of a single token sequence together with the tape that produced them.
pub fn forward(model: &ModelParams, tokens: &[usize]) -> Result<(Vec<f64>, Tape)> {
    let mut tape = Tape::new();
    let rec = record_tokens(model, &mut tape, &[tokens.to_vec()], model.arch.attention_rate)?;
    let logits = tape.value(rec.logits).row(0).to_vec();
    Ok((logits, tape))
}

/// Gradient of one logit with respect to each operand's embedding row.
///
/// The rows are treated as free inputs: `(∂Q_abc/∂E_a, ∂Q_abc/∂E_b)`. Because
/// positional embeddings enter additively, the gradient is the same whether
/// taken before or after they are added.
pub fn grad_logit_wrt_embeddings<N: Network + ?Sized>(
    model: &N,
    a: usize,
    b: usize,
    c: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut out = embedding_gradients(model, &[(a, b, c)])?;
    Ok(out.pop().expect("one triple in, one gradient pair out"))
}

/// Batched form of [`grad_logit_wrt_embeddings`]. Examples do not interact,
/// so seeding every row's target logit at once yields per-example gradients.
pub fn embedding_gradients<N: Network + ?Sized>(
    model: &N,
    triples: &[(usize, usize, usize)],
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let p = model.modulus();
    if let Some(t) = triples.iter().find(|t| t.0 >= p || t.1 >= p || t.2 >= p) {
        return Err(Error::Tokens(format!("triple {t:?} outside Z_{p}")));
    }
    if triples.is_empty() {
        return Ok(Vec::new());
    }
    let pairs: Vec<(usize, usize)> = triples.iter().map(|&(a, b, _)| (a, b)).collect();
    let mut tape = Tape::new();
    let rec = model.record(&mut tape, &pairs)?;
    let mut seed = Matrix::zeros(triples.len(), p);
    for (r, &(_, _, c)) in triples.iter().enumerate() {
        seed[(r, c)] = 1.0;
    }
    let adj = tape.backward(rec.logits, seed);
    let g = adj.get_or_zeros(rec.embeds, tape.value(rec.embeds));
    Ok((0..triples.len())
        .map(|r| {
            (
                g.row(r * rec.seq).to_vec(),
                g.row(r * rec.seq + 1).to_vec(),
            )
        })
        .collect())
}

/// Gradients shaped like a model's tensor list.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrads {
    pub tensors: Vec<Matrix>,
}

impl ParamGrads {
    pub fn norm(&self) -> f64 {
        self.tensors
            .iter()
            .map(|m| m.as_slice().iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// Mean cross-entropy over `batch` of `(a, b, target)` and its parameter gradients.
pub fn grad_params(model: &ModelParams, batch: &[(usize, usize, usize)]) -> Result<(f64, ParamGrads)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let p = model.arch.p;
    if let Some(t) = batch.iter().find(|t| t.2 >= p) {
        return Err(Error::Tokens(format!("target {} outside Z_{p}", t.2)));
    }
    let pairs: Vec<(usize, usize)> = batch.iter().map(|&(a, b, _)| (a, b)).collect();
    let targets: Vec<usize> = batch.iter().map(|t| t.2).collect();
    loss_and_grads(model, &pairs, targets)
}

pub(crate) fn loss_and_grads(
    model: &ModelParams,
    pairs: &[(usize, usize)],
    targets: Vec<usize>,
) -> Result<(f64, ParamGrads)> {
    let mut tape = Tape::new();
    let rec = model.record(&mut tape, pairs)?;
    let loss = tape.cross_entropy(rec.logits, targets);
    let value = tape.value(loss)[(0, 0)];
    let mut adj = tape.backward(loss, Matrix::filled(1, 1, 1.0));
    let tensors = model
        .tensors
        .iter()
        .zip(&rec.params)
        .map(|(t, v)| {
            v.and_then(|v| adj.take(v))
                .unwrap_or_else(|| Matrix::zeros(t.value.rows(), t.value.cols()))
        })
        .collect();
    Ok((value, ParamGrads { tensors }))
}

/// What the parameter probes of a finite-difference check differentiate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdObjective {
    /// Mean cross-entropy over a small random batch.
    Loss,
    /// A single random logit `Q_abc`.
    Logit,
}

#[derive(Clone, Copy, Debug)]
pub struct FdOptions {
    pub probes: usize,
    pub step: f64,
    pub objective: FdObjective,
    pub seed: u64,
    /// Examples in the loss batch.
    pub batch: usize,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self {
            probes: 20,
            step: 1e-4,
            objective: FdObjective::Loss,
            seed: 0,
            batch: 8,
        }
    }
}

/// Outcome of a finite-difference check.
#[derive(Clone, Debug, PartialEq)]
pub struct FdReport {
    /// Largest relative error over accepted probes.
    pub max_rel_error: f64,
    /// Probes compared (parameters plus embeddings).
    pub checked: usize,
    /// Probes whose `±step` perturbation flipped a ReLU and were excluded.
    pub kink_skipped: usize,
}

/// Denominator floor for relative errors, so that vanishing gradients are
/// compared in absolute terms.
pub const FD_ABS_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FD_ABS_FLOOR)
}

/// Compares analytic gradients with central differences on `probes` random
/// parameter coordinates and `probes` random embedding coordinates.
pub fn finite_difference_check(model: &ModelParams, probes: usize, step: f64) -> Result<FdReport> {
    finite_difference_check_with(
        model,
        &FdOptions {
            probes,
            step,
            ..FdOptions::default()
        },
    )
}

pub fn finite_difference_check_with(model: &ModelParams, opts: &FdOptions) -> Result<FdReport> {
    if !(opts.step > 0.0) {
        return Err(Error::InvalidArgument(format!("step {} must be positive", opts.step)));
    }
    let p = model.arch.p;
    let mut rng = SeededRng::stream(opts.seed, 0xfd);
    let mut report = FdReport {
        max_rel_error: 0.0,
        checked: 0,
        kink_skipped: 0,
    };

    // Objective: either the batch loss or one logit.
    let batch: Vec<(usize, usize)> = (0..opts.batch.max(1))
        .map(|_| (rng.below(p), rng.below(p)))
        .collect();
    let targets: Vec<usize> = batch.iter().map(|&(a, b)| (a + b) % p).collect();
    let logit_probe = (rng.below(p), rng.below(p), rng.below(p));

    let evaluate = |m: &ModelParams| -> Result<(f64, Vec<bool>)> {
        let mut tape = Tape::new();
        let out = match opts.objective {
            FdObjective::Loss => {
                let rec = m.record(&mut tape, &batch)?;
                let loss = tape.cross_entropy(rec.logits, targets.clone());
                tape.value(loss)[(0, 0)]
            }
            FdObjective::Logit => {
                let rec = m.record(&mut tape, &[(logit_probe.0, logit_probe.1)])?;
                tape.value(rec.logits)[(0, logit_probe.2)]
            }
        };
        Ok((out, tape.relu_pattern()))
    };

    let analytic = match opts.objective {
        FdObjective::Loss => loss_and_grads(model, &batch, targets.clone())?.1,
        FdObjective::Logit => {
            let mut tape = Tape::new();
            let rec = model.record(&mut tape, &[(logit_probe.0, logit_probe.1)])?;
            let mut seed = Matrix::zeros(1, p);
            seed[(0, logit_probe.2)] = 1.0;
            let mut adj = tape.backward(rec.logits, seed);
            ParamGrads {
                tensors: model
                    .tensors
                    .iter()
                    .zip(&rec.params)
                    .map(|(t, v)| {
                        v.and_then(|v| adj.take(v))
                            .unwrap_or_else(|| Matrix::zeros(t.value.rows(), t.value.cols()))
                    })
                    .collect(),
            }
        }
    };
    let (_, base_pattern) = evaluate(model)?;

    let mut probe_model = model.clone();
    let central = |ti: usize, idx: usize, probe_model: &mut ModelParams| -> Result<Option<f64>> {
        let orig = probe_model.tensors[ti].value.as_slice()[idx];
        probe_model.tensors[ti].value.as_mut_slice()[idx] = orig + opts.step;
        let (up, pat_up) = evaluate(probe_model)?;
        probe_model.tensors[ti].value.as_mut_slice()[idx] = orig - opts.step;
        let (down, pat_down) = evaluate(probe_model)?;
        probe_model.tensors[ti].value.as_mut_slice()[idx] = orig;
        if pat_up != base_pattern || pat_down != base_pattern {
            return Ok(None);
        }
        Ok(Some((up - down) / (2.0 * opts.step)))
    };

    for _ in 0..opts.probes {
        let ti = rng.below(model.tensors.len());
        let len = model.tensors[ti].value.as_slice().len();
        let idx = rng.below(len);
        match central(ti, idx, &mut probe_model)? {
            Some(numeric) => {
                let a = analytic.tensors[ti].as_slice()[idx];
                report.max_rel_error = report.max_rel_error.max(relative_error(a, numeric));
                report.checked += 1;
            }
            None => report.kink_skipped += 1,
        }
    }

    // Embedding-input probes: with a ≠ b, nudging row a of W_E moves only the
    // first operand's embedding.
    let we = model.index_of("W_E").expect("every model has W_E");
    let d = model.arch.width;
    for _ in 0..opts.probes {
        let a = rng.below(p);
        let b = (a + 1 + rng.below(p - 1)) % p;
        let c = rng.below(p);
        let (ga, gb) = grad_logit_wrt_embeddings(model, a, b, c)?;
        let slot = rng.below(2);
        let col = rng.below(d);
        let tokens = model.arch.tokens(a, b);
        let row = tokens[slot];
        let single = |m: &ModelParams| -> Result<(f64, Vec<bool>)> {
            let mut tape = Tape::new();
            let rec = m.record(&mut tape, &[(a, b)])?;
            Ok((tape.value(rec.logits)[(0, c)], tape.relu_pattern()))
        };
        let (_, pat) = single(model)?;
        let orig = probe_model.tensors[we].value[(row, col)];
        probe_model.tensors[we].value[(row, col)] = orig + opts.step;
        let (up, pu) = single(&probe_model)?;
        probe_model.tensors[we].value[(row, col)] = orig - opts.step;
        let (down, pd) = single(&probe_model)?;
        probe_model.tensors[we].value[(row, col)] = orig;
        if pu != pat || pd != pat {
            report.kink_skipped += 1;
            continue;
        }
        let numeric = (up - down) / (2.0 * opts.step);
        let analytic = if slot == 0 { ga[col] } else { gb[col] };
        report.max_rel_error = report.max_rel_error.max(relative_error(analytic, numeric));
        report.checked += 1;
    }
    Ok(report)
}
