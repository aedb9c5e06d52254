// SPDX-License-Identifier: MIT OR Apache-2.0

//! Weight-level inspection of linear-family models.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Family, ModelParams, Network};
use crate::numerics::{principal_components, Matrix};
use crate::training::{all_pairs, score_logits};

/// Principal directions used when aligning weights.
pub const ALIGN_COMPONENTS: usize = 6;

/// Accuracy and loss over all inputs with and without the second nonlinearity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReluRemoval {
    pub accuracy_before: f64,
    pub accuracy_after: f64,
    pub loss_before: f64,
    pub loss_after: f64,
}

impl ReluRemoval {
    pub fn accuracy_delta(&self) -> f64 {
        self.accuracy_after - self.accuracy_before
    }
}

/// Logits of a three-layer linear model, optionally skipping the second activation.
fn deep_linear_logits(model: &ModelParams, pairs: &[(usize, usize)], second_act: bool) -> Matrix {
    let act = model.arch.activation;
    let e = model.embedding();
    let w1 = model.expect("L1.W");
    let b1 = model.expect("L1.b");
    let add_bias = |m: Matrix, b: &Matrix| {
        let mut m = m;
        for r in 0..m.rows() {
            for (v, bb) in m.row_mut(r).iter_mut().zip(b.as_slice()) {
                *v += bb;
            }
        }
        m
    };
    let rows_a: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let rows_b: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    let (xa, xb) = (e.select_rows(&rows_a), e.select_rows(&rows_b));
    let pre1 = if model.arch.family == Family::LinearGamma {
        add_bias(xa.matmul(w1), b1).add(&add_bias(xb.matmul(w1), b1))
    } else {
        add_bias(xa.add(&xb).matmul(w1), b1)
    };
    let h1 = pre1.map(|v| act.apply(v));
    let pre2 = add_bias(h1.matmul(model.expect("L2.W")), model.expect("L2.b"));
    let h2 = if second_act { pre2.map(|v| act.apply(v)) } else { pre2 };
    h2.matmul(model.expect("L3.W"))
}

/// Compares a two-nonlinearity linear model with its second activation removed.
pub fn relu_removal_check(model: &ModelParams) -> Result<ReluRemoval> {
    if !matches!(model.arch.family, Family::LinearBeta | Family::LinearGamma) {
        return Err(Error::InvalidArgument(format!(
            "{} has no second nonlinearity",
            model.arch.family.name()
        )));
    }
    let p = model.arch.p;
    let pairs = all_pairs(p);
    let labels: Vec<usize> = pairs.iter().map(|&(a, b)| (a + b) % p).collect();
    let (accuracy_before, loss_before) = score_logits(&deep_linear_logits(model, &pairs, true), &labels);
    let (accuracy_after, loss_after) = score_logits(&deep_linear_logits(model, &pairs, false), &labels);
    Ok(ReluRemoval {
        accuracy_before,
        accuracy_after,
        loss_before,
        loss_after,
    })
}

/// First- and last-layer weights seen through the principal directions of
/// the embeddings and unembeddings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignedWeights {
    /// `n_pcs × hidden`: first-layer response to each embedding direction.
    pub w1: Matrix,
    /// `hidden × n_pcs`: what each hidden unit writes onto each unembedding direction.
    pub w2: Matrix,
    /// First-layer bias, one entry per column of `w1`.
    pub b1: Vec<f64>,
    pub domino_w1: f64,
    pub domino_w2: f64,
    /// Mean of the two.
    pub domino: f64,
}

/// Mean over vectors of the share of squared mass held by their two largest entries.
fn domino_score(vectors: impl Iterator<Item = Vec<f64>>) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for v in vectors {
        let mut sq: Vec<f64> = v.iter().map(|x| x * x).collect();
        let mass: f64 = sq.iter().sum();
        if mass <= 0.0 {
            continue;
        }
        sq.sort_by(|a, b| b.total_cmp(a));
        total += (sq[0] + sq.get(1).copied().unwrap_or(0.0)) / mass;
        count += 1;
    }
    if count == 0 { 0.0 } else { total / count as f64 }
}

/// Aligns a linear-family model's weights with its embedding and unembedding
/// principal directions. Two-layer families have no middle matrix, so their
/// aligned `w2` is the unembedding directions themselves.
pub fn align_weights(model: &ModelParams) -> Result<AlignedWeights> {
    let family = model.arch.family;
    if !family.is_linear() {
        return Err(Error::InvalidArgument("weight alignment needs a linear family".into()));
    }
    let emb = model.operand_embeddings();
    let unemb = model.unembedding().transpose();
    let n = ALIGN_COMPONENTS
        .min(emb.rows().min(emb.cols()))
        .min(unemb.rows().min(unemb.cols()));
    if n < 4 {
        return Err(Error::Dimension(format!("only {n} principal directions available")));
    }
    let e_pca = principal_components(&emb, n)?;
    let u_pca = principal_components(&unemb, n)?;
    if e_pca.singular_values[n - 1] <= 0.0 || u_pca.singular_values[n - 1] <= 0.0 {
        return Err(Error::Numeric("degenerate principal directions".into()));
    }
    let l1 = model.expect("L1.W");
    let d = emb.cols();
    let first = if family == Family::LinearDelta {
        let top: Vec<usize> = (0..d).collect();
        l1.select_rows(&top)
    } else {
        l1.clone()
    };
    let w1 = e_pca.components.matmul(&first);
    let w2 = match family {
        Family::LinearBeta | Family::LinearGamma => model.expect("L2.W").matmul_t(&u_pca.components),
        _ => u_pca.components.transpose(),
    };
    let domino_w1 = domino_score((0..w1.cols()).map(|c| w1.column(c)));
    let domino_w2 = domino_score((0..w2.rows()).map(|r| w2.row(r).to_vec()));
    Ok(AlignedWeights {
        b1: model.expect("L1.b").as_slice().to_vec(),
        w1,
        w2,
        domino_w1,
        domino_w2,
        domino: 0.5 * (domino_w1 + domino_w2),
    })
}

/// `f(x, y) = Σ_u w2[u][out] · act(w1[i][u]·x + w1[j][u]·y + b1[u])` for the
/// embedding directions `(i, j)` and unembedding direction `out`.
pub fn circle_response<'a>(
    model: &'a ModelParams,
    aligned: &'a AlignedWeights,
    pcs: (usize, usize),
    out: usize,
) -> impl Fn(f64, f64) -> f64 + 'a {
    let act = model.arch.activation;
    move |x, y| {
        (0..aligned.w1.cols())
            .map(|u| {
                let pre = aligned.w1[(pcs.0, u)] * x + aligned.w1[(pcs.1, u)] * y + aligned.b1[u];
                aligned.w2[(u, out)] * act.apply(pre)
            })
            .sum()
    }
}

/// Fourier fit of `t ↦ f(cos t, sin t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleResponseFit {
    pub offset: f64,
    /// Amplitudes of harmonics 1 through 4.
    pub harmonics: Vec<f64>,
    pub dominant_frequency: usize,
    /// `A` and `φ` of the best `A cos(2t + φ)`.
    pub amplitude: f64,
    pub phase: f64,
    /// Share of the non-constant variance left unexplained by `A cos(2t + φ)`.
    pub residual_fraction: f64,
}

/// Samples the response on `grid` points of the unit circle and fits it.
pub fn fit_unit_circle_response(f: impl Fn(f64, f64) -> f64, grid: usize) -> Result<CircleResponseFit> {
    if grid < 16 {
        return Err(Error::InvalidArgument("grid needs at least 16 points".into()));
    }
    let ts: Vec<f64> = (0..grid).map(|i| 2.0 * PI * i as f64 / grid as f64).collect();
    let ys: Vec<f64> = ts.iter().map(|&t| f(t.cos(), t.sin())).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::NonFinite("circle response"));
    }
    let n = grid as f64;
    let offset = ys.iter().sum::<f64>() / n;
    let coef = |h: f64| -> (f64, f64) {
        let a = 2.0 / n * ts.iter().zip(&ys).map(|(t, y)| y * (h * t).cos()).sum::<f64>();
        let b = 2.0 / n * ts.iter().zip(&ys).map(|(t, y)| y * (h * t).sin()).sum::<f64>();
        (a, b)
    };
    let harmonics: Vec<f64> = (1..=4).map(|h| {
        let (a, b) = coef(h as f64);
        a.hypot(b)
    }).collect();
    let variance: f64 = ys.iter().map(|y| (y - offset).powi(2)).sum::<f64>() / n;
    if variance <= 1e-24 {
        return Err(Error::Numeric("constant circle response".into()));
    }
    let (a2, b2) = coef(2.0);
    let amplitude = a2.hypot(b2);
    let phase = (-b2).atan2(a2);
    let resid: f64 = ts
        .iter()
        .zip(&ys)
        .map(|(t, y)| (y - offset - amplitude * (2.0 * t + phase).cos()).powi(2))
        .sum::<f64>()
        / n;
    let dominant_frequency = 1 + harmonics
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i);
    Ok(CircleResponseFit {
        offset,
        harmonics,
        dominant_frequency,
        amplitude,
        phase,
        residual_fraction: resid / variance,
    })
}
