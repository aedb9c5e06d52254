// SPDX-License-Identifier: MIT OR Apache-2.0

//! Operand-embedding gradients projected onto the leading embedding PCs.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::autodiff::embedding_gradients;
use crate::error::{Error, Result};
use crate::models::Network;
use crate::numerics::{dot, principal_components};

pub const PROJECTION_COMPONENTS: usize = 6;

/// One sample of the gradient-symmetry scatter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientProjection {
    pub triple: (usize, usize, usize),
    /// `∂Q/∂E_a` on the leading components.
    pub first: Vec<f64>,
    /// `∂Q/∂E_b` on the leading components.
    pub second: Vec<f64>,
}

/// Projects `(∂Q_abc/∂E_a, ∂Q_abc/∂E_b)` onto the six leading principal
/// components of the operand embeddings. Symmetric networks put every
/// component pair on the diagonal.
pub fn gradient_projection_figure<N: Network + ?Sized>(
    model: &N,
    samples: &[(usize, usize, usize)],
) -> Result<Vec<GradientProjection>> {
    let emb = model.operand_embeddings();
    let n = PROJECTION_COMPONENTS.min(emb.cols()).min(emb.rows());
    if n == 0 {
        return Err(Error::Dimension("embeddings admit no components".into()));
    }
    let pca = principal_components(&emb, n)?;
    let grads = embedding_gradients(model, samples)?;
    Ok(samples
        .iter()
        .zip(grads)
        .map(|(&triple, (ga, gb))| {
            let project = |g: &[f64]| -> Vec<f64> {
                (0..n).map(|i| dot(pca.components.row(i), g)).collect()
            };
            GradientProjection {
                triple,
                first: project(&ga),
                second: project(&gb),
            }
        })
        .collect())
}

/// One CSV row per (sample, component): `a,b,c,component,grad_a,grad_b`.
pub fn projections_to_csv(points: &[GradientProjection]) -> String {
    let mut out = String::from("a,b,c,component,grad_a,grad_b\n");
    for pt in points {
        for (i, (x, y)) in pt.first.iter().zip(&pt.second).enumerate() {
            let (a, b, c) = pt.triple;
            let _ = writeln!(out, "{a},{b},{c},{},{x:e},{y:e}", i + 1);
        }
    }
    out
}
