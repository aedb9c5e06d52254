// SPDX-License-Identifier: MIT OR Apache-2.0

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use super::CircleSpec;
use crate::autodiff::Tape;
use crate::error::{Error, Result};
use crate::models::{Network, Recorded};
use crate::numerics::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalyticKind {
    /// `H_ab` is the product of the two unit-circle embeddings.
    Clock,
    /// `H_ab = (α, β)` built from absolute values of the embedding sum.
    PizzaExample,
    /// Midpoint of the operands on the doubled-frequency circle, read out negated.
    Accompanying,
}

/// A hand-built network with 2-d embeddings `E`, a 2-d hidden state `H_ab`
/// and unembedding `U_c = (cos w_k c, sin w_k c)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticModel {
    pub kind: AnalyticKind,
    pub spec: CircleSpec,
}

impl AnalyticModel {
    pub fn new(kind: AnalyticKind, spec: CircleSpec) -> Self {
        Self { kind, spec }
    }

    /// Panics if `k` is not in `[1, p−1]`.
    pub fn clock(p: usize, k: usize) -> Self {
        Self::new(AnalyticKind::Clock, CircleSpec::new(p, k).expect("valid circle"))
    }

    /// Panics if `k` is not in `[1, p−1]`.
    pub fn pizza(p: usize, k: usize) -> Self {
        Self::new(AnalyticKind::PizzaExample, CircleSpec::new(p, k).expect("valid circle"))
    }

    /// Panics if `k` is not in `[1, p−1]`.
    pub fn accompanying(p: usize, k: usize) -> Self {
        Self::new(AnalyticKind::Accompanying, CircleSpec::new(p, k).expect("valid circle"))
    }

    fn embedding_table(&self) -> Matrix {
        let doubled = self.kind == AnalyticKind::Accompanying;
        Matrix::from_fn(self.spec.p, 2, |j, col| {
            let t = self.spec.angle(j as i64) * if doubled { 2.0 } else { 1.0 };
            if col == 0 { t.cos() } else { t.sin() }
        })
    }

    fn unembedding(&self) -> Matrix {
        Matrix::from_fn(2, self.spec.p, |row, c| {
            let (x, y) = self.spec.point(c);
            if row == 0 { x } else { y }
        })
    }

    /// `H_ab` for one pair.
    pub fn hidden(&self, a: usize, b: usize) -> Result<(f64, f64)> {
        let mut tape = Tape::new();
        let h = self.record_hidden(&mut tape, &[(a, b)])?.0;
        let v = tape.value(h);
        Ok((v[(0, 0)], v[(0, 1)]))
    }

    fn record_hidden(
        &self,
        tape: &mut Tape,
        pairs: &[(usize, usize)],
    ) -> Result<(crate::autodiff::Var, crate::autodiff::Var)> {
        let p = self.spec.p;
        if let Some(&(a, b)) = pairs.iter().find(|(a, b)| *a >= p || *b >= p) {
            return Err(Error::Tokens(format!("operand pair ({a}, {b}) outside Z_{p}")));
        }
        if pairs.is_empty() {
            return Err(Error::Tokens("empty batch".into()));
        }
        let table = tape.leaf(self.embedding_table());
        let idx = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        let embeds = tape.gather(table, idx);
        let ea = tape.select_position(embeds, 2, 0);
        let eb = tape.select_position(embeds, 2, 1);
        let hidden = match self.kind {
            AnalyticKind::Clock => {
                // Columns: ax·bx, ay·by, ax·by, ay·bx.
                let pick_a = tape.leaf(Matrix::from_rows(&[
                    vec![1.0, 0.0, 1.0, 0.0],
                    vec![0.0, 1.0, 0.0, 1.0],
                ])?);
                let pick_b = tape.leaf(Matrix::from_rows(&[
                    vec![1.0, 0.0, 0.0, 1.0],
                    vec![0.0, 1.0, 1.0, 0.0],
                ])?);
                let combine = tape.leaf(Matrix::from_rows(&[
                    vec![1.0, 0.0],
                    vec![-1.0, 0.0],
                    vec![0.0, 1.0],
                    vec![0.0, 1.0],
                ])?);
                let xa = tape.matmul(ea, pick_a);
                let xb = tape.matmul(eb, pick_b);
                let prod = tape.mul(xa, xb);
                tape.matmul(prod, combine)
            }
            AnalyticKind::PizzaExample => {
                let r = FRAC_1_SQRT_2;
                let sum = tape.add(ea, eb);
                // |c|, |s|, |c+s|/√2, |c−s|/√2 with c, s the summed coordinates.
                let project = tape.leaf(Matrix::from_rows(&[vec![1.0, 0.0, r, r], vec![0.0, 1.0, r, -r]])?);
                let combine = tape.leaf(Matrix::from_rows(&[
                    vec![1.0, 0.0],
                    vec![-1.0, 0.0],
                    vec![0.0, 1.0],
                    vec![0.0, -1.0],
                ])?);
                let proj = tape.matmul(sum, project);
                let abs = tape.abs(proj);
                tape.matmul(abs, combine)
            }
            AnalyticKind::Accompanying => {
                let sum = tape.add(ea, eb);
                tape.scale(sum, -0.5)
            }
        };
        Ok((hidden, embeds))
    }
}

impl Network for AnalyticModel {
    fn modulus(&self) -> usize {
        self.spec.p
    }

    fn record(&self, tape: &mut Tape, pairs: &[(usize, usize)]) -> Result<Recorded> {
        let (hidden, embeds) = self.record_hidden(tape, pairs)?;
        let u = tape.leaf(self.unembedding());
        let logits = tape.matmul(hidden, u);
        Ok(Recorded {
            logits,
            embeds,
            seq: 2,
            params: Vec::new(),
        })
    }

    fn operand_embeddings(&self) -> Matrix {
        self.embedding_table()
    }
}
