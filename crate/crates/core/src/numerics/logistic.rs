// SPDX-License-Identifier: MIT OR Apache-2.0

//! Unregularized two-feature logistic regression fitted by gradient ascent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 10_000;
pub const GRADIENT_TOL: f64 = 1e-6;
const STEP: f64 = 1.0;

/// Decision function `sign(w_x·x + w_y·y + bias)`; positive means label `true`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub w_x: f64,
    pub w_y: f64,
    pub bias: f64,
    /// Gradient norm fell below tolerance before the iteration cap.
    pub converged: bool,
    /// Every input point coincides; no boundary is identifiable.
    pub degenerate: bool,
    pub iterations: usize,
}

impl LogisticFit {
    pub fn score(&self, x: f64, y: f64) -> f64 {
        self.w_x * x + self.w_y * y + self.bias
    }

    pub fn predict(&self, x: f64, y: f64) -> bool {
        self.score(x, y) > 0.0
    }

    /// Fraction of points whose predicted label matches.
    pub fn accuracy(&self, points: &[(f64, f64)], labels: &[bool]) -> f64 {
        let hits = points
            .iter()
            .zip(labels)
            .filter(|(&(x, y), &l)| self.predict(x, y) == l)
            .count();
        hits as f64 / points.len().max(1) as f64
    }

    /// `x` on the boundary at a given `y`, when the boundary is not horizontal.
    pub fn boundary_x_at(&self, y: f64) -> Option<f64> {
        (self.w_x != 0.0).then(|| -(self.w_y * y + self.bias) / self.w_x)
    }
}

/// Maximum-likelihood logistic fit. Features are standardized internally and
/// the weights mapped back to the original coordinates.
pub fn fit_logistic_2d(points: &[(f64, f64)], labels: &[bool]) -> Result<LogisticFit> {
    if points.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} points but {} labels",
            points.len(),
            labels.len()
        )));
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument("no points to fit".into()));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::NonFinite("logistic input"));
    }
    let n = points.len() as f64;
    let stats = |f: &dyn Fn(&(f64, f64)) -> f64| {
        let mean = points.iter().map(f).sum::<f64>() / n;
        let var = points.iter().map(|p| (f(p) - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        (mean, if sd > 0.0 { sd } else { 1.0 }, sd > 0.0)
    };
    let (mx, sx, vx) = stats(&|p| p.0);
    let (my, sy, vy) = stats(&|p| p.1);
    let degenerate = !vx && !vy;

    let z: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| ((x - mx) / sx, (y - my) / sy))
        .collect();
    let t: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();

    let mut w = [0.0f64; 3];
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..MAX_ITERATIONS {
        let mut g = [0.0f64; 3];
        for (&(zx, zy), &ti) in z.iter().zip(&t) {
            let pr = sigmoid(w[0] * zx + w[1] * zy + w[2]);
            let r = ti - pr;
            g[0] += r * zx;
            g[1] += r * zy;
            g[2] += r;
        }
        g.iter_mut().for_each(|v| *v /= n);
        iterations = it + 1;
        let gnorm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if gnorm < GRADIENT_TOL {
            converged = true;
            break;
        }
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi += STEP * gi;
        }
    }

    let w_x = w[0] / sx;
    let w_y = w[1] / sy;
    Ok(LogisticFit {
        w_x,
        w_y,
        bias: w[2] - w_x * mx - w_y * my,
        converged: converged && !degenerate,
        degenerate,
        iterations,
    })
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}
