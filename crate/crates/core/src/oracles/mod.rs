// SPDX-License-Identifier: MIT OR Apache-2.0

//! Closed-form reference algorithms and the trigonometric facts behind them.

mod analytic;
mod identities;

pub use analytic::{AnalyticKind, AnalyticModel};
pub use identities::{
    abs_cos_deviation_at, abs_cos_identity_deviation, symmetric_decomposition_check,
};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A circle of `p` points visited with angular step `w_k = 2πk/p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircleSpec {
    pub p: usize,
    pub k: usize,
}

impl CircleSpec {
    pub fn new(p: usize, k: usize) -> Result<Self> {
        if p < 2 || k == 0 || k >= p {
            return Err(Error::InvalidArgument(format!(
                "frequency {k} outside [1, {}]",
                p.saturating_sub(1)
            )));
        }
        Ok(Self { p, k })
    }

    pub fn w(&self) -> f64 {
        2.0 * PI * self.k as f64 / self.p as f64
    }

    /// `w_k · x` with `x` reduced mod `p` first, so large arguments stay exact.
    pub fn angle(&self, x: i64) -> f64 {
        let p = self.p as i64;
        2.0 * PI * ((self.k as i64 * x).rem_euclid(p)) as f64 / self.p as f64
    }

    /// The unit-circle point `(cos w_k x, sin w_k x)`.
    pub fn point(&self, x: usize) -> (f64, f64) {
        let t = self.angle(x as i64);
        (t.cos(), t.sin())
    }
}

fn phase(spec: &CircleSpec, a: usize, b: usize, c: usize) -> f64 {
    spec.angle(a as i64 + b as i64 - c as i64)
}

/// Clock logits: `cos(w_k(a + b − c))`.
pub fn clock_logit(spec: &CircleSpec, a: usize, b: usize, c: usize) -> f64 {
    phase(spec, a, b, c).cos()
}

/// The Clock logit as the bilinear form over unit-circle embeddings:
/// `(E_ax E_bx − E_ay E_by) E_cx + (E_ax E_by + E_ay E_bx) E_cy`.
pub fn clock_bilinear(spec: &CircleSpec, a: usize, b: usize, c: usize) -> f64 {
    let (ax, ay) = spec.point(a);
    let (bx, by) = spec.point(b);
    let (cx, cy) = spec.point(c);
    (ax * bx - ay * by) * cx + (ax * by + ay * bx) * cy
}

/// Pizza logits: `|cos(w_k(a − b)/2)| · cos(w_k(a + b − c))`.
pub fn pizza_logit(spec: &CircleSpec, a: usize, b: usize, c: usize) -> f64 {
    let half = 0.5 * spec.angle(a as i64 - b as i64);
    half.cos().abs() * phase(spec, a, b, c).cos()
}

/// Accompanying-pizza logits, computed from the midpoint `s` of the two
/// operands placed on the circle of doubled frequency: `A_c = −U_c · s`.
pub fn accompanying_logit(spec: &CircleSpec, a: usize, b: usize, c: usize) -> f64 {
    let (ta, tb) = (2.0 * spec.angle(a as i64), 2.0 * spec.angle(b as i64));
    let s = (0.5 * (ta.cos() + tb.cos()), 0.5 * (ta.sin() + tb.sin()));
    let (ux, uy) = spec.point(c);
    -(ux * s.0 + uy * s.1)
}

/// Every logit of a formula over `Z_p³`, in `(a, b, c)` row-major order.
pub fn logit_tensor(spec: &CircleSpec, f: fn(&CircleSpec, usize, usize, usize) -> f64) -> Vec<f64> {
    let p = spec.p;
    let mut out = Vec::with_capacity(p * p * p);
    for a in 0..p {
        for b in 0..p {
            for c in 0..p {
                out.push(f(spec, a, b, c));
            }
        }
    }
    out
}

/// Fraction of variance of `target` explained by `predicted` after both are
/// standardized to mean 0 and variance 1. `None` if either is constant.
pub fn fve(target: &[f64], predicted: &[f64]) -> Result<Option<f64>> {
    if target.len() != predicted.len() {
        return Err(Error::Dimension(format!(
            "fve of {} values against {}",
            target.len(),
            predicted.len()
        )));
    }
    if target.is_empty() {
        return Err(Error::InvalidArgument("fve of empty tensors".into()));
    }
    let (Some(t), Some(p)) = (standardize(target), standardize(predicted)) else {
        return Ok(None);
    };
    let mse = t.iter().zip(&p).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / t.len() as f64;
    Ok(Some(1.0 - mse))
}

/// Variance below this counts as constant.
pub const FVE_VARIANCE_FLOOR: f64 = 1e-24;

fn standardize(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if !(var > FVE_VARIANCE_FLOOR) {
        return None;
    }
    let sd = var.sqrt();
    Some(v.iter().map(|x| (x - mean) / sd).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clock_face() {
        let s = CircleSpec::new(12, 1).unwrap();
        assert!((clock_logit(&s, 10, 3, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn clock_matches_bilinear_form() {
        for k in [1, 17] {
            let s = CircleSpec::new(59, k).unwrap();
            for (a, b, c) in [(0, 0, 0), (3, 58, 11), (41, 7, 30)] {
                assert!((clock_logit(&s, a, b, c) - clock_bilinear(&s, a, b, c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn antipodal_pizza_pairs_vanish() {
        let s = CircleSpec::new(12, 1).unwrap();
        for c in 0..12 {
            assert!(pizza_logit(&s, 1, 7, c).abs() < 1e-15);
            assert!(pizza_logit(&s, 2, 8, c).abs() < 1e-15);
        }
        assert!((pizza_logit(&s, 5, 5, 10) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn accompanying_closed_form() {
        let s = CircleSpec::new(59, 7).unwrap();
        for (a, b, c) in [(4, 4, 8), (0, 30, 11), (13, 2, 50)] {
            let closed = -spec_cos(&s, a as i64 - b as i64) * spec_cos(&s, (a + b) as i64 - c as i64);
            assert!((accompanying_logit(&s, a, b, c) - closed).abs() < 1e-12);
        }
        assert!((accompanying_logit(&s, 9, 9, 18) + 1.0).abs() < 1e-12);
    }

    fn spec_cos(s: &CircleSpec, x: i64) -> f64 {
        s.angle(x).cos()
    }

    #[test]
    fn fve_affine_invariance_and_undefined() {
        let t: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).sin()).collect();
        let p: Vec<f64> = t.iter().map(|x| 3.0 * x - 2.0).collect();
        assert!((fve(&t, &t).unwrap().unwrap() - 1.0).abs() < 1e-12);
        assert!((fve(&t, &p).unwrap().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(fve(&t, &vec![1.0; 50]).unwrap(), None);
        assert!(fve(&t, &t[..3]).is_err());
    }

    #[test]
    fn frequency_bounds() {
        assert!(CircleSpec::new(59, 0).is_err());
        assert!(CircleSpec::new(59, 59).is_err());
        assert!(CircleSpec::new(59, 58).is_ok());
    }
}
