// SPDX-License-Identifier: MIT OR Apache-2.0

//! Circle isolation: keep one pair of embedding principal components, see
//! what the network computes from it, and name the algorithm.

mod forensics;

pub use forensics::{
    align_weights, circle_response, fit_unit_circle_response, relu_removal_check, AlignedWeights,
    CircleResponseFit, ReluRemoval,
};

use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::all_logits;
use crate::models::{ModelParams, Network};
use crate::numerics::{principal_components, Matrix};
use crate::oracles::{accompanying_logit, clock_logit, fve, pizza_logit, CircleSpec};
use crate::sweep::RunRecord;
use crate::training::{all_pairs, evaluate};

/// Fits with a mean resultant length below `1 − MISFIT_LIMIT` are non-circular.
pub const MISFIT_LIMIT: f64 = 0.3;
/// Point clouds whose radii vary more than this (relative std) are non-circular.
pub const RADIUS_SPREAD_LIMIT: f64 = 0.5;

/// Replaces the operand embedding rows by their reconstruction from the
/// listed principal components (0-based), leaving every other weight alone.
///
/// The embedding mean is dropped unless `add_mean` is set.
pub fn isolate_circle(model: &ModelParams, components: &[usize], add_mean: bool) -> Result<ModelParams> {
    let Some(&max) = components.iter().max() else {
        return Err(Error::InvalidArgument("no components selected".into()));
    };
    let mut out = model.clone();
    let mut done: Vec<std::ops::Range<usize>> = Vec::new();
    for slot in 0..2 {
        let rows = model.arch.operand_rows(slot);
        if done.contains(&rows) {
            continue;
        }
        let idx: Vec<usize> = rows.clone().collect();
        let emb = model.embedding().select_rows(&idx);
        let limit = emb.rows().min(emb.cols());
        if max >= limit {
            return Err(Error::Dimension(format!(
                "component {max} out of range for {} available",
                limit
            )));
        }
        let pca = principal_components(&emb, max + 1)?;
        let rebuilt = pca.reconstruct(components, add_mean);
        let w_e = out.get_mut("W_E").expect("every model has W_E");
        for (i, &r) in idx.iter().enumerate() {
            w_e.row_mut(r).copy_from_slice(rebuilt.row(i));
        }
        done.push(rows);
    }
    Ok(out)
}

/// Result of fitting `θ_t ≈ θ_0 + 2πkt/p` to the polar angles of `p` points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEstimate {
    /// Best frequency for the observed winding direction.
    pub k: usize,
    /// The same circle traversed the other way, `p − k`.
    pub k_mirror: usize,
    /// `1 −` mean resultant length of the angle residuals (0 is a perfect fit).
    pub misfit: f64,
    /// Relative standard deviation of the radii.
    pub radius_spread: f64,
    pub circular: bool,
}

impl FrequencyEstimate {
    pub fn w_k(&self, p: usize) -> f64 {
        2.0 * PI * self.k as f64 / p as f64
    }
}

/// Estimates the frequency of a circle given as `p × 2` points, row `t` for token `t`.
pub fn estimate_k(points: &Matrix) -> Result<FrequencyEstimate> {
    let p = points.rows();
    if points.cols() != 2 || p < 3 {
        return Err(Error::Dimension(format!(
            "expected p×2 circle points with p ≥ 3, got {}x{}",
            p,
            points.cols()
        )));
    }
    points.ensure_finite("circle points")?;
    let centered = points.center_rows();
    let radii: Vec<f64> = (0..p).map(|t| centered.row(t)[0].hypot(centered.row(t)[1])).collect();
    let mean_r = radii.iter().sum::<f64>() / p as f64;
    let radius_spread = if mean_r > 0.0 {
        (radii.iter().map(|r| (r - mean_r).powi(2)).sum::<f64>() / p as f64).sqrt() / mean_r
    } else {
        f64::INFINITY
    };
    let theta: Vec<f64> = (0..p)
        .map(|t| centered.row(t)[1].atan2(centered.row(t)[0]))
        .collect();
    let mut best = (1, f64::NEG_INFINITY);
    for k in 1..p {
        let (mut c, mut s) = (0.0, 0.0);
        for (t, th) in theta.iter().enumerate() {
            let r = th - 2.0 * PI * ((k * t) % p) as f64 / p as f64;
            c += r.cos();
            s += r.sin();
        }
        let resultant = c.hypot(s) / p as f64;
        if resultant > best.1 {
            best = (k, resultant);
        }
    }
    let misfit = 1.0 - best.1;
    Ok(FrequencyEstimate {
        k: best.0,
        k_mirror: p - best.0,
        misfit,
        radius_spread,
        circular: mean_r > 0.0 && misfit <= MISFIT_LIMIT && radius_spread <= RADIUS_SPREAD_LIMIT,
    })
}

/// Modular inverse by brute force; `None` when `x` is not invertible mod `p`.
pub fn inverse_mod(x: usize, p: usize) -> Option<usize> {
    (1..p).find(|&y| (x * y) % p == 1)
}

/// What one isolated circle does.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleReport {
    pub p: usize,
    /// 0-based principal components spanning the circle.
    pub pc_pair: (usize, usize),
    pub circular: bool,
    pub misfit: f64,
    /// Estimated frequency; `None` for non-circular pairs.
    pub k: Option<usize>,
    pub w_k: Option<f64>,
    /// Difference between numbers adjacent on the circle, `k⁻¹ mod p`.
    pub gap: Option<usize>,
    /// Accuracy over all `p²` inputs with only this circle kept.
    pub isolated_accuracy: f64,
    pub fve_clock: Option<f64>,
    pub fve_pizza: Option<f64>,
    /// Against the accompanying formula for the circle at half this frequency.
    pub fve_accompanying: Option<f64>,
    pub is_accompanying: bool,
    /// Index of the paired circle in the report list.
    pub partner: Option<usize>,
}

fn formula_tensor(spec: &CircleSpec, f: fn(&CircleSpec, usize, usize, usize) -> f64) -> Vec<f64> {
    crate::oracles::logit_tensor(spec, f)
}

/// Reports for the first `n_pairs` component pairs `(0,1), (2,3), …`, with
/// accompanying pairs already linked.
pub fn circle_reports(model: &ModelParams, n_pairs: usize) -> Result<Vec<CircleReport>> {
    let p = model.arch.p;
    let emb = model.operand_embeddings();
    let n = 2 * n_pairs;
    if n == 0 || n > emb.rows().min(emb.cols()) {
        return Err(Error::Dimension(format!("cannot take {n_pairs} component pairs")));
    }
    let pca = principal_components(&emb, n)?;
    let mut reports = Vec::with_capacity(n_pairs);
    for i in 0..n_pairs {
        let pair = (2 * i, 2 * i + 1);
        let pts = Matrix::from_fn(p, 2, |t, c| pca.projections[(t, if c == 0 { pair.0 } else { pair.1 })]);
        let est = estimate_k(&pts)?;
        let isolated = isolate_circle(model, &[pair.0, pair.1], false)?;
        let tensor = all_logits(&isolated)?;
        let (acc, _) = evaluate(&isolated, &all_pairs(p))?;
        let mut report = CircleReport {
            p,
            pc_pair: pair,
            circular: est.circular,
            misfit: est.misfit,
            k: None,
            w_k: None,
            gap: None,
            isolated_accuracy: acc,
            fve_clock: None,
            fve_pizza: None,
            fve_accompanying: None,
            is_accompanying: false,
            partner: None,
        };
        if est.circular {
            let spec = CircleSpec::new(p, est.k)?;
            report.k = Some(est.k);
            report.w_k = Some(est.w_k(p));
            report.gap = inverse_mod(est.k, p);
            report.fve_clock = fve(&tensor, &formula_tensor(&spec, clock_logit))?;
            report.fve_pizza = fve(&tensor, &formula_tensor(&spec, pizza_logit))?;
            if let Some(half) = inverse_mod(2, p).map(|h| (est.k * h) % p).filter(|&h| h != 0) {
                let half_spec = CircleSpec::new(p, half)?;
                report.fve_accompanying = fve(&tensor, &formula_tensor(&half_spec, accompanying_logit))?;
            }
        }
        reports.push(report);
    }
    for (accompanied, accompanying) in detect_accompanying(&reports) {
        reports[accompanying].is_accompanying = true;
        reports[accompanying].partner = Some(accompanied);
        reports[accompanied].partner.get_or_insert(accompanying);
    }
    Ok(reports)
}

/// [`circle_reports`] for a stored run.
pub fn isolation_report(record: &RunRecord, n_pairs: usize) -> Result<Vec<CircleReport>> {
    let model = record
        .weights
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("record carries no weights".into()))?;
    circle_reports(model, n_pairs)
}

/// Pairs `(accompanied, accompanying)` whose gaps satisfy
/// `δ_accompanied ≡ ±2 δ_accompanying (mod p)`, i.e. the accompanying circle
/// runs at twice the frequency. Each circle accompanies at most one other.
pub fn detect_accompanying(reports: &[CircleReport]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut used = BTreeSet::new();
    for (j, rj) in reports.iter().enumerate() {
        let (Some(dj), true) = (rj.gap, rj.circular) else { continue };
        for (i, ri) in reports.iter().enumerate() {
            if i == j || used.contains(&j) {
                continue;
            }
            let (Some(di), true) = (ri.gap, ri.circular) else { continue };
            let p = ri.p;
            let twice = (2 * dj) % p;
            if twice != 0 && (di == twice || di == p - twice) {
                pairs.push((i, j));
                used.insert(j);
            }
        }
    }
    pairs
}

/// Accuracy over all inputs after keeping only the given components jointly.
pub fn truncated_accuracy(model: &ModelParams, components: &[usize]) -> Result<f64> {
    let isolated = isolate_circle(model, components, false)?;
    Ok(evaluate(&isolated, &all_pairs(model.arch.p))?.0)
}

/// Accuracy with the six leading components kept.
pub fn six_component_accuracy(model: &ModelParams) -> Result<f64> {
    truncated_accuracy(model, &[0, 1, 2, 3, 4, 5])
}

/// Accuracy with the union of the listed circles kept.
pub fn circle_set_accuracy(model: &ModelParams, reports: &[CircleReport], which: &[usize]) -> Result<f64> {
    let comps: Vec<usize> = which
        .iter()
        .flat_map(|&i| [reports[i].pc_pair.0, reports[i].pc_pair.1])
        .collect();
    truncated_accuracy(model, &comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build, RunConfig};

    fn circle(p: usize, k: usize, noise: impl Fn(usize) -> f64) -> Matrix {
        Matrix::from_fn(p, 2, |t, c| {
            let th = 2.0 * PI * ((k * t) % p) as f64 / p as f64;
            let r = 1.0 + noise(t);
            if c == 0 { 3.0 + r * th.cos() } else { -1.0 + r * th.sin() }
        })
    }

    #[test]
    fn recovers_every_frequency() {
        for k in 1..59 {
            let est = estimate_k(&circle(59, k, |_| 0.0)).unwrap();
            assert_eq!(est.k, k);
            assert_eq!(est.k_mirror, 59 - k);
            assert!(est.circular);
        }
    }

    #[test]
    fn radial_noise_does_not_move_the_estimate() {
        let est = estimate_k(&circle(59, 17, |t| 0.05 * ((t * 7919) % 13) as f64 / 13.0)).unwrap();
        assert_eq!(est.k, 17);
    }

    #[test]
    fn a_line_is_not_a_circle() {
        let pts = Matrix::from_fn(59, 2, |t, c| if c == 0 { t as f64 } else { 2.0 * t as f64 });
        assert!(!estimate_k(&pts).unwrap().circular);
    }

    #[test]
    fn full_rank_isolation_with_mean_is_exact() {
        let model = build(&RunConfig::transformer(1.0, 16, 3)).unwrap();
        let all: Vec<usize> = (0..16).collect();
        let iso = isolate_circle(&model, &all, true).unwrap();
        let pairs = all_pairs(59);
        let d = model.logits(&pairs).unwrap().max_abs_diff(&iso.logits(&pairs).unwrap());
        assert!(d < 1e-8, "{d}");
    }

    #[test]
    fn isolation_is_idempotent() {
        let model = build(&RunConfig::transformer(0.0, 16, 3)).unwrap();
        let once = isolate_circle(&model, &[0, 1], false).unwrap();
        let twice = isolate_circle(&once, &[0, 1], false).unwrap();
        let pairs = all_pairs(59);
        let d = once.logits(&pairs).unwrap().max_abs_diff(&twice.logits(&pairs).unwrap());
        assert!(d < 1e-9, "{d}");
    }

    fn report_with_gap(k: usize, p: usize) -> CircleReport {
        CircleReport {
            p,
            pc_pair: (0, 1),
            circular: true,
            misfit: 0.0,
            k: Some(k),
            w_k: Some(2.0 * PI * k as f64 / p as f64),
            gap: inverse_mod(k, p),
            isolated_accuracy: 0.0,
            fve_clock: None,
            fve_pizza: None,
            fve_accompanying: None,
            is_accompanying: false,
            partner: None,
        }
    }

    #[test]
    fn accompanying_relation() {
        let p = 59;
        let reports = vec![report_with_gap(17, p), report_with_gap(5, p), report_with_gap(34, p)];
        assert_eq!(detect_accompanying(&reports), vec![(0, 2)]);
        let unrelated = vec![report_with_gap(17, p), report_with_gap(5, p)];
        assert!(detect_accompanying(&unrelated).is_empty());
    }
}
