// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use super::record::{Label, RunRecord};
use crate::error::Result;
use crate::numerics::{fit_logistic_2d, LogisticFit};

/// Logistic separation of Pizza from Clock runs in the
/// (attention rate, log₂ width) plane. Positive scores mean Pizza.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseBoundary {
    /// `None` when only one class is present.
    pub fit: Option<LogisticFit>,
    /// Resubstitution accuracy of `fit`.
    pub accuracy: Option<f64>,
    pub pizza: usize,
    pub clock: usize,
    pub single_class: bool,
}

impl PhaseBoundary {
    pub fn predicts_pizza(&self, attention_rate: f64, width: usize) -> Option<bool> {
        self.fit
            .as_ref()
            .map(|f| f.predict(attention_rate, (width as f64).log2()))
    }

    /// Attention rate at which the boundary crosses `width`.
    pub fn transition_rate(&self, width: usize) -> Option<f64> {
        self.fit.as_ref()?.boundary_x_at((width as f64).log2())
    }
}

/// Fits the boundary over converged runs labelled Pizza or Clock; every other
/// record is ignored.
pub fn phase_boundary(records: &[RunRecord]) -> Result<PhaseBoundary> {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for r in records.iter().filter(|r| r.converged) {
        let pizza = match r.label() {
            Some(Label::Pizza) => true,
            Some(Label::Clock) => false,
            _ => continue,
        };
        points.push((r.config.attention_rate, (r.config.width as f64).log2()));
        labels.push(pizza);
    }
    let pizza = labels.iter().filter(|&&l| l).count();
    let clock = labels.len() - pizza;
    if pizza == 0 || clock == 0 {
        return Ok(PhaseBoundary {
            fit: None,
            accuracy: None,
            pizza,
            clock,
            single_class: true,
        });
    }
    let fit = fit_logistic_2d(&points, &labels)?;
    let accuracy = fit.accuracy(&points, &labels);
    Ok(PhaseBoundary {
        fit: Some(fit),
        accuracy: Some(accuracy),
        pizza,
        clock,
        single_class: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricReport;
    use crate::models::RunConfig;
    use crate::sweep::{classify, Thresholds};

    pub(crate) fn synthetic(rate: f64, width: usize, pizza: bool) -> RunRecord {
        let mut r = RunRecord::failed(RunConfig::transformer(rate, width, 0), "synthetic");
        r.status = crate::sweep::RunStatus::Completed;
        r.converged = true;
        let m = MetricReport {
            gradient_symmetricity: Some(if pizza { 0.99 } else { 0.4 }),
            distance_irrelevance: Some(if pizza { 0.2 } else { 0.9 }),
            circularity: Some(0.999),
            val_accuracy: Some(1.0),
            sample_set: "synthetic".into(),
            degenerate_triples: 0,
        };
        r.classification = Some(classify(&m, &Thresholds::default()));
        r.metrics = Some(m);
        r
    }

    #[test]
    fn separable_rates_give_a_vertical_boundary_near_the_split() {
        let mut recs = Vec::new();
        for (i, &w) in [32usize, 64, 128, 256, 512].iter().enumerate() {
            for k in 0..10 {
                let rate = (k as f64 + 0.5 + 0.01 * i as f64) / 10.0;
                recs.push(synthetic(rate, w, rate < 0.5));
            }
        }
        let b = phase_boundary(&recs).unwrap();
        assert_eq!(b.accuracy, Some(1.0));
        for w in [32, 128, 512] {
            let t = b.transition_rate(w).unwrap();
            assert!((t - 0.5).abs() < 0.06, "width {w}: {t}");
        }
        let fit = b.fit.unwrap();
        assert!(fit.w_x.abs() > 10.0 * fit.w_y.abs());
    }

    #[test]
    fn single_class_is_flagged() {
        let recs = vec![synthetic(0.1, 128, true), synthetic(0.2, 128, true)];
        let b = phase_boundary(&recs).unwrap();
        assert!(b.single_class);
        assert!(b.fit.is_none());
    }
}
