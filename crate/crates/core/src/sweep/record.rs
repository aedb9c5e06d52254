// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::isolation::CircleReport;
use crate::metrics::MetricReport;
use crate::models::{ModelParams, RunConfig};
use crate::numerics::{Matrix, RNG_ALGORITHM};
use crate::training::Checkpoint;

/// Bumped whenever a stored field changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state")]
pub enum RunStatus {
    Completed,
    Failed { reason: String },
}

/// Everything kept about one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub config: RunConfig,
    pub rng_algorithm: String,
    pub status: RunStatus,
    /// Final validation accuracy is exactly 1.
    pub converged: bool,
    pub epochs_run: usize,
    pub checkpoints: Vec<Checkpoint>,
    /// Operand embedding rows, `p × d`.
    pub embeddings: Matrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<ModelParams>,
    pub metrics: Option<MetricReport>,
    #[serde(default)]
    pub circles: Vec<CircleReport>,
    /// Present only for converged runs.
    pub classification: Option<Classification>,
}

impl RunRecord {
    /// A record for a run that could not even start.
    pub fn failed(config: RunConfig, reason: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config,
            rng_algorithm: RNG_ALGORITHM.to_string(),
            status: RunStatus::Failed {
                reason: reason.into(),
            },
            converged: false,
            epochs_run: 0,
            checkpoints: Vec::new(),
            embeddings: Matrix::zeros(0, 0),
            weights: None,
            metrics: None,
            circles: Vec::new(),
            classification: None,
        }
    }

    pub fn label(&self) -> Option<Label> {
        self.classification.as_ref().map(|c| c.label)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Pizza,
    Clock,
    NonCircular,
    Ambiguous,
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Self::Pizza => "pizza",
            Self::Clock => "clock",
            Self::NonCircular => "non_circular",
            Self::Ambiguous => "ambiguous",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Runs below this circularity are non-circular.
    pub circularity: f64,
    /// Pizza needs symmetricity strictly above this.
    pub symmetricity: f64,
    /// Pizza needs distance irrelevance strictly below this.
    pub irrelevance: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            circularity: 0.995,
            symmetricity: 0.98,
            irrelevance: 0.6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: Label,
    pub thresholds: Thresholds,
}

/// Labels a metric report. Any undefined metric makes the run ambiguous.
pub fn classify(report: &MetricReport, thresholds: &Thresholds) -> Classification {
    let label = match (
        report.circularity,
        report.gradient_symmetricity,
        report.distance_irrelevance,
    ) {
        (Some(circ), _, _) if circ < thresholds.circularity => Label::NonCircular,
        (Some(_), Some(sg), Some(q)) => {
            let symmetric = sg > thresholds.symmetricity;
            let irrelevant = q < thresholds.irrelevance;
            match (symmetric, irrelevant) {
                (true, true) => Label::Pizza,
                (false, false) => Label::Clock,
                _ => Label::Ambiguous,
            }
        }
        _ => Label::Ambiguous,
    };
    Classification {
        label,
        thresholds: *thresholds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(circ: f64, sg: f64, q: f64) -> MetricReport {
        MetricReport {
            gradient_symmetricity: Some(sg),
            distance_irrelevance: Some(q),
            circularity: Some(circ),
            val_accuracy: Some(1.0),
            sample_set: "test".into(),
            degenerate_triples: 0,
        }
    }

    #[test]
    fn labels() {
        let t = Thresholds::default();
        assert_eq!(classify(&report(0.998, 0.9937, 0.17), &t).label, Label::Pizza);
        assert_eq!(classify(&report(0.998, 0.3336, 0.85), &t).label, Label::Clock);
        assert_eq!(classify(&report(0.80, 0.99, 0.1), &t).label, Label::NonCircular);
        assert_eq!(classify(&report(0.998, 0.99, 0.7), &t).label, Label::Ambiguous);
        assert_eq!(classify(&report(0.998, 0.5, 0.3), &t).label, Label::Ambiguous);
    }

    #[test]
    fn thresholds_are_strict_on_the_pizza_side() {
        let t = Thresholds::default();
        assert_eq!(classify(&report(0.995, 0.98, 0.6), &t).label, Label::Clock);
    }

    #[test]
    fn undefined_metric_is_ambiguous() {
        let mut r = report(0.999, 0.99, 0.1);
        r.distance_irrelevance = None;
        assert_eq!(classify(&r, &Thresholds::default()).label, Label::Ambiguous);
    }
}
