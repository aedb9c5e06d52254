// SPDX-License-Identifier: MIT OR Apache-2.0

//! Diagnostics that tell Clock from Pizza: gradient symmetricity, distance
//! irrelevance and circularity, plus the correct-logit matrix they build on.

mod projection;

pub use projection::{gradient_projection_figure, projections_to_csv, GradientProjection};

use serde::{Deserialize, Serialize};

use crate::autodiff::embedding_gradients;
use crate::error::{Error, Result};
use crate::models::Network;
use crate::numerics::{cosine_similarity, fourier_power_fraction, principal_components, Matrix, SeededRng};

/// RNG stream reserved for metric sampling.
pub const METRIC_STREAM: u64 = 2;
/// Triples drawn for gradient symmetricity by default.
pub const DEFAULT_SAMPLE_COUNT: usize = 100;
/// Gradients shorter than this are treated as zero and their triple skipped.
pub const GRADIENT_NORM_FLOOR: f64 = 1e-12;
/// Correct-logit matrices with a smaller standard deviation are constant.
pub const STD_FLOOR: f64 = 1e-9;
/// Principal components that enter circularity.
pub const CIRCULARITY_COMPONENTS: usize = 4;
/// Rows processed per tape when sweeping many triples.
const CHUNK: usize = 4096;

/// `L[a][b]` = logit of class `(a + b) mod p` on input `(a, b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectLogitMatrix {
    pub p: usize,
    pub values: Matrix,
}

impl CorrectLogitMatrix {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[(a, b)]
    }

    /// Rows indexed by `a − b`, columns by `a + b` (both mod `p`).
    ///
    /// For odd `p` every cell has exactly one preimage; for even `p` half the
    /// cells have two and the one with the smaller `a` is shown, the rest are 0.
    pub fn by_difference_and_sum(&self) -> Matrix {
        let p = self.p;
        let mut out = Matrix::zeros(p, p);
        let mut seen = vec![false; p * p];
        for a in 0..p {
            for b in 0..p {
                let r = (a + p - b) % p;
                let s = (a + b) % p;
                if !seen[r * p + s] {
                    seen[r * p + s] = true;
                    out[(r, s)] = self.values[(a, b)];
                }
            }
        }
        out
    }
}

/// The full correct-logit matrix of a network.
pub fn correct_logits<N: Network + ?Sized>(model: &N) -> Result<CorrectLogitMatrix> {
    let p = model.modulus();
    let pairs = crate::training::all_pairs(p);
    let mut values = Matrix::zeros(p, p);
    for chunk in pairs.chunks(CHUNK) {
        let logits = model.logits(chunk)?;
        for (r, &(a, b)) in chunk.iter().enumerate() {
            values[(a, b)] = logits[(r, (a + b) % p)];
        }
    }
    Ok(CorrectLogitMatrix { p, values })
}

/// Every logit over `Z_p³`, flattened in `(a, b, c)` row-major order.
pub fn all_logits<N: Network + ?Sized>(model: &N) -> Result<Vec<f64>> {
    let p = model.modulus();
    let pairs = crate::training::all_pairs(p);
    let mut out = Vec::with_capacity(p * p * p);
    for chunk in pairs.chunks(CHUNK) {
        out.extend_from_slice(model.logits(chunk)?.as_slice());
    }
    Ok(out)
}

/// Which `(a, b, c)` triples enter gradient symmetricity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SampleSet {
    /// Every triple of `Z_p³`.
    Exhaustive,
    /// `count` uniform triples from the given seed's metric stream.
    Random { count: usize, seed: u64 },
    Explicit { triples: Vec<(usize, usize, usize)> },
}

impl SampleSet {
    pub fn triples(&self, p: usize) -> Vec<(usize, usize, usize)> {
        match self {
            Self::Exhaustive => (0..p)
                .flat_map(|a| (0..p).flat_map(move |b| (0..p).map(move |c| (a, b, c))))
                .collect(),
            Self::Random { count, seed } => {
                let mut rng = SeededRng::stream(*seed, METRIC_STREAM);
                (0..*count)
                    .map(|_| (rng.below(p), rng.below(p), rng.below(p)))
                    .collect()
            }
            Self::Explicit { triples } => triples.clone(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Exhaustive => "exhaustive".into(),
            Self::Random { count, seed } => format!("random:{count}:seed={seed}"),
            Self::Explicit { triples } => format!("explicit:{}", triples.len()),
        }
    }
}

/// Mean cosine similarity between the two operand-embedding gradients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Symmetricity {
    /// `None` when every triple was degenerate.
    pub value: Option<f64>,
    pub used: usize,
    /// Triples skipped because a gradient vanished.
    pub degenerate: usize,
}

pub fn gradient_symmetricity<N: Network + ?Sized>(model: &N, samples: &SampleSet) -> Result<Symmetricity> {
    let triples = samples.triples(model.modulus());
    if triples.is_empty() {
        return Err(Error::InvalidArgument("empty sample set".into()));
    }
    let mut total = 0.0;
    let mut used = 0;
    let mut degenerate = 0;
    for chunk in triples.chunks(CHUNK) {
        for (ga, gb) in embedding_gradients(model, chunk)? {
            match cosine_similarity(&ga, &gb, GRADIENT_NORM_FLOOR) {
                Some(c) => {
                    total += c;
                    used += 1;
                }
                None => degenerate += 1,
            }
        }
    }
    Ok(Symmetricity {
        value: (used > 0).then(|| total / used as f64),
        used,
        degenerate,
    })
}

fn population_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    (values.map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Mean over `d` of the spread of `L[i][i+d]`, relative to the spread of all
/// entries. Standard deviations are population (divide by count). `None` for
/// a constant matrix.
pub fn distance_irrelevance(l: &CorrectLogitMatrix) -> Option<f64> {
    let p = l.p;
    let overall = population_std(l.values.as_slice().iter().copied());
    if !(overall > STD_FLOOR) {
        return None;
    }
    let per_diagonal: f64 = (0..p)
        .map(|d| population_std((0..p).map(move |i| l.values[(i, (i + d) % p)])))
        .sum();
    Some(per_diagonal / p as f64 / overall)
}

/// Average, over the four leading principal components of the `p × d`
/// embedding rows, of the largest single-frequency power fraction.
pub fn circularity(embeddings: &Matrix, p: usize) -> Result<Option<f64>> {
    if embeddings.rows() != p {
        return Err(Error::Dimension(format!(
            "expected {p} embedding rows, found {}",
            embeddings.rows()
        )));
    }
    if embeddings.cols() < CIRCULARITY_COMPONENTS || p < CIRCULARITY_COMPONENTS {
        return Err(Error::Dimension(format!(
            "circularity needs {CIRCULARITY_COMPONENTS} principal components"
        )));
    }
    let pca = principal_components(embeddings, CIRCULARITY_COMPONENTS)?;
    let mut total = 0.0;
    for l in 0..CIRCULARITY_COMPONENTS {
        let v = pca.projection(l);
        if v.iter().all(|&x| x.abs() < 1e-300) {
            return Ok(None);
        }
        let mut best: f64 = 0.0;
        for k in 1..p {
            best = best.max(fourier_power_fraction(&v, k)?);
        }
        total += best;
    }
    Ok(Some(total / CIRCULARITY_COMPONENTS as f64))
}

/// The three metrics for one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub gradient_symmetricity: Option<f64>,
    pub distance_irrelevance: Option<f64>,
    pub circularity: Option<f64>,
    pub val_accuracy: Option<f64>,
    /// Describes the triples used for symmetricity.
    pub sample_set: String,
    pub degenerate_triples: usize,
}

/// Computes every metric of a network.
pub fn analyze<N: Network + ?Sized>(
    model: &N,
    samples: &SampleSet,
    val_accuracy: Option<f64>,
) -> Result<MetricReport> {
    let sym = gradient_symmetricity(model, samples)?;
    let l = correct_logits(model)?;
    let emb = model.operand_embeddings();
    let circ = if emb.cols() >= CIRCULARITY_COMPONENTS {
        circularity(&emb, model.modulus())?
    } else {
        None
    };
    Ok(MetricReport {
        gradient_symmetricity: sym.value,
        distance_irrelevance: distance_irrelevance(&l),
        circularity: circ,
        val_accuracy,
        sample_set: samples.describe(),
        degenerate_triples: sym.degenerate,
    })
}
