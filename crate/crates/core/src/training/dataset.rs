// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::SeededRng;

/// RNG stream reserved for the train/validation split.
pub const SPLIT_STREAM: u64 = 1;

/// Every operand pair of `Z_p × Z_p`, split into train and validation parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub p: usize,
    pub train: Vec<(usize, usize)>,
    pub validation: Vec<(usize, usize)>,
}

impl Dataset {
    pub fn label(&self, a: usize, b: usize) -> usize {
        (a + b) % self.p
    }

    pub fn labels(&self, pairs: &[(usize, usize)]) -> Vec<usize> {
        pairs.iter().map(|&(a, b)| self.label(a, b)).collect()
    }
}

/// All `p²` pairs in row-major order `(0,0), (0,1), …`.
pub fn all_pairs(p: usize) -> Vec<(usize, usize)> {
    (0..p).flat_map(|a| (0..p).map(move |b| (a, b))).collect()
}

/// Number of training pairs: `train_fraction · p²` rounded to nearest.
pub fn train_size(p: usize, train_fraction: f64) -> usize {
    (train_fraction * (p * p) as f64).round() as usize
}

/// Shuffles all pairs with the seed and takes the first `train_size` as training data.
pub fn make_dataset(p: usize, train_fraction: f64, seed: u64) -> Result<Dataset> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let n = train_size(p, train_fraction);
    if n == 0 || n >= p * p {
        return Err(Error::InvalidArgument(format!(
            "fraction {train_fraction} of {} pairs leaves an empty split",
            p * p
        )));
    }
    let mut pairs = all_pairs(p);
    SeededRng::stream(seed, SPLIT_STREAM).shuffle(&mut pairs);
    let validation = pairs.split_off(n);
    Ok(Dataset {
        p,
        train: pairs,
        validation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn default_split_sizes() {
        let ds = make_dataset(59, 0.8, 0).unwrap();
        assert_eq!((ds.train.len(), ds.validation.len()), (2785, 696));
        let all: HashSet<_> = ds.train.iter().chain(&ds.validation).collect();
        assert_eq!(all.len(), 3481);
    }

    #[test]
    fn tiny_even_split() {
        let ds = make_dataset(2, 0.5, 3).unwrap();
        assert_eq!((ds.train.len(), ds.validation.len()), (2, 2));
    }

    #[test]
    fn split_is_deterministic_and_seed_dependent() {
        assert_eq!(make_dataset(13, 0.8, 5).unwrap(), make_dataset(13, 0.8, 5).unwrap());
        assert_ne!(make_dataset(13, 0.8, 5).unwrap(), make_dataset(13, 0.8, 6).unwrap());
    }

    #[test]
    fn empty_splits_are_rejected() {
        assert!(make_dataset(3, 0.01, 0).is_err());
        assert!(make_dataset(3, 0.99, 0).is_err());
        assert!(make_dataset(3, 1.0, 0).is_err());
    }
}
