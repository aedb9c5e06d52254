// SPDX-License-Identifier: MIT OR Apache-2.0

//! Discrete Fourier power of a sequence indexed by residues mod `p`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Fraction of a sequence's power carried by frequency `k` (counting the
/// conjugate frequency `p − k` as well, hence the factor 2).
///
/// Returns `2 / (p · Σ v_j²) · |Σ_j v_j e^{2πi jk/p}|²`.
pub fn fourier_power_fraction(v: &[f64], k: usize) -> Result<f64> {
    let p = v.len();
    if k == 0 || k >= p {
        return Err(Error::InvalidArgument(format!(
            "frequency {k} outside [1, {}]",
            p.saturating_sub(1)
        )));
    }
    let energy: f64 = v.iter().map(|x| x * x).sum();
    if energy == 0.0 {
        return Err(Error::InvalidArgument("zero vector has no spectrum".into()));
    }
    let (re, im) = dft_coefficient(v, k);
    Ok(2.0 / (p as f64 * energy) * (re * re + im * im))
}

/// `Σ_j v_j e^{2πi jk/p}` as `(re, im)`.
pub fn dft_coefficient(v: &[f64], k: usize) -> (f64, f64) {
    let p = v.len();
    let mut re = 0.0;
    let mut im = 0.0;
    for (j, &x) in v.iter().enumerate() {
        // Reduce jk mod p before scaling to keep the angle small.
        let phase = 2.0 * PI * ((j * k) % p) as f64 / p as f64;
        re += x * phase.cos();
        im += x * phase.sin();
    }
    (re, im)
}

/// The frequency in `[1, p−1]` with the largest power fraction, and that fraction.
pub fn dominant_frequency(v: &[f64]) -> Result<(usize, f64)> {
    let mut best = (1, f64::NEG_INFINITY);
    for k in 1..v.len() {
        let f = fourier_power_fraction(v, k)?;
        if f > best.1 {
            best = (k, f);
        }
    }
    Ok(best)
}
