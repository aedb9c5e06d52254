// SPDX-License-Identifier: MIT OR Apache-2.0

//! Dense linear algebra, spectra, seeded randomness and a small logistic fit.

mod fourier;
mod logistic;
mod matrix;
mod rng;
mod svd;

pub use fourier::{dft_coefficient, dominant_frequency, fourier_power_fraction};
pub use logistic::{fit_logistic_2d, LogisticFit};
pub use matrix::{cosine_similarity, dot, norm, Matrix};
pub(crate) use matrix::gemm_into;
pub use rng::{SeededRng, RNG_ALGORITHM};
pub use svd::{principal_components, svd, PcaResult, Svd};
