// SPDX-License-Identifier: MIT OR Apache-2.0

//! # pizzaclock
//!
//! Train small networks on modular addition `(a + b) mod p` and work out
//! which algorithm each one ended up implementing: the angle-adding *Clock*,
//! the midpoint-based *Pizza*, or something non-circular.
//!
//! The crate is organized bottom-up:
//!
//! - [`numerics`]: dense matrices, Jacobi SVD / PCA, Fourier power, seeded
//!   RNG, two-feature logistic regression.
//! - [`autodiff`]: a batched reverse-mode tape with a finite-difference oracle.
//! - [`models`]: transformers with attention-rate interpolation and the five
//!   linear families.
//! - [`oracles`]: closed-form Clock / Pizza / accompanying-Pizza logits,
//!   analytic reference networks, FVE and trigonometric identities.
//! - [`training`]: datasets, full-batch AdamW, checkpointed traces.
//! - [`metrics`]: gradient symmetricity, distance irrelevance, circularity,
//!   correct-logit matrices.
//! - [`isolation`]: circle isolation, frequency estimation, FVE attribution,
//!   accompanying-pizza detection and weight forensics.
//! - [`sweep`]: run records, classification, phase boundaries, persistence.
//! - [`cli`]: the `pizzaclock` command and SVG figures.

pub mod autodiff;
pub mod cli;
pub mod error;
pub mod isolation;
pub mod metrics;
pub mod models;
pub mod numerics;
pub mod oracles;
pub mod sweep;
pub mod training;

pub use error::{Error, Result};
