// SPDX-License-Identifier: MIT OR Apache-2.0

//! Trains the reference runs (both phases plus the transition) into a cache
//! directory, one record per run. Existing records are reused, so the
//! program can be interrupted and restarted.
//!
//! ```text
//! cargo run --release --example reproduce -- [DIR]
//! ```
//!
//! `DIR` defaults to `runs/reference` at the workspace root.

use std::path::PathBuf;
use std::time::Instant;

use pizzaclock::sweep::{reference_runs, train_cached};

fn main() -> pizzaclock::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../runs/reference"));
    for cfg in reference_runs() {
        let start = Instant::now();
        println!("attention rate {} seed {}", cfg.attention_rate, cfg.seed);
        let rec = train_cached(&dir, &cfg, |cp| {
            println!(
                "  epoch {:>5}  train loss {:.3e}  val acc {:.4}  ({:.0}s)",
                cp.epoch,
                cp.train_loss,
                cp.val_acc,
                start.elapsed().as_secs_f64()
            );
        })?;
        let m = rec.metrics.as_ref();
        println!(
            "  done: epochs {} converged {} circularity {:?} s_g {:?} q {:?} label {:?}",
            rec.epochs_run,
            rec.converged,
            m.and_then(|m| m.circularity),
            m.and_then(|m| m.gradient_symmetricity),
            m.and_then(|m| m.distance_irrelevance),
            rec.label()
        );
    }
    Ok(())
}
