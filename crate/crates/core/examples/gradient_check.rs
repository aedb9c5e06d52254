//! Finite-difference verification of the reverse-mode gradients for every
//! model family.

use pizzaclock::autodiff::{finite_difference_check_with, FdObjective, FdOptions};
use pizzaclock::models::{build, Family, RunConfig};

fn main() -> pizzaclock::Result<()> {
    let configs = [
        RunConfig::transformer(0.0, 32, 1),
        RunConfig::transformer(1.0, 32, 2),
        RunConfig { layers: 2, ..RunConfig::transformer(0.5, 32, 3) },
        RunConfig::linear(Family::LinearAlpha, 64, 4),
        RunConfig::linear(Family::LinearAlphaPrime, 64, 5),
        RunConfig::linear(Family::LinearBeta, 64, 6),
        RunConfig::linear(Family::LinearGamma, 64, 7),
        RunConfig::linear(Family::LinearDelta, 64, 8),
    ];
    for cfg in &configs {
        let model = build(cfg)?;
        for objective in [FdObjective::Loss, FdObjective::Logit] {
            let r = finite_difference_check_with(&model, &FdOptions { probes: 30, objective, ..FdOptions::default() })?;
            println!(
                "{:<20} layers {} {:<5?} max rel err {:.2e} ({} checked, {} near kinks)",
                cfg.family.name(),
                cfg.layers,
                objective,
                r.max_rel_error,
                r.checked,
                r.kink_skipped
            );
        }
    }
    Ok(())
}
