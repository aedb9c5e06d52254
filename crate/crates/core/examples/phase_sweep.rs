//! A small attention-rate sweep at reduced width, followed by the phase
//! boundary fit. Worker count follows `PIZZACLOCK_WORKERS`.
//!
//! ```text
//! cargo run --release --example phase_sweep -- [OUT_DIR]
//! ```

use std::path::PathBuf;

use pizzaclock::models::RunConfig;
use pizzaclock::sweep::{default_workers, phase_boundary, run_sweep, Sampler, SweepSpec};

fn main() -> pizzaclock::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from);
    let spec = SweepSpec {
        base: RunConfig { epochs: 1500, early_stop: true, ..RunConfig::default() },
        attention_rate: Sampler::Grid(vec![0.0, 0.5, 1.0]),
        width: Sampler::Fixed(32.0),
        layers: Sampler::Fixed(1.0),
        seeds: vec![1, 2],
        runs: None,
        sampler_seed: 0,
    };
    let records = run_sweep(&spec, out.as_deref(), default_workers())?;
    for r in &records {
        let m = r.metrics.as_ref();
        println!(
            "alpha {:.2} seed {} converged {} circ {:?} s_g {:?} q {:?} -> {:?}",
            r.config.attention_rate,
            r.config.seed,
            r.converged,
            m.and_then(|m| m.circularity),
            m.and_then(|m| m.gradient_symmetricity),
            m.and_then(|m| m.distance_irrelevance),
            r.label()
        );
    }
    let b = phase_boundary(&records)?;
    println!("pizza {} clock {} accuracy {:?} transition {:?}", b.pizza, b.clock, b.accuracy, b.transition_rate(32));
    Ok(())
}
