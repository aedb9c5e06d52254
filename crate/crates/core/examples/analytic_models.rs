//! Metrics of the three hand-built circuits at p = 59, k = 1.
//!
//! ```text
//! cargo run --release --example analytic_models
//! ```

use pizzaclock::metrics::{all_logits, correct_logits, distance_irrelevance, gradient_symmetricity, SampleSet};
use pizzaclock::oracles::{accompanying_logit, clock_logit, fve, logit_tensor, pizza_logit, AnalyticModel};

fn main() -> pizzaclock::Result<()> {
    let models = [
        ("clock", AnalyticModel::clock(59, 1)),
        ("pizza", AnalyticModel::pizza(59, 1)),
        ("accompanying", AnalyticModel::accompanying(59, 1)),
    ];
    println!("{:<13} {:>8} {:>8} {:>10} {:>10} {:>10}", "model", "s_g", "q", "fve clock", "fve pizza", "fve acc");
    for (name, m) in &models {
        let sg = gradient_symmetricity(m, &SampleSet::Exhaustive)?.value;
        let q = distance_irrelevance(&correct_logits(m)?);
        let logits = all_logits(m)?;
        let f = |g| fve(&logits, &logit_tensor(&m.spec, g));
        let show = |v: Option<f64>| v.map_or("undef".to_string(), |x| format!("{x:.4}"));
        println!(
            "{name:<13} {:>8} {:>8} {:>10} {:>10} {:>10}",
            show(sg),
            show(q),
            show(f(clock_logit)?),
            show(f(pizza_logit)?),
            show(f(accompanying_logit)?)
        );
    }
    Ok(())
}
