//! Circle isolation on a trained record: frequency, fit, isolated accuracy and
//! algorithm attribution per principal-component pair.
//!
//! ```text
//! cargo run --release --example circle_isolation -- RECORD.json [PAIRS]
//! ```
//!
//! Without arguments it first trains a width-32 constant-attention model for
//! 800 epochs.

use pizzaclock::isolation::{circle_reports, detect_accompanying, six_component_accuracy};
use pizzaclock::models::RunConfig;
use pizzaclock::sweep::load_record;
use pizzaclock::training::train;

fn main() -> pizzaclock::Result<()> {
    let mut args = std::env::args().skip(1);
    let record = match args.next() {
        Some(path) => load_record(path.as_ref())?,
        None => train(&RunConfig { epochs: 800, ..RunConfig::transformer(0.0, 32, 1) })?,
    };
    let pairs: usize = args.next().map_or(3, |s| s.parse().expect("pair count"));
    let model = record.weights.as_ref().expect("record has weights");
    let circles = circle_reports(model, pairs)?;
    for (i, c) in circles.iter().enumerate() {
        println!(
            "circle {} pcs {:?} k {:?} gap {:?} circular {} acc {:.3} fve clock {:?} pizza {:?} acc {:?}",
            i + 1,
            c.pc_pair,
            c.k,
            c.gap,
            c.circular,
            c.isolated_accuracy,
            c.fve_clock,
            c.fve_pizza,
            c.fve_accompanying
        );
    }
    println!("accompanying pairs: {:?}", detect_accompanying(&circles));
    println!("six-component accuracy: {:.3}", six_component_accuracy(model)?);
    Ok(())
}
