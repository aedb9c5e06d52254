//! Trains a single transformer and prints its checkpoints and final class.
//!
//! ```text
//! cargo run --release --example train_one -- [ATTENTION_RATE] [EPOCHS]
//! ```
//!
//! Defaults to a small width so it finishes in a few minutes.

use pizzaclock::models::RunConfig;
use pizzaclock::training::{train_with, EarlyStop};

fn main() -> pizzaclock::Result<()> {
    let mut args = std::env::args().skip(1);
    let rate: f64 = args.next().map_or(Ok(0.0), |s| s.parse()).expect("attention rate");
    let epochs: usize = args.next().map_or(Ok(3000), |s| s.parse()).expect("epochs");
    let cfg = RunConfig {
        epochs,
        early_stop: true,
        ..RunConfig::transformer(rate, 64, 1)
    };
    let rec = train_with(&cfg, EarlyStop::default(), |cp| {
        println!("epoch {:>5}  loss {:.3e}  val acc {:.4}", cp.epoch, cp.train_loss, cp.val_acc);
    })?;
    println!("{}", serde_json::to_string_pretty(&rec.metrics).expect("serializable"));
    println!("label: {:?}", rec.label());
    Ok(())
}
