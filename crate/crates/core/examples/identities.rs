//! Numerical checks of the trigonometric facts the pizza circuit relies on.

use pizzaclock::oracles::{abs_cos_identity_deviation, symmetric_decomposition_check};

fn main() {
    for (alpha, beta) in [(1.0, 0.0), (0.3, -2.0), (4.0, 1.5)] {
        println!(
            "alpha {alpha:>4} beta {beta:>4}: symmetric decomposition residual {:.2e}",
            symmetric_decomposition_check(alpha, beta, 100)
        );
    }
    for grid in [1_000, 100_000, 1_000_000] {
        println!("max | |cos t| - |sin t| - cos 2t | on {grid:>7} points: {:.9}", abs_cos_identity_deviation(grid));
    }
}
