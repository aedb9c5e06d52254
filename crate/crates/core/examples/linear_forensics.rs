//! Weight-level analysis of the linear families: removing the second ReLU,
//! aligning weights with principal directions, and fitting the response of
//! one hidden block to points on a unit circle.

use pizzaclock::isolation::{align_weights, circle_response, fit_unit_circle_response, relu_removal_check};
use pizzaclock::models::{Family, RunConfig};
use pizzaclock::training::train;

fn main() -> pizzaclock::Result<()> {
    let quick = |family| RunConfig { epochs: 1500, early_stop: true, ..RunConfig::linear(family, 128, 1) };

    let beta = train(&quick(Family::LinearBeta))?;
    let removal = relu_removal_check(beta.weights.as_ref().expect("weights"))?;
    println!(
        "linear beta: accuracy {:.3} -> {:.3} without the second ReLU",
        removal.accuracy_before, removal.accuracy_after
    );

    let alpha = train(&quick(Family::LinearAlpha))?;
    let model = alpha.weights.as_ref().expect("weights");
    let aligned = align_weights(model)?;
    println!("linear alpha: domino score w1 {:.3} w2 {:.3}", aligned.domino_w1, aligned.domino_w2);
    for out in 0..2 {
        let fit = fit_unit_circle_response(circle_response(model, &aligned, (0, 1), out), 360)?;
        println!(
            "  response on pcs (0,1) -> out {out}: dominant harmonic {} amplitude {:.3} residual {:.3}",
            fit.dominant_frequency, fit.amplitude, fit.residual_fraction
        );
    }
    Ok(())
}
