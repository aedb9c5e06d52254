//! Writes the SVG figures for one model: correct-logit heatmaps, the first
//! embedding circle, and gradient projections as CSV.
//!
//! ```text
//! cargo run --release --example figures -- [OUT_DIR]
//! ```

use std::path::PathBuf;

use pizzaclock::cli::{render_circle, render_heatmap, Reindex};
use pizzaclock::metrics::{correct_logits, gradient_projection_figure, projections_to_csv, SampleSet};
use pizzaclock::models::Network;
use pizzaclock::numerics::{principal_components, Matrix};
use pizzaclock::oracles::AnalyticModel;
use pizzaclock::sweep::write_text;

fn main() -> pizzaclock::Result<()> {
    let dir = std::env::args().nth(1).map_or_else(|| PathBuf::from("figures"), PathBuf::from);
    for (name, model) in [("clock", AnalyticModel::clock(59, 1)), ("pizza", AnalyticModel::pizza(59, 1))] {
        let l = correct_logits(&model)?;
        write_text(&dir.join(format!("{name}-logits.svg")), &render_heatmap(&l, Reindex::Raw))?;
        write_text(&dir.join(format!("{name}-logits-diff-sum.svg")), &render_heatmap(&l, Reindex::DifferenceSum))?;
        let samples = SampleSet::Random { count: 200, seed: 1 }.triples(59);
        let points = gradient_projection_figure(&model, &samples)?;
        write_text(&dir.join(format!("{name}-gradients.csv")), &projections_to_csv(&points))?;
        let emb = model.operand_embeddings();
        let pca = principal_components(&emb, 2)?;
        let pts = Matrix::from_fn(59, 2, |t, c| pca.projections[(t, c)]);
        let labels: Vec<String> = (0..59).map(|t| t.to_string()).collect();
        write_text(&dir.join(format!("{name}-circle.svg")), &render_circle(&pts, &labels))?;
    }
    println!("figures written to {}", dir.display());
    Ok(())
}
