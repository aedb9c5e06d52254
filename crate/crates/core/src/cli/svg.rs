// SPDX-License-Identifier: MIT OR Apache-2.0

//! Static SVG figures. Output depends only on the input values, so equal
//! inputs give byte-identical files.

use std::fmt::Write;

use crate::metrics::CorrectLogitMatrix;
use crate::numerics::Matrix;
use crate::sweep::{Label, RunRecord};

/// Pixel size of one heatmap cell.
pub const CELL: usize = 8;
/// Colour at the negative end of the diverging scale (RGB).
pub const COLD: (u8, u8, u8) = (33, 102, 172);
/// Colour at the mean.
pub const NEUTRAL: (u8, u8, u8) = (247, 247, 247);
/// Colour at the positive end.
pub const HOT: (u8, u8, u8) = (178, 24, 43);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reindex {
    /// Rows `a`, columns `b`.
    Raw,
    /// Rows `a − b`, columns `a + b`.
    DifferenceSum,
}

fn lerp(a: (u8, u8, u8), b: (u8, u8, u8), t: f64) -> (u8, u8, u8) {
    let mix = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * t).round() as u8;
    (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Maps `t ∈ [−1, 1]` to the diverging scale.
fn diverging(t: f64) -> (u8, u8, u8) {
    let t = t.clamp(-1.0, 1.0);
    if t < 0.0 {
        lerp(NEUTRAL, COLD, -t)
    } else {
        lerp(NEUTRAL, HOT, t)
    }
}

/// Correct-logit heatmap on a scale symmetric about the matrix mean.
pub fn render_heatmap(l: &CorrectLogitMatrix, reindex: Reindex) -> String {
    let m: Matrix = match reindex {
        Reindex::Raw => l.values.clone(),
        Reindex::DifferenceSum => l.by_difference_and_sum(),
    };
    let (rows, cols) = m.shape();
    let n = (rows * cols).max(1) as f64;
    let mean = m.as_slice().iter().sum::<f64>() / n;
    let spread = m.as_slice().iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    let (w, h) = (cols * CELL, rows * CELL);
    let (row_name, col_name) = match reindex {
        Reindex::Raw => ("a", "b"),
        Reindex::DifferenceSum => ("a-b", "a+b"),
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        w + 40,
        h + 40,
        w + 40,
        h + 40
    );
    let _ = writeln!(s, r#"<g transform="translate(30,10)">"#);
    for r in 0..rows {
        for c in 0..cols {
            let t = if spread > 0.0 { (m[(r, c)] - mean) / spread } else { 0.0 };
            let (cr, cg, cb) = diverging(t);
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="rgb({cr},{cg},{cb})"/>"#,
                c * CELL,
                r * CELL
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="10" text-anchor="middle">{col_name}</text>"#,
        w / 2,
        h + 20
    );
    let _ = writeln!(
        s,
        r#"<text x="-12" y="{}" font-size="10" text-anchor="middle" transform="rotate(-90 -12 {})">{row_name}</text>"#,
        h / 2,
        h / 2
    );
    s.push_str("</g>\n</svg>\n");
    s
}

/// Scatter of `p` embedding points, each labelled with its token.
pub fn render_circle(points: &Matrix, labels: &[String]) -> String {
    let size = 400.0;
    let pad = 30.0;
    let n = points.rows();
    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for r in 0..n {
        lo_x = lo_x.min(points[(r, 0)]);
        hi_x = hi_x.max(points[(r, 0)]);
        lo_y = lo_y.min(points[(r, 1)]);
        hi_y = hi_y.max(points[(r, 1)]);
    }
    let span = (hi_x - lo_x).max(hi_y - lo_y);
    let span = if span > 0.0 { span } else { 1.0 };
    let (cx, cy) = (0.5 * (lo_x + hi_x), 0.5 * (lo_y + hi_y));
    let map = |x: f64, y: f64| {
        (
            pad + (x - cx) / span * (size - 2.0 * pad) + (size - 2.0 * pad) / 2.0,
            pad + (cy - y) / span * (size - 2.0 * pad) + (size - 2.0 * pad) / 2.0,
        )
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    for r in 0..n {
        let (x, y) = map(points[(r, 0)], points[(r, 1)]);
        let _ = writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="3" fill="rgb{COLD:?}"/>"#);
        if let Some(label) = labels.get(r) {
            let _ = writeln!(
                s,
                r#"<text x="{:.3}" y="{:.3}" font-size="8">{label}</text>"#,
                x + 4.0,
                y - 4.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn label_colour(label: Option<Label>) -> &'static str {
    match label {
        Some(Label::Pizza) => "rgb(178,24,43)",
        Some(Label::Clock) => "rgb(33,102,172)",
        Some(Label::Ambiguous) => "rgb(120,120,120)",
        Some(Label::NonCircular) | None => "rgb(200,200,200)",
    }
}

/// Two panels, distance irrelevance and gradient symmetricity against
/// attention rate, one dot per converged run coloured by class.
pub fn render_phase(records: &[RunRecord]) -> String {
    let (pw, ph, pad) = (300.0, 240.0, 40.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        2.0 * (pw + pad) + pad,
        ph + 2.0 * pad,
        2.0 * (pw + pad) + pad,
        ph + 2.0 * pad
    );
    let panels: [(&str, fn(&RunRecord) -> Option<f64>); 2] = [
        ("distance irrelevance", |r| r.metrics.as_ref()?.distance_irrelevance),
        ("gradient symmetricity", |r| r.metrics.as_ref()?.gradient_symmetricity),
    ];
    for (i, (title, metric)) in panels.iter().enumerate() {
        let ox = pad + i as f64 * (pw + pad);
        let _ = writeln!(
            s,
            r#"<rect x="{ox}" y="{pad}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{title}</text>"#,
            ox + pw / 2.0,
            pad - 10.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="10" text-anchor="middle">attention rate</text>"#,
            ox + pw / 2.0,
            pad + ph + 25.0
        );
        for r in records.iter().filter(|r| r.converged) {
            let Some(v) = metric(r) else { continue };
            let x = ox + r.config.attention_rate.clamp(0.0, 1.0) * pw;
            let y = pad + (1.0 - v.clamp(0.0, 1.0)) * ph;
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.3}" cy="{y:.3}" r="4" fill="{}"/>"#,
                label_colour(r.label())
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_heatmap_is_one_colour() {
        let l = CorrectLogitMatrix {
            p: 5,
            values: Matrix::filled(5, 5, 2.0),
        };
        let svg = render_heatmap(&l, Reindex::Raw);
        let fills: std::collections::BTreeSet<&str> =
            svg.match_indices("fill=\"rgb(").map(|(i, _)| &svg[i..i + 24]).collect();
        assert_eq!(fills.len(), 1);
        assert_eq!(svg, render_heatmap(&l, Reindex::Raw));
    }
}
