// SPDX-License-Identifier: MIT OR Apache-2.0

use std::f64::consts::PI;

/// `| |cos t| − |sin t| − cos 2t |`.
pub fn abs_cos_deviation_at(t: f64) -> f64 {
    (t.cos().abs() - t.sin().abs() - (2.0 * t).cos()).abs()
}

/// Largest [`abs_cos_deviation_at`] over `grid` evenly spaced points of `[0, 2π)`.
pub fn abs_cos_identity_deviation(grid: usize) -> f64 {
    (0..grid)
        .map(|i| abs_cos_deviation_at(2.0 * PI * i as f64 / grid as f64))
        .fold(0.0, f64::max)
}

/// Largest residual of
/// `α(cos x + cos y) + β(sin x + sin y) = cos((x−y)/2)·(2α cos((x+y)/2) + 2β sin((x+y)/2))`
/// over a `grid × grid` lattice of `[0, 2π)²`.
pub fn symmetric_decomposition_check(alpha: f64, beta: f64, grid: usize) -> f64 {
    let at = |i: usize| 2.0 * PI * i as f64 / grid as f64;
    let mut worst: f64 = 0.0;
    for i in 0..grid {
        let x = at(i);
        for j in 0..grid {
            let y = at(j);
            let lhs = alpha * (x.cos() + y.cos()) + beta * (x.sin() + y.sin());
            let half_sum = 0.5 * (x + y);
            let rhs = (0.5 * (x - y)).cos() * (2.0 * alpha * half_sum.cos() + 2.0 * beta * half_sum.sin());
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_points() {
        assert!(abs_cos_deviation_at(0.0) < 1e-15);
        assert!(abs_cos_deviation_at(PI / 4.0) < 1e-15);
    }

    #[test]
    fn decomposition_is_exact() {
        assert!(symmetric_decomposition_check(0.3, -1.7, 40) < 1e-12);
    }
}
