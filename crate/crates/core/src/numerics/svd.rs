// SPDX-License-Identifier: MIT OR Apache-2.0

//! Singular value decomposition by one-sided Jacobi rotations, and PCA on top.

use serde::{Deserialize, Serialize};

use super::matrix::{dot, Matrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;
const ROTATION_TOL: f64 = 1e-14;

/// Thin SVD `a = u · diag(s) · vᵀ`.
#[derive(Clone, Debug)]
pub struct Svd {
    /// `rows × r` left singular vectors (columns).
    pub u: Matrix,
    /// `r` singular values, descending.
    pub s: Vec<f64>,
    /// `cols × r` right singular vectors (columns).
    pub v: Matrix,
}

/// Computes the thin SVD with `r = min(rows, cols)`.
///
/// Singular vectors belonging to zero singular values are completed to an
/// orthonormal set, so `u` and `v` always have orthonormal columns.
pub fn svd(a: &Matrix) -> Result<Svd> {
    a.ensure_finite("svd input")?;
    if a.rows() >= a.cols() {
        jacobi_tall(a)
    } else {
        let t = jacobi_tall(&a.transpose())?;
        Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        })
    }
}

fn jacobi_tall(a: &Matrix) -> Result<Svd> {
    let (m, n) = a.shape();
    // Work on columns stored contiguously.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = dot(&cols[i], &cols[i]);
                let beta = dot(&cols[j], &cols[j]);
                let gamma = dot(&cols[i], &cols[j]);
                if gamma == 0.0 || gamma.abs() <= ROTATION_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));

    let scale = norms.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut v_cols = Vec::with_capacity(n);
    for &j in &order {
        let sigma = norms[j];
        let unit = if sigma > 1e-13 * scale && sigma > 0.0 {
            Some(cols[j].iter().map(|x| x / sigma).collect::<Vec<_>>())
        } else {
            None
        };
        match unit {
            Some(u) => {
                u_cols.push(u);
                s.push(sigma);
            }
            None => {
                u_cols.push(complete_basis(&u_cols, m));
                s.push(0.0);
            }
        }
        v_cols.push(v[j].clone());
    }

    let u = Matrix::from_fn(m, n, |r, c| u_cols[c][r]);
    let v = Matrix::from_fn(n, n, |r, c| v_cols[c][r]);
    Ok(Svd { u, s, v })
}

fn rotate(vecs: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = vecs.split_at_mut(j);
    for (x, y) in lo[i].iter_mut().zip(hi[0].iter_mut()) {
        let (xi, yj) = (*x, *y);
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}

/// A unit vector orthogonal to every vector in `basis` (Gram-Schmidt over the
/// standard basis).
fn complete_basis(basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for e in 0..dim {
        let mut cand = vec![0.0; dim];
        cand[e] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let proj = dot(&cand, b);
                cand.iter_mut().zip(b).for_each(|(c, bv)| *c -= proj * bv);
            }
        }
        let n = dot(&cand, &cand).sqrt();
        if best.as_ref().map_or(true, |(bn, _)| n > *bn) {
            best = Some((n, cand));
        }
        if n > 0.5 {
            break;
        }
    }
    let (n, mut cand) = best.unwrap_or((1.0, vec![0.0; dim]));
    cand.iter_mut().for_each(|c| *c /= n);
    cand
}

/// Principal components of a data matrix whose rows are observations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PcaResult {
    /// `n × cols`; row `i` is the `i`-th principal direction (unit length).
    pub components: Matrix,
    /// Descending singular values of the centered data.
    pub singular_values: Vec<f64>,
    /// `rows × n`; centered rows expressed in component coordinates.
    pub projections: Matrix,
    /// Mean row removed before decomposition.
    pub mean: Vec<f64>,
}

impl PcaResult {
    /// Coordinates of every observation along component `i`.
    pub fn projection(&self, i: usize) -> Vec<f64> {
        self.projections.column(i)
    }

    /// Rebuilds the data from the listed components, optionally re-adding the mean.
    pub fn reconstruct(&self, which: &[usize], add_mean: bool) -> Matrix {
        let rows = self.projections.rows();
        let cols = self.components.cols();
        let mut out = Matrix::zeros(rows, cols);
        for &i in which {
            let dir = self.components.row(i);
            for r in 0..rows {
                let coef = self.projections[(r, i)];
                for (o, d) in out.row_mut(r).iter_mut().zip(dir) {
                    *o += coef * d;
                }
            }
        }
        if add_mean {
            for r in 0..rows {
                for (o, m) in out.row_mut(r).iter_mut().zip(&self.mean) {
                    *o += m;
                }
            }
        }
        out
    }
}

/// Top-`n` principal components of the row-centered data.
pub fn principal_components(x: &Matrix, n: usize) -> Result<PcaResult> {
    let limit = x.rows().min(x.cols());
    if n > limit {
        return Err(Error::Dimension(format!(
            "requested {n} components from a {}x{} matrix",
            x.rows(),
            x.cols()
        )));
    }
    x.ensure_finite("pca input")?;
    let mean = x.column_means();
    let centered = x.center_rows();
    let dec = svd(&centered)?;
    let components = Matrix::from_fn(n, x.cols(), |i, c| dec.v[(c, i)]);
    let projections = Matrix::from_fn(x.rows(), n, |r, i| dec.u[(r, i)] * dec.s[i]);
    Ok(PcaResult {
        components,
        singular_values: dec.s[..n].to_vec(),
        projections,
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn check_orthonormal_columns(m: &Matrix) {
        let g = m.t_matmul(m);
        assert!(g.max_abs_diff(&Matrix::identity(m.cols())) < 1e-9, "{g:?}");
    }

    #[test]
    fn svd_reconstructs_wide_and_tall() {
        for (r, c) in [(7, 4), (4, 7), (5, 5)] {
            let a = Matrix::from_fn(r, c, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0 + 0.1 * j as f64);
            let d = svd(&a).unwrap();
            check_orthonormal_columns(&d.u);
            check_orthonormal_columns(&d.v);
            let k = r.min(c);
            let us = Matrix::from_fn(r, k, |i, j| d.u[(i, j)] * d.s[j]);
            assert!(us.matmul_t(&d.v).max_abs_diff(&a) < 1e-10);
            assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn constant_rows_give_zero_spectrum() {
        let x = Matrix::from_fn(6, 3, |_, c| c as f64 + 1.5);
        let pca = principal_components(&x, 3).unwrap();
        assert!(pca.singular_values.iter().all(|&s| s == 0.0));
        assert!(pca.projections.as_slice().iter().all(|&v| v == 0.0));
        check_orthonormal_columns(&pca.components.transpose());
    }

    #[test]
    fn unit_circle_has_two_equal_singular_values() {
        let p = 13;
        let x = Matrix::from_fn(p, 2, |j, c| {
            let t = 2.0 * PI * j as f64 / p as f64;
            if c == 0 {
                t.cos()
            } else {
                t.sin()
            }
        });
        let pca = principal_components(&x, 2).unwrap();
        let s = &pca.singular_values;
        assert!((s[0] - s[1]).abs() < 1e-10 && s[0] > 1.0);
        for r in 0..p {
            let rad = pca.projections.row(r).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((rad - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn too_many_components_is_an_error() {
        assert!(principal_components(&Matrix::zeros(3, 5), 4).is_err());
        let mut bad = Matrix::zeros(3, 3);
        bad[(0, 0)] = f64::NAN;
        assert!(principal_components(&bad, 2).is_err());
    }
}
