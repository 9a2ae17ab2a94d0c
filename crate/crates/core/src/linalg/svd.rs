//! Randomized truncated SVD.
//!
//! Range finder with a Gaussian test matrix and re-orthonormalized power
//! iterations, followed by an exact SVD of the small projected matrix via
//! one-sided (Hestenes) Jacobi rotations.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::matrix::{axpy, dot, Matrix};
use crate::error::{invalid, Result, ShredError};
use crate::rng;

pub const DEFAULT_OVERSAMPLE: usize = 10;
pub const DEFAULT_POWER_ITERS: usize = 2;

/// Rank-k factors with `A ≈ U · diag(S) · Vᵀ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvdFactors {
    /// rows × k, orthonormal columns
    pub u: Matrix,
    /// nonincreasing, nonnegative
    pub s: Vec<f64>,
    /// cols × k, orthonormal columns
    pub v: Matrix,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (x, s) in us.row_mut(i).iter_mut().zip(&self.s) {
                *x *= s;
            }
        }
        us.matmul_t(&self.v).expect("factor shapes are consistent")
    }
}

pub fn randomized_svd(
    a: &Matrix,
    k: usize,
    oversample: usize,
    power_iters: usize,
    seed: u64,
) -> Result<SvdFactors> {
    let (rows, cols) = a.shape();
    if k == 0 || k > rows.min(cols) {
        return invalid(format!(
            "rank {k} outside [1, {}] for a {rows}x{cols} matrix",
            rows.min(cols)
        ));
    }
    if !a.is_finite() {
        return Err(ShredError::NonFinite("randomized_svd input".into()));
    }
    let l = (k + oversample).min(rows.min(cols));

    let mut rng = rng::seeded(seed);
    let omega = Matrix::from_fn(cols, l, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormal_basis(&a.matmul(&omega)?);
    for _ in 0..power_iters {
        let z = orthonormal_basis(&a.t_matmul(&q)?);
        q = orthonormal_basis(&a.matmul(&z)?);
    }

    // B = Qᵀ A is l × cols; decompose Bᵀ (cols × l) so B = J Σ Wᵀ.
    let bt = a.t_matmul(&q)?;
    let small = jacobi_svd_columns(&bt);
    let u_full = q.matmul(&small.rotation)?;

    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&i, &j| small.sigma[j].total_cmp(&small.sigma[i]).then(i.cmp(&j)));
    let keep = &order[..k];
    Ok(SvdFactors {
        u: u_full.select_cols(keep),
        s: keep.iter().map(|&i| small.sigma[i]).collect(),
        v: small.left.select_cols(keep),
    })
}

/// Thin Householder QR; returns the rows × cols factor with orthonormal columns.
/// Requires rows ≥ cols.
pub(crate) fn orthonormal_basis(y: &Matrix) -> Matrix {
    let (m, n) = y.shape();
    debug_assert!(m >= n);
    // Work on columns stored contiguously.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| y.column(j)).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let x = &cols[j][j..];
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = x.to_vec();
        if norm > 0.0 {
            let alpha = if v[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vn = v.iter().map(|t| t * t).sum::<f64>().sqrt();
            if vn > 0.0 {
                v.iter_mut().for_each(|t| *t /= vn);
            }
        } else {
            v.iter_mut().for_each(|t| *t = 0.0);
        }
        for c in cols.iter_mut().skip(j) {
            let tail = &mut c[j..];
            let d = 2.0 * dot(&v, tail);
            axpy(tail, -d, &v);
        }
        reflectors.push(v);
    }
    // Q = H_0 H_1 ... H_{n-1} applied to the first n unit vectors.
    let mut q = Matrix::zeros(m, n);
    for j in 0..n {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        for (r, v) in reflectors.iter().enumerate().rev() {
            let tail = &mut e[r..];
            let d = 2.0 * dot(v, tail);
            axpy(tail, -d, v);
        }
        for (i, v) in e.iter().enumerate() {
            q.set(i, j, *v);
        }
    }
    q
}

pub(crate) struct ColumnSvd {
    /// n × l, orthonormal columns (left singular vectors of the input)
    pub left: Matrix,
    pub sigma: Vec<f64>,
    /// l × l orthogonal (right singular vectors of the input)
    pub rotation: Matrix,
}

/// One-sided Jacobi on an n × l matrix `m` (n ≥ l): `m = left · diag(sigma) · rotationᵀ`.
pub(crate) fn jacobi_svd_columns(m: &Matrix) -> ColumnSvd {
    let (n, l) = m.shape();
    let mut w: Vec<Vec<f64>> = (0..l).map(|j| m.column(j)).collect();
    let mut rot: Vec<Vec<f64>> = (0..l)
        .map(|j| {
            let mut e = vec![0.0; l];
            e[j] = 1.0;
            e
        })
        .collect();

    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..l {
            for q in p + 1..l {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, p, q, c, s);
                rotate_pair(&mut rot, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = w.iter().map(|c| dot(c, c).sqrt()).collect();
    let scale = sigma.iter().cloned().fold(0.0, f64::max);
    let tiny = scale * 1e-14 * (n.max(l) as f64);
    let mut left_cols: Vec<Option<Vec<f64>>> = w
        .iter()
        .zip(&sigma)
        .map(|(c, &s)| (s > tiny && s > 0.0).then(|| c.iter().map(|v| v / s).collect()))
        .collect();
    // Complete null directions so the left factor stays orthonormal.
    for j in 0..l {
        if left_cols[j].is_some() {
            continue;
        }
        let mut found = None;
        for e_idx in 0..n {
            let mut cand = vec![0.0; n];
            cand[e_idx] = 1.0;
            for _ in 0..2 {
                for other in left_cols.iter().flatten() {
                    let d = dot(other, &cand);
                    axpy(&mut cand, -d, other);
                }
            }
            let nn = dot(&cand, &cand).sqrt();
            if nn > 0.5 {
                cand.iter_mut().for_each(|v| *v /= nn);
                found = Some(cand);
                break;
            }
        }
        left_cols[j] = found;
    }
    let sigma: Vec<f64> = sigma
        .iter()
        .zip(&left_cols)
        .map(|(&s, _)| if s > tiny { s } else { 0.0 })
        .collect();

    let left = Matrix::from_fn(n, l, |i, j| left_cols[j].as_ref().map_or(0.0, |c| c[i]));
    let rotation = Matrix::from_fn(l, l, |i, j| rot[j][i]);
    ColumnSvd {
        left,
        sigma,
        rotation,
    }
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (a, b) = (&mut lo[p], &mut hi[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthonormality_error(m: &Matrix) -> f64 {
        let g = m.t_matmul(m).unwrap();
        g.sub(&Matrix::identity(g.rows())).unwrap().max_abs()
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let a = Matrix::identity(5);
        let f = randomized_svd(&a, 5, DEFAULT_OVERSAMPLE, DEFAULT_POWER_ITERS, 7).unwrap();
        for s in &f.s {
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(f.reconstruct().sub(&a).unwrap().frobenius_norm() <= 1e-10);
    }

    #[test]
    fn rank_one_outer_product() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]]).unwrap();
        let f = randomized_svd(&a, 1, 10, 2, 3).unwrap();
        let expect = 14f64.sqrt() * 2f64.sqrt();
        assert!((f.s[0] - expect).abs() < 1e-12, "{}", f.s[0]);
        assert!((f.s[0] - 5.2915).abs() < 1e-4);
    }

    #[test]
    fn factors_are_orthonormal_and_sorted() {
        let a = Matrix::from_fn(40, 25, |i, j| {
            ((i * 31 + j * 17) % 13) as f64 / 7.0 - (i as f64 / 40.0)
        });
        let f = randomized_svd(&a, 8, 10, 2, 11).unwrap();
        assert!(orthonormality_error(&f.u) < 1e-10);
        assert!(orthonormality_error(&f.v) < 1e-10);
        assert!(f.s.windows(2).all(|w| w[0] >= w[1]));
        assert!(f.s.iter().all(|s| *s >= 0.0));
    }

    #[test]
    fn rank_deficient_request_keeps_orthonormal_factors() {
        // exact rank 1, ask for 3
        let a = Matrix::from_fn(6, 4, |i, j| (i + 1) as f64 * (j as f64 - 1.5));
        let f = randomized_svd(&a, 3, 2, 1, 5).unwrap();
        assert!(orthonormality_error(&f.u) < 1e-10);
        assert!(orthonormality_error(&f.v) < 1e-10);
        assert!(f.s[1].abs() < 1e-10 && f.s[2].abs() < 1e-10);
        assert!(f.reconstruct().sub(&a).unwrap().frobenius_norm() < 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = Matrix::from_fn(30, 20, |i, j| ((i * j) as f64).sin());
        let f1 = randomized_svd(&a, 5, 10, 2, 99).unwrap();
        let f2 = randomized_svd(&a, 5, 10, 2, 99).unwrap();
        assert_eq!(f1, f2);
    }

    #[test]
    fn errors() {
        let a = Matrix::zeros(3, 2);
        assert!(randomized_svd(&a, 0, 1, 0, 0).is_err());
        assert!(randomized_svd(&a, 3, 1, 0, 0).is_err());
        let mut b = Matrix::identity(2);
        b.set(0, 1, f64::INFINITY);
        assert!(matches!(
            randomized_svd(&b, 1, 0, 0, 0),
            Err(ShredError::NonFinite(_))
        ));
    }
}
