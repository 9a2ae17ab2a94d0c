//! Low-frequency truncation of 2-D discrete Fourier spectra.
//!
//! Snapshots are stored as rows of length `m·n` in row-major grid order,
//! `m` rows along y and `n` columns along x. The forward transform is
//! unnormalized (`DC = Σ f`); the inverse divides by `m·n`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{invalid, shape_err, Result};

/// Retained wavenumbers `|k_x| ≤ cut_x`, `|k_y| ≤ cut_y` on an `m × n` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierTruncation {
    m: usize,
    n: usize,
    cut_x: usize,
    cut_y: usize,
    /// signed `(k_x, k_y)`, ordered by `(|k_x|, |k_y|, k_x < 0, k_y < 0)`
    indices: Vec<(i64, i64)>,
}

impl FourierTruncation {
    pub fn new(m: usize, n: usize, cut_x: usize, cut_y: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return invalid("Fourier grid must be nonempty");
        }
        if cut_x > n / 2 || cut_y > m / 2 {
            return invalid(format!(
                "cutoffs ({cut_x}, {cut_y}) exceed the Nyquist limits ({}, {}) of a {m}x{n} grid",
                n / 2,
                m / 2
            ));
        }
        let xs = signed_band(n, cut_x);
        let ys = signed_band(m, cut_y);
        let mut indices: Vec<(i64, i64)> = xs
            .iter()
            .flat_map(|&kx| ys.iter().map(move |&ky| (kx, ky)))
            .collect();
        indices.sort_by_key(|&(kx, ky)| (kx.unsigned_abs(), ky.unsigned_abs(), kx < 0, ky < 0));
        Ok(Self {
            m,
            n,
            cut_x,
            cut_y,
            indices,
        })
    }

    /// Keeps every wavenumber of the grid.
    pub fn full(m: usize, n: usize) -> Result<Self> {
        Self::new(m, n, n / 2, m / 2)
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn cutoffs(&self) -> (usize, usize) {
        (self.cut_x, self.cut_y)
    }

    pub fn indices(&self) -> &[(i64, i64)] {
        &self.indices
    }

    pub fn retained(&self) -> usize {
        self.indices.len()
    }

    fn columns(&self) -> (Vec<i64>, Vec<usize>) {
        // distinct k_x values and, per retained index, its position in that list
        let mut kxs: Vec<i64> = self.indices.iter().map(|p| p.0).collect();
        kxs.sort_unstable();
        kxs.dedup();
        let pos = self
            .indices
            .iter()
            .map(|p| kxs.binary_search(&p.0).expect("present"))
            .collect();
        (kxs, pos)
    }
}

/// Signed wavenumbers in `[-cut, cut]`, deduplicated modulo `len`.
fn signed_band(len: usize, cut: usize) -> Vec<i64> {
    let mut seen = vec![false; len];
    let mut out = Vec::new();
    for k in 0..=cut as i64 {
        for s in [k, -k] {
            let r = s.rem_euclid(len as i64) as usize;
            if !seen[r] {
                seen[r] = true;
                out.push(s);
            }
        }
    }
    out
}

fn twiddles(len: usize) -> (Vec<f64>, Vec<f64>) {
    (0..len)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / len as f64;
            (a.cos(), a.sin())
        })
        .unzip()
}

/// Returns `(real, imag)` parts of the retained coefficients, one row per snapshot.
pub fn fourier_truncate(snapshots: &Matrix, trunc: &FourierTruncation) -> Result<(Matrix, Matrix)> {
    let (m, n) = trunc.grid();
    if snapshots.cols() != m * n {
        return shape_err(format!(
            "snapshot width {} does not match the {m}x{n} grid",
            snapshots.cols()
        ));
    }
    let (kxs, pos) = trunc.columns();
    let (cx, sx) = twiddles(n);
    let (cy, sy) = twiddles(m);
    let nk = trunc.retained();
    let mut re = Matrix::zeros(snapshots.rows(), nk);
    let mut im = Matrix::zeros(snapshots.rows(), nk);
    // partial transform along x: g[r][kx]
    let mut gr = vec![0.0; m * kxs.len()];
    let mut gi = vec![0.0; m * kxs.len()];
    for t in 0..snapshots.rows() {
        let f = snapshots.row(t);
        for r in 0..m {
            let row = &f[r * n..(r + 1) * n];
            for (q, &kx) in kxs.iter().enumerate() {
                let (mut a, mut b) = (0.0, 0.0);
                for (c, &v) in row.iter().enumerate() {
                    let idx = (kx * c as i64).rem_euclid(n as i64) as usize;
                    a += v * cx[idx];
                    b -= v * sx[idx];
                }
                gr[r * kxs.len() + q] = a;
                gi[r * kxs.len() + q] = b;
            }
        }
        for (j, &(_, ky)) in trunc.indices.iter().enumerate() {
            let q = pos[j];
            let (mut a, mut b) = (0.0, 0.0);
            for r in 0..m {
                let idx = (ky * r as i64).rem_euclid(m as i64) as usize;
                let (c, s) = (cy[idx], -sy[idx]);
                let (xr, xi) = (gr[r * kxs.len() + q], gi[r * kxs.len() + q]);
                a += xr * c - xi * s;
                b += xr * s + xi * c;
            }
            re.set(t, j, a);
            im.set(t, j, b);
        }
    }
    Ok((re, im))
}

/// Inverse transform with every non-retained coefficient set to zero.
/// The imaginary residue of the result is discarded.
pub fn fourier_reconstruct(re: &Matrix, im: &Matrix, trunc: &FourierTruncation) -> Result<Matrix> {
    let nk = trunc.retained();
    if re.shape() != im.shape() || re.cols() != nk {
        return shape_err(format!(
            "coefficient blocks {:?}/{:?} do not match {nk} retained modes",
            re.shape(),
            im.shape()
        ));
    }
    let (m, n) = trunc.grid();
    let (kxs, pos) = trunc.columns();
    let (cx, sx) = twiddles(n);
    let (cy, sy) = twiddles(m);
    let norm = 1.0 / (m * n) as f64;
    let mut out = Matrix::zeros(re.rows(), m * n);
    let mut hr = vec![0.0; m * kxs.len()];
    let mut hi = vec![0.0; m * kxs.len()];
    for t in 0..re.rows() {
        hr.iter_mut().for_each(|v| *v = 0.0);
        hi.iter_mut().for_each(|v| *v = 0.0);
        for (j, &(_, ky)) in trunc.indices.iter().enumerate() {
            let q = pos[j];
            let (a, b) = (re.get(t, j), im.get(t, j));
            if a == 0.0 && b == 0.0 {
                continue;
            }
            for r in 0..m {
                let idx = (ky * r as i64).rem_euclid(m as i64) as usize;
                let (c, s) = (cy[idx], sy[idx]);
                hr[r * kxs.len() + q] += a * c - b * s;
                hi[r * kxs.len() + q] += a * s + b * c;
            }
        }
        let f = out.row_mut(t);
        for r in 0..m {
            for c in 0..n {
                let mut acc = 0.0;
                for (q, &kx) in kxs.iter().enumerate() {
                    let idx = (kx * c as i64).rem_euclid(n as i64) as usize;
                    acc += hr[r * kxs.len() + q] * cx[idx] - hi[r * kxs.len() + q] * sx[idx];
                }
                f[r * n + c] = acc * norm;
            }
        }
    }
    Ok(out)
}
