use super::matrix::Matrix;
use crate::error::{invalid, shape_err, Result, ShredError};

/// Minimizes `‖Θ X − Y‖² + λ‖X‖²` through the regularized normal equations.
///
/// With `lambda == 0` a rank-deficient `Θ` is reported as [`ShredError::Singular`].
pub fn ridge_solve(theta: &Matrix, y: &Matrix, lambda: f64) -> Result<Matrix> {
    if theta.rows() == 0 {
        return invalid("ridge_solve needs at least one row");
    }
    if theta.rows() != y.rows() {
        return shape_err(format!(
            "ridge_solve: Θ has {} rows but Y has {}",
            theta.rows(),
            y.rows()
        ));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return invalid(format!(
            "ridge penalty must be a finite nonnegative number, got {lambda}"
        ));
    }
    let mut gram = theta.t_matmul(theta)?;
    for i in 0..gram.rows() {
        gram.set(i, i, gram.get(i, i) + lambda);
    }
    let rhs = theta.t_matmul(y)?;
    let chol = cholesky(&gram)?;
    Ok(cholesky_solve(&chol, &rhs))
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    let scale = (0..n)
        .map(|i| a.get(i, i).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if d <= 1e-13 * scale {
            return Err(ShredError::Singular(format!(
                "normal equations lose rank at column {j}"
            )));
        }
        let d = d.sqrt();
        l.set(j, j, d);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / d);
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &Matrix, b: &Matrix) -> Matrix {
    let n = l.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in 0..n {
            let mut s = x.get(i, c);
            for k in 0..i {
                s -= l.get(i, k) * x.get(k, c);
            }
            x.set(i, c, s / l.get(i, i));
        }
        for i in (0..n).rev() {
            let mut s = x.get(i, c);
            for k in i + 1..n {
                s -= l.get(k, i) * x.get(k, c);
            }
            x.set(i, c, s / l.get(i, i));
        }
    }
    x
}
