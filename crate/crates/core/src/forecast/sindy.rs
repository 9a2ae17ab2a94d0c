//! Sparse regression of latent dynamics onto a candidate library.
//!
//! The library holds a constant, monomials up to `poly_order` in graded
//! lexicographic order, and optionally `sin(z_i)` for each coordinate.
//! Derivatives are second-order finite differences (central inside,
//! one-sided at the ends). Coefficients are refitted by ridge regression
//! over the support that survives hard thresholding.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_err, Result, ShredError};
use crate::linalg::{ridge_solve, Matrix};

pub const DEFAULT_THRESHOLD: f64 = 0.05;
pub const DEFAULT_RIDGE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SindyLibrary {
    pub poly_order: usize,
    pub include_sine: bool,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Term {
    Constant,
    /// coordinate indices, nondecreasing; degree = length
    Monomial(Vec<usize>),
    Sine(usize),
}

impl SindyLibrary {
    pub fn new(poly_order: usize, include_sine: bool, dim: usize) -> Self {
        Self {
            poly_order,
            include_sine,
            dim,
        }
    }

    fn terms(&self) -> Vec<Term> {
        let mut out = vec![Term::Constant];
        for degree in 1..=self.poly_order {
            let mut idx = vec![0usize; degree];
            loop {
                out.push(Term::Monomial(idx.clone()));
                // next nondecreasing tuple in lexicographic order
                let Some(pos) = (0..degree).rev().find(|&p| idx[p] + 1 < self.dim) else {
                    break;
                };
                let v = idx[pos] + 1;
                for slot in &mut idx[pos..] {
                    *slot = v;
                }
            }
            if self.dim == 0 {
                break;
            }
        }
        if self.include_sine {
            out.extend((0..self.dim).map(Term::Sine));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.terms().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> Vec<String> {
        self.terms()
            .iter()
            .map(|t| match t {
                Term::Constant => "1".to_string(),
                Term::Monomial(idx) => {
                    let mut parts: Vec<String> = Vec::new();
                    let mut k = 0;
                    while k < idx.len() {
                        let run = idx[k..].iter().take_while(|&&v| v == idx[k]).count();
                        parts.push(if run == 1 {
                            format!("x{}", idx[k])
                        } else {
                            format!("x{}^{run}", idx[k])
                        });
                        k += run;
                    }
                    parts.join(" ")
                }
                Term::Sine(i) => format!("sin(x{i})"),
            })
            .collect()
    }

    fn eval_terms(terms: &[Term], z: &[f64], out: &mut [f64]) {
        for (o, t) in out.iter_mut().zip(terms) {
            *o = match t {
                Term::Constant => 1.0,
                Term::Monomial(idx) => idx.iter().map(|&i| z[i]).product(),
                Term::Sine(i) => z[*i].sin(),
            };
        }
    }

    /// Θ(Z): one row of candidate functions per latent row.
    pub fn build(&self, z: &Matrix) -> Result<Matrix> {
        if z.cols() != self.dim {
            return shape_err(format!(
                "library built for dimension {}, got {}",
                self.dim,
                z.cols()
            ));
        }
        let terms = self.terms();
        let mut theta = Matrix::zeros(z.rows(), terms.len());
        for i in 0..z.rows() {
            Self::eval_terms(&terms, z.row(i), theta.row_mut(i));
        }
        Ok(theta)
    }

    /// `∂θ_p/∂z_c` for every term, `p × dim`.
    fn term_jacobian(terms: &[Term], z: &[f64], dim: usize) -> Matrix {
        let mut jac = Matrix::zeros(terms.len(), dim);
        for (p, t) in terms.iter().enumerate() {
            match t {
                Term::Constant => {}
                Term::Monomial(idx) => {
                    for k in 0..idx.len() {
                        let others: f64 = idx
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| *j != k)
                            .map(|(_, &i)| z[i])
                            .product();
                        jac.set(p, idx[k], jac.get(p, idx[k]) + others);
                    }
                }
                Term::Sine(i) => jac.set(p, *i, z[*i].cos()),
            }
        }
        jac
    }
}

/// Second-order finite-difference time derivative of each column.
pub fn finite_difference(z: &Matrix, dt: f64) -> Result<Matrix> {
    let n = z.rows();
    if n < 3 {
        return invalid(format!("need at least 3 samples for derivatives, got {n}"));
    }
    if !(dt > 0.0) {
        return invalid(format!("time step must be positive, got {dt}"));
    }
    let inv = 1.0 / (2.0 * dt);
    Ok(Matrix::from_fn(n, z.cols(), |i, c| {
        let v = |k: usize| z.get(k, c);
        if i == 0 {
            (-3.0 * v(0) + 4.0 * v(1) - v(2)) * inv
        } else if i == n - 1 {
            (3.0 * v(n - 1) - 4.0 * v(n - 2) + v(n - 3)) * inv
        } else {
            (v(i + 1) - v(i - 1)) * inv
        }
    }))
}

/// Adjoint of [`finite_difference`]: maps a gradient w.r.t. the derivative
/// back onto the samples.
fn finite_difference_adjoint(g: &Matrix, dt: f64) -> Matrix {
    let n = g.rows();
    let inv = 1.0 / (2.0 * dt);
    let mut out = Matrix::zeros(n, g.cols());
    let mut add = |k: usize, c: usize, v: f64| out.set(k, c, out.get(k, c) + v);
    for c in 0..g.cols() {
        for i in 0..n {
            let gi = g.get(i, c) * inv;
            if i == 0 {
                add(0, c, -3.0 * gi);
                add(1, c, 4.0 * gi);
                add(2, c, -gi);
            } else if i == n - 1 {
                add(n - 1, c, 3.0 * gi);
                add(n - 2, c, -4.0 * gi);
                add(n - 3, c, gi);
            } else {
                add(i + 1, c, gi);
                add(i - 1, c, -gi);
            }
        }
    }
    out
}

/// Sparse latent ODE `ż = Θ(z) Ξ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SindyModel {
    pub library: SindyLibrary,
    /// terms × dim
    pub coefficients: Matrix,
    /// terms × dim; inactive entries stay zero in every refit
    pub active: Vec<bool>,
    pub dt: f64,
    pub threshold: f64,
}

impl SindyModel {
    /// Unfitted model with all-zero coefficients and full support.
    pub fn new(library: SindyLibrary, dt: f64, threshold: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return invalid(format!("time step must be positive, got {dt}"));
        }
        if !(threshold >= 0.0) {
            return invalid(format!("threshold must be nonnegative, got {threshold}"));
        }
        let p = library.len();
        let h = library.dim;
        Ok(Self {
            coefficients: Matrix::zeros(p, h),
            active: vec![true; p * h],
            library,
            dt,
            threshold,
        })
    }

    pub fn dim(&self) -> usize {
        self.library.dim
    }

    pub fn nonzero_count(&self) -> usize {
        self.coefficients
            .as_slice()
            .iter()
            .filter(|v| **v != 0.0)
            .count()
    }

    /// Refits Ξ on the surviving support from one or more latent runs, each
    /// a contiguous sequence sampled every `dt`.
    pub fn refit(&mut self, runs: &[&Matrix], ridge: f64) -> Result<()> {
        let mut thetas = Vec::new();
        let mut derivs = Vec::new();
        for z in runs {
            if z.rows() < 3 {
                continue;
            }
            thetas.push(self.library.build(z)?);
            derivs.push(finite_difference(z, self.dt)?);
        }
        if thetas.is_empty() {
            return invalid("no latent run has the 3 samples needed for derivatives");
        }
        let theta = Matrix::vstack(&thetas.iter().collect::<Vec<_>>())?;
        let dz = Matrix::vstack(&derivs.iter().collect::<Vec<_>>())?;
        let (p, h) = self.coefficients.shape();
        let mut xi = Matrix::zeros(p, h);
        if self.active.iter().all(|a| *a) {
            xi = ridge_solve(&theta, &dz, ridge)?;
        } else {
            for c in 0..h {
                let cols: Vec<usize> = (0..p).filter(|&k| self.active[k * h + c]).collect();
                if cols.is_empty() {
                    continue;
                }
                let sol = ridge_solve(&theta.select_cols(&cols), &dz.select_cols(&[c]), ridge)?;
                for (r, &k) in cols.iter().enumerate() {
                    xi.set(k, c, sol.get(r, 0));
                }
            }
        }
        if !xi.is_finite() {
            return Err(ShredError::Numeric(
                "SINDy refit produced non-finite coefficients".into(),
            ));
        }
        self.coefficients = xi;
        Ok(())
    }

    /// Zeroes every coefficient with magnitude below `tau` and removes it
    /// from the support. Returns how many entries were newly removed.
    pub fn apply_threshold(&mut self, tau: f64) -> usize {
        let mut removed = 0;
        for (v, a) in self
            .coefficients
            .as_mut_slice()
            .iter_mut()
            .zip(self.active.iter_mut())
        {
            if v.abs() < tau {
                if *a {
                    removed += 1;
                }
                *v = 0.0;
                *a = false;
            }
        }
        removed
    }

    pub fn thresholded(&self, tau: f64) -> Result<SindyModel> {
        if !(tau >= 0.0) {
            return invalid(format!("threshold must be nonnegative, got {tau}"));
        }
        let mut m = self.clone();
        m.apply_threshold(tau);
        Ok(m)
    }

    /// Alternates refits and thresholding until the support is stable, so
    /// every surviving coefficient is at least `self.threshold` in magnitude.
    pub fn settle(&mut self, runs: &[&Matrix], ridge: f64) -> Result<()> {
        loop {
            self.refit(runs, ridge)?;
            if self.apply_threshold(self.threshold) == 0 {
                return Ok(());
            }
        }
    }

    /// Right-hand side `Θ(z) Ξ` at one state.
    pub fn rhs(&self, z: &[f64]) -> Vec<f64> {
        let terms = self.library.terms();
        let mut theta = vec![0.0; terms.len()];
        SindyLibrary::eval_terms(&terms, z, &mut theta);
        let h = self.dim();
        let mut out = vec![0.0; h];
        for (p, &t) in theta.iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            for (c, o) in out.iter_mut().enumerate() {
                *o += t * self.coefficients.get(p, c);
            }
        }
        out
    }

    /// Mean over the sequence of `‖ż − Θ(z) Ξ‖²`.
    pub fn consistency(&self, z: &Matrix) -> Result<f64> {
        Ok(self.consistency_with_grad(z)?.0)
    }

    /// Consistency value and its gradient w.r.t. every latent sample.
    pub fn consistency_with_grad(&self, z: &Matrix) -> Result<(f64, Matrix)> {
        if z.cols() != self.dim() {
            return shape_err(format!(
                "latent width {} differs from model dimension {}",
                z.cols(),
                self.dim()
            ));
        }
        let dz = finite_difference(z, self.dt)?;
        let n = z.rows();
        let h = self.dim();
        let terms = self.library.terms();
        let mut residual = Matrix::zeros(n, h);
        let mut value = 0.0;
        for i in 0..n {
            let f = self.rhs(z.row(i));
            for (c, fc) in f.iter().enumerate() {
                let r = dz.get(i, c) - fc;
                residual.set(i, c, r);
                value += r * r;
            }
        }
        let scale = 2.0 / n as f64;
        let mut grad = finite_difference_adjoint(&residual, self.dt).scaled(scale);
        for i in 0..n {
            // −Jᵀ r where J = Ξᵀ ∂θ/∂z
            let tj = SindyLibrary::term_jacobian(&terms, z.row(i), h);
            let xi_r: Vec<f64> = (0..terms.len())
                .map(|p| {
                    (0..h)
                        .map(|c| self.coefficients.get(p, c) * residual.get(i, c))
                        .sum()
                })
                .collect();
            for k in 0..h {
                let s: f64 = (0..terms.len()).map(|p| xi_r[p] * tj.get(p, k)).sum();
                grad.set(i, k, grad.get(i, k) - scale * s);
            }
        }
        Ok((value / n as f64, grad))
    }

    /// Classical RK4 with step `dt`; row `k` is the state after `k + 1` steps.
    pub fn forecast(&self, z0: &[f64], steps: usize) -> Result<Matrix> {
        if z0.len() != self.dim() {
            return shape_err(format!(
                "initial state has {} entries, expected {}",
                z0.len(),
                self.dim()
            ));
        }
        let h = self.dim();
        let dt = self.dt;
        let mut out = Matrix::zeros(steps, h);
        let mut z = z0.to_vec();
        let shift = |z: &[f64], k: &[f64], a: f64| {
            z.iter().zip(k).map(|(x, d)| x + a * d).collect::<Vec<_>>()
        };
        for s in 0..steps {
            let k1 = self.rhs(&z);
            let k2 = self.rhs(&shift(&z, &k1, dt / 2.0));
            let k3 = self.rhs(&shift(&z, &k2, dt / 2.0));
            let k4 = self.rhs(&shift(&z, &k3, dt));
            for c in 0..h {
                z[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(ShredError::Divergence { completed: s });
            }
            out.row_mut(s).copy_from_slice(&z);
        }
        Ok(out)
    }

    /// One line per latent coordinate, e.g. `ẋ0 = 0.048 - 0.122 x0 - 0.279 x1`.
    pub fn equations(&self) -> String {
        let labels = self.library.labels();
        let mut text = String::new();
        for c in 0..self.dim() {
            let mut line = format!("ẋ{c} =");
            let mut first = true;
            for (p, label) in labels.iter().enumerate() {
                let v = self.coefficients.get(p, c);
                if v == 0.0 {
                    continue;
                }
                let mag = format!("{:.3}", v.abs());
                let body = if label == "1" {
                    mag
                } else {
                    format!("{mag} {label}")
                };
                match (first, v < 0.0) {
                    (true, false) => write!(line, " {body}"),
                    (true, true) => write!(line, " -{body}"),
                    (false, false) => write!(line, " + {body}"),
                    (false, true) => write!(line, " - {body}"),
                }
                .expect("writing to a String");
                first = false;
            }
            if first {
                line.push_str(" 0.000");
            }
            text.push_str(&line);
            text.push('\n');
        }
        text
    }

    /// `term,output,value` rows for every coefficient, full precision.
    pub fn coefficients_csv(&self) -> String {
        let labels = self.library.labels();
        let mut text = String::from("term,output,value\n");
        for (p, label) in labels.iter().enumerate() {
            for c in 0..self.dim() {
                writeln!(text, "{label},{c},{:e}", self.coefficients.get(p, c))
                    .expect("writing to a String");
            }
        }
        text
    }
}

/// Fits a SINDy model with full support to one latent run.
pub fn sindy_fit(z: &Matrix, dt: f64, library: SindyLibrary, ridge: f64) -> Result<SindyModel> {
    if z.rows() < 3 {
        return invalid(format!("need at least 3 samples, got {}", z.rows()));
    }
    let mut m = SindyModel::new(library, dt, DEFAULT_THRESHOLD)?;
    m.refit(&[z], ridge)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_column_order() {
        let lib = SindyLibrary::new(1, false, 2);
        let z = Matrix::from_rows(&[vec![3.0, 5.0]]).unwrap();
        assert_eq!(lib.build(&z).unwrap().row(0), &[1.0, 3.0, 5.0]);

        let lib = SindyLibrary::new(1, true, 1);
        let th = lib
            .build(&Matrix::from_rows(&[vec![0.5]]).unwrap())
            .unwrap();
        assert_eq!(th.row(0)[..2], [1.0, 0.5]);
        assert!((th.get(0, 2) - 0.479_425_538_604_203).abs() < 1e-12);

        let lib = SindyLibrary::new(2, false, 2);
        assert_eq!(lib.labels(), vec!["1", "x0", "x1", "x0^2", "x0 x1", "x1^2"]);
        let th = lib
            .build(&Matrix::from_rows(&[vec![2.0, 3.0]]).unwrap())
            .unwrap();
        assert_eq!(th.row(0), &[1.0, 2.0, 3.0, 4.0, 6.0, 9.0]);
        assert!(lib.build(&Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn threshold_examples() {
        let mut m = SindyModel::new(SindyLibrary::new(0, false, 1), 1.0, 0.05).unwrap();
        m.coefficients = Matrix::from_rows(&[vec![0.04]]).unwrap();
        assert_eq!(m.thresholded(0.0).unwrap(), m);
        let lib = SindyLibrary::new(1, false, 1);
        let mut m = SindyModel::new(lib, 1.0, 0.05).unwrap();
        m.coefficients = Matrix::from_rows(&[vec![0.04], vec![0.06]]).unwrap();
        let once = m.thresholded(0.05).unwrap();
        assert_eq!(once.coefficients.as_slice(), &[0.0, 0.06]);
        assert_eq!(once.thresholded(0.05).unwrap(), once);
        assert!(m.thresholded(-1.0).is_err());
    }

    #[test]
    fn mask_persists_across_refits() {
        let dt = 0.01;
        let z = Matrix::from_fn(200, 1, |i, _| (-(i as f64) * dt).exp() + 0.3);
        let mut m = sindy_fit(&z, dt, SindyLibrary::new(1, false, 1), 0.0).unwrap();
        // ż = -(z - 0.3) = 0.3 - z
        assert!((m.coefficients.get(0, 0) - 0.3).abs() < 1e-3);
        m.apply_threshold(0.5);
        assert_eq!(m.coefficients.get(0, 0), 0.0);
        m.refit(&[&z], 0.0).unwrap();
        assert_eq!(m.coefficients.get(0, 0), 0.0);
        assert!(m.coefficients.get(1, 0) != 0.0);
    }

    #[test]
    fn consistency_definitions() {
        let m = SindyModel::new(SindyLibrary::new(1, false, 2), 0.1, 0.05).unwrap();
        let constant = Matrix::from_fn(5, 2, |_, c| c as f64 + 1.0);
        assert_eq!(m.consistency(&constant).unwrap(), 0.0);
        let ramp = Matrix::from_fn(6, 2, |i, c| i as f64 * (c as f64 + 1.0));
        let d = finite_difference(&ramp, 0.1).unwrap();
        let mean_sq: f64 = (0..6)
            .map(|i| d.row(i).iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            / 6.0;
        assert!((m.consistency(&ramp).unwrap() - mean_sq).abs() < 1e-9);
        assert!(m.consistency(&Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn consistency_gradient_matches_finite_differences() {
        let mut m = SindyModel::new(SindyLibrary::new(2, true, 2), 0.2, 0.05).unwrap();
        m.coefficients = Matrix::from_fn(m.library.len(), 2, |p, c| {
            ((p * 3 + c) % 5) as f64 * 0.2 - 0.4
        });
        let z = Matrix::from_fn(7, 2, |i, c| (i as f64 * 0.3 + c as f64).sin());
        let (_, g) = m.consistency_with_grad(&z).unwrap();
        let eps = 1e-6;
        for i in 0..7 {
            for c in 0..2 {
                let mut zp = z.clone();
                zp.set(i, c, z.get(i, c) + eps);
                let mut zm = z.clone();
                zm.set(i, c, z.get(i, c) - eps);
                let fd = (m.consistency(&zp).unwrap() - m.consistency(&zm).unwrap()) / (2.0 * eps);
                assert!(
                    (fd - g.get(i, c)).abs() < 1e-6 * (1.0 + fd.abs()),
                    "{i},{c}: {fd} vs {}",
                    g.get(i, c)
                );
            }
        }
    }

    #[test]
    fn forecast_zero_steps_and_exponential_decay() {
        let mut m = SindyModel::new(SindyLibrary::new(1, false, 1), 0.1, 0.05).unwrap();
        m.coefficients = Matrix::from_rows(&[vec![0.0], vec![-1.0]]).unwrap();
        assert_eq!(m.forecast(&[1.0], 0).unwrap().rows(), 0);
        let traj = m.forecast(&[1.0], 10).unwrap();
        assert!((traj.get(9, 0) - (-1f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn divergence_is_reported() {
        let mut m = SindyModel::new(SindyLibrary::new(2, false, 1), 0.5, 0.05).unwrap();
        m.coefficients = Matrix::from_rows(&[vec![0.0], vec![0.0], vec![10.0]]).unwrap();
        assert!(matches!(
            m.forecast(&[5.0], 50),
            Err(ShredError::Divergence { .. })
        ));
    }

    #[test]
    fn equation_listing() {
        let mut m = SindyModel::new(SindyLibrary::new(1, false, 3), 0.2, 0.05).unwrap();
        m.coefficients = Matrix::from_rows(&[
            vec![0.048, 0.0, 0.0],
            vec![-0.122, 0.0, 0.0],
            vec![-0.279, 0.0, 0.0],
            vec![-0.103, 0.0, -1.5],
        ])
        .unwrap();
        let text = m.equations();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "ẋ0 = 0.048 - 0.122 x0 - 0.279 x1 - 0.103 x2");
        assert_eq!(lines[1], "ẋ1 = 0.000");
        assert_eq!(lines[2], "ẋ2 = -1.500 x2");
        let csv = m.coefficients_csv();
        assert!(csv.starts_with("term,output,value\n1,0,4.8e-2\n"));
        assert_eq!(csv.lines().count(), 1 + 12);
    }
}
