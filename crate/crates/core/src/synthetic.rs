//! Deterministic test fields: the double gyre and a traveling wave.

use std::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::FieldArray;
use crate::error::{invalid, Result};
use crate::rng;

/// Double-gyre setup on node grids `x_i = i·L_x/(n_x−1)`, `y_j = j·L_y/(n_y−1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DoubleGyreParams {
    pub lx: f64,
    pub ly: f64,
    pub intensity: f64,
    pub epsilon: f64,
    pub omega: f64,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    pub t_end: f64,
}

impl Default for DoubleGyreParams {
    fn default() -> Self {
        Self {
            lx: 2.0,
            ly: 1.0,
            intensity: 0.1,
            epsilon: 0.25,
            omega: PI / 5.0,
            nx: 50,
            ny: 25,
            dt: 0.05,
            t_end: 10.0,
        }
    }
}

impl DoubleGyreParams {
    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return invalid("double gyre needs at least 2 grid points per axis");
        }
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) || !(self.lx > 0.0) || !(self.ly > 0.0) {
            return invalid("double gyre needs positive lengths and time step");
        }
        Ok(())
    }

    /// Snapshot count: `t_end / dt` rounded, plus the initial time.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize + 1
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.lx / (self.nx - 1) as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.ly / (self.ny - 1) as f64
    }

    /// Velocity at one point.
    pub fn velocity(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        let s = self.epsilon * (self.omega * t).sin();
        let f = s * x * x + (1.0 - 2.0 * s) * x;
        let dfdx = 2.0 * s * x + 1.0 - 2.0 * s;
        let u = -PI * self.intensity * (PI * f).sin() * (PI * y).cos();
        let v = PI * self.intensity * (PI * f).cos() * (PI * y).sin() * dfdx;
        (u, v)
    }
}

/// `(U, V)`, each `T × n_y × n_x`.
pub fn double_gyre(p: &DoubleGyreParams) -> Result<(FieldArray, FieldArray)> {
    p.validate()?;
    let t_len = p.steps();
    let plane = p.ny * p.nx;
    let mut u = vec![0.0; t_len * plane];
    let mut v = vec![0.0; t_len * plane];
    for k in 0..t_len {
        let t = k as f64 * p.dt;
        for j in 0..p.ny {
            for i in 0..p.nx {
                let (a, b) = p.velocity(p.x(i), p.y(j), t);
                u[k * plane + j * p.nx + i] = a;
                v[k * plane + j * p.nx + i] = b;
            }
        }
    }
    let shape = vec![t_len, p.ny, p.nx];
    Ok((
        FieldArray::new(shape.clone(), u)?,
        FieldArray::new(shape, v)?,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSample {
    /// `(ε, ω)` per trajectory.
    pub pairs: Vec<(f64, f64)>,
    pub epsilon_range: (f64, f64),
    pub omega_range: (f64, f64),
    pub seed: u64,
}

pub const DEFAULT_EPSILON_RANGE: (f64, f64) = (0.1, 0.3);
pub const DEFAULT_OMEGA_RANGE: (f64, f64) = (PI / 10.0, 2.0 * PI / 5.0);

/// Uniform i.i.d. `(ε, ω)` draws.
pub fn sample_parameters(
    n: usize,
    epsilon_range: (f64, f64),
    omega_range: (f64, f64),
    seed: u64,
) -> Result<ParameterSample> {
    if n == 0 {
        return invalid("need at least one parameter combination");
    }
    for (name, (lo, hi)) in [("epsilon", epsilon_range), ("omega", omega_range)] {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return invalid(format!("{name} range [{lo}, {hi}] is empty or not finite"));
        }
    }
    let mut r = rng::seeded(seed);
    let mut draw = |(lo, hi): (f64, f64)| if lo == hi { lo } else { r.random_range(lo..hi) };
    let pairs = (0..n)
        .map(|_| (draw(epsilon_range), draw(omega_range)))
        .collect();
    Ok(ParameterSample {
        pairs,
        epsilon_range,
        omega_range,
        seed,
    })
}

/// Stacked trajectories `(U, V)`, each `R × T × n_y × n_x`, and the
/// parameters as an `R × T × 2` array.
pub fn double_gyre_ensemble(
    base: &DoubleGyreParams,
    sample: &ParameterSample,
) -> Result<(FieldArray, FieldArray, FieldArray)> {
    base.validate()?;
    let (r, t_len) = (sample.pairs.len(), base.steps());
    let mut u = Vec::with_capacity(r * t_len * base.nx * base.ny);
    let mut v = Vec::with_capacity(u.capacity());
    let mut mu = Vec::with_capacity(r * t_len * 2);
    for &(epsilon, omega) in &sample.pairs {
        let p = DoubleGyreParams {
            epsilon,
            omega,
            ..base.clone()
        };
        let (a, b) = double_gyre(&p)?;
        u.extend(a.into_data());
        v.extend(b.into_data());
        for _ in 0..t_len {
            mu.extend([epsilon, omega]);
        }
    }
    let shape = vec![r, t_len, base.ny, base.nx];
    Ok((
        FieldArray::new(shape.clone(), u)?,
        FieldArray::new(shape, v)?,
        FieldArray::new(vec![r, t_len, 2], mu)?,
    ))
}

/// `sin(2π(x − c·t)/λ)` on an `m × n` grid, with `x` the column index and
/// `t` the step index. Shape `T × m × n`.
pub fn traveling_wave(
    m: usize,
    n: usize,
    steps: usize,
    speed: f64,
    wavelength: f64,
) -> Result<FieldArray> {
    if m == 0 || n == 0 || steps == 0 {
        return invalid("traveling wave needs a nonempty grid and at least one step");
    }
    if !(wavelength > 0.0) || !speed.is_finite() {
        return invalid("wavelength must be positive and speed finite");
    }
    let mut data = Vec::with_capacity(steps * m * n);
    for t in 0..steps {
        for _ in 0..m {
            for x in 0..n {
                data.push((2.0 * PI * (x as f64 - speed * t as f64) / wavelength).sin());
            }
        }
    }
    FieldArray::new(vec![steps, m, n], data)
}
