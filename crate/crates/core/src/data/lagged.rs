use crate::error::{invalid, Result};
use crate::linalg::Matrix;

/// `count` windows of `lags` consecutive rows, each `width` wide, stored contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct Sequences {
    count: usize,
    lags: usize,
    width: usize,
    data: Vec<f64>,
}

impl Sequences {
    pub fn new(count: usize, lags: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != count * lags * width {
            return invalid(format!(
                "sequence buffer of {} values cannot hold {count}x{lags}x{width}",
                data.len()
            ));
        }
        Ok(Self {
            count,
            lags,
            width,
            data,
        })
    }

    pub fn empty(lags: usize, width: usize) -> Self {
        Self {
            count: 0,
            lags,
            width,
            data: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn lags(&self) -> usize {
        self.lags
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Window `i` as `lags × width` row-major values.
    pub fn window(&self, i: usize) -> &[f64] {
        let n = self.lags * self.width;
        &self.data[i * n..(i + 1) * n]
    }

    pub fn window_matrix(&self, i: usize) -> Matrix {
        Matrix::from_vec(self.lags, self.width, self.window(i).to_vec()).expect("consistent")
    }

    pub fn select(&self, idx: &[usize]) -> Sequences {
        let mut data = Vec::with_capacity(idx.len() * self.lags * self.width);
        for &i in idx {
            data.extend_from_slice(self.window(i));
        }
        Sequences {
            count: idx.len(),
            lags: self.lags,
            width: self.width,
            data,
        }
    }

    pub fn concat(parts: &[Sequences]) -> Result<Sequences> {
        let Some(first) = parts.first() else {
            return invalid("nothing to concatenate");
        };
        let mut data = Vec::new();
        let mut count = 0;
        for p in parts {
            if p.lags != first.lags || p.width != first.width {
                return invalid("sequence blocks differ in lags or width");
            }
            data.extend_from_slice(&p.data);
            count += p.count;
        }
        Ok(Sequences {
            count,
            lags: first.lags,
            width: first.width,
            data,
        })
    }
}

/// One window per time step `t`, holding rows `t-lags+1 ..= t`. Times before
/// the first row repeat the first row, so every step gets a window.
/// Returns the windows and the target time of each.
pub fn build_lagged_sequences(
    measurements: &Matrix,
    lags: usize,
) -> Result<(Sequences, Vec<usize>)> {
    let (t_len, width) = measurements.shape();
    if t_len == 0 {
        return invalid("cannot build lagged windows from zero time steps");
    }
    if lags == 0 {
        return invalid("lags must be at least 1");
    }
    let mut data = Vec::with_capacity(t_len * lags * width);
    for t in 0..t_len {
        for j in 0..lags {
            let src = (t + j + 1).saturating_sub(lags);
            data.extend_from_slice(measurements.row(src));
        }
    }
    Ok((
        Sequences::new(t_len, lags, width, data)?,
        (0..t_len).collect(),
    ))
}
