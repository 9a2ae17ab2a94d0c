use crate::error::{shape_err, Result, ShredError};
use crate::linalg::Matrix;

/// N-dimensional row-major array of `f64` with the leading axes indexing
/// trajectories and/or time.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldArray {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl FieldArray {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return shape_err(format!(
                "array of shape {shape:?} needs {expected} values, got {}",
                data.len()
            ));
        }
        Ok(Self { shape, data })
    }

    /// Like [`FieldArray::new`] but rejects NaN and infinities.
    pub fn from_external(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(ShredError::NonFinite("field data".into()));
        }
        Self::new(shape, data)
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    /// Product of the axes from `lead` on.
    pub fn trailing_size(&self, lead: usize) -> usize {
        self.shape[lead..].iter().product()
    }

    /// Flattens the first `lead` axes into rows and the rest into columns.
    pub fn into_matrix(self, lead: usize) -> Matrix {
        let cols = self.trailing_size(lead);
        let rows = self.shape[..lead].iter().product();
        Matrix::from_vec(rows, cols, self.data).expect("shape checked at construction")
    }

    pub fn to_matrix(&self, lead: usize) -> Matrix {
        self.clone().into_matrix(lead)
    }

    /// Rows of a `lead`-flattened view, copied into a matrix.
    pub fn select_rows(&self, lead: usize, rows: &[usize]) -> Matrix {
        let cols = self.trailing_size(lead);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for &r in rows {
            data.extend_from_slice(&self.data[r * cols..(r + 1) * cols]);
        }
        Matrix::from_vec(rows.len(), cols, data).expect("consistent")
    }

    pub fn from_matrix(m: Matrix, shape: Vec<usize>) -> Result<Self> {
        Self::new(shape, m.into_vec())
    }

    /// Value at a full multi-index.
    pub fn at(&self, index: &[usize]) -> f64 {
        let mut flat = 0;
        for (i, (&x, &n)) in index.iter().zip(&self.shape).enumerate() {
            debug_assert!(x < n, "axis {i} index {x} out of {n}");
            flat = flat * n + x;
        }
        self.data[flat]
    }
}
