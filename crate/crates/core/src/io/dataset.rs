//! Dataset container.
//!
//! Layout, all integers little-endian:
//!
//! | bytes      | content                                  |
//! |------------|------------------------------------------|
//! | 4          | magic `SHDF`                             |
//! | 4          | format version (u32, currently 1)        |
//! | 4 + len    | field id: u32 byte length, UTF-8 bytes   |
//! | 1          | dtype code (1 = f64)                     |
//! | 4          | axis count (u32)                         |
//! | 8 per axis | axis lengths (u64)                       |
//! | 8 per item | row-major f64 payload                    |

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::bytes::*;
use crate::data::FieldArray;
use crate::error::{invalid, Result, ShredError};

pub const DATASET_MAGIC: &[u8; 4] = b"SHDF";
pub const DATASET_VERSION: u32 = 1;
const DTYPE_F64: u8 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub id: String,
    pub array: FieldArray,
}

pub fn write_dataset(w: &mut impl Write, id: &str, array: &FieldArray) -> Result<()> {
    w.write_all(DATASET_MAGIC)?;
    put_u32(w, DATASET_VERSION)?;
    put_str(w, id)?;
    w.write_all(&[DTYPE_F64])?;
    put_u32(w, array.ndim() as u32)?;
    for &n in array.shape() {
        put_u64(w, n as u64)?;
    }
    put_f64s(w, array.data())
}

pub fn read_dataset(r: &mut impl Read) -> Result<Dataset> {
    get_magic(r, DATASET_MAGIC, "dataset")?;
    let version = get_u32(r, "version")?;
    if version != DATASET_VERSION {
        return Err(ShredError::Version {
            what: "dataset",
            found: version,
            expected: DATASET_VERSION,
        });
    }
    let id = get_str(r, "field id")?;
    let dtype = get_u8(r, "dtype")?;
    if dtype != DTYPE_F64 {
        return Err(ShredError::Format(format!(
            "unsupported dtype code {dtype} (only 1 = f64)"
        )));
    }
    let ndim = get_u32(r, "axis count")? as usize;
    if ndim > 16 {
        return Err(ShredError::Format(format!("implausible axis count {ndim}")));
    }
    let mut shape = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        let n = get_u64(r, "axis lengths")?;
        shape.push(
            usize::try_from(n).map_err(|_| ShredError::Format("axis length overflows".into()))?,
        );
    }
    let count = shape
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| ShredError::Format("payload size overflows".into()))?;
    let data = get_f64s(r, count, "payload")?;
    expect_end(r, "dataset")?;
    Ok(Dataset {
        id,
        array: FieldArray::new(shape, data)?,
    })
}

pub fn save_dataset(path: impl AsRef<Path>, id: &str, array: &FieldArray) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset(&mut w, id, array)?;
    Ok(w.flush()?)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    read_dataset(&mut BufReader::new(File::open(path)?))
}

/// CSV of a 2-D slice: the leading axes are fixed by `index`, the last two
/// become rows and columns.
pub fn slice_to_csv(array: &FieldArray, index: &[usize]) -> Result<String> {
    let shape = array.shape();
    if index.len() + 2 != shape.len() {
        return invalid(format!(
            "array of rank {} needs {} leading indices for a 2-D slice, got {}",
            shape.len(),
            shape.len().saturating_sub(2),
            index.len()
        ));
    }
    let mut offset = 0;
    for (i, (&k, &n)) in index.iter().zip(shape).enumerate() {
        if k >= n {
            return invalid(format!("index {k} out of range for axis {i} of length {n}"));
        }
        offset = offset * n + k;
    }
    let (m, n) = (shape[shape.len() - 2], shape[shape.len() - 1]);
    let block = &array.data()[offset * m * n..(offset + 1) * m * n];
    let mut out = String::new();
    for row in block.chunks(n) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", line.join(",")).expect("writing to a String");
    }
    Ok(out)
}
