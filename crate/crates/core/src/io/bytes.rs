use std::io::{Read, Write};

use crate::error::{Result, ShredError};

pub(super) fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

pub(super) fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

pub(super) fn put_str(w: &mut impl Write, s: &str) -> Result<()> {
    let len = u32::try_from(s.len())
        .map_err(|_| ShredError::Format("string too long for header".into()))?;
    put_u32(w, len)?;
    Ok(w.write_all(s.as_bytes())?)
}

pub(super) fn put_f64s(w: &mut impl Write, values: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(w.write_all(&buf)?)
}

fn exact<const N: usize>(r: &mut impl Read, what: &str) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| truncated(e, what))?;
    Ok(b)
}

fn truncated(e: std::io::Error, what: &str) -> ShredError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        ShredError::Format(format!("file ends inside the {what}"))
    } else {
        ShredError::Io(e)
    }
}

pub(super) fn get_magic(r: &mut impl Read, magic: &[u8; 4], kind: &str) -> Result<()> {
    let got = exact::<4>(r, "magic bytes")?;
    if &got != magic {
        return Err(ShredError::Format(format!(
            "not a {kind} file (magic {:?}, expected {:?})",
            String::from_utf8_lossy(&got),
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

pub(super) fn get_u8(r: &mut impl Read, what: &str) -> Result<u8> {
    Ok(exact::<1>(r, what)?[0])
}

pub(super) fn get_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    Ok(u32::from_le_bytes(exact::<4>(r, what)?))
}

pub(super) fn get_u64(r: &mut impl Read, what: &str) -> Result<u64> {
    Ok(u64::from_le_bytes(exact::<8>(r, what)?))
}

pub(super) fn get_str(r: &mut impl Read, what: &str) -> Result<String> {
    let len = get_u32(r, what)? as usize;
    let mut buf = Vec::new();
    r.take(len as u64).read_to_end(&mut buf)?;
    if buf.len() != len {
        return Err(ShredError::Format(format!("file ends inside the {what}")));
    }
    String::from_utf8(buf).map_err(|_| ShredError::Format(format!("{what} is not valid UTF-8")))
}

pub(super) fn get_f64s(r: &mut impl Read, count: usize, what: &str) -> Result<Vec<f64>> {
    let bytes = count
        .checked_mul(8)
        .ok_or_else(|| ShredError::Format(format!("{what} length overflows")))?;
    let mut buf = Vec::new();
    r.take(bytes as u64).read_to_end(&mut buf)?;
    if buf.len() != bytes {
        return Err(ShredError::Format(format!(
            "{what} holds {} bytes, header promises {bytes}",
            buf.len()
        )));
    }
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub(super) fn expect_end(r: &mut impl Read, kind: &str) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok(()),
        _ => Err(ShredError::Format(format!(
            "trailing bytes after the {kind} payload"
        ))),
    }
}
