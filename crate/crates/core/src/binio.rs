//! Little-endian binary IO helpers shared by the on-disk formats.
//!
//! All ALL-CAPS magics in this crate (`AFMEL1`, `AFNRM1`, `AFGAL1`, `AFMDL1`)
//! are 6 ASCII bytes followed by little-endian fields; these helpers keep the
//! byte handling in one place so save→load round trips stay bit-exact.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn write_magic(w: &mut impl Write, magic: &[u8; 6]) -> Result<()> {
    w.write_all(magic)?;
    Ok(())
}

pub(crate) fn expect_magic(r: &mut impl Read, magic: &[u8; 6], path: &Path) -> Result<()> {
    let mut buf = [0u8; 6];
    r.read_exact(&mut buf).map_err(|_| {
        Error::format(path, format!("truncated before {} magic", String::from_utf8_lossy(magic)))
    })?;
    if &buf != magic {
        return Err(Error::format(
            path,
            format!(
                "bad magic: expected {:?}, found {:?}",
                String::from_utf8_lossy(magic),
                String::from_utf8_lossy(&buf)
            ),
        ));
    }
    Ok(())
}

pub(crate) fn write_u16(w: &mut impl Write, v: u16) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_f32(w: &mut impl Write, v: f32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_u16(r: &mut impl Read, path: &Path) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b).map_err(|_| Error::format(path, "truncated u16"))?;
    Ok(u16::from_le_bytes(b))
}

pub(crate) fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| Error::format(path, "truncated u32"))?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_f32(r: &mut impl Read, path: &Path) -> Result<f32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| Error::format(path, "truncated f32"))?;
    Ok(f32::from_le_bytes(b))
}

pub(crate) fn read_f64(r: &mut impl Read, path: &Path) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|_| Error::format(path, "truncated f64"))?;
    Ok(f64::from_le_bytes(b))
}

/// Error if there are unread bytes left in the stream.
pub(crate) fn expect_eof(r: &mut impl Read, path: &Path) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok(()),
        _ => Err(Error::format(path, "trailing bytes after payload")),
    }
}
