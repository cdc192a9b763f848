//! Binary PGM (P5, 8-bit) image IO.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::real::Real;

/// Write a `[0, 1]` intensity matrix as an 8-bit binary PGM.
pub fn write_pgm<T: Real>(image: &Mat<T>, path: &Path) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n255\n", image.cols(), image.rows()).into_bytes();
    bytes.reserve(image.len());
    for &v in image.as_slice() {
        let q = (v.to_f64_c().clamp(0.0, 1.0) * 255.0).round() as u8;
        bytes.push(q);
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Read an 8-bit binary PGM into a `[0, 1]` intensity matrix.
pub fn read_pgm<T: Real>(path: &Path) -> Result<Mat<T>> {
    let bytes = fs::read(path).map_err(|e| Error::format(path, format!("cannot read: {e}")))?;
    let mut pos = 0usize;

    let mut token = |bytes: &[u8]| -> Result<String> {
        // Skip whitespace and '#' comment lines between header fields.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(path, "truncated PGM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    if token(&bytes)? != "P5" {
        return Err(Error::format(path, "not a binary PGM (expected P5)"));
    }
    let cols: usize = token(&bytes)?.parse().map_err(|_| Error::format(path, "bad width"))?;
    let rows: usize = token(&bytes)?.parse().map_err(|_| Error::format(path, "bad height"))?;
    let maxval: usize = token(&bytes)?.parse().map_err(|_| Error::format(path, "bad maxval"))?;
    if maxval != 255 {
        return Err(Error::UnsupportedCodec(format!("PGM maxval {maxval}, only 255 supported")));
    }
    // Single whitespace byte separates header from raster.
    pos += 1;
    if bytes.len() < pos + rows * cols {
        return Err(Error::format(path, "PGM raster truncated"));
    }
    let scale = T::from_f64_c(1.0 / 255.0);
    let data: Vec<T> = bytes[pos..pos + rows * cols]
        .iter()
        .map(|&b| T::from_f64_c(b as f64) * scale)
        .collect();
    Mat::from_vec(rows, cols, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_quantized_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = Mat::from_fn(17, 23, |r, c| ((r * 23 + c) % 256) as f64 / 255.0);
        write_pgm(&img, &path).unwrap();
        let back: Mat<f64> = read_pgm(&path).unwrap();
        assert_eq!(back.shape(), img.shape());
        for (&a, &b) in img.as_slice().iter().zip(back.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pgm");
        std::fs::write(&path, b"P6\n1 1\n255\n\xff\xff\xff").unwrap();
        assert!(read_pgm::<f64>(&path).is_err());
    }

    #[test]
    fn rejects_truncated_raster() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.pgm");
        std::fs::write(&path, b"P5\n4 4\n255\nabc").unwrap();
        assert!(read_pgm::<f64>(&path).is_err());
    }
}
