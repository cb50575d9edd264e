//! Raw grid exports.
//!
//! * PGM: binary `P5`, maxval 65535, big-endian 16-bit samples, values mapped
//!   linearly from `[min, max]` of the grid (a constant grid maps to 0).
//! * NPY: format 1.0, dtype `<f8`, C order, shape `(n1, n2)`.

use std::io::Write;

use crate::error::{Error, Result};

fn check(shape: (usize, usize), values: &[f64]) -> Result<()> {
    if values.len() != shape.0 * shape.1 {
        return Err(Error::DimensionMismatch { expected: shape.0 * shape.1, got: values.len() });
    }
    if let Some(j) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: j });
    }
    Ok(())
}

pub fn write_pgm<W: Write>(mut w: W, shape: (usize, usize), values: &[f64]) -> Result<()> {
    check(shape, values)?;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    write!(w, "P5\n{} {}\n65535\n", shape.1, shape.0)?;
    for &v in values {
        let s = if span > 0.0 { ((v - lo) / span * 65535.0).round() as u16 } else { 0 };
        w.write_all(&s.to_be_bytes())?;
    }
    Ok(())
}

pub fn write_npy<W: Write>(mut w: W, shape: (usize, usize), values: &[f64]) -> Result<()> {
    check(shape, values)?;
    let mut header = format!(
        "{{'descr': '<f8', 'fortran_order': False, 'shape': ({}, {}), }}",
        shape.0, shape.1
    );
    // magic (6) + version (2) + length (2) + header + newline, padded to 64
    let total = 10 + header.len() + 1;
    header.push_str(&" ".repeat(total.next_multiple_of(64) - total));
    header.push('\n');
    w.write_all(b"\x93NUMPY\x01\x00")?;
    w.write_all(&(header.len() as u16).to_le_bytes())?;
    w.write_all(header.as_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_layout() {
        let mut buf = Vec::new();
        write_pgm(&mut buf, (1, 3), &[0.0, 0.5, 1.0]).unwrap();
        let header = b"P5\n3 1\n65535\n";
        assert_eq!(&buf[..header.len()], header);
        assert_eq!(&buf[header.len()..], &[0, 0, 0x80, 0x00, 0xff, 0xff]);
    }

    #[test]
    fn npy_layout() {
        let mut buf = Vec::new();
        write_npy(&mut buf, (2, 2), &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(&buf[..8], b"\x93NUMPY\x01\x00");
        let hlen = u16::from_le_bytes([buf[8], buf[9]]) as usize;
        assert_eq!((10 + hlen) % 64, 0);
        let header = std::str::from_utf8(&buf[10..10 + hlen]).unwrap();
        assert!(header.contains("'shape': (2, 2)"));
        assert!(header.ends_with('\n'));
        assert_eq!(buf.len(), 10 + hlen + 32);
        assert_eq!(f64::from_le_bytes(buf[10 + hlen + 24..].try_into().unwrap()), 4.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(write_npy(Vec::new(), (2, 2), &[1.0]).is_err());
        assert!(write_pgm(Vec::new(), (1, 1), &[f64::NAN]).is_err());
    }
}
