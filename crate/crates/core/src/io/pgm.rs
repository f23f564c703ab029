//! Binary PGM (P5) with 8-bit samples.
//!
//! Masks are written as 255/0; on read a sample counts as foreground when it
//! is at least half of maxval (128 for maxval 255).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, GridShape, ScalarField};

/// Decoded P5 image, samples still raw.
#[derive(Debug, Clone, PartialEq)]
pub struct Pgm {
    pub shape: GridShape,
    pub maxval: u8,
    pub samples: Vec<u8>,
}

impl Pgm {
    pub fn to_mask(&self) -> BinaryMask {
        let cut = (self.maxval as u16).div_ceil(2);
        BinaryMask::from_fn(self.shape, |s| self.samples[s] as u16 >= cut)
    }

    /// Samples scaled to `[0, 1]`.
    pub fn to_field(&self) -> ScalarField {
        let m = self.maxval as f32;
        ScalarField::from_fn(self.shape, |s| self.samples[s] as f32 / m)
    }
}

pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<Pgm> {
    let fail = |offset: usize, reason: &str| Error::format(path, offset as u64, reason);
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(fail(0, "bad magic, expected P5"));
    }
    let mut pos = 2;
    let mut header = [0usize; 3];
    for slot in header.iter_mut() {
        // whitespace and comments before each header number
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(fail(start, "expected a header number"));
        }
        *slot = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| fail(start, "header number out of range"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(fail(pos, "expected whitespace after maxval"));
    }
    pos += 1;
    let [width, height, maxval] = header;
    if maxval == 0 || maxval > 255 {
        return Err(fail(pos - 1, "maxval must be in 1..=255"));
    }
    let shape = GridShape::new(&[height, width]).map_err(|_| fail(3, "zero image extent"))?;
    let payload = &bytes[pos..];
    if payload.len() != shape.len() {
        return Err(fail(
            pos + payload.len().min(shape.len()),
            "payload length does not match extents",
        ));
    }
    Ok(Pgm {
        shape,
        maxval: maxval as u8,
        samples: payload.to_vec(),
    })
}

pub fn encode_pgm(shape: GridShape, samples: &[u8]) -> Result<Vec<u8>> {
    if shape.is_volume() {
        return Err(Error::InvalidShape {
            dims: shape.dims().to_vec(),
            reason: "PGM holds 2D images only",
        });
    }
    let mut out = format!("P5\n{} {}\n255\n", shape.width(), shape.height()).into_bytes();
    out.extend_from_slice(samples);
    Ok(out)
}

pub fn read_pgm(path: &Path) -> Result<Pgm> {
    decode_pgm(&fs::read(path).map_err(|e| Error::io(path, e))?, path)
}

pub fn write_pgm_mask(mask: &BinaryMask, path: &Path) -> Result<()> {
    let samples: Vec<u8> = (0..mask.shape().len())
        .map(|s| if mask.get(s) { 255 } else { 0 })
        .collect();
    let bytes = encode_pgm(mask.shape(), &samples)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `[0, 1]`-clamped values rounded to 8 bits. Lossy.
pub fn write_pgm_field(field: &ScalarField, path: &Path) -> Result<()> {
    let samples: Vec<u8> = field
        .values()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let bytes = encode_pgm(field.shape(), &samples)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        let m = BinaryMask::from_fn(GridShape::plane(5, 7), |s| s % 3 == 1);
        write_pgm_mask(&m, &path).unwrap();
        assert_eq!(read_pgm(&path).unwrap().to_mask(), m);
    }

    #[test]
    fn header_with_comment_and_threshold() {
        let bytes = b"P5 # made by hand\n3 1\n255\n\x00\x80\x7f";
        let pgm = decode_pgm(bytes, Path::new("x.pgm")).unwrap();
        assert_eq!(pgm.to_mask().to_bools(), vec![false, true, false]);
    }

    #[test]
    fn bad_input() {
        let p = Path::new("x.pgm");
        assert!(decode_pgm(b"P2\n1 1\n255\n\x00", p).is_err());
        assert!(decode_pgm(b"P5\n2 1\n255\n\x00", p).is_err());
        assert!(decode_pgm(b"P5\n1 1\n65535\n\x00\x00", p).is_err());
        assert!(encode_pgm(GridShape::volume(2, 2, 2), &[0; 8]).is_err());
    }
}
