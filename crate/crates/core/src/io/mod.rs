//! File formats: GTF1 grids, PGM masks and images, CSV reports and the
//! key-value run configuration.

mod config;
mod gtf;
mod pgm;

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, ScalarField};

pub use config::ConfigFile;
pub use gtf::{
    decode, encode_field, encode_mask, read_field_gtf, read_gtf, read_mask_gtf, write_field_gtf, write_mask_gtf,
    GtfData,
};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm_field, write_pgm_mask, Pgm};

fn is_pgm(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
}

/// Reads a mask from `.pgm` or GTF (any other extension).
pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    if is_pgm(path) {
        Ok(read_pgm(path)?.to_mask())
    } else {
        read_mask_gtf(path)
    }
}

pub fn write_mask(mask: &BinaryMask, path: &Path) -> Result<()> {
    if is_pgm(path) {
        write_pgm_mask(mask, path)
    } else {
        write_mask_gtf(mask, path)
    }
}

/// Reads an intensity image: PGM scaled to `[0, 1]`, or an f32 GTF.
pub fn read_image(path: &Path) -> Result<ScalarField> {
    if is_pgm(path) {
        Ok(read_pgm(path)?.to_field())
    } else {
        read_field_gtf(path)
    }
}

/// Writes rows with a header taken from the field names.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridShape;

    #[derive(Serialize)]
    struct Row {
        iter: usize,
        lambda_mean: Option<f64>,
    }

    #[test]
    fn csv_header_and_empty_option() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_csv(
            &path,
            &[
                Row {
                    iter: 0,
                    lambda_mean: None,
                },
                Row {
                    iter: 1,
                    lambda_mean: Some(-0.5),
                },
            ],
        )
        .unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "iter,lambda_mean\n0,\n1,-0.5\n"
        );
    }

    #[test]
    fn mask_conversion_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let m = BinaryMask::from_fn(GridShape::plane(6, 9), |s| (s * 7) % 5 < 2);
        let pgm = dir.path().join("m.pgm");
        let gtf = dir.path().join("m.gtf");
        write_mask(&m, &pgm).unwrap();
        write_mask(&read_mask(&pgm).unwrap(), &gtf).unwrap();
        assert_eq!(read_mask(&gtf).unwrap(), m);
    }
}
