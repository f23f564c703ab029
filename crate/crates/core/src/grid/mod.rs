//! Lattice geometry and the mask/field types every other module works with.
//!
//! Sites are addressed by a flat index in row-major order over
//! `[depth,] height, width`. Planar grids use the four-neighborhood, volumes
//! the six-neighborhood; neighbors that would fall outside the grid are simply
//! absent.

mod field;
mod mask;
mod ops;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use field::{LabelField, ScalarField};
pub use mask::BinaryMask;
pub use ops::{
    aggregate, boundaries, dice, dilate_one, erode_one, multiclass_dice, one_vs_rest, threshold, AggregateRule,
    Boundaries, Threshold,
};

/// Extents of a 2D or 3D lattice.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridShape {
    ndim: u8,
    // [depth, height, width]; depth is 1 for planar grids.
    extents: [usize; 3],
}

impl GridShape {
    /// Builds a shape from `[height, width]` or `[depth, height, width]`.
    pub fn new(dims: &[usize]) -> Result<Self> {
        let invalid = |reason| Error::InvalidShape {
            dims: dims.to_vec(),
            reason,
        };
        let extents = match *dims {
            [h, w] => [1, h, w],
            [d, h, w] => [d, h, w],
            _ => return Err(invalid("dimensionality must be 2 or 3")),
        };
        if extents.contains(&0) {
            return Err(invalid("every extent must be at least 1"));
        }
        if extents.iter().try_fold(1usize, |acc, &e| acc.checked_mul(e)).is_none() {
            return Err(invalid("site count overflows"));
        }
        Ok(GridShape {
            ndim: dims.len() as u8,
            extents,
        })
    }

    /// Planar `height x width` grid. Panics on a zero extent.
    pub fn plane(height: usize, width: usize) -> Self {
        Self::new(&[height, width]).expect("plane extents must be nonzero")
    }

    /// Volumetric `depth x height x width` grid. Panics on a zero extent.
    pub fn volume(depth: usize, height: usize, width: usize) -> Self {
        Self::new(&[depth, height, width]).expect("volume extents must be nonzero")
    }

    pub fn ndim(&self) -> usize {
        self.ndim as usize
    }

    pub fn is_volume(&self) -> bool {
        self.ndim == 3
    }

    /// Extents in `[depth,] height, width` order.
    pub fn dims(&self) -> &[usize] {
        &self.extents[3 - self.ndim as usize..]
    }

    pub fn depth(&self) -> usize {
        self.extents[0]
    }

    pub fn height(&self) -> usize {
        self.extents[1]
    }

    pub fn width(&self) -> usize {
        self.extents[2]
    }

    /// Number of sites, `|I|`.
    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    /// Always false; every valid shape has at least one site.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of rows, counting rows of every slice.
    pub fn rows(&self) -> usize {
        self.extents[0] * self.extents[1]
    }

    #[inline]
    pub fn index(&self, z: usize, y: usize, x: usize) -> usize {
        debug_assert!(z < self.depth() && y < self.height() && x < self.width());
        (z * self.extents[1] + y) * self.extents[2] + x
    }

    /// Inverse of [`GridShape::index`]: `(z, y, x)`.
    #[inline]
    pub fn coords(&self, site: usize) -> (usize, usize, usize) {
        let w = self.extents[2];
        let h = self.extents[1];
        (site / (w * h), (site / w) % h, site % w)
    }

    /// Grid-graph neighbors of `site`.
    pub fn neighbors(&self, site: usize) -> Neighbors {
        let (z, y, x) = self.coords(site);
        let [d, h, w] = self.extents;
        let mut out = Neighbors {
            sites: [0; 6],
            len: 0,
            pos: 0,
        };
        let mut push = |s: usize| {
            out.sites[out.len] = s;
            out.len += 1;
        };
        if self.is_volume() && z > 0 {
            push(site - w * h);
        }
        if y > 0 {
            push(site - w);
        }
        if x > 0 {
            push(site - 1);
        }
        if x + 1 < w {
            push(site + 1);
        }
        if y + 1 < h {
            push(site + w);
        }
        if self.is_volume() && z + 1 < d {
            push(site + w * h);
        }
        out
    }

    pub(crate) fn check_same(&self, other: &GridShape) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                left: *self,
                right: *other,
            })
        }
    }
}

impl fmt::Display for GridShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims = self.dims();
        write!(f, "{}", dims[0])?;
        for d in &dims[1..] {
            write!(f, "x{d}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for GridShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GridShape({self})")
    }
}

/// Neighbors of one site: four in a plane, six in a volume, fewer on the
/// grid border. Yielded in ascending site order.
#[derive(Debug, Clone)]
pub struct Neighbors {
    sites: [usize; 6],
    len: usize,
    pos: usize,
}

impl Iterator for Neighbors {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.pos < self.len {
            self.pos += 1;
            Some(self.sites[self.pos - 1])
        } else {
            None
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.len - self.pos;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Neighbors {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dims() {
        assert!(GridShape::new(&[5]).is_err());
        assert!(GridShape::new(&[1, 2, 3, 4]).is_err());
        assert!(GridShape::new(&[0, 4]).is_err());
        assert!(GridShape::new(&[3, 0, 4]).is_err());
    }

    #[test]
    fn index_round_trip() {
        let s = GridShape::volume(3, 4, 5);
        for site in 0..s.len() {
            let (z, y, x) = s.coords(site);
            assert_eq!(s.index(z, y, x), site);
        }
        assert_eq!(s.to_string(), "3x4x5");
        assert_eq!(GridShape::plane(2, 7).to_string(), "2x7");
    }

    #[test]
    fn neighborhood_is_symmetric_without_self_loops() {
        for shape in [
            GridShape::plane(4, 5),
            GridShape::volume(3, 3, 4),
            GridShape::plane(1, 6),
        ] {
            for s in 0..shape.len() {
                for r in shape.neighbors(s) {
                    assert_ne!(r, s);
                    assert!(shape.neighbors(r).any(|t| t == s));
                }
            }
        }
    }

    #[test]
    fn truncated_neighbor_counts() {
        let p = GridShape::plane(3, 3);
        assert_eq!(p.neighbors(0).len(), 2);
        assert_eq!(p.neighbors(1).len(), 3);
        assert_eq!(p.neighbors(4).len(), 4);
        let v = GridShape::volume(3, 3, 3);
        assert_eq!(v.neighbors(13).len(), 6);
        assert_eq!(v.neighbors(0).len(), 3);
        let line = GridShape::plane(1, 5);
        assert_eq!(line.neighbors(2).collect::<Vec<_>>(), vec![1, 3]);
    }
}
