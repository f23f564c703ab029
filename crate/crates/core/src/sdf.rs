//! Signed distance fields on the grid graph.
//!
//! For a background site the value is the shortest-path length to the nearest
//! background boundary site plus one; for a foreground site it is minus the
//! shortest-path length to the nearest foreground boundary site, minus one.
//! Values are therefore never zero: the two layers flanking the interface hold
//! `+1` and `-1`.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::grid::{boundaries, BinaryMask, GridShape, ScalarField};

/// Integer-valued signed distances stored as reals.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedDistanceField(ScalarField);

impl SignedDistanceField {
    pub fn shape(&self) -> GridShape {
        self.0.shape()
    }

    #[inline]
    pub fn get(&self, site: usize) -> f32 {
        self.0.get(site)
    }

    pub fn values(&self) -> &[f32] {
        self.0.values()
    }

    pub fn as_field(&self) -> &ScalarField {
        &self.0
    }

    pub fn into_field(self) -> ScalarField {
        self.0
    }

    /// The foreground the field was computed from (`φ ≤ 0`).
    pub fn foreground(&self) -> BinaryMask {
        BinaryMask::from_fn(self.shape(), |s| self.get(s) <= 0.0)
    }

    /// Adds a constant to every value. The result is generally not the SDF of
    /// any mask; it models a predictor with a uniform offset.
    pub fn offset(&self, by: f32) -> ScalarField {
        self.0.map(|v| v + by)
    }

    /// Wraps precomputed values without checking the distance invariants.
    pub fn from_field_unchecked(field: ScalarField) -> Self {
        SignedDistanceField(field)
    }
}

/// Exact signed distance field of `mask` by one multi-source breadth-first
/// sweep seeded from both boundary layers.
pub fn signed_distance(mask: &BinaryMask) -> Result<SignedDistanceField> {
    let shape = mask.shape();
    let b = boundaries(mask);
    if b.foreground.is_empty() || b.background.is_empty() {
        return Err(Error::DegenerateMask);
    }
    let n = shape.len();
    let mut dist = vec![0u32; n];
    let mut queue = VecDeque::with_capacity(n);
    for s in b.foreground.iter_ones().chain(b.background.iter_ones()) {
        dist[s] = 1;
        queue.push_back(s);
    }
    let fg = mask.to_bools();
    while let Some(s) = queue.pop_front() {
        let next = dist[s] + 1;
        for r in shape.neighbors(s) {
            if dist[r] == 0 && fg[r] == fg[s] {
                dist[r] = next;
                queue.push_back(r);
            }
        }
    }
    let values = (0..n)
        .map(|s| if fg[s] { -(dist[s] as f32) } else { dist[s] as f32 })
        .collect();
    Ok(SignedDistanceField(ScalarField::new(shape, values)?))
}

/// Mean per-site difference `(1/|I|) Σ (predicted − reference)`.
pub fn sdf_gap(predicted: &SignedDistanceField, reference: &SignedDistanceField) -> Result<f64> {
    field_gap(predicted.as_field(), reference)
}

/// [`sdf_gap`] for a predicted field that is not itself an SDF (e.g. an
/// offset oracle prediction).
pub fn field_gap(predicted: &ScalarField, reference: &SignedDistanceField) -> Result<f64> {
    predicted.shape().check_same(&reference.shape())?;
    let sum: f64 = predicted
        .values()
        .iter()
        .zip(reference.values())
        .map(|(&p, &r)| p as f64 - r as f64)
        .sum();
    Ok(sum / predicted.shape().len() as f64)
}
