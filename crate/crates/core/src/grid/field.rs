use crate::error::{Error, Result};
use crate::grid::GridShape;

/// Real-valued grid: probability maps, logits, distances, images.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    shape: GridShape,
    values: Vec<f32>,
}

impl ScalarField {
    /// Fails if the length is wrong or any value is NaN or infinite.
    pub fn new(shape: GridShape, values: Vec<f32>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::LengthMismatch {
                shape,
                expected: shape.len(),
                got: values.len(),
            });
        }
        if let Some(site) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { site });
        }
        Ok(ScalarField { shape, values })
    }

    pub fn filled(shape: GridShape, value: f32) -> Self {
        assert!(value.is_finite());
        ScalarField {
            shape,
            values: vec![value; shape.len()],
        }
    }

    /// Panics if `f` produces a non-finite value.
    pub fn from_fn(shape: GridShape, f: impl FnMut(usize) -> f32) -> Self {
        Self::new(shape, (0..shape.len()).map(f).collect()).expect("field values must be finite")
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    #[inline]
    pub fn get(&self, site: usize) -> f32 {
        self.values[site]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    /// Panics if `f` produces a non-finite value.
    pub fn map(&self, mut f: impl FnMut(f32) -> f32) -> Self {
        Self::from_fn(self.shape, |s| f(self.values[s]))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().map(|&v| v as f64).sum::<f64>() / self.values.len() as f64
    }
}

/// Multi-class label grid, `L` classes indexed `0..L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelField {
    shape: GridShape,
    classes: usize,
    labels: Vec<u32>,
}

impl LabelField {
    pub fn new(shape: GridShape, classes: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != shape.len() {
            return Err(Error::LengthMismatch {
                shape,
                expected: shape.len(),
                got: labels.len(),
            });
        }
        if let Some((site, &label)) = labels.iter().enumerate().find(|(_, &l)| l as usize >= classes) {
            return Err(Error::LabelOutOfRange {
                label: label as usize,
                site,
                classes,
            });
        }
        Ok(LabelField { shape, classes, labels })
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, site: usize) -> usize {
        self.labels[site] as usize
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }
}
