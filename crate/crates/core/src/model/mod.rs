//! Segmenters: the trait the correction loop drives, a per-pixel logistic
//! reference model, a controlled-error oracle and the external-trainer bridge.
//!
//! Logits are positive inside the object; `threshold(logits, >= 0)` is a
//! segmenter's mask everywhere in this crate.

mod external;
mod logistic;
mod oracle;

use std::path::Path;

use crate::error::Result;
use crate::grid::{BinaryMask, ScalarField};

pub use external::{round_dir, train_name, ExternalSegmenter};
pub use logistic::{design_matrix, fit_logistic, LogisticModel, LogisticObjective, LogisticSegmenter, TrainConfig};
pub use oracle::{perturbed_oracle, OracleErrorSpec, PerturbedOracle};

/// A trainable segmenter. `predict_logits` must be deterministic after `fit`.
pub trait Segmenter: Send + Sync {
    fn fit(&mut self, images: &[ScalarField], labels: &[BinaryMask], seed: u64) -> Result<()>;
    fn predict_logits(&self, image: &ScalarField) -> Result<ScalarField>;
}

pub fn load_external_logits(path: &Path) -> Result<ScalarField> {
    crate::io::read_field_gtf(path)
}

pub fn save_logits(field: &ScalarField, path: &Path) -> Result<()> {
    crate::io::write_field_gtf(field, path)
}
