//! Synthetic data and the verification experiments: the one-step Bayes mask,
//! the clean-validation sample size, the end-to-end correction pipeline and
//! the ablation sweeps.

mod lemma;
mod pipeline;
mod report;
mod sweep;
mod synth;
mod theorem;

pub use lemma::{verify_lemma1, verify_t1_expectations};
pub use pipeline::{
    mean_dice, noisy_labels, prepare, run_pipeline, sc_arm, test_dice, train_arm, ArmRow, PipelineConfig,
    PipelineReport, Prepared,
};
pub use report::TrialReport;
pub use sweep::{sweep, SweepKind, SweepRow};
pub use synth::{synth_dataset, synth_masks, HoleSpec, ShapeFamily, SynthData, SynthSpec, MARGIN};
pub use theorem::{
    clopper_pearson_one_sided, gap_stats, theorem1_trial, verify_theorem1, verify_theorem1_with, GapStats,
    Theorem1Fixture, Theorem1Pool,
};
