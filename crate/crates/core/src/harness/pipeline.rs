use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correct::{spatial_correction, CorrectionParams, IterationReport, ScInputs};
use crate::error::{Error, Result};
use crate::grid::{dice, threshold, BinaryMask, ScalarField, Threshold};
use crate::harness::synth::{synth_dataset, SynthSpec};
use crate::model::{LogisticSegmenter, Segmenter, TrainConfig};
use crate::noise::NoiseModel;
use crate::rng::mix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub synth: SynthSpec,
    pub noise: NoiseModel,
    pub correction: CorrectionParams,
    pub model: TrainConfig,
    /// Clean validation images, taken first from the synthetic set.
    pub val_count: usize,
    /// Test images, taken next; the remainder is the training set.
    pub test_count: usize,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.correction.validate()?;
        self.model.validate()?;
        if self.val_count == 0 || self.test_count == 0 || self.val_count + self.test_count >= self.synth.count {
            return Err(Error::InvalidParameter {
                name: "val_count",
                value: self.val_count as f64,
                reason: "need nonempty validation, test and training splits",
            });
        }
        Ok(())
    }
}

/// Train/validation/test split with the labels each arm trains on.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train_images: Vec<ScalarField>,
    pub train_truth: Vec<BinaryMask>,
    /// Masks the noise is applied to: the truth, or the holed truth when
    /// the synthetic config asks for holes.
    pub train_base: Vec<BinaryMask>,
    pub val_images: Vec<ScalarField>,
    pub val_masks: Vec<BinaryMask>,
    pub test_images: Vec<ScalarField>,
    pub test_masks: Vec<BinaryMask>,
}

pub fn prepare(cfg: &PipelineConfig) -> Result<Prepared> {
    cfg.validate()?;
    let data = synth_dataset(&cfg.synth)?;
    let (v, t) = (cfg.val_count, cfg.test_count);
    let base = data.holed.clone().unwrap_or_else(|| data.masks.clone());
    Ok(Prepared {
        val_images: data.images[..v].to_vec(),
        val_masks: data.masks[..v].to_vec(),
        test_images: data.images[v..v + t].to_vec(),
        test_masks: data.masks[v..v + t].to_vec(),
        train_images: data.images[v + t..].to_vec(),
        train_truth: data.masks[v + t..].to_vec(),
        train_base: base[v + t..].to_vec(),
    })
}

/// Noise draws use child seeds `mix(seed, i)` per training image.
pub fn noisy_labels(prep: &Prepared, noise: &NoiseModel, seed: u64) -> Result<Vec<BinaryMask>> {
    prep.train_base
        .par_iter()
        .enumerate()
        .map(|(i, m)| noise.apply(m, mix(seed, i as u64)))
        .collect()
}

pub fn mean_dice(pred: &[BinaryMask], truth: &[BinaryMask]) -> Result<f64> {
    let d = pred
        .iter()
        .zip(truth)
        .map(|(a, b)| dice(a, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(d.iter().sum::<f64>() / d.len().max(1) as f64)
}

pub fn test_dice<S: Segmenter + ?Sized>(seg: &S, images: &[ScalarField], masks: &[BinaryMask]) -> Result<f64> {
    let preds = images
        .par_iter()
        .map(|im| seg.predict_logits(im).map(|l| threshold(&l, Threshold::AtLeast(0.0))))
        .collect::<Result<Vec<_>>>()?;
    mean_dice(&preds, masks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub clean_test_dsc: f64,
    pub noisy_test_dsc: f64,
    pub sc_test_dsc: f64,
    /// Noisy training labels against the truth.
    pub noisy_label_dsc: f64,
    /// Final corrected training labels against the truth.
    pub corrected_label_dsc: f64,
    /// Fraction of hole sites the corrected labels mark as foreground; only
    /// with holes.
    pub hole_agreement: Option<f64>,
    pub iterations: Vec<IterationReport>,
    #[serde(skip)]
    pub wall_time_secs: f64,
}

/// One CSV row per arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmRow {
    pub arm: String,
    pub test_dsc: f64,
    pub train_label_dsc: f64,
}

impl PipelineReport {
    pub fn arm_rows(&self) -> Vec<ArmRow> {
        let row = |arm: &str, test_dsc, train_label_dsc| ArmRow {
            arm: arm.to_string(),
            test_dsc,
            train_label_dsc,
        };
        vec![
            row("clean", self.clean_test_dsc, 1.0),
            row("noisy", self.noisy_test_dsc, self.noisy_label_dsc),
            row("sc", self.sc_test_dsc, self.corrected_label_dsc),
        ]
    }
}

/// Trains the reference model on `labels` and scores it on the test split.
pub fn train_arm(prep: &Prepared, labels: &[BinaryMask], model: &TrainConfig, seed: u64) -> Result<f64> {
    let mut seg = LogisticSegmenter::new(model.clone());
    seg.fit(&prep.train_images, labels, seed)?;
    test_dice(&seg, &prep.test_images, &prep.test_masks)
}

/// The correction arm with the first `val_take` validation images.
pub fn sc_arm(
    prep: &Prepared,
    noisy: &[BinaryMask],
    cfg: &PipelineConfig,
    val_take: usize,
) -> Result<(f64, crate::correct::ScOutcome)> {
    let val_take = val_take.min(prep.val_images.len());
    let inputs = ScInputs {
        train_images: &prep.train_images,
        train_labels: noisy,
        val_images: &prep.val_images[..val_take],
        val_masks: &prep.val_masks[..val_take],
        truth: Some(&prep.train_truth),
        seed: mix(cfg.seed, 12),
    };
    let mut seg = LogisticSegmenter::new(cfg.model.clone());
    let out = spatial_correction(&inputs, &mut seg, &cfg.correction)?;
    Ok((test_dice(&seg, &prep.test_images, &prep.test_masks)?, out))
}

fn hole_agreement(prep: &Prepared, labels: &[BinaryMask]) -> Result<Option<f64>> {
    let mut holes = 0usize;
    let mut filled = 0usize;
    for ((truth, base), lab) in prep.train_truth.iter().zip(&prep.train_base).zip(labels) {
        let carved = truth.difference(base)?;
        holes += carved.count();
        filled += carved.intersection(lab)?.count();
    }
    Ok((holes > 0).then(|| filled as f64 / holes as f64))
}

/// Clean-trained ceiling, noisy-trained baseline and the correction loop on
/// one synthetic split. Noise touches training labels only.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport> {
    let start = Instant::now();
    let prep = prepare(cfg)?;
    let noisy = noisy_labels(&prep, &cfg.noise, mix(cfg.seed, 1))?;
    let clean_test_dsc = train_arm(&prep, &prep.train_truth, &cfg.model, mix(cfg.seed, 10))?;
    let noisy_test_dsc = train_arm(&prep, &noisy, &cfg.model, mix(cfg.seed, 11))?;
    let (sc_test_dsc, out) = sc_arm(&prep, &noisy, cfg, prep.val_images.len())?;
    Ok(PipelineReport {
        clean_test_dsc,
        noisy_test_dsc,
        sc_test_dsc,
        noisy_label_dsc: mean_dice(&noisy, &prep.train_truth)?,
        corrected_label_dsc: mean_dice(&out.labels, &prep.train_truth)?,
        hole_agreement: hole_agreement(&prep, &out.labels)?,
        iterations: out.report,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}
