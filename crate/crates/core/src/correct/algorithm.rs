use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correct::{
    apply_logit_offset, estimate_bias, lambda_bias, naive_correct, BiasEstimate, CorrectionParams, CorrectionRoute,
};
use crate::error::{Error, Result};
use crate::grid::{dice, threshold, BinaryMask, ScalarField, Threshold};
use crate::model::Segmenter;
use crate::rng::mix;
use crate::sdf::signed_distance;

/// Data the correction loop runs on.
#[derive(Debug, Clone, Copy)]
pub struct ScInputs<'a> {
    pub train_images: &'a [ScalarField],
    /// Noisy training labels.
    pub train_labels: &'a [BinaryMask],
    pub val_images: &'a [ScalarField],
    /// Clean validation masks.
    pub val_masks: &'a [BinaryMask],
    /// Clean training masks, used only for reporting.
    pub truth: Option<&'a [BinaryMask]>,
    pub seed: u64,
}

/// One row per training pass. Row `k` describes the labels the `k`-th fit
/// used and the bias measured after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iter: usize,
    pub delta_hat: f64,
    /// Mean λ over the relabeled images that produced this row's labels.
    pub lambda_mean: Option<f64>,
    pub train_label_dsc_vs_truth: Option<f64>,
    pub val_dsc: f64,
    pub v_used: usize,
    /// Images whose relabeling fell back to the plain prediction.
    pub fallbacks: usize,
}

#[derive(Debug, Clone)]
pub struct ScOutcome {
    /// Labels of the last training pass.
    pub labels: Vec<BinaryMask>,
    pub report: Vec<IterationReport>,
    pub final_bias: BiasEstimate,
}

fn predicted_mask(logits: &ScalarField) -> BinaryMask {
    threshold(logits, Threshold::AtLeast(0.0))
}

fn mean_dice(a: &[BinaryMask], b: &[BinaryMask]) -> Result<f64> {
    let d = a.iter().zip(b).map(|(x, y)| dice(x, y)).collect::<Result<Vec<_>>>()?;
    Ok(d.iter().sum::<f64>() / d.len() as f64)
}

fn validate<S: Segmenter + ?Sized>(seg: &S, inputs: &ScInputs) -> Result<(BiasEstimate, f64)> {
    let preds = inputs
        .val_images
        .par_iter()
        .map(|im| seg.predict_logits(im).map(|l| predicted_mask(&l)))
        .collect::<Result<Vec<_>>>()?;
    let pred_sdf: Vec<_> = preds.par_iter().map(|m| signed_distance(m).ok()).collect();
    let clean_sdf: Vec<_> = inputs.val_masks.par_iter().map(|m| signed_distance(m).ok()).collect();
    let est = estimate_bias(&pred_sdf, &clean_sdf)?;
    Ok((est, mean_dice(&preds, inputs.val_masks)?))
}

/// Relabels one image. `None` for λ means the correction could not be formed
/// and the plain prediction is used.
fn relabel(logits: &ScalarField, delta_hat: f64, params: &CorrectionParams) -> (BinaryMask, Option<f64>) {
    let pred = predicted_mask(logits);
    let Ok(phi) = signed_distance(&pred) else {
        return (pred, None);
    };
    match params.route {
        CorrectionRoute::Naive => (naive_correct(&phi, delta_hat), Some(0.0)),
        CorrectionRoute::Logit => match lambda_bias(logits, &phi, delta_hat, params.lambda_sign) {
            Ok(lambda) => {
                let f = apply_logit_offset(logits, &phi, delta_hat, params.gamma, lambda)
                    .expect("shapes and gamma were checked");
                (predicted_mask(&f), Some(lambda))
            }
            Err(_) => (pred, None),
        },
    }
}

/// Train, estimate the bias on the clean validation set, and while
/// `|Δ̂| >= stop_threshold` relabel the training set from the corrected
/// logits and retrain, at most `max_iters` times.
pub fn spatial_correction<S: Segmenter + ?Sized>(
    inputs: &ScInputs,
    segmenter: &mut S,
    params: &CorrectionParams,
) -> Result<ScOutcome> {
    params.validate()?;
    if inputs.val_images.is_empty() {
        return Err(Error::EmptyInput("no validation images"));
    }
    if inputs.val_images.len() != inputs.val_masks.len() || inputs.train_images.len() != inputs.train_labels.len() {
        return Err(Error::InvalidParameter {
            name: "dataset",
            value: 0.0,
            reason: "image and mask counts differ",
        });
    }
    let truth_dsc =
        |labels: &[BinaryMask]| -> Result<Option<f64>> { inputs.truth.map(|t| mean_dice(labels, t)).transpose() };

    let mut labels = inputs.train_labels.to_vec();
    let mut lambda_mean = None;
    let mut fallbacks = 0;
    let mut report = Vec::new();
    let mut iter = 0;
    loop {
        segmenter.fit(inputs.train_images, &labels, mix(inputs.seed, iter as u64))?;
        let (est, val_dsc) = validate(segmenter, inputs)?;
        info!(
            "iteration {iter}: delta_hat {:.4}, val dsc {:.4}",
            est.delta_hat, val_dsc
        );
        report.push(IterationReport {
            iter,
            delta_hat: est.delta_hat,
            lambda_mean,
            train_label_dsc_vs_truth: truth_dsc(&labels)?,
            val_dsc,
            v_used: est.v_used,
            fallbacks,
        });
        if est.delta_hat.abs() < params.stop_threshold || iter >= params.max_iters {
            return Ok(ScOutcome {
                labels,
                report,
                final_bias: est,
            });
        }
        let delta = est.delta_hat;
        let seg: &S = segmenter;
        let relabeled = inputs
            .train_images
            .par_iter()
            .map(|im| seg.predict_logits(im).map(|l| relabel(&l, delta, params)))
            .collect::<Result<Vec<_>>>()?;
        let lambdas: Vec<f64> = relabeled.iter().filter_map(|(_, l)| *l).collect();
        fallbacks = relabeled.len() - lambdas.len();
        if fallbacks > 0 {
            warn!("iteration {iter}: {fallbacks} images kept their predicted labels (no usable bias band)");
        }
        lambda_mean = (!lambdas.is_empty()).then(|| lambdas.iter().sum::<f64>() / lambdas.len() as f64);
        labels = relabeled.into_iter().map(|(m, _)| m).collect();
        iter += 1;
    }
}
