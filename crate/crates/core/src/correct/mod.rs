//! Bias estimation against a clean validation set and label correction.
//!
//! The bias is the mean signed-distance gap between what a model predicts and
//! the clean annotation. Two correction routes use it: shifting the predicted
//! signed distance field by the estimate and re-thresholding
//! ([`naive_correct`]), or adding a boundary-localized offset to the logits
//! ([`logit_correct`]), which moves low-confidence boundary regions further
//! than confident ones. [`spatial_correction`] iterates the logit route with
//! retraining.

mod algorithm;
mod bound;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, ScalarField};
use crate::sdf::{sdf_gap, signed_distance, SignedDistanceField};

pub use algorithm::{spatial_correction, IterationReport, ScInputs, ScOutcome};
pub use bound::{required_validation_size, ValidationBoundInputs};

/// Estimated bias `Δ̂` with its per-image terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasEstimate {
    pub delta_hat: f64,
    pub per_image_gaps: Vec<f64>,
    /// Number of validation pairs that contributed.
    pub v_used: usize,
    /// Validation pairs skipped because a mask had no interface.
    pub skipped: usize,
}

impl BiasEstimate {
    pub fn from_gaps(per_image_gaps: Vec<f64>, skipped: usize) -> Result<Self> {
        if per_image_gaps.is_empty() {
            return Err(if skipped > 0 {
                Error::AllDegenerate { skipped }
            } else {
                Error::EmptyInput("no validation pairs")
            });
        }
        // fixed summation order keeps the estimate independent of scheduling
        let delta_hat = per_image_gaps.iter().sum::<f64>() / per_image_gaps.len() as f64;
        Ok(BiasEstimate {
            delta_hat,
            v_used: per_image_gaps.len(),
            per_image_gaps,
            skipped,
        })
    }
}

/// Mean SDF gap over paired validation images. `None` entries stand for
/// degenerate masks and are skipped with a warning.
pub fn estimate_bias(
    predicted: &[Option<SignedDistanceField>],
    clean: &[Option<SignedDistanceField>],
) -> Result<BiasEstimate> {
    if predicted.len() != clean.len() {
        return Err(Error::InvalidParameter {
            name: "validation pairs",
            value: predicted.len() as f64,
            reason: "predicted and clean lists differ in length",
        });
    }
    let mut gaps = Vec::with_capacity(predicted.len());
    let mut skipped = 0;
    for (i, pair) in predicted.iter().zip(clean).enumerate() {
        match pair {
            (Some(p), Some(c)) => gaps.push(sdf_gap(p, c)?),
            _ => {
                warn!("validation image {i} has a degenerate mask; excluded from the bias estimate");
                skipped += 1;
            }
        }
    }
    BiasEstimate::from_gaps(gaps, skipped)
}

/// [`estimate_bias`] starting from masks.
pub fn estimate_bias_from_masks(predicted: &[BinaryMask], clean: &[BinaryMask]) -> Result<BiasEstimate> {
    let sdf = |m: &BinaryMask| signed_distance(m).ok();
    let p: Vec<_> = predicted.iter().map(sdf).collect();
    let c: Vec<_> = clean.iter().map(sdf).collect();
    estimate_bias(&p, &c)
}

/// Shifts the predicted SDF by the bias and keeps the non-positive part:
/// `[φ̂ − Δ̂]_{≤0}`.
pub fn naive_correct(predicted: &SignedDistanceField, delta_hat: f64) -> BinaryMask {
    BinaryMask::from_fn(predicted.shape(), |s| predicted.get(s) as f64 - delta_hat <= 0.0)
}

/// Sign applied to the band statistic when forming λ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LambdaSign {
    /// `λ = −inf f̂` (Δ̂ > 0) or `−sup f̂` (Δ̂ < 0): moves the boundary against
    /// the bias, like the signed-distance route.
    #[default]
    Corrective,
    /// The band statistic without negation. Moves the boundary with the bias;
    /// kept for debugging only.
    Literal,
}

/// How training labels are rebuilt from a prediction inside the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CorrectionRoute {
    /// Threshold of the boundary-localized logit offset.
    #[default]
    Logit,
    /// Threshold of the shifted signed distance, `[φ̂ − Δ̂]_{≤0}`.
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionParams {
    pub route: CorrectionRoute,
    /// Decay width factor γ ∈ (0, 1].
    pub gamma: f64,
    pub max_iters: usize,
    /// Loop stops once `|Δ̂|` drops below this many pixels.
    pub stop_threshold: f64,
    pub lambda_sign: LambdaSign,
}

impl Default for CorrectionParams {
    fn default() -> Self {
        CorrectionParams {
            route: CorrectionRoute::Logit,
            gamma: 1.0,
            max_iters: 5,
            stop_threshold: 1.0,
            lambda_sign: LambdaSign::Corrective,
        }
    }
}

impl CorrectionParams {
    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iters",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        if !(self.stop_threshold >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "stop_threshold",
                value: self.stop_threshold,
                reason: "must be >= 0",
            });
        }
        Ok(())
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "gamma",
            value: gamma,
            reason: "must lie in (0, 1]",
        })
    }
}

/// Logit offset λ taken from the band of predicted sites whose signed distance
/// lies between the boundary and `Δ̂`.
///
/// For `Δ̂ > 0` (prediction shrunk) the band is `1 ≤ φ̂ ≤ Δ̂` and
/// `λ = −min f̂` over it; for `Δ̂ < 0` (prediction grown) the band is
/// `Δ̂ ≤ φ̂ ≤ −1` and `λ = −max f̂`.
pub fn lambda_bias(
    logits: &ScalarField,
    predicted: &SignedDistanceField,
    delta_hat: f64,
    sign: LambdaSign,
) -> Result<f64> {
    logits.shape().check_same(&predicted.shape())?;
    let (lo, hi) = if delta_hat > 0.0 {
        (1.0, delta_hat)
    } else {
        (delta_hat, -1.0)
    };
    let band = (0..logits.shape().len())
        .filter(|&s| {
            let p = predicted.get(s) as f64;
            p >= lo && p <= hi
        })
        .map(|s| logits.get(s) as f64);
    let stat = if delta_hat > 0.0 {
        band.fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
    } else {
        band.fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
    };
    let stat = stat.ok_or(Error::EmptyBand { lo, hi })?;
    Ok(match sign {
        LambdaSign::Corrective => -stat,
        LambdaSign::Literal => stat,
    })
}

/// `f′ = f̂ + λ·exp(−φ̂² / (2(γΔ̂)²))` with an explicit λ.
pub fn apply_logit_offset(
    logits: &ScalarField,
    predicted: &SignedDistanceField,
    delta_hat: f64,
    gamma: f64,
    lambda: f64,
) -> Result<ScalarField> {
    logits.shape().check_same(&predicted.shape())?;
    check_gamma(gamma)?;
    let width = gamma * delta_hat;
    let denom = 2.0 * width * width;
    Ok(ScalarField::from_fn(logits.shape(), |s| {
        let phi = predicted.get(s) as f64;
        (logits.get(s) as f64 + lambda * (-phi * phi / denom).exp()) as f32
    }))
}

/// Logit-space correction. Returns the logits unchanged when `|Δ̂| < 1`.
pub fn logit_correct(
    logits: &ScalarField,
    predicted: &SignedDistanceField,
    delta_hat: f64,
    gamma: f64,
    sign: LambdaSign,
) -> Result<ScalarField> {
    check_gamma(gamma)?;
    logits.shape().check_same(&predicted.shape())?;
    if delta_hat.abs() < 1.0 {
        return Ok(logits.clone());
    }
    let lambda = lambda_bias(logits, predicted, delta_hat, sign)?;
    apply_logit_offset(logits, predicted, delta_hat, gamma, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{dilate_one, threshold, GridShape, Threshold};

    fn disk(size: usize, radius: f64) -> BinaryMask {
        let shape = GridShape::plane(size, size);
        let c = (size / 2) as f64;
        BinaryMask::from_fn(shape, |s| {
            let (_, y, x) = shape.coords(s);
            (y as f64 - c).powi(2) + (x as f64 - c).powi(2) <= radius * radius
        })
    }

    fn shifted(phi: &SignedDistanceField, by: f32) -> SignedDistanceField {
        SignedDistanceField::from_field_unchecked(phi.offset(by))
    }

    #[test]
    fn constant_shift_estimate() {
        let phi = signed_distance(&disk(9, 2.0)).unwrap();
        let est = estimate_bias(&[Some(shifted(&phi, 3.0))], &[Some(phi.clone())]).unwrap();
        assert!((est.delta_hat - 3.0).abs() < 1e-12);
        assert_eq!(est.v_used, 1);
    }

    #[test]
    fn mean_of_gaps() {
        let est = BiasEstimate::from_gaps(vec![-1.2, -0.8], 0).unwrap();
        assert!((est.delta_hat + 1.0).abs() < 1e-12);
        assert!(matches!(
            BiasEstimate::from_gaps(vec![], 3),
            Err(Error::AllDegenerate { skipped: 3 })
        ));
    }

    #[test]
    fn degenerate_pairs_are_skipped() {
        let phi = signed_distance(&disk(9, 2.0)).unwrap();
        let est = estimate_bias(
            &[None, Some(shifted(&phi, 2.0))],
            &[Some(phi.clone()), Some(phi.clone())],
        )
        .unwrap();
        assert_eq!((est.v_used, est.skipped), (1, 1));
        assert!(matches!(
            estimate_bias(&[None], &[Some(phi)]),
            Err(Error::AllDegenerate { .. })
        ));
    }

    #[test]
    fn dilated_disk_estimate_and_recovery() {
        let m = disk(9, 2.0);
        let phi = signed_distance(&m).unwrap();
        let grown = signed_distance(&dilate_one(&m)).unwrap();
        let est = estimate_bias(&[Some(grown.clone())], &[Some(phi)]).unwrap();
        assert!((est.delta_hat - (-1.0 - 12.0 / 81.0)).abs() < 1e-12);
        assert_eq!(naive_correct(&grown, est.delta_hat), m);
    }

    #[test]
    fn naive_correct_with_zero_bias_is_the_prediction() {
        let m = disk(12, 3.0);
        let phi = signed_distance(&m).unwrap();
        assert_eq!(naive_correct(&phi, 0.0), m);
        assert_eq!(
            naive_correct(&phi, 0.0),
            threshold(phi.as_field(), Threshold::AtMost(0.0))
        );
    }

    #[test]
    fn shift_cancellation() {
        let m = disk(16, 5.0);
        let phi = signed_distance(&m).unwrap();
        for c in [-3.0f32, -1.0, 1.0, 2.0, 4.0] {
            let pred = shifted(&phi, c);
            let est = estimate_bias(&[Some(pred.clone())], &[Some(phi.clone())]).unwrap();
            assert_eq!(naive_correct(&pred, est.delta_hat), m, "shift {c}");
        }
    }

    fn negated(phi: &SignedDistanceField) -> ScalarField {
        phi.as_field().map(|v| -v)
    }

    #[test]
    fn lambda_examples() {
        let phi = signed_distance(&disk(15, 4.0)).unwrap();
        let f = negated(&phi);
        let up = lambda_bias(&f, &phi, 2.0, LambdaSign::Corrective).unwrap();
        assert_eq!(up, 2.0);
        let down = lambda_bias(&f, &phi, -2.0, LambdaSign::Corrective).unwrap();
        assert_eq!(down, -2.0);
        assert_eq!(lambda_bias(&f, &phi, -2.0, LambdaSign::Literal).unwrap(), 2.0);
        assert!(matches!(
            lambda_bias(&f, &phi, 0.5, LambdaSign::Corrective),
            Err(Error::EmptyBand { .. })
        ));
    }

    #[test]
    fn logit_correction_examples() {
        let phi = signed_distance(&disk(15, 4.0)).unwrap();
        let f = negated(&phi);
        let out = logit_correct(&f, &phi, 2.0, 1.0, LambdaSign::Corrective).unwrap();
        let at = |v: f32| (0..phi.shape().len()).find(|&s| phi.get(s) == v).unwrap();
        let one = out.get(at(1.0)) as f64;
        let two = out.get(at(2.0)) as f64;
        assert!((one - (-1.0 + 2.0 * (-1.0f64 / 8.0).exp())).abs() < 1e-6);
        assert!(one > 0.0);
        assert!((two - (-2.0 + 2.0 * (-0.5f64).exp())).abs() < 1e-6);
        assert!(two < 0.0);

        let small = logit_correct(&f, &phi, 0.9, 1.0, LambdaSign::Corrective).unwrap();
        assert_eq!(small, f);
        assert!(logit_correct(&f, &phi, 2.0, 0.0, LambdaSign::Corrective).is_err());
        assert!(logit_correct(&f, &phi, 2.0, 1.5, LambdaSign::Corrective).is_err());
    }

    #[test]
    fn far_field_is_untouched() {
        let shape = GridShape::plane(1, 12);
        let m = BinaryMask::from_fn(shape, |s| s < 1);
        let phi = signed_distance(&m).unwrap();
        let f = negated(&phi);
        let out = logit_correct(&f, &phi, 2.0, 1.0, LambdaSign::Corrective).unwrap();
        let s = (0..12).find(|&s| phi.get(s) == 10.0).unwrap();
        let change = (out.get(s) - f.get(s)).abs() as f64;
        assert!(change <= 2.0 * (-12.5f64).exp() + 1e-6);
        assert!(change < 1e-5);
    }

    #[test]
    fn correction_is_bounded_by_lambda() {
        let phi = signed_distance(&disk(21, 6.0)).unwrap();
        let f = phi.as_field().map(|v| -0.7 * v + 0.1);
        for delta in [-3.0, -1.5, 1.5, 3.0] {
            let lambda = lambda_bias(&f, &phi, delta, LambdaSign::Corrective).unwrap();
            let out = logit_correct(&f, &phi, delta, 1.0, LambdaSign::Corrective).unwrap();
            for s in 0..f.shape().len() {
                let d = (out.get(s) - f.get(s)).abs() as f64;
                assert!(d <= lambda.abs() + 1e-6);
            }
        }
    }
}
