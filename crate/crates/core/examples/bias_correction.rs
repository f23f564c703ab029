//! Estimates the signed-distance bias of a dilating predictor from one clean
//! image, then fixes its other predictions with both correction routes.

use spatial_correction::correct::{estimate_bias_from_masks, logit_correct, naive_correct, LambdaSign};
use spatial_correction::grid::{dice, dilate_one, threshold, BinaryMask, GridShape, ScalarField, Threshold};
use spatial_correction::sdf::signed_distance;

fn disk(cy: f64, cx: f64, r: f64) -> BinaryMask {
    let shape = GridShape::plane(64, 64);
    BinaryMask::from_fn(shape, |s| {
        let (_, y, x) = shape.coords(s);
        (y as f64 - cy).powi(2) + (x as f64 - cx).powi(2) <= r * r
    })
}

fn main() -> spatial_correction::Result<()> {
    let truth = [disk(32.0, 32.0, 14.0), disk(28.0, 36.0, 10.0), disk(35.0, 30.0, 18.0)];
    // a predictor that always grows the object by three layers
    let predict = |m: &BinaryMask| dilate_one(&dilate_one(&dilate_one(m)));
    let preds: Vec<BinaryMask> = truth.iter().map(predict).collect();

    let est = estimate_bias_from_masks(&preds[..1], &truth[..1])?;
    println!("delta_hat from one validation image: {:+.3}", est.delta_hat);

    for (i, (pred, clean)) in preds.iter().zip(&truth).enumerate().skip(1) {
        let phi = signed_distance(pred)?;
        let naive = naive_correct(&phi, est.delta_hat);
        // logits of a calibrated model: the negated signed distance
        let logits = ScalarField::from_fn(pred.shape(), |s| -phi.get(s));
        let fixed = logit_correct(&logits, &phi, est.delta_hat, 1.0, LambdaSign::Corrective)?;
        let logit = threshold(&fixed, Threshold::AtLeast(0.0));
        println!(
            "image {i}: dice before {:.4}, naive {:.4}, logit {:.4}",
            dice(pred, clean)?,
            dice(&naive, clean)?,
            dice(&logit, clean)?
        );
    }
    Ok(())
}
