use crate::error::{Error, Result};
use crate::grid::{BinaryMask, LabelField, ScalarField};

/// The two one-site layers flanking the object interface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Boundaries {
    /// Foreground sites with a background neighbor (∂F).
    pub foreground: BinaryMask,
    /// Background sites with a foreground neighbor (∂B).
    pub background: BinaryMask,
}

pub fn boundaries(mask: &BinaryMask) -> Boundaries {
    let bg = mask.complement();
    let near_bg = bg.neighbor_any();
    let near_fg = mask.neighbor_any();
    Boundaries {
        foreground: mask.zip_unchecked(&near_bg, |a, b| a & b),
        background: bg.zip_unchecked(&near_fg, |a, b| a & b),
    }
}

/// `mask ∪ ∂B(mask)`.
pub fn dilate_one(mask: &BinaryMask) -> BinaryMask {
    mask.zip_unchecked(&mask.neighbor_any(), |a, b| a | b)
}

/// `mask \ ∂F(mask)`.
pub fn erode_one(mask: &BinaryMask) -> BinaryMask {
    let near_bg = mask.complement().neighbor_any();
    mask.zip_unchecked(&near_bg, |a, b| a & !b)
}

/// Dice similarity `2|a∩b| / (|a|+|b|)`; 1.0 when both masks are empty.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let both = a.intersection(b)?.count();
    let total = a.count() + b.count();
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / total as f64)
}

/// Per-class Dice over the foreground classes `1..L` and their unweighted mean.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassDice {
    pub per_class: Vec<f64>,
    pub macro_mean: f64,
}

pub fn multiclass_dice(pred: &LabelField, truth: &LabelField) -> Result<MulticlassDice> {
    pred.shape().check_same(&truth.shape())?;
    let classes = pred.classes().max(truth.classes());
    let mut per_class = Vec::with_capacity(classes.saturating_sub(1));
    for c in 1..classes {
        let a = indicator(pred, c);
        let b = indicator(truth, c);
        per_class.push(dice(&a, &b)?);
    }
    let macro_mean = if per_class.is_empty() {
        1.0
    } else {
        per_class.iter().sum::<f64>() / per_class.len() as f64
    };
    Ok(MulticlassDice { per_class, macro_mean })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateRule {
    /// Foreground iff a strict majority of annotators marked it; even ties go
    /// to background.
    Majority,
    /// Foreground iff any annotator marked it.
    Union,
}

pub fn aggregate(masks: &[BinaryMask], rule: AggregateRule) -> Result<BinaryMask> {
    let first = masks.first().ok_or(Error::EmptyInput("no masks to aggregate"))?;
    for m in &masks[1..] {
        first.shape().check_same(&m.shape())?;
    }
    match rule {
        AggregateRule::Union => Ok(masks[1..]
            .iter()
            .fold(first.clone(), |acc, m| acc.zip_unchecked(m, |a, b| a | b))),
        AggregateRule::Majority => {
            let n = masks.len();
            let needed = (n + 2) / 2; // ceil((n + 1) / 2)
            let mut votes = vec![0u32; first.shape().len()];
            for m in masks {
                for s in m.iter_ones() {
                    votes[s] += 1;
                }
            }
            Ok(BinaryMask::from_fn(first.shape(), |s| votes[s] as usize >= needed))
        }
    }
}

/// Indicator of one class in a multi-class label field.
pub fn one_vs_rest(labels: &LabelField, class: usize) -> Result<BinaryMask> {
    if class >= labels.classes() {
        return Err(Error::ClassOutOfRange {
            class,
            classes: labels.classes(),
        });
    }
    Ok(indicator(labels, class))
}

fn indicator(labels: &LabelField, class: usize) -> BinaryMask {
    BinaryMask::from_fn(labels.shape(), |s| labels.get(s) == class)
}

/// Inclusive per-site comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    AtLeast(f64),
    AtMost(f64),
}

pub fn threshold(field: &ScalarField, rule: Threshold) -> BinaryMask {
    let v = field.values();
    match rule {
        // compare at storage precision so a value equal to the threshold as
        // stored counts as equal
        Threshold::AtLeast(t) => {
            let t = t as f32;
            BinaryMask::from_fn(field.shape(), |s| v[s] >= t)
        }
        Threshold::AtMost(t) => {
            let t = t as f32;
            BinaryMask::from_fn(field.shape(), |s| v[s] <= t)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridShape;

    fn line(bits: &[u8]) -> BinaryMask {
        BinaryMask::from_fn(GridShape::plane(1, bits.len()), |s| bits[s] == 1)
    }

    fn ones(m: &BinaryMask) -> Vec<usize> {
        m.iter_ones().collect()
    }

    #[test]
    fn boundaries_of_single_pixel_line() {
        let b = boundaries(&line(&[0, 0, 1, 0, 0]));
        assert_eq!(ones(&b.foreground), vec![2]);
        assert_eq!(ones(&b.background), vec![1, 3]);
    }

    #[test]
    fn boundaries_of_center_pixel() {
        let m = BinaryMask::from_fn(GridShape::plane(3, 3), |s| s == 4);
        let b = boundaries(&m);
        assert_eq!(ones(&b.foreground), vec![4]);
        assert_eq!(ones(&b.background), vec![1, 3, 5, 7]);
    }

    #[test]
    fn degenerate_masks_have_no_boundary() {
        let shape = GridShape::plane(4, 4);
        for m in [BinaryMask::new(shape), BinaryMask::full(shape)] {
            let b = boundaries(&m);
            assert!(b.foreground.is_empty() && b.background.is_empty());
        }
    }

    #[test]
    fn one_step_morphology() {
        let m = line(&[0, 0, 1, 0, 0]);
        assert_eq!(dilate_one(&m), line(&[0, 1, 1, 1, 0]));
        assert_eq!(erode_one(&m), line(&[0, 0, 0, 0, 0]));
        let full = BinaryMask::full(GridShape::plane(3, 3));
        assert_eq!(dilate_one(&full), full);
    }

    #[test]
    fn dice_values() {
        let a = line(&[0, 0, 1, 0, 0]);
        let b = line(&[0, 1, 1, 1, 0]);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        assert_eq!(dice(&a, &b).unwrap(), 0.5);
        assert_eq!(dice(&a, &line(&[1, 0, 0, 0, 0])).unwrap(), 0.0);
        let empty = line(&[0; 5]);
        assert_eq!(dice(&empty, &empty).unwrap(), 1.0);
        assert!(dice(&a, &line(&[0; 4])).is_err());
    }

    #[test]
    fn majority_tie_goes_to_background() {
        let fg = line(&[1]);
        let bg = line(&[0]);
        let four = vec![fg.clone(), fg.clone(), bg.clone(), bg.clone()];
        assert!(aggregate(&four, AggregateRule::Majority).unwrap().is_empty());
        let three = vec![fg.clone(), fg.clone(), bg.clone()];
        assert!(aggregate(&three, AggregateRule::Majority).unwrap().is_full());
        assert!(aggregate(&four, AggregateRule::Union).unwrap().is_full());
    }

    #[test]
    fn aggregate_simple_cases() {
        let m = line(&[0, 1, 1, 0, 1]);
        let empty = line(&[0; 5]);
        assert_eq!(aggregate(&[m.clone(), empty], AggregateRule::Union).unwrap(), m);
        let same = vec![m.clone(), m.clone(), m.clone()];
        assert_eq!(aggregate(&same, AggregateRule::Majority).unwrap(), m);
        assert!(matches!(
            aggregate(&[], AggregateRule::Union),
            Err(Error::EmptyInput(_))
        ));
        assert!(aggregate(&[m, line(&[0; 4])], AggregateRule::Union).is_err());
    }

    #[test]
    fn one_vs_rest_partitions_sites() {
        let shape = GridShape::plane(4, 4);
        let labels = LabelField::new(shape, 3, (0..16).map(|s| ((s / 4 + s % 4) % 3) as u32).collect()).unwrap();
        let parts: Vec<_> = (0..3).map(|c| one_vs_rest(&labels, c).unwrap()).collect();
        for s in 0..16 {
            assert_eq!(parts.iter().filter(|p| p.get(s)).count(), 1);
            assert!(parts[labels.get(s)].get(s));
        }
        assert!(one_vs_rest(&labels, 3).is_err());

        let zeros = LabelField::new(shape, 2, vec![0; 16]).unwrap();
        assert!(one_vs_rest(&zeros, 1).unwrap().is_empty());
    }

    #[test]
    fn multiclass_dice_macro_mean() {
        let shape = GridShape::plane(1, 4);
        let truth = LabelField::new(shape, 3, vec![0, 1, 2, 2]).unwrap();
        let pred = LabelField::new(shape, 3, vec![0, 1, 1, 2]).unwrap();
        let d = multiclass_dice(&pred, &truth).unwrap();
        // class 1: 2*1/(2+1); class 2: 2*1/(1+2)
        assert!((d.per_class[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((d.per_class[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!((d.macro_mean - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_is_inclusive() {
        let shape = GridShape::plane(2, 2);
        let half = ScalarField::filled(shape, 0.5);
        assert!(threshold(&half, Threshold::AtLeast(0.5)).is_full());
        let low = ScalarField::filled(shape, 0.3);
        assert!(threshold(&low, Threshold::AtLeast(0.5)).is_empty());
        assert!(threshold(&low, Threshold::AtMost(0.3)).is_full());
    }
}
