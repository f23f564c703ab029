use std::path::Path;

use proptest::prelude::*;

use spatial_correction::correct::{
    apply_logit_offset, estimate_bias_from_masks, naive_correct, required_validation_size, ValidationBoundInputs,
};
use spatial_correction::grid::{dice, dilate_one, erode_one, BinaryMask, GridShape, ScalarField};
use spatial_correction::io::{decode, decode_pgm, encode_field, encode_mask, encode_pgm, GtfData};
use spatial_correction::noise::{generate, MarkovNoiseParams};
use spatial_correction::sdf::signed_distance;

fn mask_2d() -> impl Strategy<Value = BinaryMask> {
    (1usize..=12, 1usize..=12)
        .prop_flat_map(|(h, w)| {
            (
                Just(GridShape::plane(h, w)),
                prop::collection::vec(any::<bool>(), h * w),
            )
        })
        .prop_map(|(shape, bits)| BinaryMask::from_bools(shape, &bits).unwrap())
}

fn mask_any() -> impl Strategy<Value = BinaryMask> {
    prop_oneof![
        mask_2d(),
        (1usize..=5, 1usize..=5, 1usize..=5)
            .prop_flat_map(|(d, h, w)| {
                (
                    Just(GridShape::volume(d, h, w)),
                    prop::collection::vec(any::<bool>(), d * h * w),
                )
            })
            .prop_map(|(shape, bits)| BinaryMask::from_bools(shape, &bits).unwrap()),
    ]
}

fn nondegenerate(m: &BinaryMask) -> bool {
    !m.is_empty() && !m.is_full()
}

/// Disk on a square grid, large enough that a few steps never reach the border.
fn disk(size: usize, r: f64) -> BinaryMask {
    let shape = GridShape::plane(size, size);
    let c = (size as f64 - 1.0) / 2.0;
    BinaryMask::from_fn(shape, |s| {
        let (_, y, x) = shape.coords(s);
        (y as f64 - c).powi(2) + (x as f64 - c).powi(2) <= r * r
    })
}

proptest! {
    #[test]
    fn sdf_sign_and_magnitude(m in mask_any().prop_filter("two labels", nondegenerate)) {
        let phi = signed_distance(&m).unwrap();
        for s in 0..m.shape().len() {
            let v = phi.get(s);
            prop_assert!(v.abs() >= 1.0);
            prop_assert_eq!(v < 0.0, m.get(s));
        }
        prop_assert_eq!(phi.foreground(), m);
    }

    #[test]
    fn sdf_is_one_lipschitz_on_each_side(m in mask_any().prop_filter("two labels", nondegenerate)) {
        let phi = signed_distance(&m).unwrap();
        let shape = m.shape();
        for s in 0..shape.len() {
            for t in shape.neighbors(s) {
                let (a, b) = (phi.get(s), phi.get(t));
                if m.get(s) == m.get(t) {
                    prop_assert!((a - b).abs() <= 1.0);
                } else {
                    prop_assert_eq!(a.abs(), 1.0);
                    prop_assert_eq!(b.abs(), 1.0);
                }
            }
        }
    }

    #[test]
    fn sdf_rejects_single_label(shape_h in 1usize..8, shape_w in 1usize..8, fg in any::<bool>()) {
        let shape = GridShape::plane(shape_h, shape_w);
        let m = if fg { BinaryMask::full(shape) } else { BinaryMask::new(shape) };
        prop_assert!(signed_distance(&m).is_err());
    }

    #[test]
    fn dilation_shifts_outside_distances_by_one(m in mask_2d().prop_filter("two labels", nondegenerate)) {
        let d = dilate_one(&m);
        prop_assume!(nondegenerate(&d));
        let (phi, phi_d) = (signed_distance(&m).unwrap(), signed_distance(&d).unwrap());
        for s in 0..m.shape().len() {
            if phi.get(s) >= 2.0 {
                prop_assert_eq!(phi_d.get(s), phi.get(s) - 1.0);
            }
        }
    }

    #[test]
    fn erosion_is_dual_of_dilation(m in mask_any()) {
        prop_assert_eq!(erode_one(&m), dilate_one(&m.complement()).complement());
        prop_assert!(erode_one(&m).is_subset(&m));
        prop_assert!(m.is_subset(&dilate_one(&m)));
    }

    #[test]
    fn dice_is_symmetric_and_bounded(a in mask_2d(), bits in prop::collection::vec(any::<bool>(), 144)) {
        let b = BinaryMask::from_bools(a.shape(), &bits[..a.shape().len()]).unwrap();
        let (ab, ba) = (dice(&a, &b).unwrap(), dice(&b, &a).unwrap());
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(dice(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn noise_changes_only_near_the_boundary(
        steps in 0usize..6,
        t1 in 0.0f64..=1.0,
        t2 in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let clean = disk(32, 8.0);
        let phi = signed_distance(&clean).unwrap();
        let noisy = generate(&clean, &MarkovNoiseParams::new(steps, t1, t2, 0.0).with_seed(seed));
        for s in noisy.symmetric_difference(&clean).unwrap().iter_ones() {
            prop_assert!(phi.get(s).abs() <= steps as f32);
        }
    }

    #[test]
    fn noise_is_reproducible(steps in 0usize..5, t3 in 0.0f64..0.1, seed in any::<u64>()) {
        let clean = disk(24, 6.0);
        let p = MarkovNoiseParams::new(steps, 0.6, 0.5, t3).with_seed(seed);
        prop_assert_eq!(generate(&clean, &p), generate(&clean, &p));
    }

    #[test]
    fn pure_expansion_and_shrinkage_are_monotone(steps in 1usize..5, t2 in 0.0f64..=1.0, seed in any::<u64>()) {
        let clean = disk(32, 8.0);
        let grown = generate(&clean, &MarkovNoiseParams::new(steps, 1.0, t2, 0.0).with_seed(seed));
        let shrunk = generate(&clean, &MarkovNoiseParams::new(steps, 0.0, t2, 0.0).with_seed(seed));
        prop_assert!(clean.is_subset(&grown));
        prop_assert!(shrunk.is_subset(&clean));
    }

    #[test]
    fn naive_correction_with_zero_bias_is_identity(m in mask_any().prop_filter("two labels", nondegenerate)) {
        let phi = signed_distance(&m).unwrap();
        prop_assert_eq!(naive_correct(&phi, 0.0), m);
    }

    #[test]
    fn identical_masks_have_zero_bias(m in mask_2d().prop_filter("two labels", nondegenerate)) {
        let est = estimate_bias_from_masks(std::slice::from_ref(&m), std::slice::from_ref(&m)).unwrap();
        prop_assert_eq!(est.delta_hat, 0.0);
    }

    #[test]
    fn logit_offset_is_bounded_by_lambda(
        m in mask_2d().prop_filter("two labels", nondegenerate),
        delta in prop_oneof![-4.0f64..-1.0, 1.0f64..4.0],
        gamma in 0.1f64..=1.0,
        lambda in -5.0f64..5.0,
    ) {
        let phi = signed_distance(&m).unwrap();
        let logits = ScalarField::from_fn(m.shape(), |s| -phi.get(s));
        let out = apply_logit_offset(&logits, &phi, delta, gamma, lambda).unwrap();
        for s in 0..m.shape().len() {
            let step = (out.get(s) - logits.get(s)) as f64;
            prop_assert!(step.abs() <= lambda.abs() + 1e-5);
            prop_assert!(step * lambda >= -1e-6);
        }
    }

    #[test]
    fn validation_size_falls_as_alpha_grows(
        eps0 in 0.0f64..2.0,
        gap in 0.1f64..4.0,
        extra in 0.0f64..50.0,
        a in 0.001f64..0.5,
        b in 0.001f64..0.5,
        image_size in 1u64..1_000_000,
    ) {
        let base = ValidationBoundInputs { eps0, eps1: eps0 + extra, eps: eps0 + gap, alpha: a.min(b), image_size };
        let loose = ValidationBoundInputs { alpha: a.max(b), ..base };
        prop_assert!(required_validation_size(&loose).unwrap() <= required_validation_size(&base).unwrap());
    }

    #[test]
    fn gtf_round_trips(m in mask_any(), values in prop::collection::vec(-1e6f32..1e6, 144)) {
        let path = Path::new("mem.gtf");
        match decode(&encode_mask(&m), path).unwrap() {
            GtfData::Mask(back) => prop_assert_eq!(back, m.clone()),
            GtfData::Field(_) => prop_assert!(false, "mask decoded as field"),
        }
        let field = ScalarField::new(m.shape(), values[..m.shape().len()].to_vec()).unwrap();
        match decode(&encode_field(&field), path).unwrap() {
            GtfData::Field(back) => prop_assert_eq!(back, field),
            GtfData::Mask(_) => prop_assert!(false, "field decoded as mask"),
        }
    }

    #[test]
    fn pgm_round_trips_masks(m in mask_2d()) {
        let samples: Vec<u8> = m.to_bools().iter().map(|&b| if b { 255 } else { 0 }).collect();
        let bytes = encode_pgm(m.shape(), &samples).unwrap();
        prop_assert_eq!(decode_pgm(&bytes, Path::new("mem.pgm")).unwrap().to_mask(), m);
    }
}
