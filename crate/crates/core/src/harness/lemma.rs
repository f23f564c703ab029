use std::time::Instant;

use crate::error::{Error, Result};
use crate::grid::{boundaries, BinaryMask};
use crate::harness::TrialReport;
use crate::noise::{bayes_mask_t1, expected_label_mc, t1_regime, MarkovNoiseParams, T1Regime};

fn check_inputs(mask: &BinaryMask, samples: usize) -> Result<()> {
    if samples < 10_000 {
        return Err(Error::InvalidParameter {
            name: "samples",
            value: samples as f64,
            reason: "need at least 10000 Monte Carlo samples",
        });
    }
    let b = boundaries(mask);
    if b.foreground.is_empty() || b.background.is_empty() {
        return Err(Error::DegenerateMask);
    }
    Ok(())
}

fn regime_code(r: T1Regime) -> f64 {
    match r {
        T1Regime::Dilate => 1.0,
        T1Regime::Erode => -1.0,
        T1Regime::Identity => 0.0,
    }
}

/// Compares the Monte Carlo Bayes mask of one-step noise with the closed form
/// (dilate, erode or identity). Sites whose Monte Carlo mean lies within
/// `3·sqrt(p(1−p)/n)` of 0.5 cannot certify a decision and are excluded.
pub fn verify_lemma1(
    mask: &BinaryMask,
    expansion: f64,
    marching: f64,
    flipping: f64,
    samples: usize,
    seed: u64,
) -> Result<TrialReport> {
    let start = Instant::now();
    check_inputs(mask, samples)?;
    let params = MarkovNoiseParams::new(1, expansion, marching, flipping).with_seed(seed);
    params.validate()?;
    let mean = expected_label_mc(mask, &params, samples)?;
    let regime = t1_regime(expansion, marching);
    let bayes = bayes_mask_t1(mask, expansion, marching);
    let n = samples as f64;
    let (mut decided, mut undecided, mut disagree) = (0usize, 0usize, 0usize);
    for s in 0..mask.shape().len() {
        let p = mean.get(s) as f64;
        let tol = 3.0 * (p * (1.0 - p) / n).sqrt();
        if (p - 0.5).abs() <= tol {
            undecided += 1;
            continue;
        }
        decided += 1;
        if (p >= 0.5) != bayes.get(s) {
            disagree += 1;
        }
    }
    let mut r = TrialReport::new("lemma1", seed);
    r.param("theta1", expansion)
        .param("theta2", marching)
        .param("theta3", flipping)
        .param("samples", n)
        .param("sites", mask.shape().len() as f64)
        .tolerance("undecidable_sigmas", 3.0)
        .measure("regime", regime_code(regime))
        .measure("decided_sites", decided as f64)
        .measure("undecidable_sites", undecided as f64)
        .measure("disagreements", disagree as f64)
        .measure("decided_fraction", decided as f64 / mask.shape().len() as f64)
        .measure(
            "decided_agreement",
            if decided == 0 {
                1.0
            } else {
                1.0 - disagree as f64 / decided as f64
            },
        );
    r.notes.push(format!("closed-form regime: {regime:?}"));
    r.passed = disagree == 0 && decided > 0;
    r.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(r)
}

/// Per-site expectations of one-step noise, averaged over site classes.
///
/// Sites the boundary process left unchanged are still exposed to flipping,
/// so with θ3 > 0 the boundary classes carry an extra θ3 term:
/// `θ1θ2 + (1 − θ1θ2)θ3` on the background layer and
/// `(1 − (1 − θ1)θ2)(1 − θ3)` on the foreground layer. The report checks these
/// and also records whether the flip-free forms `θ1θ2` and `1 + θ1θ2 − θ2`
/// still fit. The tolerance is the 3σ binomial width of a single site, which
/// bounds the spread of any class average.
pub fn verify_t1_expectations(
    mask: &BinaryMask,
    expansion: f64,
    marching: f64,
    flipping: f64,
    samples: usize,
    seed: u64,
) -> Result<TrialReport> {
    let start = Instant::now();
    check_inputs(mask, samples)?;
    let params = MarkovNoiseParams::new(1, expansion, marching, flipping).with_seed(seed);
    params.validate()?;
    let mean = expected_label_mc(mask, &params, samples)?;
    let b = boundaries(mask);
    let grow = expansion * marching;
    let classes: [(&str, BinaryMask, f64, f64); 4] = [
        (
            "boundary_bg",
            b.background.clone(),
            grow + (1.0 - grow) * flipping,
            grow,
        ),
        (
            "boundary_fg",
            b.foreground.clone(),
            (1.0 + grow - marching) * (1.0 - flipping),
            1.0 + grow - marching,
        ),
        (
            "interior_fg",
            mask.difference(&b.foreground)?,
            1.0 - flipping,
            1.0 - flipping,
        ),
        (
            "interior_bg",
            mask.complement().difference(&b.background)?,
            flipping,
            flipping,
        ),
    ];
    let n = samples as f64;
    let mut r = TrialReport::new("t1_expectations", seed);
    r.param("theta1", expansion)
        .param("theta2", marching)
        .param("theta3", flipping)
        .param("samples", n)
        .tolerance("sigmas", 3.0);
    let mut all_ok = true;
    let mut flip_free_ok = true;
    for (name, sites, expected, flip_free) in classes {
        let count = sites.count();
        if count == 0 {
            continue;
        }
        let mc = sites.iter_ones().map(|s| mean.get(s) as f64).sum::<f64>() / count as f64;
        let tol = 3.0 * (expected * (1.0 - expected) / n).sqrt().max(1.0 / n);
        all_ok &= (mc - expected).abs() <= tol;
        flip_free_ok &= (mc - flip_free).abs() <= 3.0 * (flip_free * (1.0 - flip_free) / n).sqrt().max(1.0 / n);
        r.measure(&format!("{name}_mc"), mc)
            .measure(&format!("{name}_expected"), expected)
            .measure(&format!("{name}_flip_free_form"), flip_free)
            .measure(&format!("{name}_sites"), count as f64)
            .tolerance(name, tol);
    }
    r.measure("flip_free_forms_fit", flip_free_ok as u8 as f64);
    r.passed = all_ok;
    r.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(r)
}
