use std::time::Instant;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::correct::{required_validation_size, BiasEstimate, ValidationBoundInputs};
use crate::error::{Error, Result};
use crate::grid::BinaryMask;
use crate::harness::synth::{synth_masks, ShapeFamily, SynthSpec};
use crate::harness::TrialReport;
use crate::model::OracleErrorSpec;
use crate::noise::bayes_mask_t1;
use crate::rng::{mix, rng_from_seed};
use crate::sdf::signed_distance;

/// Fixture pool for the validation-size experiment: `pool` images used for
/// sampling validation sets followed by `held_out` images for measuring the
/// recovery error. Half disks, half ellipse unions, interleaved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Fixture {
    pub pool: usize,
    pub held_out: usize,
    /// Square grid side; 256 gives `|I| = 65536`.
    pub size: usize,
    pub expansion: f64,
    pub marching: f64,
    pub seed: u64,
}

impl Theorem1Fixture {
    pub fn desk(seed: u64) -> Self {
        Theorem1Fixture {
            pool: 3072,
            held_out: 1024,
            size: 256,
            expansion: 0.7,
            marching: 0.9,
            seed,
        }
    }
}

/// Summary of `φ̃ − φ` for one image: its mean and extremes. The recovery
/// error after a constant shift `c` is `max(|min + c|, |max + c|)`, so the
/// fields themselves need not be kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

pub fn gap_stats(clean: &BinaryMask, bayes: &BinaryMask) -> Result<GapStats> {
    let phi = signed_distance(clean)?;
    let tilde = signed_distance(bayes)?;
    let mut sum = 0.0;
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (a, b) in tilde.values().iter().zip(phi.values()) {
        let d = (*a - *b) as f64;
        sum += d;
        min = min.min(d);
        max = max.max(d);
    }
    Ok(GapStats {
        mean: sum / phi.values().len() as f64,
        min,
        max,
    })
}

#[derive(Debug, Clone)]
pub struct Theorem1Pool {
    pub fixture: Theorem1Fixture,
    pub validation: Vec<GapStats>,
    pub held_out: Vec<GapStats>,
    pub image_size: u64,
}

impl Theorem1Pool {
    pub fn build(fixture: &Theorem1Fixture) -> Result<Self> {
        let total = fixture.pool + fixture.held_out;
        let base = |family, count, seed| SynthSpec {
            count,
            height: fixture.size,
            width: fixture.size,
            family,
            radius_min: fixture.size as f64 / 12.0,
            radius_max: fixture.size as f64 / 4.0,
            contrast: 1.0,
            noise_sigma: 0.0,
            blur_sigma: 0.0,
            holes: None,
            seed,
        };
        let disks = synth_masks(&base(ShapeFamily::Disks, total.div_ceil(2), mix(fixture.seed, 0)))?.masks;
        let ellipses = synth_masks(&base(ShapeFamily::EllipseUnions, total / 2, mix(fixture.seed, 1)))?.masks;
        let masks: Vec<BinaryMask> = (0..total)
            .map(|i| if i % 2 == 0 { &disks[i / 2] } else { &ellipses[i / 2] })
            .cloned()
            .collect();
        let stats = masks
            .par_iter()
            .map(|m| gap_stats(m, &bayes_mask_t1(m, fixture.expansion, fixture.marching)))
            .collect::<Result<Vec<_>>>()?;
        let mut validation = stats;
        let held_out = validation.split_off(fixture.pool);
        Ok(Theorem1Pool {
            fixture: *fixture,
            validation,
            held_out,
            image_size: (fixture.size * fixture.size) as u64,
        })
    }
}

/// One trial: fresh oracle offsets, a random validation subset of size `v`,
/// the bias estimate, and the mean sup-error of the shifted predictions on
/// the held-out images.
pub fn theorem1_trial(pool: &Theorem1Pool, err: &OracleErrorSpec, v: usize, trial_seed: u64) -> Result<(f64, f64)> {
    let n_val = pool.validation.len();
    let mut rng = rng_from_seed(trial_seed);
    let picked = sample(&mut rng, n_val, v);
    let gaps: Vec<f64> = picked
        .iter()
        .map(|j| pool.validation[j].mean + err.offset(j as u64))
        .collect();
    let delta_hat = BiasEstimate::from_gaps(gaps, 0)?.delta_hat;
    let error = pool
        .held_out
        .iter()
        .enumerate()
        .map(|(h, g)| {
            let c = err.offset((n_val + h) as u64) - delta_hat;
            (g.min + c).abs().max((g.max + c).abs())
        })
        .sum::<f64>()
        / pool.held_out.len() as f64;
    Ok((delta_hat, error))
}

/// One-sided exact binomial bounds at 95%: (lower, upper).
pub fn clopper_pearson_one_sided(failures: usize, trials: usize) -> (f64, f64) {
    let (k, n) = (failures as f64, trials as f64);
    let lower = if failures == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).expect("positive shape").inverse_cdf(0.05)
    };
    let upper = if failures == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).expect("positive shape").inverse_cdf(0.95)
    };
    (lower, upper)
}

/// Runs `n_trials` trials with validation size `v`. A trial fails when the
/// held-out error exceeds `ε + ε0`; the run passes when the one-sided 95%
/// lower confidence bound of the failure rate does not exceed α.
pub fn verify_theorem1_with(
    pool: &Theorem1Pool,
    inputs: &ValidationBoundInputs,
    v: usize,
    n_trials: usize,
    seed: u64,
) -> Result<TrialReport> {
    let start = Instant::now();
    inputs.validate()?;
    if n_trials < 100 {
        return Err(Error::InvalidParameter {
            name: "n_trials",
            value: n_trials as f64,
            reason: "need at least 100 trials",
        });
    }
    if v == 0 || v > pool.validation.len() {
        return Err(Error::PoolTooSmall {
            requested: v,
            pool: pool.validation.len(),
        });
    }
    let threshold = inputs.eps + inputs.eps0;
    let outcomes = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = mix(seed, t as u64);
            let err = OracleErrorSpec {
                eps0: inputs.eps0,
                eps1: inputs.eps1,
                seed: mix(trial_seed, u64::MAX),
            };
            theorem1_trial(pool, &err, v, trial_seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = TrialReport::new("theorem1", seed);
    let failures = outcomes.iter().filter(|(_, e)| *e > threshold).count();
    for (t, (delta_hat, error)) in outcomes.iter().enumerate() {
        r.trials.push(
            [
                ("trial", t as f64),
                ("delta_hat", *delta_hat),
                ("error", *error),
                ("failed", (*error > threshold) as u8 as f64),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        );
    }
    let (lower, upper) = clopper_pearson_one_sided(failures, n_trials);
    let mean_error = outcomes.iter().map(|(_, e)| e).sum::<f64>() / n_trials as f64;
    let worst = outcomes.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    r.param("eps0", inputs.eps0)
        .param("eps1", inputs.eps1)
        .param("eps", inputs.eps)
        .param("alpha", inputs.alpha)
        .param("image_size", pool.image_size as f64)
        .param("validation_size", v as f64)
        .param("pool", pool.validation.len() as f64)
        .param("held_out", pool.held_out.len() as f64)
        .param("trials", n_trials as f64)
        .tolerance("error_threshold", threshold)
        .tolerance("alpha", inputs.alpha)
        .measure("failures", failures as f64)
        .measure("failure_rate", failures as f64 / n_trials as f64)
        .measure("rate_lower_95", lower)
        .measure("rate_upper_95", upper)
        .measure("mean_error", mean_error)
        .measure("max_error", worst);
    r.passed = lower <= inputs.alpha;
    r.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(r)
}

/// Builds the pool and runs with `V = required_validation_size(inputs)`.
pub fn verify_theorem1(
    inputs: &ValidationBoundInputs,
    n_trials: usize,
    fixture: &Theorem1Fixture,
) -> Result<TrialReport> {
    let v = required_validation_size(inputs)?;
    if v > fixture.pool {
        return Err(Error::PoolTooSmall {
            requested: v,
            pool: fixture.pool,
        });
    }
    let pool = Theorem1Pool::build(fixture)?;
    verify_theorem1_with(&pool, inputs, v, n_trials, mix(fixture.seed, 2))
}
