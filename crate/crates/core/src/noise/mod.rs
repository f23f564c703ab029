//! Spatially correlated label noise.
//!
//! The Markov boundary process: starting from the clean mask, each of `T`
//! steps draws one expansion coin `z1 ~ Bernoulli(θ1)` for the whole mask,
//! then flips every site of the active boundary layer (background layer when
//! expanding, foreground layer when shrinking) with marching probability θ2.
//! After the last step an optional Gaussian smoothing is applied, and finally
//! sites whose label never changed flip with probability θ3.
//!
//! Random draws happen in a fixed order so that a seed reproduces the exact
//! same mask everywhere: per step the expansion coin first, then one marching
//! coin per active boundary site in row-major order; the flipping coins come
//! last, one per unchanged site in row-major order (skipped when θ3 = 0).

mod presets;
mod smooth;

use log::warn;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{boundaries, dilate_one, erode_one, BinaryMask, ScalarField};
use crate::rng::{mix, rng_from_seed, Coin, SimRng};

pub use presets::{preset, presets, NoisePreset};
pub use smooth::{blur_values, box_mean, gaussian_kernel, gaussian_smooth_mask};

/// Parameters of the Markov boundary noise `M(T, θ1, θ2)` with flipping rate θ3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovNoiseParams {
    /// Number of Markov steps `T`.
    pub steps: usize,
    /// θ1, probability that a step expands the mask.
    pub expansion: f64,
    /// θ2, probability that a boundary site moves during a step.
    pub marching: f64,
    /// θ3, flipping probability for sites the boundary process left unchanged.
    pub flipping: f64,
    /// Gaussian σ in sites applied before flipping; 0 disables smoothing.
    pub smooth_sigma: f64,
    pub seed: u64,
}

impl MarkovNoiseParams {
    pub fn new(steps: usize, expansion: f64, marching: f64, flipping: f64) -> Self {
        MarkovNoiseParams {
            steps,
            expansion,
            marching,
            flipping,
            smooth_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_smoothing(mut self, sigma: f64) -> Self {
        self.smooth_sigma = sigma;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name, value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "probability must lie in [0, 1]",
                })
            }
        };
        unit("theta1", self.expansion)?;
        unit("theta2", self.marching)?;
        unit("theta3", self.flipping)?;
        if self.flipping >= 0.5 {
            return Err(Error::InvalidParameter {
                name: "theta3",
                value: self.flipping,
                reason: "flipping probability must stay below 0.5",
            });
        }
        if !(self.smooth_sigma >= 0.0 && self.smooth_sigma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "smooth_sigma",
                value: self.smooth_sigma,
                reason: "must be a finite value >= 0",
            });
        }
        if self.flipping > 0.1 {
            warn!(
                "theta3 = {} is large; the T=1 Bayes-mask analysis assumes theta3 << 0.5",
                self.flipping
            );
        }
        Ok(())
    }
}

/// One Markov step with an explicit expansion bit and marching field.
///
/// Expanding (`expand = true`) turns `marching ∩ ∂B` to foreground; shrinking
/// turns `marching ∩ ∂F` to background. No other site changes.
pub fn markov_step(mask: &BinaryMask, expand: bool, marching: &BinaryMask) -> Result<BinaryMask> {
    mask.shape().check_same(&marching.shape())?;
    let b = boundaries(mask);
    Ok(if expand {
        let grow = b.background.zip_unchecked(marching, |a, m| a & m);
        mask.zip_unchecked(&grow, |a, g| a | g)
    } else {
        let cut = b.foreground.zip_unchecked(marching, |a, m| a & m);
        mask.zip_unchecked(&cut, |a, c| a & !c)
    })
}

/// Runs the `T` boundary steps only (no smoothing, no flipping).
fn markov_phase(mask: &BinaryMask, params: &MarkovNoiseParams, rng: &mut SimRng) -> BinaryMask {
    let expand_coin = Coin::new(params.expansion);
    let march_coin = Coin::new(params.marching);
    let mut cur = mask.clone();
    for _ in 0..params.steps {
        let expand = expand_coin.toss(rng);
        let layer = if expand {
            let bg = cur.complement();
            bg.zip_unchecked(&cur.neighbor_any(), |a, b| a & b)
        } else {
            let near_bg = cur.complement().neighbor_any();
            cur.zip_unchecked(&near_bg, |a, b| a & b)
        };
        for s in layer.iter_ones() {
            if march_coin.toss(rng) {
                cur.set(s, expand);
            }
        }
    }
    cur
}

/// Draws one noisy mask from the Markov noise model.
pub fn generate(mask: &BinaryMask, params: &MarkovNoiseParams) -> BinaryMask {
    let mut rng = rng_from_seed(params.seed);
    let mut cur = markov_phase(mask, params, &mut rng);
    if params.smooth_sigma > 0.0 {
        cur = gaussian_smooth_mask(&cur, params.smooth_sigma);
    }
    if params.flipping > 0.0 {
        flip_stable_sites(&mut cur, mask, Coin::new(params.flipping), &mut rng);
    }
    cur
}

/// Flips sites where `cur` still agrees with `original`.
fn flip_stable_sites(cur: &mut BinaryMask, original: &BinaryMask, coin: Coin, rng: &mut SimRng) {
    let mut stable = original.zip_unchecked(cur, |a, b| !(a ^ b));
    stable.clear_padding();
    let flips: Vec<usize> = stable.iter_ones().filter(|_| coin.toss(rng)).collect();
    for s in flips {
        let v = cur.get(s);
        cur.set(s, !v);
    }
}

/// Flips foreground sites at least `min_depth` layers inside the object with
/// probability `rate`. Produces scattered interior holes.
pub fn interior_flips(mask: &BinaryMask, rate: f64, min_depth: usize, seed: u64) -> BinaryMask {
    let coin = Coin::new(rate);
    let mut rng = rng_from_seed(seed);
    let mut core = mask.clone();
    for _ in 0..min_depth {
        core = erode_one(&core);
    }
    let mut out = mask.clone();
    for s in core.iter_ones() {
        if coin.toss(&mut rng) {
            out.set(s, false);
        }
    }
    out
}

/// Per-site mean of `samples` independent draws of [`generate`]. Sample `i`
/// uses seed `mix(params.seed, i)`.
pub fn expected_label_mc(mask: &BinaryMask, params: &MarkovNoiseParams, samples: usize) -> Result<ScalarField> {
    if samples == 0 {
        return Err(Error::EmptyInput("at least one Monte Carlo sample is required"));
    }
    let n = mask.shape().len();
    const CHUNK: usize = 256;
    let chunks = samples.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![0u32; n];
            for i in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let p = MarkovNoiseParams {
                    seed: mix(params.seed, i as u64),
                    ..*params
                };
                for s in generate(mask, &p).iter_ones() {
                    counts[s] += 1;
                }
            }
            counts
        })
        .reduce(
            || vec![0u32; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let inv = 1.0 / samples as f64;
    Ok(ScalarField::from_fn(mask.shape(), |s| (counts[s] as f64 * inv) as f32))
}

/// Expected-state Bayes mask for a single step (`T = 1`, small θ3): the
/// background layer turns foreground iff `θ1θ2 ≥ 0.5`, the foreground layer
/// turns background iff `1 + θ1θ2 − θ2 < 0.5`, otherwise nothing moves. The
/// two conditions never hold together.
pub fn bayes_mask_t1(mask: &BinaryMask, expansion: f64, marching: f64) -> BinaryMask {
    match t1_regime(expansion, marching) {
        T1Regime::Dilate => dilate_one(mask),
        T1Regime::Erode => erode_one(mask),
        T1Regime::Identity => mask.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum T1Regime {
    Dilate,
    Erode,
    Identity,
}

pub fn t1_regime(expansion: f64, marching: f64) -> T1Regime {
    let grow = expansion * marching;
    if grow >= 0.5 {
        T1Regime::Dilate
    } else if 1.0 + grow - marching < 0.5 {
        T1Regime::Erode
    } else {
        T1Regime::Identity
    }
}

/// The direction and size drawn by [`dilate_erode_noise`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DilateErodeDraw {
    pub dilate: bool,
    pub pixels: usize,
}

pub fn draw_dilate_erode(max_pixels: usize, seed: u64) -> Result<DilateErodeDraw> {
    if max_pixels == 0 {
        return Err(Error::InvalidParameter {
            name: "max_pixels",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    let mut rng = rng_from_seed(seed);
    let dilate = Coin::new(0.5).toss(&mut rng);
    let pixels = rng.random_range(1..=max_pixels);
    Ok(DilateErodeDraw { dilate, pixels })
}

/// Mixed dilation/erosion noise: a uniformly chosen direction applied a
/// uniform number of times in `1..=max_pixels`. Erosion stops once the
/// foreground is gone.
pub fn dilate_erode_noise(mask: &BinaryMask, max_pixels: usize, seed: u64) -> Result<BinaryMask> {
    let draw = draw_dilate_erode(max_pixels, seed)?;
    Ok(apply_dilate_erode(mask, draw))
}

pub fn apply_dilate_erode(mask: &BinaryMask, draw: DilateErodeDraw) -> BinaryMask {
    let mut out = mask.clone();
    for _ in 0..draw.pixels {
        if draw.dilate {
            out = dilate_one(&out);
        } else {
            if out.is_empty() {
                break;
            }
            out = erode_one(&out);
        }
    }
    out
}

/// A noise family applied to clean training labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseModel {
    Markov(MarkovNoiseParams),
    DilateErode { max_pixels: usize },
}

impl NoiseModel {
    /// Applies the model with an explicit seed (the seed stored in Markov
    /// parameters is ignored).
    pub fn apply(&self, mask: &BinaryMask, seed: u64) -> Result<BinaryMask> {
        match self {
            NoiseModel::Markov(p) => Ok(generate(mask, &p.with_seed(seed))),
            NoiseModel::DilateErode { max_pixels } => dilate_erode_noise(mask, *max_pixels, seed),
        }
    }
}
