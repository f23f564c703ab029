use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, ScalarField};
use crate::noise::{bayes_mask_t1, MarkovNoiseParams};
use crate::rng::{mix, rng_from_seed, Coin};
use crate::sdf::{signed_distance, SignedDistanceField};

/// Error budget of the perturbed oracle: each image's prediction is offset by
/// `±eps1` with probability `eps0 / eps1` and left exact otherwise, so the
/// sup-error never exceeds `eps1` and averages `eps0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleErrorSpec {
    pub eps0: f64,
    pub eps1: f64,
    pub seed: u64,
}

impl OracleErrorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 >= 0.0 && self.eps0 <= self.eps1 && self.eps1.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "eps0",
                value: self.eps0,
                reason: "need 0 <= eps0 <= eps1 < inf",
            });
        }
        Ok(())
    }

    /// Offset for image `index`. Two draws per image from a child stream:
    /// the Bernoulli coin, then the sign.
    pub fn offset(&self, index: u64) -> f64 {
        let p = if self.eps1 > 0.0 { self.eps0 / self.eps1 } else { 0.0 };
        let mut rng = rng_from_seed(mix(self.seed, index));
        let hit = Coin::new(p).toss(&mut rng);
        let negative = Coin::new(0.5).toss(&mut rng);
        match (hit, negative) {
            (false, _) => 0.0,
            (true, false) => self.eps1,
            (true, true) => -self.eps1,
        }
    }
}

/// SDF predictor `φ̂ = φ̃ + a` where `φ̃` is the SDF of the one-step Bayes
/// mask of each clean mask.
#[derive(Debug, Clone)]
pub struct PerturbedOracle {
    pub bayes: Vec<SignedDistanceField>,
    pub offsets: Vec<f64>,
}

impl PerturbedOracle {
    pub fn len(&self) -> usize {
        self.bayes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bayes.is_empty()
    }

    pub fn predicted(&self, index: usize) -> ScalarField {
        self.bayes[index].offset(self.offsets[index] as f32)
    }

    /// Logits with the positive-inside convention, `−φ̂`.
    pub fn logits(&self, index: usize) -> ScalarField {
        self.predicted(index).map(|v| -v)
    }

    pub fn sup_error(&self, index: usize) -> f64 {
        self.offsets[index].abs()
    }
}

/// Only θ1 and θ2 of `noise` matter: the Bayes mask is the one-step one.
pub fn perturbed_oracle(
    clean: &[BinaryMask],
    noise: &MarkovNoiseParams,
    err: &OracleErrorSpec,
) -> Result<PerturbedOracle> {
    err.validate()?;
    let bayes = clean
        .iter()
        .map(|m| signed_distance(&bayes_mask_t1(m, noise.expansion, noise.marching)))
        .collect::<Result<Vec<_>>>()?;
    let offsets = (0..clean.len() as u64).map(|i| err.offset(i)).collect();
    Ok(PerturbedOracle { bayes, offsets })
}
