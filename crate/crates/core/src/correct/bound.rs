use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs of the clean-validation sample-size bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationBoundInputs {
    /// Mean sup-error of the trained predictor against the Bayes SDF.
    pub eps0: f64,
    /// Almost-sure sup-error bound.
    pub eps1: f64,
    /// Target recovery accuracy on top of `eps0`.
    pub eps: f64,
    /// Allowed failure probability.
    pub alpha: f64,
    /// Sites per image `|I|`.
    pub image_size: u64,
}

impl ValidationBoundInputs {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| Err(Error::InvalidParameter { name, value, reason });
        if !(self.eps0 >= 0.0) || !self.eps0.is_finite() {
            return bad("eps0", self.eps0, "must be finite and >= 0");
        }
        if !(self.eps > self.eps0) || !self.eps.is_finite() {
            return bad("eps", self.eps, "must exceed eps0");
        }
        if !(self.eps1 >= self.eps0) || !self.eps1.is_finite() {
            return bad("eps1", self.eps1, "must be >= eps0");
        }
        // alpha above 1 is accepted: the bound then just shrinks toward 0
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return bad("alpha", self.alpha, "must be > 0");
        }
        if self.image_size == 0 {
            return bad("image_size", 0.0, "must be >= 1");
        }
        Ok(())
    }
}

/// `⌈ε1² / (2(ε − ε0)²) · ln(2|I| / α)⌉`, clamped at 0 when the logarithm is
/// not positive.
pub fn required_validation_size(inputs: &ValidationBoundInputs) -> Result<usize> {
    inputs.validate()?;
    let margin = inputs.eps - inputs.eps0;
    let log = (2.0 * inputs.image_size as f64 / inputs.alpha).ln();
    if log <= 0.0 {
        return Ok(0);
    }
    let v = inputs.eps1 * inputs.eps1 / (2.0 * margin * margin) * log;
    Ok(v.ceil() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> ValidationBoundInputs {
        ValidationBoundInputs {
            eps0: 1.0,
            eps1: 20.0,
            eps: 2.0,
            alpha: 0.05,
            image_size: 65536,
        }
    }

    #[test]
    fn worked_example() {
        assert_eq!(required_validation_size(&worked()).unwrap(), 2956);
    }

    #[test]
    fn log_argument_one_gives_zero() {
        let mut i = worked();
        i.alpha = 2.0 * 65536.0;
        assert_eq!(required_validation_size(&i).unwrap(), 0);
    }

    #[test]
    fn doubling_the_margin_quarters_the_raw_bound() {
        let mut a = worked();
        a.eps1 = 2000.0;
        let mut b = a;
        b.eps = 3.0;
        let va = required_validation_size(&a).unwrap() as f64;
        let vb = required_validation_size(&b).unwrap() as f64;
        assert!((va / 4.0 - vb).abs() <= 1.0);
    }

    #[test]
    fn rejects_eps_not_above_eps0() {
        let mut i = worked();
        i.eps = 1.0;
        assert!(required_validation_size(&i).is_err());
    }
}
