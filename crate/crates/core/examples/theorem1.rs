//! Required clean-validation size and its empirical failure rate.
//!
//! The default fixture is small so this finishes in seconds; pass `full`
//! for the 256x256 pool with the worked inputs.

use spatial_correction::correct::{required_validation_size, ValidationBoundInputs};
use spatial_correction::harness::{verify_theorem1_with, Theorem1Fixture, Theorem1Pool};

fn main() -> spatial_correction::Result<()> {
    let full = std::env::args().nth(1).as_deref() == Some("full");
    let fixture = if full {
        Theorem1Fixture::desk(1)
    } else {
        Theorem1Fixture {
            pool: 256,
            held_out: 64,
            size: 48,
            ..Theorem1Fixture::desk(1)
        }
    };
    let inputs = ValidationBoundInputs {
        eps0: if full { 1.0 } else { 0.25 },
        eps1: if full { 20.0 } else { 2.0 },
        eps: 2.0,
        alpha: 0.05,
        image_size: (fixture.size * fixture.size) as u64,
    };
    let v = required_validation_size(&inputs)?;
    println!("V = {v} for {inputs:?}");
    let pool = Theorem1Pool::build(&fixture)?;
    let r = verify_theorem1_with(&pool, &inputs, v, 200, 2)?;
    println!(
        "{} failures in 200 trials, 95% CI [{:.4}, {:.4}], mean error {:.3}: {}",
        r.get("failures"),
        r.get("rate_lower_95"),
        r.get("rate_upper_95"),
        r.get("mean_error"),
        if r.passed { "pass" } else { "FAIL" }
    );
    Ok(())
}
