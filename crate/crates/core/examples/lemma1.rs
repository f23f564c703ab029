//! Monte Carlo check of the one-step Bayes mask in its three regimes.

use spatial_correction::grid::{BinaryMask, GridShape};
use spatial_correction::harness::verify_lemma1;
use spatial_correction::noise::t1_regime;

fn main() -> spatial_correction::Result<()> {
    let shape = GridShape::plane(64, 64);
    let disk = BinaryMask::from_fn(shape, |s| {
        let (_, y, x) = shape.coords(s);
        (y as f64 - 31.5).powi(2) + (x as f64 - 31.5).powi(2) <= 256.0
    });
    for (t1, t2) in [(0.7, 0.9), (0.2, 0.8), (0.5, 0.5)] {
        let r = verify_lemma1(&disk, t1, t2, 0.0, 100_000, 1)?;
        println!(
            "theta=({t1}, {t2}) {:?}: {} decided sites, agreement {:.4}, {}",
            t1_regime(t1, t2),
            r.get("decided_sites"),
            r.get("decided_agreement"),
            if r.passed { "pass" } else { "FAIL" }
        );
    }
    Ok(())
}
