//! Draws Markov boundary noise on a disk and prints how far the label moved.
//!
//! `cargo run --release --example markov_noise -- [preset] [seed]`

use spatial_correction::grid::{dice, BinaryMask, GridShape};
use spatial_correction::noise::{generate, preset, presets};
use spatial_correction::sdf::signed_distance;

fn main() -> spatial_correction::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "tiny-se".into());
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let shape = GridShape::plane(64, 64);
    let clean = BinaryMask::from_fn(shape, |s| {
        let (_, y, x) = shape.coords(s);
        (y as f64 - 31.5).powi(2) + (x as f64 - 31.5).powi(2) <= 16.0 * 16.0
    });
    let phi = signed_distance(&clean)?;
    let params = preset(&name)?.with_seed(seed);
    let noisy = generate(&clean, &params);

    let changed: Vec<usize> = noisy.symmetric_difference(&clean)?.iter_ones().collect();
    let reach = changed.iter().map(|&s| phi.get(s).abs()).fold(0.0f32, f32::max);
    println!("preset {name}: {params:?}");
    println!(
        "area {} -> {}, {} sites changed, farthest |phi| {reach}, dice {:.4}",
        clean.count(),
        noisy.count(),
        changed.len(),
        dice(&clean, &noisy)?
    );
    println!("available presets:");
    for p in presets() {
        println!("  {:<18} {}", p.name, p.note);
    }
    Ok(())
}
