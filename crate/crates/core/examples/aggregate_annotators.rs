//! Several noisy annotators of one object, merged by vote or union.

use spatial_correction::grid::{aggregate, dice, AggregateRule, BinaryMask, GridShape};
use spatial_correction::noise::{generate, MarkovNoiseParams};

fn main() -> spatial_correction::Result<()> {
    let shape = GridShape::plane(48, 48);
    let truth = BinaryMask::from_fn(shape, |s| {
        let (_, y, x) = shape.coords(s);
        ((y as f64 - 24.0) / 14.0).powi(2) + ((x as f64 - 22.0) / 9.0).powi(2) <= 1.0
    });
    // annotators disagree on whether to trace inside or outside the edge
    let annotators: Vec<BinaryMask> = (0..5)
        .map(|i| {
            let expansion = if i % 2 == 0 { 0.8 } else { 0.2 };
            generate(&truth, &MarkovNoiseParams::new(4, expansion, 0.5, 0.0).with_seed(i))
        })
        .collect();
    for (i, a) in annotators.iter().enumerate() {
        println!("annotator {i}: dice {:.4}", dice(a, &truth)?);
    }
    for rule in [AggregateRule::Majority, AggregateRule::Union] {
        let merged = aggregate(&annotators, rule)?;
        println!("{rule:?}: dice {:.4}", dice(&merged, &truth)?);
    }
    Ok(())
}
