//! Prints the signed distance field of a small cross, row by row.

use spatial_correction::grid::{BinaryMask, GridShape};
use spatial_correction::sdf::signed_distance;

fn main() -> spatial_correction::Result<()> {
    let shape = GridShape::plane(9, 11);
    let mask = BinaryMask::from_fn(shape, |s| {
        let (_, y, x) = shape.coords(s);
        (3..=5).contains(&y) && (2..=8).contains(&x) || (1..=7).contains(&y) && (4..=6).contains(&x)
    });
    let phi = signed_distance(&mask)?;
    for y in 0..shape.height() {
        let row: Vec<String> = (0..shape.width())
            .map(|x| format!("{:>3}", phi.get(shape.index(0, y, x))))
            .collect();
        println!("{}", row.join(""));
    }
    // negative inside, positive outside, never zero
    assert_eq!(phi.foreground(), mask);
    Ok(())
}
