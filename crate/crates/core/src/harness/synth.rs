use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, GridShape, ScalarField};
use crate::noise::{blur_values, gaussian_kernel};
use crate::rng::{mix, rng_from_seed, SimRng};
use crate::sdf::signed_distance;

/// Minimum clearance between any object and the grid edge.
pub const MARGIN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShapeFamily {
    Disks,
    /// Two or three overlapping rotated ellipses.
    EllipseUnions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoleSpec {
    pub count: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub count: usize,
    pub height: usize,
    pub width: usize,
    pub family: ShapeFamily,
    pub radius_min: f64,
    pub radius_max: f64,
    /// Intensity of the foreground before blur and noise; background is 0.
    pub contrast: f64,
    pub noise_sigma: f64,
    pub blur_sigma: f64,
    pub holes: Option<HoleSpec>,
    pub seed: u64,
}

impl SynthSpec {
    /// 64×64 disks with moderate blur and pixel noise.
    pub fn desk(count: usize, seed: u64) -> Self {
        SynthSpec {
            count,
            height: 64,
            width: 64,
            family: ShapeFamily::Disks,
            radius_min: 6.0,
            radius_max: 14.0,
            contrast: 1.0,
            noise_sigma: 0.25,
            blur_sigma: 1.0,
            holes: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| Err(Error::InvalidParameter { name, value, reason });
        if !(self.contrast > 0.0) {
            return bad("contrast", self.contrast, "must be > 0");
        }
        if !(self.radius_min >= 1.0 && self.radius_min <= self.radius_max) {
            return bad("radius_min", self.radius_min, "need 1 <= radius_min <= radius_max");
        }
        let span = 2.0 * (self.radius_max + MARGIN as f64) + 1.0;
        if span > self.height.min(self.width) as f64 {
            return bad("radius_max", self.radius_max, "shape plus margin does not fit the grid");
        }
        if !(self.noise_sigma >= 0.0) || !(self.blur_sigma >= 0.0) {
            return bad("noise_sigma", self.noise_sigma, "sigmas must be >= 0");
        }
        if let Some(h) = self.holes {
            if !(h.radius >= 0.5) {
                return bad("hole radius", h.radius, "must be >= 0.5");
            }
        }
        Ok(())
    }

    fn shape(&self) -> GridShape {
        GridShape::plane(self.height, self.width)
    }
}

/// Generated dataset. With holes requested, `masks` stay hole-free (they are
/// the truth the images show) and `holed` carries the same masks with
/// interior background holes punched in.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub images: Vec<ScalarField>,
    pub masks: Vec<BinaryMask>,
    pub holed: Option<Vec<BinaryMask>>,
}

fn ellipse(shape: GridShape, cy: f64, cx: f64, a: f64, b: f64, angle: f64) -> BinaryMask {
    let (s, c) = angle.sin_cos();
    BinaryMask::from_fn(shape, |site| {
        let (_, y, x) = shape.coords(site);
        let (dy, dx) = (y as f64 - cy, x as f64 - cx);
        let u = (dx * c + dy * s) / a;
        let v = (-dx * s + dy * c) / b;
        u * u + v * v <= 1.0
    })
}

fn draw_shape(spec: &SynthSpec, rng: &mut SimRng) -> BinaryMask {
    let shape = spec.shape();
    let m = MARGIN as f64;
    let center = |rng: &mut SimRng, r: f64| {
        let cy = rng.random_range(m + r..=spec.height as f64 - 1.0 - m - r);
        let cx = rng.random_range(m + r..=spec.width as f64 - 1.0 - m - r);
        (cy, cx)
    };
    match spec.family {
        ShapeFamily::Disks => {
            let r = rng.random_range(spec.radius_min..=spec.radius_max);
            let (cy, cx) = center(rng, r);
            ellipse(shape, cy, cx, r, r, 0.0)
        }
        ShapeFamily::EllipseUnions => {
            let parts = rng.random_range(2..=3);
            let r_outer = spec.radius_max;
            let (cy, cx) = center(rng, r_outer);
            let mut out = BinaryMask::new(shape);
            for _ in 0..parts {
                let a = rng.random_range(spec.radius_min..=spec.radius_max);
                let b = rng.random_range(spec.radius_min..=a);
                // keep every part inside the outer disk so the margin holds
                let slack = (r_outer - a).max(0.0);
                let oy = rng.random_range(-slack..=slack) * std::f64::consts::FRAC_1_SQRT_2;
                let ox = rng.random_range(-slack..=slack) * std::f64::consts::FRAC_1_SQRT_2;
                let angle = rng.random_range(0.0..std::f64::consts::PI);
                out = out
                    .union(&ellipse(shape, cy + oy, cx + ox, a, b, angle))
                    .expect("same shape");
            }
            out
        }
    }
}

/// Punches `holes.count` disks into the deep interior, or `None` when the
/// mask is too thin to hold them.
fn punch_holes(mask: &BinaryMask, holes: HoleSpec, rng: &mut SimRng) -> Option<BinaryMask> {
    let shape = mask.shape();
    let phi = signed_distance(mask).ok()?;
    // the hole plus a one-site ring must stay clear of the interface
    let depth = (holes.radius * std::f64::consts::SQRT_2).ceil() + 3.0;
    let mut eligible: Vec<usize> = (0..shape.len()).filter(|&s| (phi.get(s) as f64) <= -depth).collect();
    let mut out = mask.clone();
    for _ in 0..holes.count {
        if eligible.is_empty() {
            return None;
        }
        let c = eligible[rng.random_range(0..eligible.len())];
        let (_, cy, cx) = shape.coords(c);
        let hole = ellipse(shape, cy as f64, cx as f64, holes.radius, holes.radius, 0.0);
        out = out.difference(&hole).expect("same shape");
        let keep_out = 2.0 * holes.radius + 3.0;
        eligible.retain(|&s| {
            let (_, y, x) = shape.coords(s);
            ((y as f64 - cy as f64).powi(2) + (x as f64 - cx as f64).powi(2)).sqrt() > keep_out
        });
    }
    Some(out)
}

fn render(spec: &SynthSpec, mask: &BinaryMask, rng: &mut SimRng) -> ScalarField {
    let shape = mask.shape();
    let mut values: Vec<f64> = (0..shape.len()).map(|s| mask.get(s) as u8 as f64).collect();
    if spec.blur_sigma > 0.0 {
        values = blur_values(&values, shape, &gaussian_kernel(spec.blur_sigma));
    }
    let noise = (spec.noise_sigma > 0.0).then(|| Normal::new(0.0, spec.noise_sigma).expect("positive sigma"));
    ScalarField::from_fn(shape, |s| {
        let n = noise.map_or(0.0, |d| d.sample(rng));
        (spec.contrast * values[s] + n) as f32
    })
}

/// One image per child seed `mix(seed, i)`: shape draws first, then holes,
/// then pixel noise in row-major order.
pub fn synth_dataset(spec: &SynthSpec) -> Result<SynthData> {
    generate(spec, true)
}

/// The masks of [`synth_dataset`] without rendering images (`images` is
/// left empty).
pub fn synth_masks(spec: &SynthSpec) -> Result<SynthData> {
    generate(spec, false)
}

fn generate(spec: &SynthSpec, with_images: bool) -> Result<SynthData> {
    spec.validate()?;
    let items: Vec<(Option<ScalarField>, BinaryMask, Option<BinaryMask>)> = (0..spec.count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(mix(spec.seed, i as u64));
            let (mask, holed) = loop {
                let mask = draw_shape(spec, &mut rng);
                match spec.holes {
                    None => break (mask, None),
                    Some(h) => {
                        if let Some(holed) = punch_holes(&mask, h, &mut rng) {
                            break (mask, Some(holed));
                        }
                    }
                }
            };
            let image = with_images.then(|| render(spec, &mask, &mut rng));
            (image, mask, holed)
        })
        .collect();
    let mut data = SynthData {
        images: Vec::with_capacity(items.len()),
        masks: Vec::with_capacity(items.len()),
        holed: spec.holes.map(|_| Vec::with_capacity(items.len())),
    };
    for (im, m, h) in items {
        data.images.extend(im);
        data.masks.push(m);
        if let (Some(list), Some(h)) = (data.holed.as_mut(), h) {
            list.push(h);
        }
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::boundaries;

    #[test]
    fn clean_render_is_a_scaled_mask() {
        let spec = SynthSpec {
            noise_sigma: 0.0,
            blur_sigma: 0.0,
            contrast: 2.5,
            ..SynthSpec::desk(4, 3)
        };
        let d = synth_dataset(&spec).unwrap();
        for (im, m) in d.images.iter().zip(&d.masks) {
            for s in 0..m.shape().len() {
                assert_eq!(im.get(s), if m.get(s) { 2.5 } else { 0.0 });
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SynthSpec {
            family: ShapeFamily::EllipseUnions,
            ..SynthSpec::desk(6, 11)
        };
        assert_eq!(synth_dataset(&spec).unwrap(), synth_dataset(&spec).unwrap());
        let other = SynthSpec {
            seed: 12,
            ..spec.clone()
        };
        assert_ne!(synth_dataset(&spec).unwrap(), synth_dataset(&other).unwrap());
    }

    #[test]
    fn shapes_respect_the_margin() {
        for family in [ShapeFamily::Disks, ShapeFamily::EllipseUnions] {
            let spec = SynthSpec {
                family,
                ..SynthSpec::desk(20, 5)
            };
            for m in synth_dataset(&spec).unwrap().masks {
                assert!(!m.is_empty());
                for s in m.iter_ones() {
                    let (_, y, x) = m.shape().coords(s);
                    assert!(y >= MARGIN && x >= MARGIN && y < 64 - MARGIN && x < 64 - MARGIN);
                }
            }
        }
    }

    #[test]
    fn holes_are_interior_background() {
        let spec = SynthSpec {
            radius_min: 12.0,
            radius_max: 20.0,
            holes: Some(HoleSpec { count: 2, radius: 2.0 }),
            ..SynthSpec::desk(5, 8)
        };
        let d = synth_dataset(&spec).unwrap();
        for (m, h) in d.masks.iter().zip(d.holed.as_ref().unwrap()) {
            assert!(h.is_subset(m));
            let carved = m.difference(h).unwrap();
            assert!(carved.count() >= 2 * 9);
            // every carved site is enclosed: its background boundary sites
            // all lie inside the carved region or touch it from the foreground
            let b = boundaries(h);
            let outer = boundaries(m).background;
            let inner_bg = b.background.difference(&outer).unwrap();
            assert!(inner_bg.is_subset(&carved));
            assert_eq!(background_components(h), 3);
        }
    }

    fn background_components(m: &BinaryMask) -> usize {
        let shape = m.shape();
        let mut seen = vec![false; shape.len()];
        let mut count = 0;
        for start in 0..shape.len() {
            if m.get(start) || seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(s) = stack.pop() {
                for r in shape.neighbors(s) {
                    if !m.get(r) && !seen[r] {
                        seen[r] = true;
                        stack.push(r);
                    }
                }
            }
        }
        count
    }
}
