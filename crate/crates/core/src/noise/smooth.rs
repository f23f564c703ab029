use crate::grid::{BinaryMask, GridShape};

/// Separable Gaussian blur of the 0/1 indicator, truncated at 3σ and
/// renormalized at the grid border, re-thresholded at 0.5.
pub fn gaussian_smooth_mask(mask: &BinaryMask, sigma: f64) -> BinaryMask {
    if sigma <= 0.0 {
        return mask.clone();
    }
    let shape = mask.shape();
    let mut values: Vec<f64> = (0..shape.len()).map(|s| if mask.get(s) { 1.0 } else { 0.0 }).collect();
    values = blur_values(&values, shape, &gaussian_kernel(sigma));
    BinaryMask::from_fn(shape, |s| values[s] >= 0.5)
}

/// Mean over the `(2r+1)`-wide box around each site, averaging only the
/// sites inside the grid.
pub fn box_mean(values: &[f64], shape: GridShape, radius: usize) -> Vec<f64> {
    blur_values(values, shape, &vec![1.0; 2 * radius + 1])
}

/// Applies the same odd-length kernel along every axis, renormalizing by the
/// kernel mass that falls inside the grid.
pub fn blur_values(values: &[f64], shape: GridShape, kernel: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    for axis in 0..3 {
        if axis == 0 && !shape.is_volume() {
            continue;
        }
        out = blur_axis(&out, shape, axis, kernel);
    }
    out
}

/// Unnormalized Gaussian taps truncated at 3σ.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as usize;
    (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect()
}

/// Convolves along `axis` (0 = depth, 1 = height, 2 = width).
pub(crate) fn blur_axis(values: &[f64], shape: GridShape, axis: usize, kernel: &[f64]) -> Vec<f64> {
    let [d, h, w] = [shape.depth(), shape.height(), shape.width()];
    let (len, stride) = match axis {
        0 => (d, w * h),
        1 => (h, w),
        _ => (w, 1),
    };
    let radius = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; values.len()];
    for (site, o) in out.iter_mut().enumerate() {
        let (z, y, x) = shape.coords(site);
        let pos = [z, y, x][axis] as isize;
        let base = site as isize - pos * stride as isize;
        let mut acc = 0.0;
        let mut mass = 0.0;
        for (k, &wk) in kernel.iter().enumerate() {
            let p = pos + k as isize - radius;
            if p >= 0 && (p as usize) < len {
                acc += wk * values[(base + p * stride as isize) as usize];
                mass += wk;
            }
        }
        *o = acc / mass;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothing_removes_isolated_pixels_and_keeps_blobs() {
        let shape = GridShape::plane(32, 32);
        let mut m = BinaryMask::from_fn(shape, |s| {
            let (_, y, x) = shape.coords(s);
            (8..24).contains(&y) && (8..24).contains(&x)
        });
        m.set(shape.index(0, 2, 2), true);
        let out = gaussian_smooth_mask(&m, 1.5);
        assert!(!out.get(shape.index(0, 2, 2)));
        assert!(out.get(shape.index(0, 16, 16)));
        assert!(!out.get(shape.index(0, 30, 30)));
    }

    #[test]
    fn box_mean_renormalizes_at_borders() {
        let shape = GridShape::plane(1, 4);
        let out = box_mean(&[0.0, 4.0, 8.0, 0.0], shape, 1);
        assert_eq!(out, vec![2.0, 4.0, 4.0, 4.0]);
    }

    #[test]
    fn zero_sigma_is_identity() {
        let shape = GridShape::plane(5, 5);
        let m = BinaryMask::from_fn(shape, |s| s % 3 == 0);
        assert_eq!(gaussian_smooth_mask(&m, 0.0), m);
    }

    #[test]
    fn constant_field_is_preserved_at_borders() {
        let shape = GridShape::volume(4, 5, 6);
        let full = BinaryMask::full(shape);
        assert_eq!(gaussian_smooth_mask(&full, 2.0), full);
    }
}
