use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, ScalarField};
use crate::model::Segmenter;
use crate::noise::box_mean;
use crate::rng::rng_from_seed;

/// Reference trainer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Initial step size; adapted by backtracking during training.
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 weight on the non-bias weights.
    pub l2: f64,
    /// Box-mean radii appended after the raw intensity.
    pub radii: Vec<usize>,
    /// Standard deviation of the initial weights; 0 starts from zero.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1.0,
            epochs: 300,
            l2: 1e-4,
            radii: vec![1, 3],
            init_scale: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| Err(Error::InvalidParameter { name, value, reason });
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate", self.learning_rate, "must be > 0");
        }
        if self.epochs == 0 {
            return bad("epochs", 0.0, "must be >= 1");
        }
        if !(self.l2 >= 0.0) {
            return bad("l2", self.l2, "must be >= 0");
        }
        if !(self.init_scale >= 0.0) {
            return bad("init_scale", self.init_scale, "must be >= 0");
        }
        Ok(())
    }

    /// Weights per pixel: bias, intensity, one per radius.
    pub fn n_features(&self) -> usize {
        2 + self.radii.len()
    }
}

/// Raw (unstandardized) feature rows of one image, bias column excluded.
fn raw_features(image: &ScalarField, radii: &[usize]) -> Vec<f64> {
    let n = image.shape().len();
    let k = 1 + radii.len();
    let mut out = vec![0.0; n * k];
    for (s, v) in image.values().iter().enumerate() {
        out[s * k] = *v as f64;
    }
    let intensity: Vec<f64> = image.values().iter().map(|&v| v as f64).collect();
    for (j, &r) in radii.iter().enumerate() {
        let m = box_mean(&intensity, image.shape(), r);
        for s in 0..n {
            out[s * k + 1 + j] = m[s];
        }
    }
    out
}

/// Mean cross-entropy plus `l2/2·|w[1..]|²` over a fixed design matrix.
/// Public so the analytic gradient can be checked against finite differences.
#[derive(Debug, Clone)]
pub struct LogisticObjective {
    /// Row-major, `k` columns, column 0 is the constant 1.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub k: usize,
    pub l2: f64,
}

const CHUNK: usize = 4096;

impl LogisticObjective {
    pub fn rows(&self) -> usize {
        self.y.len()
    }

    pub fn loss(&self, w: &[f64]) -> f64 {
        self.loss_and_gradient(w).0
    }

    pub fn loss_and_gradient(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let k = self.k;
        // chunk partials are summed in chunk order so the result does not
        // depend on the worker count
        let partials: Vec<(f64, Vec<f64>)> = self
            .x
            .par_chunks(CHUNK * k)
            .zip(self.y.par_chunks(CHUNK))
            .map(|(xs, ys)| {
                let mut loss = 0.0;
                let mut g = vec![0.0; k];
                for (row, &y) in xs.chunks_exact(k).zip(ys) {
                    let z: f64 = row.iter().zip(w).map(|(a, b)| a * b).sum();
                    loss += softplus(z) - y * z;
                    let r = sigmoid(z) - y;
                    for (gj, xj) in g.iter_mut().zip(row) {
                        *gj += r * xj;
                    }
                }
                (loss, g)
            })
            .collect();
        let n = self.rows() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; k];
        for (l, g) in partials {
            loss += l;
            for (a, b) in grad.iter_mut().zip(g) {
                *a += b;
            }
        }
        loss /= n;
        for a in grad.iter_mut() {
            *a /= n;
        }
        for j in 1..k {
            loss += 0.5 * self.l2 * w[j] * w[j];
            grad[j] += self.l2 * w[j];
        }
        (loss, grad)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-pixel logistic classifier on intensity and box-mean features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub radii: Vec<usize>,
    /// Feature means and deviations used for standardization (no bias entry).
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub weights: Vec<f64>,
    /// Training loss after each accepted epoch, starting with the initial loss.
    pub loss_history: Vec<f64>,
}

impl LogisticModel {
    pub fn predict_logits(&self, image: &ScalarField) -> ScalarField {
        let k = 1 + self.radii.len();
        let raw = raw_features(image, &self.radii);
        let values = raw
            .chunks_exact(k)
            .map(|row| {
                let mut z = self.weights[0];
                for (j, &x) in row.iter().enumerate() {
                    z += self.weights[j + 1] * (x - self.mean[j]) / self.std[j];
                }
                z as f32
            })
            .collect();
        ScalarField::new(image.shape(), values).expect("finite weights give finite logits")
    }
}

/// Builds the standardized design matrix for `images` and `labels`.
pub fn design_matrix(
    images: &[ScalarField],
    labels: &[BinaryMask],
    radii: &[usize],
    l2: f64,
) -> Result<(LogisticObjective, Vec<f64>, Vec<f64>)> {
    if images.is_empty() {
        return Err(Error::EmptyInput("no training images"));
    }
    if images.len() != labels.len() {
        return Err(Error::InvalidParameter {
            name: "labels",
            value: labels.len() as f64,
            reason: "label count differs from image count",
        });
    }
    for (im, lb) in images.iter().zip(labels) {
        im.shape().check_same(&lb.shape())?;
    }
    let kr = 1 + radii.len();
    let raws: Vec<Vec<f64>> = images.par_iter().map(|im| raw_features(im, radii)).collect();
    let rows: usize = raws.iter().map(|r| r.len() / kr).sum();
    let mut mean = vec![0.0; kr];
    for r in &raws {
        for row in r.chunks_exact(kr) {
            for j in 0..kr {
                mean[j] += row[j];
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= rows as f64);
    let mut var = vec![0.0; kr];
    for r in &raws {
        for row in r.chunks_exact(kr) {
            for j in 0..kr {
                var[j] += (row[j] - mean[j]).powi(2);
            }
        }
    }
    // constant features keep unit scale instead of dividing by zero
    let std: Vec<f64> = var
        .iter()
        .map(|v| {
            let s = (v / rows as f64).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let k = kr + 1;
    let mut x = Vec::with_capacity(rows * k);
    let mut y = Vec::with_capacity(rows);
    for (r, lb) in raws.iter().zip(labels) {
        for (s, row) in r.chunks_exact(kr).enumerate() {
            x.push(1.0);
            for j in 0..kr {
                x.push((row[j] - mean[j]) / std[j]);
            }
            y.push(if lb.get(s) { 1.0 } else { 0.0 });
        }
    }
    Ok((LogisticObjective { x, y, k, l2 }, mean, std))
}

/// Full-batch gradient descent with backtracking: a step is accepted only if
/// the loss does not increase, otherwise the step size halves.
pub fn fit_logistic(images: &[ScalarField], labels: &[BinaryMask], cfg: &TrainConfig) -> Result<LogisticModel> {
    cfg.validate()?;
    let (obj, mean, std) = design_matrix(images, labels, &cfg.radii, cfg.l2)?;
    let mut w = vec![0.0; obj.k];
    if cfg.init_scale > 0.0 {
        let normal = Normal::new(0.0, cfg.init_scale).expect("positive scale");
        let mut rng = rng_from_seed(cfg.seed);
        w.iter_mut().for_each(|v| *v = normal.sample(&mut rng));
    }
    let mut lr = cfg.learning_rate;
    let (mut loss, mut grad) = obj.loss_and_gradient(&w);
    let mut history = vec![loss];
    'epochs: for epoch in 0..cfg.epochs {
        if !loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss,
                learning_rate: lr,
            });
        }
        for _ in 0..60 {
            let trial: Vec<f64> = w.iter().zip(&grad).map(|(a, g)| a - lr * g).collect();
            let (l, g) = obj.loss_and_gradient(&trial);
            if l.is_finite() && l <= loss {
                let gain = loss - l;
                w = trial;
                loss = l;
                grad = g;
                history.push(loss);
                lr *= 1.2;
                if gain <= 1e-12 * loss.max(1e-300) {
                    break 'epochs;
                }
                continue 'epochs;
            }
            lr *= 0.5;
        }
        // no descent step exists at machine precision
        break;
    }
    Ok(LogisticModel {
        radii: cfg.radii.clone(),
        mean,
        std,
        weights: w,
        loss_history: history,
    })
}

/// [`Segmenter`] wrapper around the reference trainer.
#[derive(Debug, Clone)]
pub struct LogisticSegmenter {
    pub config: TrainConfig,
    pub model: Option<LogisticModel>,
}

impl LogisticSegmenter {
    pub fn new(config: TrainConfig) -> Self {
        LogisticSegmenter { config, model: None }
    }
}

impl Segmenter for LogisticSegmenter {
    fn fit(&mut self, images: &[ScalarField], labels: &[BinaryMask], seed: u64) -> Result<()> {
        let cfg = TrainConfig {
            seed,
            ..self.config.clone()
        };
        self.model = Some(fit_logistic(images, labels, &cfg)?);
        Ok(())
    }

    fn predict_logits(&self, image: &ScalarField) -> Result<ScalarField> {
        self.model
            .as_ref()
            .map(|m| m.predict_logits(image))
            .ok_or_else(|| Error::Trainer("predict called before fit".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{threshold, GridShape, Threshold};

    fn square(n: usize, lo: usize, hi: usize) -> BinaryMask {
        let shape = GridShape::plane(n, n);
        BinaryMask::from_fn(shape, |s| {
            let (_, y, x) = shape.coords(s);
            (lo..hi).contains(&y) && (lo..hi).contains(&x)
        })
    }

    fn image_of(m: &BinaryMask) -> ScalarField {
        ScalarField::from_fn(m.shape(), |s| m.get(s) as u8 as f32)
    }

    #[test]
    fn separable_data_is_fit_exactly() {
        let masks = [square(16, 3, 9), square(16, 6, 14)];
        let images: Vec<_> = masks.iter().map(image_of).collect();
        let model = fit_logistic(&images, &masks, &TrainConfig::default()).unwrap();
        for (im, m) in images.iter().zip(&masks) {
            assert_eq!(&threshold(&model.predict_logits(im), Threshold::AtLeast(0.0)), m);
        }
    }

    #[test]
    fn loss_never_increases() {
        let masks = [square(12, 2, 7)];
        let images: Vec<_> = masks.iter().map(image_of).collect();
        let cfg = TrainConfig {
            init_scale: 0.5,
            seed: 3,
            learning_rate: 50.0,
            ..TrainConfig::default()
        };
        let model = fit_logistic(&images, &masks, &cfg).unwrap();
        for w in model.loss_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn complement_labels_flip_the_sign_pattern() {
        let shape = GridShape::plane(16, 16);
        let masks = [square(16, 4, 11)];
        let images: Vec<_> = vec![ScalarField::from_fn(shape, |s| {
            masks[0].get(s) as u8 as f32 * 0.6 + ((s * 37) % 11) as f32 * 0.03
        })];
        let flipped = [masks[0].complement()];
        let cfg = TrainConfig::default();
        let a = fit_logistic(&images, &masks, &cfg).unwrap().predict_logits(&images[0]);
        let b = fit_logistic(&images, &flipped, &cfg)
            .unwrap()
            .predict_logits(&images[0]);
        for s in 0..shape.len() {
            if a.get(s).abs() > 1e-3 {
                assert_eq!(a.get(s) > 0.0, b.get(s) < 0.0, "site {s}");
            }
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let masks = [square(12, 2, 7), square(12, 4, 10)];
        let images: Vec<_> = masks.iter().map(image_of).collect();
        let cfg = TrainConfig {
            init_scale: 0.1,
            seed: 9,
            ..TrainConfig::default()
        };
        assert_eq!(
            fit_logistic(&images, &masks, &cfg).unwrap(),
            fit_logistic(&images, &masks, &cfg).unwrap()
        );
    }
}
