use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::pipeline::{noisy_labels, prepare, sc_arm, train_arm, PipelineConfig};
use crate::noise::NoiseModel;
use crate::rng::mix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Number of Markov steps `T` at fixed θ1, θ2, θ3.
    NoiseLevel,
    /// Number of clean validation images.
    ValSize,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::NoiseLevel => "noise_level",
            SweepKind::ValSize => "val_size",
        }
    }

    pub fn default_grid(self) -> Vec<usize> {
        match self {
            SweepKind::NoiseLevel => vec![4, 8, 12, 16],
            SweepKind::ValSize => vec![1, 2, 4, 8, 16, 24],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kind: String,
    pub setting: usize,
    pub arm: String,
    pub test_dsc: f64,
    pub train_label_dsc: f64,
}

/// One row per setting per arm, in grid order then clean/noisy/sc.
///
/// The synthetic split is shared by every setting. For the validation-size
/// sweep the base config's `val_count` is raised to the largest setting and
/// each setting uses a prefix of the validation images; the clean and noisy
/// arms do not depend on the setting and are trained once.
pub fn sweep(kind: SweepKind, grid: &[usize], base: &PipelineConfig) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("sweep grid"));
    }
    let mut cfg = base.clone();
    if kind == SweepKind::ValSize {
        cfg.val_count = *grid.iter().max().unwrap();
        if grid.contains(&0) {
            return Err(Error::InvalidParameter {
                name: "val_size",
                value: 0.0,
                reason: "settings must be >= 1",
            });
        }
    }
    let prep = prepare(&cfg)?;
    let clean = train_arm(&prep, &prep.train_truth, &cfg.model, mix(cfg.seed, 10))?;
    let mut rows = Vec::with_capacity(3 * grid.len());
    let mut push = |setting, arm: &str, test_dsc, train_label_dsc| {
        rows.push(SweepRow {
            kind: kind.name().to_string(),
            setting,
            arm: arm.to_string(),
            test_dsc,
            train_label_dsc,
        })
    };
    let shared_noisy = match kind {
        SweepKind::ValSize => {
            let noisy = noisy_labels(&prep, &cfg.noise, mix(cfg.seed, 1))?;
            let dsc = train_arm(&prep, &noisy, &cfg.model, mix(cfg.seed, 11))?;
            Some((noisy, dsc))
        }
        SweepKind::NoiseLevel => None,
    };
    for &setting in grid {
        let (noisy, noisy_dsc, run_cfg, val_take) = match (&shared_noisy, kind) {
            (Some((noisy, dsc)), _) => (noisy.clone(), *dsc, cfg.clone(), setting),
            (None, _) => {
                let NoiseModel::Markov(p) = cfg.noise else {
                    return Err(Error::InvalidParameter {
                        name: "noise",
                        value: 0.0,
                        reason: "the noise-level sweep needs the Markov noise model",
                    });
                };
                let run_cfg = PipelineConfig {
                    noise: NoiseModel::Markov(p.with_steps(setting)),
                    ..cfg.clone()
                };
                let noisy = noisy_labels(&prep, &run_cfg.noise, mix(cfg.seed, 1))?;
                let dsc = train_arm(&prep, &noisy, &cfg.model, mix(cfg.seed, 11))?;
                (noisy, dsc, run_cfg, prep.val_images.len())
            }
        };
        let noisy_label = crate::harness::pipeline::mean_dice(&noisy, &prep.train_truth)?;
        let (sc_dsc, out) = sc_arm(&prep, &noisy, &run_cfg, val_take)?;
        let corrected = crate::harness::pipeline::mean_dice(&out.labels, &prep.train_truth)?;
        push(setting, "clean", clean, 1.0);
        push(setting, "noisy", noisy_dsc, noisy_label);
        push(setting, "sc", sc_dsc, corrected);
    }
    Ok(rows)
}
