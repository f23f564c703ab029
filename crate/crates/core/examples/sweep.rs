//! Noise-level ablation at desk scale, printed as CSV.
//!
//! `cargo run --release --example sweep -- [noise_level|val_size]`

use spatial_correction::correct::CorrectionParams;
use spatial_correction::harness::{sweep, PipelineConfig, SweepKind, SynthSpec};
use spatial_correction::model::TrainConfig;
use spatial_correction::noise::{preset, NoiseModel};

fn main() -> spatial_correction::Result<()> {
    let kind = match std::env::args().nth(1).as_deref() {
        Some("val_size") => SweepKind::ValSize,
        _ => SweepKind::NoiseLevel,
    };
    let base = PipelineConfig {
        synth: SynthSpec::desk(120, 3),
        noise: NoiseModel::Markov(preset("tiny-se")?),
        correction: CorrectionParams::default(),
        model: TrainConfig::default(),
        val_count: 8,
        test_count: 32,
        seed: 3,
    };
    println!("kind,setting,arm,test_dsc,train_label_dsc");
    for r in sweep(kind, &kind.default_grid(), &base)? {
        println!(
            "{},{},{},{:.4},{:.4}",
            r.kind, r.setting, r.arm, r.test_dsc, r.train_label_dsc
        );
    }
    Ok(())
}
