//! Clean ceiling, noisy baseline and spatial correction on synthetic disks.
//!
//! `cargo run --release --example pipeline -- [seed]`

use spatial_correction::correct::CorrectionParams;
use spatial_correction::harness::{run_pipeline, PipelineConfig, SynthSpec};
use spatial_correction::model::TrainConfig;
use spatial_correction::noise::{preset, NoiseModel};

fn main() -> spatial_correction::Result<()> {
    env_logger::init();
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = PipelineConfig {
        synth: SynthSpec::desk(200, seed),
        noise: NoiseModel::Markov(preset("tiny-se")?),
        correction: CorrectionParams::default(),
        model: TrainConfig::default(),
        val_count: 8,
        test_count: 48,
        seed,
    };
    let r = run_pipeline(&cfg)?;
    for row in r.arm_rows() {
        println!(
            "{:>6}  test dsc {:.4}  train-label dsc {:.4}",
            row.arm, row.test_dsc, row.train_label_dsc
        );
    }
    for it in &r.iterations {
        println!(
            "iter {}  delta_hat {:+.3}  lambda {:?}  label dsc {:?}  val dsc {:.4}",
            it.iter, it.delta_hat, it.lambda_mean, it.train_label_dsc_vs_truth, it.val_dsc
        );
    }
    println!("{:.1}s", r.wall_time_secs);
    Ok(())
}
