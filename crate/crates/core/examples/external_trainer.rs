//! The file handshake for out-of-process trainers, with an in-process thread
//! playing the trainer. A real trainer would watch the exchange directory
//! the same way: wait for `round_NNN/REQUEST`, fit on `images/train_*` with
//! `round_NNN/labels/train_*`, write logits for every file in `images/` to
//! `round_NNN/logits/`, then create `round_NNN/DONE`.

use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use spatial_correction::correct::{spatial_correction, CorrectionParams, CorrectionRoute, ScInputs};
use spatial_correction::grid::{dilate_one, threshold, Threshold};
use spatial_correction::harness::{mean_dice, noisy_labels, prepare, PipelineConfig, SynthSpec};
use spatial_correction::io::{read_field_gtf, write_field_gtf};
use spatial_correction::model::{round_dir, ExternalSegmenter, TrainConfig};
use spatial_correction::noise::{MarkovNoiseParams, NoiseModel};
use spatial_correction::sdf::signed_distance;

/// Ignores the labels and over-segments every image by two layers, so its
/// predictions carry a steady dilation bias for the loop to remove. Logits
/// are the negated signed distance of that mask.
fn trainer(root: &Path, stop: &AtomicBool) {
    let mut round = 0;
    while !stop.load(Ordering::SeqCst) {
        let rd = round_dir(root, round);
        if !rd.join("REQUEST").exists() {
            thread::sleep(Duration::from_millis(10));
            continue;
        }
        for entry in fs::read_dir(root.join("images")).expect("images written before REQUEST") {
            let path = entry.expect("readable entry").path();
            let image = read_field_gtf(&path).expect("valid image");
            let grown = dilate_one(&dilate_one(&threshold(&image, Threshold::AtLeast(0.5))));
            let phi = signed_distance(&grown).expect("object inside the frame");
            let logits = phi.as_field().map(|v| -v);
            write_field_gtf(&logits, &rd.join("logits").join(path.file_name().unwrap())).expect("writable");
        }
        fs::write(rd.join("DONE"), b"").expect("writable");
        round += 1;
    }
}

fn main() -> spatial_correction::Result<()> {
    let root = std::env::temp_dir().join(format!("sc-exchange-{}", std::process::id()));
    let cfg = PipelineConfig {
        synth: SynthSpec {
            noise_sigma: 0.05,
            ..SynthSpec::desk(30, 5)
        },
        noise: NoiseModel::Markov(MarkovNoiseParams::new(1, 1.0, 1.0, 0.0)),
        correction: CorrectionParams {
            route: CorrectionRoute::Naive,
            max_iters: 2,
            ..CorrectionParams::default()
        },
        model: TrainConfig::default(),
        val_count: 2,
        test_count: 2,
        seed: 5,
    };
    let prep = prepare(&cfg)?;
    let noisy = noisy_labels(&prep, &cfg.noise, 5)?;
    let extras = prep
        .val_images
        .iter()
        .enumerate()
        .map(|(i, im)| (format!("val_{i:04}"), im.clone()))
        .collect();

    let stop = Arc::new(AtomicBool::new(false));
    let worker = {
        let (root, stop) = (root.clone(), stop.clone());
        thread::spawn(move || trainer(&root, &stop))
    };
    let mut seg = ExternalSegmenter::new(&root, extras, Duration::from_millis(10), Duration::from_secs(30));
    let inputs = ScInputs {
        train_images: &prep.train_images,
        train_labels: &noisy,
        val_images: &prep.val_images,
        val_masks: &prep.val_masks,
        truth: Some(&prep.train_truth),
        seed: 5,
    };
    let result = spatial_correction(&inputs, &mut seg, &cfg.correction);
    stop.store(true, Ordering::SeqCst);
    worker.join().expect("trainer thread");
    let out = result?;

    for it in &out.report {
        println!(
            "round {}: delta_hat {:+.3}, val dice {:.4}",
            it.iter, it.delta_hat, it.val_dsc
        );
    }
    println!(
        "label dice vs truth: noisy {:.4}, corrected {:.4}; {} round(s) under {}",
        mean_dice(&noisy, &prep.train_truth)?,
        mean_dice(&out.labels, &prep.train_truth)?,
        seg.rounds_completed(),
        root.display()
    );
    fs::remove_dir_all(&root).ok();
    Ok(())
}
