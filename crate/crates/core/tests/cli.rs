use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use spatial_correction::cli::{run, EXIT_DATA, EXIT_OK, EXIT_USAGE, EXIT_VERIFY};
use spatial_correction::grid::ScalarField;
use spatial_correction::io::{read_field_gtf, read_mask, write_field_gtf};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spatial-correction"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(out: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["spatial-correction", "--seed", "7", "--out", out.to_str().unwrap()];
    argv.extend_from_slice(args);
    run(argv)
}

#[test]
fn bound_prints_the_worked_example() {
    let o = bin(&[
        "bound",
        "--eps0",
        "1",
        "--eps1",
        "20",
        "--eps",
        "2",
        "--alpha",
        "0.05",
        "--image-size",
        "65536",
    ]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "2956");
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(bin(&["--help"]).status.code(), Some(EXIT_OK));
    assert_eq!(bin(&["--version"]).status.code(), Some(EXIT_OK));
    assert_eq!(bin(&["verify", "--help"]).status.code(), Some(EXIT_OK));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(bin(&["no-such-command"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(bin(&["bound", "--eps", "0.5"]).status.code(), Some(EXIT_USAGE));
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["gen-noise", "--preset", "nope"]), EXIT_USAGE);
    assert_eq!(
        run_in(
            dir.path(),
            &["gen-noise", "--steps", "2", "--theta1", "1.5", "--theta2", "0.5"]
        ),
        EXIT_USAGE
    );
}

#[test]
fn bad_files_exit_two_and_name_the_offset() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.gtf");
    fs::write(
        &bad,
        b"GTF1\x00\x02\x00\x00\x02\x00\x00\x00\x02\x00\x00\x00\x00\x01\x07\x00",
    )
    .unwrap();
    let o = bin(&[
        "--out",
        dir.path().to_str().unwrap(),
        "sdf",
        "--input",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(EXIT_DATA));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("offset"), "{err}");

    let missing = dir.path().join("missing.gtf");
    assert_eq!(
        run_in(dir.path(), &["sdf", "--input", missing.to_str().unwrap()]),
        EXIT_DATA
    );
}

#[test]
fn failed_verification_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let code = run_in(
        dir.path(),
        &[
            "verify",
            "theorem1",
            "--size",
            "32",
            "--pool",
            "64",
            "--held-out",
            "16",
            "--trials",
            "100",
            "--validation-size",
            "1",
        ],
    );
    assert_eq!(code, EXIT_VERIFY);
    assert!(dir.path().join("theorem1.json").exists());
}

#[test]
fn gen_noise_then_sdf_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run_in(
            dir.path(),
            &[
                "gen-noise",
                "--size",
                "40",
                "--count",
                "2",
                "--steps",
                "3",
                "--theta1",
                "1",
                "--theta2",
                "1"
            ]
        ),
        EXIT_OK
    );
    let clean = read_mask(&dir.path().join("clean.gtf")).unwrap();
    let noisy = read_mask(&dir.path().join("noisy_0001.gtf")).unwrap();
    // θ1 = θ2 = 1 dilates deterministically
    assert!(clean.is_subset(&noisy));
    assert!(clean.count() < noisy.count());

    let input = dir.path().join("clean.gtf");
    assert_eq!(
        run_in(dir.path(), &["sdf", "--input", input.to_str().unwrap()]),
        EXIT_OK
    );
    let phi = read_field_gtf(&dir.path().join("clean_sdf.gtf")).unwrap();
    assert!(phi.values().iter().all(|v| v.abs() >= 1.0));
}

#[test]
fn config_presets_override_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(
        &cfg,
        "# desk run\nseed = 3\n\n[preset.tiny-se]\ntheta3 = 0\n\n[preset.grow]\nT = 2\ntheta1 = 1\ntheta2 = 1\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let argv = |preset: &str| {
        vec![
            "spatial-correction".to_string(),
            "--config".into(),
            cfg.to_string_lossy().into_owned(),
            "--out".into(),
            out.to_string_lossy().into_owned(),
            "gen-noise".into(),
            "--size".into(),
            "32".into(),
            "--preset".into(),
            preset.into(),
        ]
    };
    assert_eq!(run(argv("grow")), EXIT_OK);
    let meta = fs::read_to_string(out.join("noise.json")).unwrap();
    assert!(meta.contains("\"seed\": 3"), "{meta}");
    assert!(meta.contains("\"steps\": 2"), "{meta}");
    assert_eq!(run(argv("tiny-se")), EXIT_OK);
    let meta = fs::read_to_string(out.join("noise.json")).unwrap();
    assert!(
        meta.contains("\"flipping\": 0.0") && meta.contains("\"steps\": 8"),
        "{meta}"
    );

    fs::write(&cfg, "[preset.grow]\nT = 2\ntheta9 = 1\n").unwrap();
    let o = bin(&["--config", cfg.to_str().unwrap(), "bound"]);
    assert_eq!(o.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn pgm_inputs_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run_in(
            dir.path(),
            &["gen-noise", "--size", "24", "--format", "pgm", "--dilate-erode", "2"]
        ),
        EXIT_OK
    );
    let input = dir.path().join("noisy_0000.pgm");
    assert_eq!(
        run_in(dir.path(), &["sdf", "--input", input.to_str().unwrap()]),
        EXIT_OK
    );
    assert!(dir.path().join("noisy_0000_sdf.gtf").exists());
}

/// Stands in for an out-of-process trainer: answers every round with
/// logits `4·(image − 0.5)`, which segment the synthetic images well.
fn fake_trainer(root: &Path, stop: &AtomicBool) -> usize {
    let mut round = 0;
    while !stop.load(Ordering::SeqCst) {
        let rd = root.join(format!("round_{round:03}"));
        if !rd.join("REQUEST").exists() {
            thread::sleep(Duration::from_millis(5));
            continue;
        }
        let request = fs::read_to_string(rd.join("REQUEST")).unwrap();
        assert!(request.starts_with("seed "), "{request}");
        for entry in fs::read_dir(root.join("images")).unwrap() {
            let path = entry.unwrap().path();
            let image = read_field_gtf(&path).unwrap();
            let logits: ScalarField = image.map(|v| 4.0 * (v - 0.5));
            write_field_gtf(&logits, &rd.join("logits").join(path.file_name().unwrap())).unwrap();
        }
        fs::write(rd.join("DONE"), b"").unwrap();
        round += 1;
    }
    round
}

#[test]
fn external_trainer_handshake() {
    let dir = tempfile::tempdir().unwrap();
    let exchange = dir.path().join("exchange");
    let stop = Arc::new(AtomicBool::new(false));
    let trainer = {
        let (exchange, stop) = (exchange.clone(), stop.clone());
        thread::spawn(move || fake_trainer(&exchange, &stop))
    };
    let code = run_in(
        dir.path(),
        &[
            "sc-run",
            "--count",
            "24",
            "--size",
            "32",
            "--val-count",
            "2",
            "--test-count",
            "4",
            "--max-iters",
            "2",
            "--external-dir",
            "exchange",
            "--poll-ms",
            "5",
            "--timeout-s",
            "60",
        ],
    );
    stop.store(true, Ordering::SeqCst);
    let rounds = trainer.join().unwrap();
    assert_eq!(code, EXIT_OK);
    assert!(rounds >= 1);
    assert!(exchange.join("images/train_0000.gtf").exists());
    assert!(exchange.join("images/val_0000.gtf").exists());
    assert!(exchange.join("images/test_0003.gtf").exists());
    assert!(exchange.join("round_000/labels/train_0017.gtf").exists());
    assert!(dir.path().join("corrected/train_0017.gtf").exists());
    let iterations = fs::read_to_string(dir.path().join("sc_iterations.csv")).unwrap();
    assert!(iterations.starts_with("iter,delta_hat,"), "{iterations}");
    let summary = fs::read_to_string(dir.path().join("sc_external.csv")).unwrap();
    assert!(summary.lines().count() == 2, "{summary}");
}

#[test]
fn estimate_bias_and_correct_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = |p: &str| dir.path().join(p).to_string_lossy().into_owned();
    assert_eq!(
        run_in(&dir.path().join("synth"), &["synth", "--count", "6", "--size", "32"]),
        EXIT_OK
    );
    assert_eq!(
        run_in(
            &dir.path().join("model"),
            &[
                "train",
                "--images-dir",
                &d("synth/images"),
                "--labels-dir",
                &d("synth/masks"),
                "--epochs",
                "40"
            ]
        ),
        EXIT_OK
    );
    assert_eq!(
        run_in(
            &dir.path().join("pred"),
            &[
                "predict",
                "--model",
                &d("model/model.json"),
                "--images-dir",
                &d("synth/images")
            ]
        ),
        EXIT_OK
    );
    assert_eq!(
        run_in(
            &dir.path().join("bias"),
            &[
                "estimate-bias",
                "--pred-dir",
                &d("pred/masks"),
                "--clean-dir",
                &d("synth/masks")
            ]
        ),
        EXIT_OK
    );
    let csv = fs::read_to_string(dir.path().join("bias/bias.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert_eq!(
        run_in(
            &dir.path().join("fix"),
            &["correct", "--logits-dir", &d("pred/logits"), "--delta-hat", "-1.5"]
        ),
        EXIT_OK
    );
    assert_eq!(fs::read_dir(dir.path().join("fix/corrected")).unwrap().count(), 6);
}
