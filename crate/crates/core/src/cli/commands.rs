use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use crate::cli::*;
use crate::correct::{
    estimate_bias, lambda_bias, logit_correct, naive_correct, required_validation_size, spatial_correction,
    CorrectionParams, CorrectionRoute, LambdaSign, ScInputs, ValidationBoundInputs,
};
use crate::error::{Error, Result};
use crate::grid::{threshold, BinaryMask, GridShape, Threshold};
use crate::harness::{
    mean_dice, noisy_labels, prepare, run_pipeline, sweep, synth_dataset, test_dice, verify_lemma1,
    verify_t1_expectations, verify_theorem1_with, HoleSpec, PipelineConfig, ShapeFamily, SweepKind, SynthSpec,
    Theorem1Fixture, Theorem1Pool, TrialReport,
};
use crate::io::{read_image, read_mask, write_csv, write_field_gtf, write_mask, write_mask_gtf};
use crate::model::{fit_logistic, ExternalSegmenter, LogisticModel, TrainConfig};
use crate::noise::{MarkovNoiseParams, NoiseModel};
use crate::rng::mix;
use crate::sdf::signed_distance;

pub(crate) fn dispatch(cmd: &Command, ctx: &Context) -> Result<Outcome> {
    match cmd {
        Command::GenNoise(a) => gen_noise(a, ctx),
        Command::Sdf(a) => sdf(a, ctx),
        Command::EstimateBias(a) => estimate(a, ctx),
        Command::Correct(a) => correct(a, ctx),
        Command::Train(a) => train(a, ctx),
        Command::Predict(a) => predict(a, ctx),
        Command::ScRun(a) => sc_run(a, ctx),
        Command::Verify(VerifyCommand::Lemma1(a)) => lemma1(a, ctx, false),
        Command::Verify(VerifyCommand::Expectations(a)) => lemma1(a, ctx, true),
        Command::Verify(VerifyCommand::Theorem1(a)) => theorem1(a, ctx),
        Command::Sweep(a) => run_sweep(a, ctx),
        Command::Synth(a) => synth(a, ctx),
        Command::Bound(a) => bound(a),
    }
}

fn mkdir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn out_dir(ctx: &Context, sub: &str) -> Result<PathBuf> {
    let dir = if sub.is_empty() {
        ctx.out.clone()
    } else {
        ctx.out.join(sub)
    };
    mkdir(&dir)?;
    Ok(dir)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// `.gtf` and `.pgm` files of a directory in name order.
fn list_grids(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("gtf") || e.eq_ignore_ascii_case("pgm"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no .gtf or .pgm files"),
        ));
    }
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn noise_model(args: &NoiseArgs, ctx: &Context, default_preset: &str) -> Result<NoiseModel> {
    if let Some(max_pixels) = args.dilate_erode {
        return Ok(NoiseModel::DilateErode { max_pixels });
    }
    let explicit = args.steps.is_some() && args.theta1.is_some() && args.theta2.is_some();
    let mut p = match (&args.preset, explicit) {
        (Some(name), _) => ctx.config.preset(name)?,
        (None, true) => MarkovNoiseParams::new(0, 0.5, 0.0, 0.0),
        (None, false) => ctx.config.preset(default_preset)?,
    };
    if let Some(v) = args.steps {
        p.steps = v;
    }
    if let Some(v) = args.theta1 {
        p.expansion = v;
    }
    if let Some(v) = args.theta2 {
        p.marching = v;
    }
    if let Some(v) = args.theta3 {
        p.flipping = v;
    }
    if let Some(v) = args.smooth_sigma {
        p.smooth_sigma = v;
    }
    p.validate()?;
    Ok(NoiseModel::Markov(p))
}

fn centered_disk(size: usize) -> BinaryMask {
    let shape = GridShape::plane(size, size);
    let c = (size as f64 - 1.0) / 2.0;
    let r = size as f64 / 4.0;
    BinaryMask::from_fn(shape, |s| {
        let (_, y, x) = shape.coords(s);
        (y as f64 - c).powi(2) + (x as f64 - c).powi(2) <= r * r
    })
}

fn gen_noise(a: &GenNoiseArgs, ctx: &Context) -> Result<Outcome> {
    let model = noise_model(&a.noise, ctx, "tiny-se")?;
    let out = out_dir(ctx, "")?;
    let ext = match a.format {
        FileFormat::Gtf => "gtf",
        FileFormat::Pgm => "pgm",
    };
    let mask = match &a.input {
        Some(p) => read_mask(p)?,
        None => {
            if a.size < 4 {
                return Err(Error::InvalidParameter {
                    name: "size",
                    value: a.size as f64,
                    reason: "disk fixture needs size >= 4",
                });
            }
            let m = centered_disk(a.size);
            write_mask(&m, &out.join(format!("clean.{ext}")))?;
            m
        }
    };
    for i in 0..a.count {
        let noisy = model.apply(&mask, mix(ctx.seed, i as u64))?;
        write_mask(&noisy, &out.join(format!("noisy_{i:04}.{ext}")))?;
    }
    #[derive(Serialize)]
    struct Meta<'a> {
        seed: u64,
        count: usize,
        noise: &'a NoiseModel,
    }
    write_json(
        &Meta {
            seed: ctx.seed,
            count: a.count,
            noise: &model,
        },
        &out.join("noise.json"),
    )?;
    println!("wrote {} noisy mask(s) to {}", a.count, out.display());
    Ok(Outcome::Ok)
}

fn sdf(a: &SdfArgs, ctx: &Context) -> Result<Outcome> {
    let phi = signed_distance(&read_mask(&a.input)?)?;
    let path = out_dir(ctx, "")?.join(format!("{}_sdf.gtf", stem(&a.input)));
    write_field_gtf(phi.as_field(), &path)?;
    println!("{}", path.display());
    Ok(Outcome::Ok)
}

fn estimate(a: &EstimateBiasArgs, ctx: &Context) -> Result<Outcome> {
    let preds = list_grids(&a.pred_dir)?;
    let cleans = list_grids(&a.clean_dir)?;
    if preds.len() != cleans.len() {
        return Err(Error::InvalidParameter {
            name: "clean_dir",
            value: cleans.len() as f64,
            reason: "clean mask count differs from predicted mask count",
        });
    }
    let mut p_sdf = Vec::new();
    let mut c_sdf = Vec::new();
    let mut names = Vec::new();
    for (p, c) in preds.iter().zip(&cleans) {
        let pm = read_mask(p)?;
        let cm = read_mask(c)?;
        pm.shape().check_same(&cm.shape())?;
        p_sdf.push(signed_distance(&pm).ok());
        c_sdf.push(signed_distance(&cm).ok());
        names.push(stem(p));
    }
    let est = estimate_bias(&p_sdf, &c_sdf)?;
    #[derive(Serialize)]
    struct Row {
        image: String,
        gap: Option<f64>,
    }
    let mut gaps = est.per_image_gaps.iter();
    let rows: Vec<Row> = names
        .into_iter()
        .zip(p_sdf.iter().zip(&c_sdf))
        .map(|(image, (p, c))| Row {
            image,
            gap: (p.is_some() && c.is_some()).then(|| *gaps.next().expect("one gap per usable pair")),
        })
        .collect();
    let out = out_dir(ctx, "")?;
    write_csv(&out.join("bias.csv"), &rows)?;
    write_json(&est, &out.join("bias.json"))?;
    println!("delta_hat {}", est.delta_hat);
    println!("v_used {} skipped {}", est.v_used, est.skipped);
    Ok(Outcome::Ok)
}

fn sign_of(a: LambdaSignArg) -> LambdaSign {
    match a {
        LambdaSignArg::Corrective => LambdaSign::Corrective,
        LambdaSignArg::Literal => LambdaSign::Literal,
    }
}

fn route_of(a: RouteArg) -> CorrectionRoute {
    match a {
        RouteArg::Logit => CorrectionRoute::Logit,
        RouteArg::Naive => CorrectionRoute::Naive,
    }
}

fn correct(a: &CorrectArgs, ctx: &Context) -> Result<Outcome> {
    let out = out_dir(ctx, "corrected")?;
    #[derive(Serialize)]
    struct Row {
        image: String,
        lambda: Option<f64>,
        changed_sites: usize,
    }
    let mut rows = Vec::new();
    for path in list_grids(&a.logits_dir)? {
        let logits = crate::io::read_field_gtf(&path)?;
        let pred = threshold(&logits, Threshold::AtLeast(0.0));
        let phi = signed_distance(&pred)?;
        let (mask, lambda) = match route_of(a.route) {
            CorrectionRoute::Naive => (naive_correct(&phi, a.delta_hat), None),
            CorrectionRoute::Logit => {
                let sign = sign_of(a.lambda_sign);
                let f = logit_correct(&logits, &phi, a.delta_hat, a.gamma, sign)?;
                let lambda = (a.delta_hat.abs() >= 1.0)
                    .then(|| lambda_bias(&logits, &phi, a.delta_hat, sign))
                    .transpose()?;
                (threshold(&f, Threshold::AtLeast(0.0)), lambda)
            }
        };
        let changed = pred.symmetric_difference(&mask)?.count();
        write_mask_gtf(&mask, &out.join(format!("{}.gtf", stem(&path))))?;
        rows.push(Row {
            image: stem(&path),
            lambda,
            changed_sites: changed,
        });
    }
    write_csv(&ctx.out.join("correct.csv"), &rows)?;
    println!("corrected {} mask(s) into {}", rows.len(), out.display());
    Ok(Outcome::Ok)
}

fn train_config(m: &ModelArgs, seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: m.learning_rate,
        epochs: m.epochs,
        l2: m.l2,
        seed,
        ..TrainConfig::default()
    }
}

fn train(a: &TrainArgs, ctx: &Context) -> Result<Outcome> {
    let image_files = list_grids(&a.images_dir)?;
    let label_files = list_grids(&a.labels_dir)?;
    if image_files.len() != label_files.len() {
        return Err(Error::InvalidParameter {
            name: "labels_dir",
            value: label_files.len() as f64,
            reason: "label count differs from image count",
        });
    }
    let images = image_files.iter().map(|p| read_image(p)).collect::<Result<Vec<_>>>()?;
    let labels = label_files.iter().map(|p| read_mask(p)).collect::<Result<Vec<_>>>()?;
    let model = fit_logistic(&images, &labels, &train_config(&a.model, ctx.seed))?;
    let path = out_dir(ctx, "")?.join("model.json");
    write_json(&model, &path)?;
    println!(
        "final loss {:.6} after {} accepted steps; model at {}",
        model.loss_history.last().copied().unwrap_or(f64::NAN),
        model.loss_history.len() - 1,
        path.display()
    );
    Ok(Outcome::Ok)
}

fn predict(a: &PredictArgs, ctx: &Context) -> Result<Outcome> {
    let text = fs::read_to_string(&a.model).map_err(|e| Error::io(&a.model, e))?;
    let model: LogisticModel =
        serde_json::from_str(&text).map_err(|e| Error::format(&a.model, 0, format!("model json: {e}")))?;
    let logits_dir = out_dir(ctx, "logits")?;
    let masks_dir = out_dir(ctx, "masks")?;
    let files = list_grids(&a.images_dir)?;
    for p in &files {
        let logits = model.predict_logits(&read_image(p)?);
        write_field_gtf(&logits, &logits_dir.join(format!("{}.gtf", stem(p))))?;
        write_mask_gtf(
            &threshold(&logits, Threshold::AtLeast(0.0)),
            &masks_dir.join(format!("{}.gtf", stem(p))),
        )?;
    }
    println!("predicted {} image(s)", files.len());
    Ok(Outcome::Ok)
}

fn synth_spec(o: &SynthOpts, seed: u64) -> SynthSpec {
    let scale = o.size as f64 / 64.0;
    SynthSpec {
        count: o.count,
        height: o.size,
        width: o.size,
        family: match o.family {
            FamilyArg::Disks => ShapeFamily::Disks,
            FamilyArg::Ellipses => ShapeFamily::EllipseUnions,
        },
        radius_min: o.radius_min.unwrap_or(6.0 * scale),
        radius_max: o.radius_max.unwrap_or(14.0 * scale),
        contrast: o.contrast,
        noise_sigma: o.noise_sigma,
        blur_sigma: o.blur_sigma,
        holes: (o.holes > 0).then_some(HoleSpec {
            count: o.holes,
            radius: o.hole_radius,
        }),
        seed,
    }
}

fn correction_params(c: &CorrectionOpts) -> CorrectionParams {
    CorrectionParams {
        route: route_of(c.route),
        gamma: c.gamma,
        max_iters: c.max_iters,
        stop_threshold: c.stop_threshold,
        lambda_sign: sign_of(c.lambda_sign),
    }
}

fn sc_run(a: &ScRunArgs, ctx: &Context) -> Result<Outcome> {
    let cfg = PipelineConfig {
        synth: synth_spec(&a.synth, ctx.seed),
        noise: noise_model(&a.noise, ctx, "tiny-se")?,
        correction: correction_params(&a.correction),
        model: train_config(&a.model, ctx.seed),
        val_count: a.val_count,
        test_count: a.test_count,
        seed: ctx.seed,
    };
    let out = out_dir(ctx, "")?;
    write_json(&cfg, &out.join("sc_config.json"))?;
    match &a.external_dir {
        None => {
            let report = run_pipeline(&cfg)?;
            write_csv(&out.join("sc_arms.csv"), &report.arm_rows())?;
            write_csv(&out.join("sc_iterations.csv"), &report.iterations)?;
            for row in report.arm_rows() {
                println!(
                    "{:<6} test_dsc {:.4} train_label_dsc {:.4}",
                    row.arm, row.test_dsc, row.train_label_dsc
                );
            }
        }
        Some(dir) => {
            // relative exchange directories live under --out
            let exchange = if dir.is_absolute() { dir.clone() } else { out.join(dir) };
            let prep = prepare(&cfg)?;
            let noisy = noisy_labels(&prep, &cfg.noise, mix(cfg.seed, 1))?;
            let extras = prep
                .val_images
                .iter()
                .enumerate()
                .map(|(i, im)| (format!("val_{i:04}"), im.clone()))
                .chain(
                    prep.test_images
                        .iter()
                        .enumerate()
                        .map(|(i, im)| (format!("test_{i:04}"), im.clone())),
                )
                .collect();
            let mut seg = ExternalSegmenter::new(
                exchange,
                extras,
                Duration::from_millis(a.poll_ms),
                Duration::from_secs(a.timeout_s),
            );
            let inputs = ScInputs {
                train_images: &prep.train_images,
                train_labels: &noisy,
                val_images: &prep.val_images,
                val_masks: &prep.val_masks,
                truth: Some(&prep.train_truth),
                seed: mix(cfg.seed, 12),
            };
            let result = spatial_correction(&inputs, &mut seg, &cfg.correction)?;
            let corrected_dir = out_dir(ctx, "corrected")?;
            for (i, m) in result.labels.iter().enumerate() {
                write_mask_gtf(m, &corrected_dir.join(format!("train_{i:04}.gtf")))?;
            }
            write_csv(&out.join("sc_iterations.csv"), &result.report)?;
            #[derive(Serialize)]
            struct Summary {
                sc_test_dsc: f64,
                corrected_label_dsc: f64,
                noisy_label_dsc: f64,
                rounds: usize,
            }
            let summary = Summary {
                sc_test_dsc: test_dice(&seg, &prep.test_images, &prep.test_masks)?,
                corrected_label_dsc: mean_dice(&result.labels, &prep.train_truth)?,
                noisy_label_dsc: mean_dice(&noisy, &prep.train_truth)?,
                rounds: seg.rounds_completed(),
            };
            write_csv(&out.join("sc_external.csv"), &[&summary])?;
            println!(
                "sc test_dsc {:.4} after {} external round(s)",
                summary.sc_test_dsc, summary.rounds
            );
        }
    }
    Ok(Outcome::Ok)
}

fn finish_report(r: &TrialReport, path: &Path) -> Result<Outcome> {
    r.write_json(path)?;
    eprintln!("{} finished in {:.1}s", r.experiment, r.wall_time_secs);
    println!(
        "{} {} report {}",
        r.experiment,
        if r.passed { "PASS" } else { "FAIL" },
        path.display()
    );
    Ok(if r.passed {
        Outcome::Ok
    } else {
        Outcome::VerificationFailed
    })
}

fn lemma1(a: &Lemma1Args, ctx: &Context, expectations: bool) -> Result<Outcome> {
    if a.size < 8 {
        return Err(Error::InvalidParameter {
            name: "size",
            value: a.size as f64,
            reason: "disk fixture needs size >= 8",
        });
    }
    let mask = centered_disk(a.size);
    let out = out_dir(ctx, "")?;
    if expectations {
        let r = verify_t1_expectations(&mask, a.theta1, a.theta2, a.theta3, a.samples, ctx.seed)?;
        finish_report(&r, &out.join("expectations.json"))
    } else {
        let r = verify_lemma1(&mask, a.theta1, a.theta2, a.theta3, a.samples, ctx.seed)?;
        finish_report(&r, &out.join("lemma1.json"))
    }
}

fn bound_inputs(b: &BoundOpts, image_size: u64) -> ValidationBoundInputs {
    ValidationBoundInputs {
        eps0: b.eps0,
        eps1: b.eps1,
        eps: b.eps,
        alpha: b.alpha,
        image_size,
    }
}

fn theorem1(a: &Theorem1Args, ctx: &Context) -> Result<Outcome> {
    let inputs = bound_inputs(&a.bound, (a.size * a.size) as u64);
    let v = match a.validation_size {
        Some(v) => v,
        None => required_validation_size(&inputs)?,
    };
    if v > a.pool {
        return Err(Error::PoolTooSmall {
            requested: v,
            pool: a.pool,
        });
    }
    let fixture = Theorem1Fixture {
        pool: a.pool,
        held_out: a.held_out,
        size: a.size,
        expansion: 0.7,
        marching: 0.9,
        seed: ctx.seed,
    };
    let pool = Theorem1Pool::build(&fixture)?;
    let r = verify_theorem1_with(&pool, &inputs, v, a.trials, mix(ctx.seed, 2))?;
    finish_report(&r, &out_dir(ctx, "")?.join("theorem1.json"))
}

fn run_sweep(a: &SweepArgs, ctx: &Context) -> Result<Outcome> {
    let kind = match a.kind {
        SweepKindArg::NoiseLevel => SweepKind::NoiseLevel,
        SweepKindArg::ValSize => SweepKind::ValSize,
    };
    let grid = a.grid.clone().unwrap_or_else(|| kind.default_grid());
    let cfg = PipelineConfig {
        synth: synth_spec(&a.synth, ctx.seed),
        noise: noise_model(&a.noise, ctx, "tiny-se")?,
        correction: correction_params(&a.correction),
        model: train_config(&a.model, ctx.seed),
        val_count: a.val_count,
        test_count: a.test_count,
        seed: ctx.seed,
    };
    let rows = sweep(kind, &grid, &cfg)?;
    let path = out_dir(ctx, "")?.join(format!("sweep_{}.csv", kind.name()));
    write_csv(&path, &rows)?;
    for r in &rows {
        println!("{}={} {:<6} test_dsc {:.4}", r.kind, r.setting, r.arm, r.test_dsc);
    }
    Ok(Outcome::Ok)
}

fn synth(a: &SynthArgs, ctx: &Context) -> Result<Outcome> {
    let spec = synth_spec(&a.synth, ctx.seed);
    let data = synth_dataset(&spec)?;
    let images = out_dir(ctx, "images")?;
    let masks = out_dir(ctx, "masks")?;
    for (i, (im, m)) in data.images.iter().zip(&data.masks).enumerate() {
        write_field_gtf(im, &images.join(format!("image_{i:04}.gtf")))?;
        write_mask_gtf(m, &masks.join(format!("mask_{i:04}.gtf")))?;
    }
    if let Some(holed) = &data.holed {
        let dir = out_dir(ctx, "holed")?;
        for (i, m) in holed.iter().enumerate() {
            write_mask_gtf(m, &dir.join(format!("mask_{i:04}.gtf")))?;
        }
    }
    write_json(&spec, &ctx.out.join("synth.json"))?;
    println!(
        "wrote {} image/mask pair(s) to {}",
        data.images.len(),
        ctx.out.display()
    );
    Ok(Outcome::Ok)
}

fn bound(a: &BoundArgs) -> Result<Outcome> {
    println!("{}", required_validation_size(&bound_inputs(&a.bound, a.image_size))?);
    Ok(Outcome::Ok)
}
