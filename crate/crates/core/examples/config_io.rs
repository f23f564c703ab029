//! Presets from a key-value config, masks through GTF and PGM, rows to CSV.

use std::path::Path;

use serde::Serialize;
use spatial_correction::grid::{BinaryMask, GridShape};
use spatial_correction::io::{read_mask, write_csv, write_mask, ConfigFile};
use spatial_correction::noise::generate;

const CONFIG: &str = "\
seed = 11

# a gentler variant of the built-in desk preset
[preset.tiny-se]
T = 4

[preset.thin-ring]
T = 2
theta1 = 1.0
theta2 = 1.0
";

#[derive(Serialize)]
struct Row {
    format: &'static str,
    bytes: u64,
    round_trip: bool,
}

fn main() -> spatial_correction::Result<()> {
    let cfg = ConfigFile::parse(CONFIG, Path::new("inline.conf"))?;
    let seed = cfg.seed.unwrap_or(0);
    let shape = GridShape::plane(32, 32);
    let square = BinaryMask::from_fn(shape, |s| {
        let (_, y, x) = shape.coords(s);
        (10..22).contains(&y) && (8..24).contains(&x)
    });
    let dir = std::env::temp_dir().join(format!("sc-config-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| spatial_correction::Error::Io {
        path: dir.clone(),
        source: e,
    })?;

    let mut rows = Vec::new();
    for name in ["tiny-se", "thin-ring"] {
        let params = cfg.preset(name)?.with_seed(seed);
        let noisy = generate(&square, &params);
        println!(
            "{name}: T={} theta1={} area {} -> {}",
            params.steps,
            params.expansion,
            square.count(),
            noisy.count()
        );
        for (format, ext) in [("gtf", "gtf"), ("pgm", "pgm")] {
            let path = dir.join(format!("{name}.{ext}"));
            write_mask(&noisy, &path)?;
            rows.push(Row {
                format,
                bytes: std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0),
                round_trip: read_mask(&path)? == noisy,
            });
        }
    }
    let csv = dir.join("formats.csv");
    write_csv(&csv, &rows)?;
    print!("{}", std::fs::read_to_string(&csv).unwrap_or_default());
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
