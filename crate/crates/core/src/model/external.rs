//! File handshake with an out-of-process trainer.
//!
//! Directory layout under the exchange root:
//!
//! ```text
//! images/<name>.gtf            f32 images, written once (train_0000, ..., plus extras)
//! round_000/labels/<name>.gtf  u8 training labels for this round
//! round_000/REQUEST            "seed <u64>\ntrain <count>\n"
//! round_000/logits/<name>.gtf  f32 logits, one per image in images/, written by the trainer
//! round_000/DONE               created by the trainer after all logits are in place
//! ```
//!
//! The trainer fits on `images/train_*` with `round_k/labels/train_*` and
//! must return logits for every file in `images/` (positive = foreground).

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, ScalarField};
use crate::io::{read_field_gtf, write_field_gtf, write_mask_gtf};
use crate::model::Segmenter;

pub fn round_dir(root: &Path, round: usize) -> PathBuf {
    root.join(format!("round_{round:03}"))
}

pub fn train_name(index: usize) -> String {
    format!("train_{index:04}")
}

#[derive(Debug)]
pub struct ExternalSegmenter {
    root: PathBuf,
    poll: Duration,
    timeout: Duration,
    extras: Vec<(String, ScalarField)>,
    round: usize,
    /// (image, logits) pairs returned by the latest round.
    known: Vec<(ScalarField, ScalarField)>,
}

impl ExternalSegmenter {
    /// `extras` are the non-training images (validation, test) whose logits
    /// the loop will ask for.
    pub fn new(
        root: impl Into<PathBuf>,
        extras: Vec<(String, ScalarField)>,
        poll: Duration,
        timeout: Duration,
    ) -> Self {
        ExternalSegmenter {
            root: root.into(),
            poll,
            timeout,
            extras,
            round: 0,
            known: Vec::new(),
        }
    }

    pub fn rounds_completed(&self) -> usize {
        self.round
    }

    fn mkdir(path: &Path) -> Result<()> {
        fs::create_dir_all(path).map_err(|e| Error::io(path, e))
    }
}

impl Segmenter for ExternalSegmenter {
    fn fit(&mut self, images: &[ScalarField], labels: &[BinaryMask], seed: u64) -> Result<()> {
        let img_dir = self.root.join("images");
        let rd = round_dir(&self.root, self.round);
        let label_dir = rd.join("labels");
        Self::mkdir(&img_dir)?;
        Self::mkdir(&label_dir)?;
        Self::mkdir(&rd.join("logits"))?;
        let mut names = Vec::with_capacity(images.len() + self.extras.len());
        for (i, (im, lb)) in images.iter().zip(labels).enumerate() {
            let name = train_name(i);
            if self.round == 0 {
                write_field_gtf(im, &img_dir.join(format!("{name}.gtf")))?;
            }
            write_mask_gtf(lb, &label_dir.join(format!("{name}.gtf")))?;
            names.push((name, im.clone()));
        }
        if self.round == 0 {
            for (name, im) in &self.extras {
                write_field_gtf(im, &img_dir.join(format!("{name}.gtf")))?;
            }
        }
        names.extend(self.extras.iter().cloned());
        let request = rd.join("REQUEST");
        fs::write(&request, format!("seed {seed}\ntrain {}\n", images.len())).map_err(|e| Error::io(&request, e))?;

        let done = rd.join("DONE");
        let start = Instant::now();
        while !done.exists() {
            if start.elapsed() > self.timeout {
                return Err(Error::Trainer(format!(
                    "no DONE file in {} after {:?}",
                    rd.display(),
                    self.timeout
                )));
            }
            thread::sleep(self.poll);
        }
        let mut known = Vec::with_capacity(names.len());
        for (name, im) in names {
            let path = rd.join("logits").join(format!("{name}.gtf"));
            let logits = read_field_gtf(&path)?;
            if logits.shape() != im.shape() {
                return Err(Error::format(
                    &path,
                    8,
                    format!("extents {} do not match image {}", logits.shape(), im.shape()),
                ));
            }
            known.push((im, logits));
        }
        self.known = known;
        self.round += 1;
        Ok(())
    }

    fn predict_logits(&self, image: &ScalarField) -> Result<ScalarField> {
        self.known
            .iter()
            .find(|(im, _)| im == image)
            .map(|(_, l)| l.clone())
            .ok_or_else(|| Error::Trainer("image was not part of the exchange".into()))
    }
}
