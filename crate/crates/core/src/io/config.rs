//! Key-value run configuration.
//!
//! ```text
//! # comment
//! seed = 7
//! out = "runs/a"
//! threads = 2
//!
//! [preset.wide]
//! T = 12
//! theta1 = 0.8
//! theta2 = 0.4
//! theta3 = 0.02
//! smooth_sigma = 0
//! ```
//!
//! One section level only. Unknown keys and sections are errors. A preset
//! section named after a built-in preset overrides only the keys it sets;
//! other sections must give `T`, `theta1` and `theta2`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::noise::{self, MarkovNoiseParams};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub presets: BTreeMap<String, MarkovNoiseParams>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Named preset, looking at this file first and the built-ins second.
    pub fn preset(&self, name: &str) -> Result<MarkovNoiseParams> {
        match self.presets.get(name) {
            Some(p) => Ok(*p),
            None => noise::preset(name),
        }
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = ConfigFile::default();
        // (params, which of T/theta1/theta2 were set, line of the header)
        let mut section: Option<(String, PartialPreset)> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |reason: String| Error::Config {
                path: path.to_path_buf(),
                line: line_no,
                reason,
            };
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(inner) = line.strip_prefix('[') {
                let inner = inner
                    .strip_suffix(']')
                    .ok_or_else(|| err("unterminated section header".into()))?;
                let name = inner
                    .trim()
                    .strip_prefix("preset.")
                    .ok_or_else(|| err(format!("unknown section [{inner}]")))?;
                if name.is_empty() {
                    return Err(err("empty preset name".into()));
                }
                if let Some((prev, partial)) = section.take() {
                    cfg.presets.insert(prev.clone(), partial.finish(&prev, path)?);
                }
                if cfg.presets.contains_key(name) {
                    return Err(err(format!("preset `{name}` defined twice")));
                }
                section = Some((name.to_string(), PartialPreset::start(name, line_no)));
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            let (key, value) = (key.trim(), unquote(value.trim()));
            match &mut section {
                None => match key {
                    "seed" => cfg.seed = Some(parse_num(value).map_err(err)?),
                    "threads" => cfg.threads = Some(parse_num(value).map_err(err)?),
                    "out" => cfg.out = Some(PathBuf::from(value)),
                    _ => return Err(err(format!("unknown key `{key}`"))),
                },
                Some((_, partial)) => partial.set(key, value).map_err(err)?,
            }
        }
        if let Some((name, partial)) = section {
            cfg.presets.insert(name.clone(), partial.finish(&name, path)?);
        }
        Ok(cfg)
    }
}

struct PartialPreset {
    params: MarkovNoiseParams,
    required_missing: Vec<&'static str>,
    line: usize,
}

impl PartialPreset {
    fn start(name: &str, line: usize) -> Self {
        match noise::preset(name) {
            Ok(params) => PartialPreset {
                params,
                required_missing: vec![],
                line,
            },
            Err(_) => PartialPreset {
                params: MarkovNoiseParams::new(0, 0.5, 0.0, 0.0),
                required_missing: vec!["T", "theta1", "theta2"],
                line,
            },
        }
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "T" => self.params.steps = parse_num(value)?,
            "theta1" => self.params.expansion = parse_num(value)?,
            "theta2" => self.params.marching = parse_num(value)?,
            "theta3" => self.params.flipping = parse_num(value)?,
            "smooth_sigma" => self.params.smooth_sigma = parse_num(value)?,
            _ => return Err(format!("unknown preset key `{key}`")),
        }
        self.required_missing.retain(|k| *k != key);
        Ok(())
    }

    fn finish(self, name: &str, path: &Path) -> Result<MarkovNoiseParams> {
        let err = |reason: String| Error::Config {
            path: path.to_path_buf(),
            line: self.line,
            reason,
        };
        if !self.required_missing.is_empty() {
            return Err(err(format!(
                "preset `{name}` is missing {}",
                self.required_missing.join(", ")
            )));
        }
        self.params.validate().map_err(|e| err(e.to_string()))?;
        Ok(self.params)
    }
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v)
}

fn parse_num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse()
        .map_err(|_| format!("cannot parse `{v}` as a number of the expected kind"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(t: &str) -> Result<ConfigFile> {
        ConfigFile::parse(t, Path::new("c.cfg"))
    }

    #[test]
    fn full_file() {
        let c = parse(
            "seed = 7\nout = \"runs/a # b\"  # trailing\nthreads=2\n\n[preset.wide]\nT = 12\ntheta1 = 0.8\ntheta2 = 0.4\ntheta3 = 0.02\n[preset.isic-se]\nT = 50\n",
        )
        .unwrap();
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.out, Some(PathBuf::from("runs/a # b")));
        assert_eq!(c.threads, Some(2));
        let w = c.preset("wide").unwrap();
        assert_eq!((w.steps, w.expansion, w.marching, w.flipping), (12, 0.8, 0.4, 0.02));
        let i = c.preset("isic-se").unwrap();
        assert_eq!((i.steps, i.expansion), (50, 0.8));
        assert_eq!(c.preset("tiny-se").unwrap().steps, 8);
    }

    fn line_of(e: Error) -> usize {
        match e {
            Error::Config { line, .. } => line,
            other => panic!("{other}"),
        }
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        assert_eq!(line_of(parse("seed = 1\ncolour = red\n").unwrap_err()), 2);
        assert_eq!(line_of(parse("[noise]\n").unwrap_err()), 1);
        assert_eq!(line_of(parse("[preset.a]\nT = 1\nfoo = 2\n").unwrap_err()), 3);
        assert_eq!(line_of(parse("seed = 1.5\n").unwrap_err()), 1);
        assert_eq!(line_of(parse("[preset.a]\nT = 1\n").unwrap_err()), 1);
        assert_eq!(
            line_of(parse("[preset.a]\nT = 1\ntheta1 = 2\ntheta2 = 0.5\n").unwrap_err()),
            1
        );
    }
}
