use crate::error::{Error, Result};
use crate::noise::MarkovNoiseParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePreset {
    pub name: &'static str,
    pub params: MarkovNoiseParams,
    /// False for desk-scale presets that do not come from a published table.
    pub published: bool,
    pub note: &'static str,
}

const fn m(steps: usize, expansion: f64, marching: f64, flipping: f64) -> MarkovNoiseParams {
    MarkovNoiseParams {
        steps,
        expansion,
        marching,
        flipping,
        smooth_sigma: 0.0,
        seed: 0,
    }
}

const fn published(name: &'static str, params: MarkovNoiseParams, note: &'static str) -> NoisePreset {
    NoisePreset {
        name,
        params,
        published: true,
        note,
    }
}

const fn desk(name: &'static str, params: MarkovNoiseParams, note: &'static str) -> NoisePreset {
    NoisePreset {
        name,
        params,
        published: false,
        note,
    }
}

static PRESETS: &[NoisePreset] = &[
    published("jsrt-lung-se", m(180, 0.7, 0.03, 0.1), "JSRT lung, expansion, 256x256"),
    published(
        "jsrt-heart-se",
        m(180, 0.7, 0.03, 0.1),
        "JSRT heart, expansion, 256x256",
    ),
    published(
        "jsrt-clavicle-se",
        m(100, 0.7, 0.03, 0.1),
        "JSRT clavicle, expansion, 256x256",
    ),
    published("isic-se", m(200, 0.8, 0.05, 0.1), "ISIC 2017, expansion, 256x256"),
    published("brats-se", m(80, 0.7, 0.05, 0.1), "Brats 2020, expansion, 64x128x128"),
    published("jsrt-lung-ss", m(200, 0.3, 0.05, 0.1), "JSRT lung, shrinkage, 256x256"),
    published(
        "jsrt-heart-ss",
        m(200, 0.3, 0.05, 0.1),
        "JSRT heart, shrinkage, 256x256",
    ),
    published(
        "jsrt-clavicle-ss",
        m(120, 0.3, 0.05, 0.1),
        "JSRT clavicle, shrinkage, 256x256",
    ),
    published("isic-ss", m(200, 0.2, 0.05, 0.1), "ISIC 2017, shrinkage, 256x256"),
    published("brats-ss", m(80, 0.3, 0.05, 0.1), "Brats 2020, shrinkage, 64x128x128"),
    desk("tiny-se", m(8, 0.8, 0.5, 0.02), "desk scale, expansion, 64x64"),
    desk("tiny-ss", m(8, 0.2, 0.5, 0.02), "desk scale, shrinkage, 64x64"),
    desk("tiny-none", m(0, 0.5, 0.0, 0.0), "no noise"),
];

pub fn presets() -> &'static [NoisePreset] {
    PRESETS
}

pub fn preset(name: &str) -> Result<MarkovNoiseParams> {
    PRESETS
        .iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
        .map(|p| p.params)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_values() {
        let c = preset("jsrt-clavicle-se").unwrap();
        assert_eq!((c.steps, c.expansion, c.marching, c.flipping), (100, 0.7, 0.03, 0.1));
        let i = preset("isic-se").unwrap();
        assert_eq!((i.steps, i.expansion, i.marching, i.flipping), (200, 0.8, 0.05, 0.1));
        let b = preset("brats-ss").unwrap();
        assert_eq!((b.steps, b.expansion, b.marching, b.flipping), (80, 0.3, 0.05, 0.1));
        let lung = preset("jsrt-lung-se").unwrap();
        assert_eq!((lung.steps, lung.expansion, lung.marching), (180, 0.7, 0.03));
        let isic_ss = preset("isic-ss").unwrap();
        assert_eq!((isic_ss.steps, isic_ss.expansion, isic_ss.marching), (200, 0.2, 0.05));
    }

    #[test]
    fn every_published_preset_flips_at_ten_percent() {
        for p in presets().iter().filter(|p| p.published) {
            assert_eq!(p.params.flipping, 0.1, "{}", p.name);
            p.params.validate().unwrap();
        }
    }

    #[test]
    fn desk_presets_are_flagged() {
        let tiny = presets().iter().find(|p| p.name == "tiny-se").unwrap();
        assert!(!tiny.published);
        assert_eq!(tiny.params.steps, 8);
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(preset("nope"), Err(Error::UnknownPreset(_))));
    }
}
