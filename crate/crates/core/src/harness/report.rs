use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of one verification experiment.
///
/// Wall time is kept out of the serialized form so that a rerun with the same
/// seed writes an identical file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub experiment: String,
    pub passed: bool,
    pub seed: u64,
    pub parameters: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    pub measurements: BTreeMap<String, f64>,
    pub trials: Vec<BTreeMap<String, f64>>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl TrialReport {
    pub fn new(experiment: &str, seed: u64) -> Self {
        TrialReport {
            experiment: experiment.to_string(),
            passed: false,
            seed,
            parameters: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            measurements: BTreeMap::new(),
            trials: Vec::new(),
            notes: Vec::new(),
            wall_time_secs: 0.0,
        }
    }

    pub fn param(&mut self, key: &str, value: f64) -> &mut Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    pub fn tolerance(&mut self, key: &str, value: f64) -> &mut Self {
        self.tolerances.insert(key.to_string(), value);
        self
    }

    pub fn measure(&mut self, key: &str, value: f64) -> &mut Self {
        self.measurements.insert(key.to_string(), value);
        self
    }

    /// Panics if the key was never measured.
    pub fn get(&self, key: &str) -> f64 {
        self.measurements[key]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports hold only plain data")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }
}
