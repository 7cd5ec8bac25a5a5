//! On-disk generative configs and the shipped calibration profiles.
//!
//! Schema version 1 (TOML):
//!
//! ```toml
//! schema = 1
//! name = "45GHz"
//! seed = 45
//! leak_to_21 = 0.0                 # optional
//!
//! [prep_error]
//! s_plus = 0.004
//! s_minus = 0.01
//!
//! [round_outcomes]                 # P(v|s) in outcome order 00, 01, 10, 11
//! s_plus = [0.06, 0.12, 0.06, 0.76]
//! s_minus = [0.92, 0.04, 0.03, 0.01]
//!
//! [transition]                     # per-round probability of leaving s
//! s_plus = 6e-4
//! s_minus = 6e-5
//!
//! [transition_by_outcome]          # optional, overrides [transition]
//! s_plus = [6e-4, 6e-4, 6e-4, 6e-4]
//! s_minus = [6e-5, 6e-5, 6e-5, 6e-5]
//!
//! [photon]                         # optional photon-count thresholding
//! lambda_bright = 20.0
//! lambda_dark = 0.1
//! threshold = 2
//! ```
//!
//! The shipped profiles are fitted so that simulated sweeps show the same
//! qualitative structure as measured data; they are not physical constants.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{GenerativeConfig, PhotonModel};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PerSubspace<T> {
    s_plus: T,
    s_minus: T,
}

impl<T: Copy> PerSubspace<T> {
    fn to_array(self) -> [T; 2] {
        [self.s_plus, self.s_minus]
    }

    fn from_array([s_plus, s_minus]: [T; 2]) -> Self {
        PerSubspace { s_plus, s_minus }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    seed: u64,
    #[serde(default)]
    leak_to_21: f64,
    prep_error: PerSubspace<f64>,
    round_outcomes: PerSubspace<[f64; 4]>,
    transition: PerSubspace<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transition_by_outcome: Option<PerSubspace<[f64; 4]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    photon: Option<PhotonModel>,
}

impl GenerativeConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if file.schema != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported schema {} (expected {SCHEMA_VERSION})",
                file.schema
            )));
        }
        let config = GenerativeConfig {
            name: file.name,
            seed: file.seed,
            prep_error: file.prep_error.to_array(),
            round_outcome_dist: file.round_outcomes.to_array(),
            transition_prob: file.transition.to_array(),
            transition_by_outcome: file.transition_by_outcome.map(PerSubspace::to_array),
            photon_model: file.photon,
            leak_to_21: file.leak_to_21,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        let file = ConfigFile {
            schema: SCHEMA_VERSION,
            name: self.name.clone(),
            seed: self.seed,
            leak_to_21: self.leak_to_21,
            prep_error: PerSubspace::from_array(self.prep_error),
            round_outcomes: PerSubspace::from_array(self.round_outcome_dist),
            transition: PerSubspace::from_array(self.transition_prob),
            transition_by_outcome: self.transition_by_outcome.map(PerSubspace::from_array),
            photon: self.photon_model,
        };
        toml::to_string(&file).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// A shipped profile by name, or a config file by path.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match profile(name_or_path) {
            Some(text) => Self::from_toml_str(text),
            None => Self::load(Path::new(name_or_path)),
        }
    }
}

const PROFILES: [(&str, &str); 4] = [
    ("45GHz", include_str!("../profiles/45GHz.toml")),
    ("90GHz", include_str!("../profiles/90GHz.toml")),
    ("210GHz", include_str!("../profiles/210GHz.toml")),
    ("490GHz", include_str!("../profiles/490GHz.toml")),
];

/// Names of the shipped calibration profiles.
pub fn profile_names() -> impl Iterator<Item = &'static str> {
    PROFILES.iter().map(|(name, _)| *name)
}

/// Raw TOML of a shipped profile.
pub fn profile(name: &str) -> Option<&'static str> {
    PROFILES
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, text)| *text)
}
