//! Experiment configuration: one JSON document, with command-line flags
//! taking precedence over file keys, which take precedence over defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use horonet_core::symspace::{model, Model, ModelTag};
use horonet_core::Error as CoreError;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// One of h2, h3, sl2r, sl3r.
    pub model: String,
    /// Dilation factor applied to the model's default lattice.
    pub rescale: f64,
    /// Integer intervals per flat coordinate; `None` picks a default box
    /// matching the model rank.
    pub a_box: Option<Vec<(i64, i64)>>,
    /// Word radius of the lattice ball.
    pub ball_radius: usize,
    /// Acting elements in exponential coordinates; `None` uses the lattice
    /// generators.
    pub action_generators: Option<Vec<Vec<f64>>>,
    /// Word-length bound for the freeness check.
    pub word_length: usize,
    /// Radii of the UDBG ball-count profile.
    pub radii: Vec<f64>,
    /// Number of deterministic density probes.
    pub probes: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub folner: FolnerConfig,
    pub matching: MatchingConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FolnerConfig {
    /// z1, z2, z3 or f2.
    pub group: String,
    pub n_max: usize,
    pub r: f64,
}

impl Default for FolnerConfig {
    fn default() -> Self {
        FolnerConfig { group: "z2".into(), n_max: 50, r: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingConfig {
    /// Side length of the square grids.
    pub n: usize,
    pub offset: (f64, f64),
    pub radius: f64,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        MatchingConfig { n: 100, offset: (0.3, 0.4), radius: 1.0 }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: "h3".into(),
            rescale: 1.0,
            a_box: None,
            ball_radius: 2,
            action_generators: None,
            word_length: 2,
            radii: vec![1.0, 2.0, 3.0],
            probes: 16,
            seed: 42,
            out: PathBuf::from("out"),
            folner: FolnerConfig::default(),
            matching: MatchingConfig::default(),
        }
    }
}

/// Flag overrides, applied after the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub model: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", p.display()))
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("invalid config: {e}")))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(m) = &overrides.model {
            config.model = m.clone();
        }
        if let Some(s) = overrides.seed {
            config.seed = s;
        }
        if let Some(o) = &overrides.out {
            config.out = o.clone();
        }
        Ok(config)
    }

    pub fn model(&self) -> Result<Model, CliError> {
        let tag: ModelTag = self
            .model
            .parse()
            .map_err(|e: CoreError| CliError::Config(e.to_string()))?;
        Ok(model(tag))
    }

    /// The flat box, defaulted per model rank.
    pub fn a_box(&self, rank: usize) -> Result<Vec<(i64, i64)>, CliError> {
        match &self.a_box {
            Some(b) => {
                if b.len() != rank {
                    return Err(CliError::Config(format!(
                        "a_box has {} intervals but the model has rank {rank}",
                        b.len()
                    )));
                }
                Ok(b.clone())
            }
            None => Ok(match rank {
                1 => vec![(-2, 2)],
                _ => vec![(0, 1); rank],
            }),
        }
    }

    /// Canonical hash of the resolved configuration; stamped into every
    /// artifact so outputs are traceable to their inputs. The output
    /// directory is not part of the experiment identity.
    pub fn hash(&self) -> String {
        let mut identity = self.clone();
        identity.out = PathBuf::new();
        let canonical = serde_json::to_string(&identity).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        hex[..16].to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let c = ExperimentConfig::default();
        assert_eq!(c.model, "h3");
        let m = c.model().unwrap();
        assert_eq!(c.a_box(m.rank()).unwrap(), vec![(-2, 2)]);
        assert_eq!(c.hash().len(), 16);
    }

    #[test]
    fn flags_override_file_values() {
        let overrides = Overrides { model: Some("sl2r".into()), seed: Some(7), out: None };
        let c = ExperimentConfig::load(None, &overrides).unwrap();
        assert_eq!(c.model, "sl2r");
        assert_eq!(c.seed, 7);
    }

    #[test]
    fn unknown_model_is_a_config_error() {
        let c = ExperimentConfig { model: "su2".into(), ..Default::default() };
        assert!(matches!(c.model(), Err(CliError::Config(_))));
    }

    #[test]
    fn hash_changes_with_content() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { seed: 43, ..Default::default() };
        assert_ne!(a.hash(), b.hash());
    }
}
