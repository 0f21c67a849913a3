//! TOML run configuration.
//!
//! ```toml
//! [corpus]
//! n_frames = 10000
//! factors = [{ name = "environment", cardinality = 3, transform_strength = 25.0 }]
//!
//! [train]
//! mode = "ats"
//! factors = ["environment"]
//!
//! [split]
//! fractions = [0.6, 0.1, 0.3]
//! ```
//!
//! Every table is optional and every field falls back to its default.

use std::path::{Path, PathBuf};

use ats_core::corpus::CorpusSpec;
use ats_core::eval::ProbeConfig;
use ats_core::train::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable that replaces every seed in a loaded config.
pub const SEED_ENV: &str = "ATS_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub fractions: Vec<f64>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { fractions: vec![0.6, 0.1, 0.3] }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: CorpusSpec,
    pub train: TrainConfig,
    pub probe: ProbeConfig,
    pub split: SplitConfig,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| config_error(origin, e.to_string()))?;
        cfg.validate(origin)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Loads `path` if given, else the defaults; then applies `ATS_SEED`.
    pub fn resolve(path: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(seed) = seed_override()? {
            cfg.set_seed(seed);
        }
        Ok(cfg)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.corpus.seed = seed;
        self.train.seed = seed;
    }

    fn validate(&self, origin: &Path) -> Result<(), CliError> {
        let field = |section: &str, e: ats_core::Error| config_error(origin, format!("[{section}] {e}"));
        self.corpus.validate().map_err(|e| field("corpus", e))?;
        self.train.validate().map_err(|e| field("train", e))?;
        let f = &self.split.fractions;
        if f.is_empty() || f.iter().any(|x| !(*x > 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(config_error(origin, format!("[split] fractions must be positive and sum to 1, got {f:?}")));
        }
        let p = &self.probe;
        if !(p.lr > 0.0) || p.batch_size == 0 || !(p.train_fraction > 0.0 && p.train_fraction < 1.0) {
            return Err(config_error(origin, "[probe] needs lr > 0, batch_size >= 1 and 0 < train_fraction < 1".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

fn config_error(path: &Path, message: String) -> CliError {
    CliError::Config { path: path.to_path_buf(), message }
}

/// Reads `ATS_SEED`; an unparsable value is a config error.
pub fn seed_override() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| CliError::Config {
            path: PathBuf::from(format!("${SEED_ENV}")),
            message: format!("expected an unsigned integer, got `{v}`"),
        }),
        Err(_) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ats_core::train::Mode;

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        RunConfig::parse(text, Path::new("test.toml"))
    }

    #[test]
    fn empty_file_is_defaults() {
        assert_eq!(parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = RunConfig::default();
        cfg.train.mode = Mode::Mfa;
        cfg.train.factors = vec!["environment".into(), "speaker".into()];
        cfg.train.split_index = Some(1);
        assert_eq!(parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn partial_tables_keep_other_defaults() {
        let cfg = parse("[train]\nmode = \"ats\"\nfactors = [\"speaker\"]\nlambda = 2.5\n").unwrap();
        assert_eq!(cfg.train.lambda, 2.5);
        assert_eq!(cfg.train.lr, TrainConfig::default().lr);
        assert_eq!(cfg.corpus, CorpusSpec::default());
    }

    #[test]
    fn errors_name_the_location() {
        let msg = parse("[train]\nlr = \"fast\"\n").unwrap_err().to_string();
        assert!(msg.contains("line 2") && msg.contains("lr"), "{msg}");
        let msg = parse("[train]\nlearning_rate = 0.1\n").unwrap_err().to_string();
        assert!(msg.contains("learning_rate"), "{msg}");
        let msg = parse("[train]\nlr = -1.0\n").unwrap_err().to_string();
        assert!(msg.contains("[train]") && msg.contains("lr"), "{msg}");
        let msg = parse("[split]\nfractions = [0.5, 0.2]\n").unwrap_err().to_string();
        assert!(msg.contains("[split]"), "{msg}");
        let msg = parse("[train]\nmode = \"ats\"\n").unwrap_err().to_string();
        assert!(msg.contains("[train]"), "{msg}");
        assert_eq!(parse("[corpus]\nn_frames = 0\n").unwrap_err().exit_code(), 2);
    }
}
