//! Run configuration. Precedence: command-line flags, then the config file, then defaults.
//!
//! Config files are TOML; every key is optional:
//!
//! ```toml
//! catalog = "catalog.json"
//! smote_k = 5
//! n_folds = 5
//! seed = 42
//! threshold = 0.5
//! fallback = true
//! slen_scope = "same_speaker"     # or "all_speakers"
//! tune = false
//! inner_folds = 3
//!
//! [hyperparams]
//! c = 1.0
//! max_iterations = 1000
//! tolerance = 1e-6
//! learning_rate = 0.1
//! fit_bias = true
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::{default_grid, Hyperparams, TrainConfig};
use crate::corpus::LabelCatalog;
use crate::evaluate::{CvConfig, Tuning};
use crate::featurize::SlenScope;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub catalog: Option<PathBuf>,
    pub smote_k: usize,
    pub n_folds: usize,
    pub seed: u64,
    pub hyperparams: Hyperparams,
    pub tune: bool,
    /// Tuning grid; the built-in 16-point grid when absent.
    pub grid: Option<Vec<Hyperparams>>,
    pub inner_folds: usize,
    pub threshold: f64,
    pub fallback: bool,
    pub slen_scope: SlenScope,
    /// Idle time after which a serve session is dropped; never when absent.
    pub session_ttl_s: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            catalog: None,
            smote_k: 5,
            n_folds: 5,
            seed: 42,
            hyperparams: Hyperparams::default(),
            tune: false,
            grid: None,
            inner_folds: 3,
            threshold: 0.5,
            fallback: true,
            slen_scope: SlenScope::SameSpeaker,
            session_ttl_s: None,
        }
    }
}

/// Values given on the command line; `None` leaves the lower layers alone.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub catalog: Option<PathBuf>,
    pub seed: Option<u64>,
    pub n_folds: Option<usize>,
    pub smote_k: Option<usize>,
    pub threshold: Option<f64>,
    pub fallback: Option<bool>,
    pub tune: Option<bool>,
    pub slen_scope: Option<SlenScope>,
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_toml(&text, path)?;
        // a relative catalog path is relative to the config file
        if let (Some(catalog), Some(dir)) = (&config.catalog, path.parent()) {
            if catalog.is_relative() {
                config.catalog = Some(dir.join(catalog));
            }
        }
        Ok(config)
    }

    pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> Result<Self, ConfigError> {
        let mut config = match file {
            Some(path) => Self::from_file(path)?,
            None => RunConfig::default(),
        };
        let o = overrides.clone();
        if o.catalog.is_some() {
            config.catalog = o.catalog;
        }
        config.seed = o.seed.unwrap_or(config.seed);
        config.n_folds = o.n_folds.unwrap_or(config.n_folds);
        config.smote_k = o.smote_k.unwrap_or(config.smote_k);
        config.threshold = o.threshold.unwrap_or(config.threshold);
        config.fallback = o.fallback.unwrap_or(config.fallback);
        config.tune = o.tune.unwrap_or(config.tune);
        config.slen_scope = o.slen_scope.unwrap_or(config.slen_scope);
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.smote_k == 0 {
            return invalid("smote_k must be at least 1".into());
        }
        if self.n_folds < 2 {
            return invalid(format!("n_folds must be at least 2, got {}", self.n_folds));
        }
        if self.inner_folds < 2 {
            return invalid(format!("inner_folds must be at least 2, got {}", self.inner_folds));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return invalid(format!("threshold must lie in (0, 1), got {}", self.threshold));
        }
        self.hyperparams
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(grid) = &self.grid {
            if grid.is_empty() {
                return invalid("grid is empty".into());
            }
            for hp in grid {
                hp.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
            }
        }
        if let Some(ttl) = self.session_ttl_s {
            if !(ttl > 0.0 && ttl.is_finite()) {
                return invalid(format!("session_ttl_s must be positive, got {ttl}"));
            }
        }
        Ok(())
    }

    pub fn load_catalog(&self) -> Result<LabelCatalog, ConfigError> {
        match &self.catalog {
            None => Ok(LabelCatalog::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.clone(),
                    source,
                })?;
                LabelCatalog::from_json(&text).map_err(|e| ConfigError::Parse {
                    path: path.clone(),
                    message: e.to_string(),
                })
            }
        }
    }

    pub fn train_config(&self, catalog: LabelCatalog) -> TrainConfig {
        TrainConfig {
            catalog,
            hyperparams: self.hyperparams,
            smote_k: self.smote_k,
            seed: self.seed,
            threshold: self.threshold,
            slen_scope: self.slen_scope,
        }
    }

    pub fn tuning(&self) -> Option<Tuning> {
        self.tune.then(|| Tuning {
            grid: self.grid.clone().unwrap_or_else(default_grid),
            inner_folds: self.inner_folds,
        })
    }

    pub fn cv_config(&self, catalog: LabelCatalog) -> CvConfig {
        CvConfig {
            train: self.train_config(catalog),
            n_folds: self.n_folds,
            tuning: self.tuning(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c = RunConfig::from_toml("seed = 7\n[hyperparams]\nc = 10.0\n", Path::new("x.toml")).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.hyperparams.c, 10.0);
        assert_eq!(c.hyperparams.max_iterations, 1000);
        assert_eq!(c.n_folds, 5);
        assert!(RunConfig::from_toml("sede = 7", Path::new("x.toml")).is_err());
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 7\nn_folds = 4\ncatalog = \"cat.json\"\n").unwrap();
        let overrides = Overrides { seed: Some(9), ..Overrides::default() };
        let c = RunConfig::resolve(Some(&path), &overrides).unwrap();
        assert_eq!((c.seed, c.n_folds, c.smote_k), (9, 4, 5));
        assert_eq!(c.catalog.unwrap(), dir.path().join("cat.json"));
    }

    #[test]
    fn rejects_out_of_range_values() {
        let bad = Overrides { threshold: Some(1.0), ..Overrides::default() };
        assert!(RunConfig::resolve(None, &bad).is_err());
        let bad = Overrides { n_folds: Some(1), ..Overrides::default() };
        assert!(RunConfig::resolve(None, &bad).is_err());
        let bad = Overrides { smote_k: Some(0), ..Overrides::default() };
        assert!(RunConfig::resolve(None, &bad).is_err());
    }
}
