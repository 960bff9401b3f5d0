//! Pipeline configuration: lexicon, resolver, filter, weights, evaluation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cleanse::{FixtureResolver, LiveResolver, UrlResolver, DEFAULT_ENGLISH_THRESHOLD};
use crate::error::{Error, Result};
use crate::intent::RuleWeights;
use crate::lexicon::Lexicon;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LexiconConfig {
    /// Phrase file to load; omitted means the embedded lexicon.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResolverMode {
    Fixture,
    Live,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResolverConfig {
    pub mode: ResolverMode,
    /// Lookup table for fixture mode; omitted means resolve nothing.
    pub fixture: Option<PathBuf>,
}

impl Default for ResolverConfig {
    fn default() -> Self {
        ResolverConfig {
            mode: ResolverMode::Fixture,
            fixture: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnglishConfig {
    pub threshold: f64,
}

impl Default for EnglishConfig {
    fn default() -> Self {
        EnglishConfig {
            threshold: DEFAULT_ENGLISH_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrossvalConfig {
    pub folds: usize,
    pub seed: u64,
}

impl Default for CrossvalConfig {
    fn default() -> Self {
        CrossvalConfig { folds: 10, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Where `train` writes and `predict` reads the model.
    pub path: PathBuf,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            path: PathBuf::from("model.toml"),
        }
    }
}

/// Everything the pipeline needs, loadable from one TOML file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub lexicon: LexiconConfig,
    pub resolver: ResolverConfig,
    pub english: EnglishConfig,
    pub weights: RuleWeights,
    pub crossval: CrossvalConfig,
    pub model: ModelConfig,
}

fn rebase(base: &Path, path: &mut PathBuf) {
    if path.is_relative() {
        *path = base.join(path.as_path());
    }
}

impl PipelineConfig {
    /// Load and validate a config file. Relative paths inside the file are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: PipelineConfig = toml::from_str(&body)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            if let Some(p) = &mut config.lexicon.path {
                rebase(dir, p);
            }
            if let Some(p) = &mut config.resolver.fixture {
                rebase(dir, p);
            }
            rebase(dir, &mut config.model.path);
        }
        config.validate()?;
        Ok(config)
    }

    /// Reject configurations that cannot run. The model path is an output
    /// target, so it is not required to exist.
    pub fn validate(&self) -> Result<()> {
        let exists = |what: &str, path: &Path| {
            if path.is_file() {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{what} file {} not found",
                    path.display()
                )))
            }
        };
        if let Some(path) = &self.lexicon.path {
            exists("lexicon", path)?;
        }
        if let Some(path) = &self.resolver.fixture {
            exists("resolver fixture", path)?;
        }
        if !(self.english.threshold.is_finite()
            && self.english.threshold > 0.0
            && self.english.threshold < 1.0)
        {
            return Err(Error::Config(format!(
                "english threshold {} outside (0, 1)",
                self.english.threshold
            )));
        }
        let weights = [
            self.weights.azure_positive,
            self.weights.announcement_feature,
            self.weights.favorable_comparison,
            self.weights.quantified_feature,
            self.weights.competitor_benefit,
            self.weights.unfavorable_comparison,
            self.weights.no_feature,
        ];
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Config("rule weights must be finite".to_string()));
        }
        if self.crossval.folds < 2 {
            return Err(Error::Config(format!(
                "crossval folds {} below 2",
                self.crossval.folds
            )));
        }
        Ok(())
    }

    /// Load the configured lexicon, or the embedded one when unset.
    pub fn lexicon(&self) -> Result<Lexicon> {
        match &self.lexicon.path {
            Some(path) => Lexicon::load(path),
            None => Ok(Lexicon::builtin()),
        }
    }

    /// Build the configured URL resolver.
    pub fn resolver(&self) -> Result<Box<dyn UrlResolver>> {
        match (self.resolver.mode, &self.resolver.fixture) {
            (ResolverMode::Fixture, Some(path)) => {
                Ok(Box::new(FixtureResolver::load(path)?))
            }
            (ResolverMode::Fixture, None) => Ok(Box::new(FixtureResolver::default())),
            (ResolverMode::Live, _) => Ok(Box::new(LiveResolver::new()?)),
        }
    }
}
